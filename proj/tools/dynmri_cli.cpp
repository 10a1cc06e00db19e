#include "dynmri/commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <string>

using namespace dynmri;

namespace {

int exit_code(ErrorCategory category) {
    switch (category) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Io: return 3;
    case ErrorCategory::Dimension: return 4;
    case ErrorCategory::Pattern: return 5;
    case ErrorCategory::Convergence: return 6;
    case ErrorCategory::Divergence: return 7;
    }
    return 1;
}

struct Overrides {
    std::string config;
    std::optional<std::string> method;
    std::optional<double> alpha, gamma, w, eta, alpha0;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> chunk;
    std::optional<std::string> out, dataset, prior;
    std::vector<std::string> results;
};

void add_common(CLI::App *cmd, Overrides &o) {
    cmd->add_option("--config", o.config, "JSON run configuration");
    cmd->add_option("--method", o.method, "ls, tv, temp, temp_tv or icbtv");
    cmd->add_option("--alpha", o.alpha, "data weight for every frame");
    cmd->add_option("--gamma", o.gamma, "temporal weight for every frame");
    cmd->add_option("--w", o.w, "TV share of the spatial weight (icbtv)");
    cmd->add_option("--eta", o.eta, "edge threshold for the prior subgradient");
    cmd->add_option("--alpha0", o.alpha0, "data weight of the prior reconstruction");
    cmd->add_option("--seed", o.seed, "noise seed");
    cmd->add_option("--chunk", o.chunk, "frames per solver chunk");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--dataset", o.dataset, "dataset directory");
    cmd->add_option("--prior", o.prior, "prior directory from recon-prior");
    cmd->add_option("--results", o.results, "result directories to evaluate");
}

RunConfig resolve(const Overrides &o) {
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
    if (o.method) cfg.method = parse_method(*o.method);
    if (o.alpha) cfg.alpha = *o.alpha;
    if (o.gamma) cfg.gamma = *o.gamma;
    if (o.w) cfg.w = *o.w;
    if (o.eta) cfg.eta = *o.eta;
    if (o.alpha0) cfg.alpha0 = *o.alpha0;
    if (o.seed) cfg.seed = *o.seed;
    if (o.chunk) cfg.chunk = *o.chunk;
    if (o.out) cfg.out = *o.out;
    if (o.dataset) cfg.dataset = *o.dataset;
    if (o.prior) cfg.prior = *o.prior;
    if (!o.results.empty()) cfg.results.assign(o.results.begin(), o.results.end());
    return cfg;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Dynamic MRI reconstruction with structural priors"};
    app.require_subcommand(1);
    Overrides o;

    std::function<void(const RunConfig &)> action;
    auto sub = [&](const char *name, const char *help, void (*fn)(const RunConfig &)) {
        auto *cmd = app.add_subcommand(name, help);
        add_common(cmd, o);
        cmd->callback([&action, fn] { action = fn; });
    };
    sub("simulate", "generate phantom, sampling pattern and k-space data", cmd_simulate);
    sub("recon-prior", "reconstruct the anatomical prior and its subgradient", cmd_recon_prior);
    sub("recon", "reconstruct the dynamic sequence with one method", cmd_recon);
    sub("eval", "ROI curves, pixel curves, metrics and images", cmd_eval);
    sub("sweep", "icbtv reconstructions over a list of gamma values", cmd_sweep);
    sub("reproduce", "full synthetic experiment: simulate, reconstruct, evaluate, sweep", cmd_reproduce);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        action(resolve(o));
    } catch (const Error &e) {
        std::fprintf(stderr, "error[%s]: %s\n", std::string(to_string(e.category())).c_str(), e.what());
        return exit_code(e.category());
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error[internal]: %s\n", e.what());
        return 1;
    }
    return 0;
}
