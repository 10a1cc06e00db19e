#include "dynmri/commands.hpp"
#include "dynmri/eval.hpp"
#include "dynmri/io.hpp"
#include "dynmri/operators.hpp"
#include "dynmri/regularization.hpp"
#include "dynmri/sim.hpp"
#include "dynmri/solver.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace dynmri;

namespace {

// Pinned tolerances.
constexpr double kAdjointTol = 1e-10;
constexpr double kRoundTripTol = 1e-12;
constexpr double kOperatorSeconds = 10.0;
constexpr double kProxTol = 1e-15;
constexpr double kProjectionTol = 1e-15;
constexpr double kOracleRmse = 1e-3;
constexpr double kOracleResidual = 1e-6;
constexpr std::size_t kOracleIterations = 5000;
constexpr double kOracleSeconds = 60.0;
constexpr double kIterateTol = 1e-12;
constexpr double kDecoupleTol = 1e-10;
constexpr double kBregmanTol = 1e-9;
constexpr double kIcbTol = 1e-6;
constexpr double kMinCorrelation = 0.90;
constexpr double kPeakLow = 0.05;
constexpr double kPeakHigh = 0.11;
constexpr double kReproductionSeconds = 15.0 * 60.0;
constexpr double kChunkTol = 0.05;
constexpr double kMaxSampledFraction = 0.055;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string &what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// Random injective selection of `count` coefficients per frame.
SamplingPattern random_pattern(GridShape s, std::size_t frames, std::size_t count, FourierScaling sc,
                               std::mt19937_64 &rng) {
    std::vector<std::vector<std::size_t>> idx;
    for (std::size_t t = 0; t < frames; ++t) {
        std::vector<std::size_t> all(s.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(count);
        idx.push_back(all);
    }
    return SamplingPattern(s, idx, {}, sc);
}

StoppingRule fixed_iterations(std::size_t n) {
    StoppingRule rule;
    rule.energy_tolerance = 1e-300;
    rule.residual_tolerance = 1e-300;
    rule.check_interval = n;
    rule.max_iterations = n;
    return rule;
}

KSpaceData small_dynamic(GridShape s, std::size_t frames, std::size_t samples, std::mt19937_64 &rng) {
    KSpaceData data{random_pattern(s, frames, samples, FourierScaling::Unitary, rng), {}};
    const Image base = testing::step_image(s);
    for (std::size_t t = 0; t < frames; ++t) {
        Image u = base;
        u.at(s.height / 2, 1) += 0.3 * static_cast<double>(t);
        auto f = forward_op(u, data.pattern, t);
        for (auto &v : f) v += 0.05 * testing::random_vector(1, rng)[0];
        data.samples.push_back(f);
    }
    return data;
}

Outcome operators() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1001);
    double worst_grad = 0.0, worst_k = 0.0, worst_trip = 0.0;
    for (GridShape s : {GridShape{32, 32}, GridShape{109, 91}}) {
        for (int trial = 0; trial < 100; ++trial) {
            const Image u = testing::random_image(s, rng);
            const VectorField p = testing::random_field(s, rng);
            const VectorField gu = gradient(u);
            const Image dp = divergence(p);
            const double lhs = inner_product(gu, p), rhs = -inner_product(u, dp);
            worst_grad = std::max(worst_grad, std::abs(lhs - rhs) / (norm(gu) * norm(p)));

            for (FourierScaling sc : {FourierScaling::Forward, FourierScaling::Unitary}) {
                const auto pattern = random_pattern(s, 1, s.size() / 20, sc, rng);
                const auto ku = forward_op(u, pattern, 0);
                const auto z = testing::random_vector(pattern.sample_count(0), rng);
                const Image kz = adjoint_op(z, pattern, 0);
                const double a = inner_product(ku, z), b = inner_product(u, kz);
                worst_k = std::max(worst_k, std::abs(a - b) / (norm(ku) * norm(z)));

                const Image back = dft_inverse(dft_forward(u, sc), sc);
                worst_trip = std::max(worst_trip, norm(back - u) / norm(u));
            }
        }
    }
    const double elapsed = seconds_since(t0);
    o.detail << "grad/div " << fmt(worst_grad) << ", K/K* " << fmt(worst_k) << ", round trip " << fmt(worst_trip)
             << ", " << fmt(elapsed) << " s ";
    o.require(worst_grad <= kAdjointTol, "gradient adjoint");
    o.require(worst_k <= kAdjointTol, "sampling operator adjoint");
    o.require(worst_trip <= kRoundTripTol, "DFT round trip");
    o.require(elapsed < kOperatorSeconds, "runtime");
    return o;
}

Outcome prox_projection() {
    Outcome o;
    std::mt19937_64 rng(1002);
    std::uniform_real_distribution<double> pos(0.01, 100.0);
    double worst_prox = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto r = testing::random_vector(50, rng);
        const double alpha = pos(rng), sigma = pos(rng);
        const auto y = prox_dual_quadratic(r, alpha, sigma);
        for (std::size_t i = 0; i < r.size(); ++i) {
            const Complex expect = alpha * r[i] / (alpha + sigma);
            worst_prox = std::max(worst_prox, std::abs(y[i] - expect) / std::max(std::abs(expect), 1e-300));
        }
    }

    double worst_idem = 0.0, worst_expand = 0.0;
    const GridShape s{24, 20};
    for (int trial = 0; trial < 100; ++trial) {
        const double radius = pos(rng) / 50.0;
        VectorField a = testing::random_field(s, rng), b = testing::random_field(s, rng);
        a *= 2.0;
        const VectorField pa = project_dual_ball(a, radius), pb = project_dual_ball(b, radius);
        worst_idem = std::max(worst_idem, norm(project_dual_ball(pa, radius) - pa) / std::max(norm(pa), 1e-300));
        worst_expand = std::max(worst_expand, norm(pa - pb) / norm(a - b) - 1.0);
    }

    // Dual feasibility at every iteration of an ICBTV solve.
    const GridShape ds{12, 10};
    const KSpaceData data = small_dynamic(ds, 4, 30, rng);
    const auto sub = extract_subgradient(testing::random_image(ds, rng), 0.5);
    auto spec = MethodSpec::uniform(Method::ICBTV, 4, 20.0, 5.0, 0.3);
    spec.w = {0.1, 0.3, 0.7, 0.9};
    spec.stopping = fixed_iterations(300);
    double excess = 0.0;
    std::size_t iterations = 0;
    SolveOptions opts;
    opts.on_iteration = [&](std::size_t, const SolverState &st) {
        for (std::size_t t = 0; t < st.frame_count(); ++t) {
            const double rw = spec.tv_weight(t), ri = spec.icb_weight(t);
            for (std::size_t n = 0; n < st.y2[t].size(); ++n) {
                excess = std::max(excess, st.y2[t].magnitude(n) - rw);
                excess = std::max(excess, st.y3[t].magnitude(n) - ri);
                excess = std::max(excess, st.y4[t].magnitude(n) - ri);
            }
        }
        ++iterations;
    };
    (void)reconstruct_dynamic(data, spec, &sub, std::nullopt, opts);

    o.detail << "prox " << fmt(worst_prox) << ", idempotence " << fmt(worst_idem) << ", expansion "
             << fmt(worst_expand) << ", feasibility excess " << fmt(excess) << " over " << iterations
             << " iterations ";
    o.require(worst_prox <= kProxTol, "prox arithmetic");
    o.require(worst_idem <= kProjectionTol, "idempotence");
    o.require(worst_expand <= kProjectionTol, "nonexpansiveness");
    // Feasibility up to the rounding of recomputing the magnitude.
    o.require(excess <= 4.0 * std::numeric_limits<double>::epsilon() && iterations == 300, "dual feasibility");
    return o;
}

Outcome oracle_agreement() {
    Outcome o;
    const auto t0 = Clock::now();
    const GridShape s{16, 16};
    std::mt19937_64 rng(21);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::vector<double> g(s.size());
    Image noisy(s);
    for (std::size_t y = 0; y < s.height; ++y)
        for (std::size_t x = 0; x < s.width; ++x) {
            g[s.index(y, x)] = (x >= 8 ? 1.0 : 0.0) + noise(rng);
            noisy.at(y, x) = g[s.index(y, x)];
        }
    const double alpha0 = 10.0;
    const auto pattern = SamplingPattern::full(s, 1, FourierScaling::Unitary);
    StoppingRule rule;
    rule.energy_tolerance = std::numeric_limits<double>::max();
    rule.residual_tolerance = kOracleResidual;
    rule.check_interval = 1;
    rule.max_iterations = kOracleIterations;
    const auto r = reconstruct_prior(forward_op(noisy, pattern, 0), pattern, alpha0, rule);
    const double residual = r.history.empty() ? 0.0 : r.history.back().residual;

    const auto oracle = testing::smoothed_tv_denoise(g, s.height, s.width, alpha0, 1e-6, 100000);
    double sq = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) sq += std::norm(r.image[n] - oracle[n]);
    const double rmse = std::sqrt(sq / static_cast<double>(s.size()));
    const double elapsed = seconds_since(t0);

    o.detail << "rmse vs oracle " << fmt(rmse) << ", residual " << fmt(residual) << " after " << r.iterations
             << " iterations, " << fmt(elapsed) << " s ";
    o.require(rmse <= kOracleRmse, "oracle rmse");
    o.require(r.converged && residual < kOracleResidual, "residual within the iteration budget");
    o.require(elapsed < kOracleSeconds, "runtime");
    return o;
}

Outcome reductions() {
    Outcome o;
    std::mt19937_64 rng(1004);
    const GridShape s{8, 8};
    const KSpaceData data = small_dynamic(s, 3, 20, rng);
    const auto sub = extract_subgradient(testing::random_image(s, rng), 0.5);

    auto iterates = [&](Method m) {
        auto spec = MethodSpec::uniform(m, 3, 10.0, 2.0, 1.0);
        spec.tau = spec.sigma = 0.25;
        spec.stopping = fixed_iterations(200);
        std::vector<std::vector<Image>> out;
        SolveOptions opts;
        opts.on_iteration = [&](std::size_t, const SolverState &st) { out.push_back(st.u); };
        (void)reconstruct_dynamic(data, spec, &sub, std::nullopt, opts);
        return out;
    };
    const auto a = iterates(Method::ICBTV), b = iterates(Method::TempTV);
    double worst_iter = a.size() == b.size() ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k)
        for (std::size_t t = 0; t < 3; ++t) worst_iter = std::max(worst_iter, testing::max_abs_diff(a[k][t], b[k][t]));

    double worst_split = 0.0;
    for (Method m : {Method::TempTV, Method::ICBTV}) {
        auto spec = MethodSpec::uniform(m, 3, 10.0, 0.0, 0.4);
        spec.tau = spec.sigma = 0.2;
        spec.stopping = fixed_iterations(300);
        const auto joint = reconstruct_dynamic(data, spec, &sub);
        for (std::size_t t = 0; t < 3; ++t) {
            auto single = MethodSpec::uniform(m, 1, 10.0, 0.0, 0.4);
            single.tau = single.sigma = 0.2;
            single.stopping = fixed_iterations(300);
            const auto alone = reconstruct_dynamic(data.frames(t, 1), single, &sub);
            worst_split = std::max(worst_split, testing::max_abs_diff(joint.frames[t], alone.frames[0]));
        }
    }
    o.detail << "w=1 vs temp_tv " << fmt(worst_iter) << " over " << a.size() << " iterates, gamma=0 split "
             << fmt(worst_split) << " ";
    o.require(worst_iter <= kIterateTol, "iterate equality");
    o.require(worst_split <= kDecoupleTol, "frame decoupling");
    return o;
}

Outcome bregman_icb() {
    Outcome o;
    std::mt19937_64 rng(1005);
    const GridShape s{40, 36};
    const Image u0 = builtin_contrast(s, RoiRect{10, 20, 4, 4}, true);
    const auto sub = extract_subgradient(u0, 0.0);
    const double tv0 = tv_value(u0);

    double worst_id = std::abs(bregman_distance(u0, sub));
    for (double c : {0.25, 2.0, 10.0}) worst_id = std::max(worst_id, std::abs(bregman_distance(c * u0, sub)));
    worst_id = std::max(worst_id, std::abs(bregman_distance(-1.0 * u0, sub) - 2.0 * tv0) / std::max(1.0, tv0));

    double min_lower = std::numeric_limits<double>::infinity(), max_excess = -std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 50; ++trial) {
        Image u = testing::random_image(s, rng);
        // Half of the images sit near the prior, where the two Bregman terms compete.
        if (trial % 2 == 1) u = u0 + 0.1 * u;
        const auto e = icbtv_evaluate(u, sub, kIcbTol);
        min_lower = std::min(min_lower, e.lower_bound);
        max_excess = std::max(max_excess, e.value - 2.0 * tv_value(u));
    }
    const double at_u0 = icbtv_value(u0, sub, kIcbTol);
    const double at_minus = icbtv_value(-1.0 * u0, sub, kIcbTol);

    o.detail << "Bregman identities " << fmt(worst_id) << ", min certified ICB " << fmt(min_lower)
             << ", max ICB - 2TV " << fmt(max_excess) << ", ICB(u0) " << fmt(at_u0) << ", ICB(-u0) " << fmt(at_minus)
             << " ";
    o.require(worst_id <= kBregmanTol, "Bregman identities");
    o.require(min_lower >= 0.0, "ICB non-negative");
    o.require(max_excess <= 0.0, "ICB below 2 TV");
    o.require(std::abs(at_u0) <= kIcbTol && std::abs(at_minus) <= kIcbTol, "ICB vanishes at +-u0");
    return o;
}

/// Full-size synthetic experiment driven through the command layer.
class Reproduction {
public:
    explicit Reproduction(fs::path root) : root_(std::move(root)) {
        cfg_.dataset = root_ / "dataset";
        cfg_.prior = root_ / "prior";
    }

    const RunConfig &config() const { return cfg_; }

    void prepare() {
        if (prepared_) return;
        const auto t0 = Clock::now();
        RunConfig sim = cfg_;
        sim.out = cfg_.dataset;
        cmd_simulate(sim);
        RunConfig prior = cfg_;
        prior.out = cfg_.prior;
        cmd_recon_prior(prior);
        setup_seconds_ = seconds_since(t0);
        truth_ = read_sequence(cfg_.dataset / "truth");
        prepared_ = true;
    }

    double setup_seconds() const { return setup_seconds_; }
    const ImageSequence &truth() const { return truth_; }
    RoiSpec roi() const { return effective_rois(cfg_).front(); }

    // Reconstructs once per (method, gamma) and caches the frames.
    const ImageSequence &recon(Method m, std::optional<double> gamma = std::nullopt) {
        prepare();
        const std::string key = std::string(to_string(m)) + (gamma ? "_" + fmt(*gamma) : "");
        if (auto it = runs_.find(key); it != runs_.end()) return it->second;
        RunConfig run = cfg_;
        run.method = m;
        if (gamma) {
            run.alpha = cfg_.sweep_alpha;
            run.gamma = *gamma;
        }
        run.out = root_ / "results" / key;
        const auto t0 = Clock::now();
        cmd_recon(run);
        seconds_[key] = seconds_since(t0);
        converged_[key] = read_json(run.out / "manifest.json")["converged"].get<bool>();
        return runs_.emplace(key, read_sequence(run.out / "recon")).first->second;
    }

    double seconds(const std::string &key) const { return seconds_.at(key); }
    bool converged(const std::string &key) const { return converged_.at(key); }

private:
    fs::path root_;
    RunConfig cfg_;
    bool prepared_ = false;
    double setup_seconds_ = 0.0;
    ImageSequence truth_;
    std::map<std::string, ImageSequence> runs_;
    std::map<std::string, double> seconds_;
    std::map<std::string, bool> converged_;
};

Outcome desk_reproduction(Reproduction &rep) {
    Outcome o;
    rep.prepare();
    const RoiSpec roi = rep.roi();
    const auto truth_curve = roi_mean_curve(rep.truth(), roi);
    const std::size_t baseline = baseline_frame_count(truth_curve);

    double total = rep.setup_seconds();
    std::map<Method, double> rmse;
    for (Method m : {Method::LS, Method::Temp, Method::TempTV, Method::ICBTV}) {
        const auto &frames = rep.recon(m);
        const std::string key(to_string(m));
        total += rep.seconds(key);
        rmse[m] = roi_series_rmse(frames, rep.truth(), roi);
        o.detail << key << " rmse " << fmt(rmse[m]) << " (" << fmt(rep.seconds(key)) << " s"
                 << (rep.converged(key) ? "" : ", iteration cap") << "), ";
    }
    const auto curve = roi_mean_curve(rep.recon(Method::ICBTV), roi);
    const auto metrics = curve_metrics(curve, truth_curve);
    const double corr = metrics.correlation.value_or(-1.0);
    const double peak = peak_amplitude(curve, baseline);
    o.detail << "icbtv correlation " << fmt(corr) << ", peak amplitude " << fmt(peak) << ", total " << fmt(total)
             << " s ";

    o.require(corr >= kMinCorrelation, "correlation");
    o.require(rmse[Method::ICBTV] <= rmse[Method::TempTV] && rmse[Method::TempTV] <= rmse[Method::Temp] &&
                  rmse[Method::Temp] <= rmse[Method::LS],
              "rmse ordering");
    o.require(peak >= kPeakLow && peak <= kPeakHigh, "peak amplitude");
    o.require(total <= kReproductionSeconds, "runtime");
    return o;
}

Outcome gamma_tradeoff(Reproduction &rep) {
    Outcome o;
    rep.prepare();
    const RoiSpec roi = rep.roi();
    const std::size_t baseline = baseline_frame_count(roi_mean_curve(rep.truth(), roi));
    std::vector<double> peaks, tails;
    for (double g : {5.0, 25.0, 100.0}) {
        const auto curve = roi_mean_curve(rep.recon(Method::ICBTV, g), roi);
        peaks.push_back(peak_amplitude(curve, baseline));
        tails.push_back(tail_variance(curve, 41));
        o.detail << "gamma " << g << ": peak " << fmt(peaks.back()) << ", tail variance " << fmt(tails.back())
                 << "; ";
    }
    o.require(peaks[0] > peaks[1] && peaks[1] > peaks[2], "peak amplitude decreasing");
    o.require(tails[0] > tails[1] && tails[1] > tails[2], "tail variance decreasing");
    return o;
}

Outcome chunking(Reproduction &rep) {
    Outcome o;
    rep.prepare();
    const KSpaceData data = read_kspace(rep.config().dataset / "kspace").frames(0, 10);
    const auto sub = read_subgradient(rep.config().prior / "subgradient");
    auto spec = method_spec(rep.config(), 10);
    spec.chunk_size = 10;
    const auto mono = reconstruct_dynamic(data, spec, &sub);
    spec.chunk_size = 5;
    const auto chunked = reconstruct_dynamic(data, spec, &sub);
    double worst = 0.0;
    for (std::size_t t = 0; t < 10; ++t)
        worst = std::max(worst, norm(chunked.frames[t] - mono.frames[t]) / norm(mono.frames[t]));
    o.detail << "max per-frame relative difference " << fmt(worst) << " ";
    o.require(worst <= kChunkTol, "chunked vs monolithic");
    return o;
}

Outcome sampling() {
    Outcome o;
    PhantomSpec ps;
    const auto pattern = golden_angle_pattern(ps.frames, ps.spokes_per_frame, ps.shape, ps.angle_increment, ps.scaling);
    double max_fraction = 0.0;
    bool disjoint = true;
    for (std::size_t t = 0; t < pattern.frame_count(); ++t) {
        max_fraction = std::max(max_fraction, static_cast<double>(pattern.sample_count(t)) / 9919.0);
        if (t + 1 < pattern.frame_count()) {
            const auto a = pattern.angles(t), b = pattern.angles(t + 1);
            const std::set<double> sa(a.begin(), a.end());
            for (double angle : b) disjoint = disjoint && !sa.count(angle);
        }
    }
    o.detail << pattern.frame_count() << " frames, max sampled fraction " << fmt(max_fraction)
             << (disjoint ? ", adjacent angle sets disjoint " : ", adjacent frames share angles ");
    o.require(disjoint, "disjoint angles");
    o.require(max_fraction <= kMaxSampledFraction, "sampled fraction");
    return o;
}

std::map<std::string, std::string> hash_tree(const fs::path &dir) {
    std::map<std::string, std::string> out;
    for (const auto &entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) out[fs::relative(entry.path(), dir).string()] = sha256_file(entry.path());
    return out;
}

int run_cli(const std::string &cli, const std::string &args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism(const fs::path &root, const std::string &cli) {
    Outcome o;
    const fs::path dir = root / "determinism";
    const fs::path run = dir / "run";
    ensure_directory(dir);
    Json cfg = {{"dataset", (run / "dataset").string()},
                {"prior", (run / "prior").string()},
                {"seed", 7},
                {"method", "icbtv"},
                {"stopping", {{"max_iterations", 200}}}};
    write_json(dir / "config.json", cfg);
    const std::string c = "--config " + (dir / "config.json").string();

    std::vector<std::map<std::string, std::string>> hashes;
    for (int pass = 0; pass < 2; ++pass) {
        fs::remove_all(run);
        int status = run_cli(cli, "simulate " + c);
        status = status ? status : run_cli(cli, "recon-prior " + c);
        status = status ? status : run_cli(cli, "recon " + c + " --out " + (run / "icbtv").string());
        status = status ? status : run_cli(cli, "recon " + c + " --method temp --out " + (run / "temp").string());
        status = status ? status
                        : run_cli(cli, "eval " + c + " --results " + (run / "icbtv").string() + " " +
                                           (run / "temp").string() + " --out " + (run / "eval").string());
        if (status != 0) {
            o.require(false, "pipeline exit status " + std::to_string(status));
            return o;
        }
        hashes.push_back(hash_tree(run));
    }
    std::size_t differing = 0;
    for (const auto &[name, h] : hashes[0]) {
        const auto it = hashes[1].find(name);
        if (it == hashes[1].end() || it->second != h) ++differing;
    }
    if (hashes[1].size() != hashes[0].size()) ++differing;
    o.detail << hashes[0].size() << " files compared, " << differing << " differ ";
    o.require(!hashes[0].empty() && differing == 0, "bit identity");
    return o;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Acceptance criteria"};
    std::string work = (fs::temp_directory_path() / "dynmri_acceptance").string();
    std::string cli = DYNMRI_CLI;
    std::vector<int> only;
    app.add_option("--work", work, "scratch directory");
    app.add_option("--cli", cli, "command-line tool for the determinism check");
    app.add_option("--only", only, "criteria to run");
    CLI11_PARSE(app, argc, argv);

    const fs::path root(work);
    fs::remove_all(root);
    ensure_directory(root);
    Reproduction rep(root / "full");

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"operator correctness", operators},
        {"prox and projection exactness", prox_projection},
        {"oracle agreement", oracle_agreement},
        {"structural reductions", reductions},
        {"Bregman and ICB identities", bregman_icb},
        {"desk-scale reproduction", [&] { return desk_reproduction(rep); }},
        {"gamma trade-off", [&] { return gamma_tradeoff(rep); }},
        {"chunking fidelity", [&] { return chunking(rep); }},
        {"sampling properties", sampling},
        {"determinism", [&] { return determinism(root, cli); }},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception &e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.str().c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
