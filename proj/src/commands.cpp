#include "dynmri/commands.hpp"

#include "dynmri/regularization.hpp"
#include "dynmri/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace dynmri {

namespace {

template <typename T> T get_or(const Json &j, const char *key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCategory::Config, std::string("config key '") + key + "': " + e.what());
    }
}

void reject_unknown(const Json &j, std::initializer_list<const char *> keys, const char *where) {
    if (!j.is_object()) throw Error(ErrorCategory::Config, std::string(where) + " must be a JSON object");
    std::set<std::string> known(keys.begin(), keys.end());
    for (const auto &item : j.items()) {
        if (!known.count(item.key()))
            throw Error(ErrorCategory::Config, std::string("unknown key '") + item.key() + "' in " + where);
    }
}

RoiRect rect_from_json(const Json &j, const char *key) {
    const auto v = j.at(key).get<std::vector<std::size_t>>();
    if (v.size() != 4) throw Error(ErrorCategory::Config, std::string(key) + " must be [y0, x0, height, width]");
    return {v[0], v[1], v[2], v[3]};
}

Json rect_to_json(const RoiRect &r) { return Json::array({r.y0, r.x0, r.height, r.width}); }

RoiSpec roi_from_json(const Json &j) {
    reject_unknown(j, {"kind", "y0", "x0", "height", "width", "length", "x", "pixels", "label"}, "roi");
    const auto kind = get_or<std::string>(j, "kind", "rectangle");
    const auto label = get_or<std::string>(j, "label", "");
    if (kind == "rectangle") {
        return RoiSpec::rectangle(j.at("y0").get<std::size_t>(), j.at("x0").get<std::size_t>(),
                                  j.at("height").get<std::size_t>(), j.at("width").get<std::size_t>(), label);
    }
    if (kind == "line") {
        return RoiSpec::vertical_line(j.at("x").get<std::size_t>(), j.at("y0").get<std::size_t>(),
                                      j.at("length").get<std::size_t>(), label);
    }
    if (kind == "pixels") {
        std::vector<Pixel> pixels;
        for (const auto &p : j.at("pixels")) pixels.push_back({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>()});
        return RoiSpec::pixel_set(std::move(pixels), label);
    }
    throw Error(ErrorCategory::Config, "unknown roi kind '" + kind + "'");
}

Json roi_to_json(const RoiSpec &roi) {
    Json j;
    switch (roi.kind) {
    case RoiKind::Rectangle:
        j = {{"kind", "rectangle"}, {"y0", roi.y0}, {"x0", roi.x0}, {"height", roi.height}, {"width", roi.width}};
        break;
    case RoiKind::VerticalLine:
        j = {{"kind", "line"}, {"x", roi.x0}, {"y0", roi.y0}, {"length", roi.height}};
        break;
    case RoiKind::PixelSet: {
        Json pixels = Json::array();
        for (const auto &p : roi.pixels) pixels.push_back({p.y, p.x});
        j = {{"kind", "pixels"}, {"pixels", pixels}};
        break;
    }
    }
    j["label"] = roi.label;
    return j;
}

void parse_phantom(const Json &j, RunConfig &cfg) {
    reject_unknown(j,
                   {"height", "width", "frames", "mode", "roi", "control_roi", "amplitude", "onset_frame",
                    "seconds_per_frame", "spokes_per_frame", "angle_increment", "noise_fraction",
                    "prior_noise_fraction", "noise_normalization", "scaling", "prior_image", "dynamic_image"},
                   "phantom");
    PhantomSpec &p = cfg.phantom;
    p.shape.height = get_or(j, "height", p.shape.height);
    p.shape.width = get_or(j, "width", p.shape.width);
    p.frames = get_or(j, "frames", p.frames);
    const auto mode = get_or<std::string>(j, "mode", "builtin");
    if (mode == "builtin")
        p.mode = PhantomMode::Builtin;
    else if (mode == "external")
        p.mode = PhantomMode::ExternalPair;
    else
        throw Error(ErrorCategory::Config, "phantom mode must be 'builtin' or 'external'");
    if (j.contains("roi")) p.roi = rect_from_json(j, "roi");
    if (j.contains("control_roi")) p.control_roi = rect_from_json(j, "control_roi");
    p.hrf.amplitude = get_or(j, "amplitude", p.hrf.amplitude);
    p.hrf.onset_frame = get_or(j, "onset_frame", p.hrf.onset_frame);
    p.hrf.seconds_per_frame = get_or(j, "seconds_per_frame", p.hrf.seconds_per_frame);
    p.spokes_per_frame = get_or(j, "spokes_per_frame", p.spokes_per_frame);
    p.angle_increment = get_or(j, "angle_increment", p.angle_increment);
    p.noise_fraction = get_or(j, "noise_fraction", p.noise_fraction);
    p.prior_noise_fraction = get_or(j, "prior_noise_fraction", p.prior_noise_fraction);
    const auto norm = get_or<std::string>(j, "noise_normalization", "global");
    if (norm == "global")
        p.noise_normalization = NoiseNormalization::Global;
    else if (norm == "per_frame")
        p.noise_normalization = NoiseNormalization::PerFrame;
    else
        throw Error(ErrorCategory::Config, "noise_normalization must be 'global' or 'per_frame'");
    p.scaling = parse_fourier_scaling(get_or<std::string>(j, "scaling", "unitary"));
    if (j.contains("prior_image")) cfg.prior_image = j["prior_image"].get<std::string>();
    if (j.contains("dynamic_image")) cfg.dynamic_image = j["dynamic_image"].get<std::string>();
}

Json phantom_to_json(const RunConfig &cfg) {
    const PhantomSpec &p = cfg.phantom;
    Json j;
    j["height"] = p.shape.height;
    j["width"] = p.shape.width;
    j["frames"] = p.frames;
    j["mode"] = p.mode == PhantomMode::Builtin ? "builtin" : "external";
    j["roi"] = rect_to_json(p.roi);
    j["control_roi"] = rect_to_json(p.control_roi);
    j["amplitude"] = p.hrf.amplitude;
    j["onset_frame"] = p.hrf.onset_frame;
    j["seconds_per_frame"] = p.hrf.seconds_per_frame;
    j["spokes_per_frame"] = p.spokes_per_frame;
    j["angle_increment"] = p.angle_increment;
    j["noise_fraction"] = p.noise_fraction;
    j["prior_noise_fraction"] = p.prior_noise_fraction;
    j["noise_normalization"] = p.noise_normalization == NoiseNormalization::Global ? "global" : "per_frame";
    j["scaling"] = std::string(to_string(p.scaling));
    if (cfg.prior_image) j["prior_image"] = cfg.prior_image->string();
    if (cfg.dynamic_image) j["dynamic_image"] = cfg.dynamic_image->string();
    return j;
}

Json file_entry(const fs::path &dir, const std::string &name) {
    return {{"file", name}, {"sha256", sha256_file(dir / name)}};
}

// Hashes of every raw/json file written under `dir` with the given stems.
Json hash_files(const fs::path &dir, const std::vector<std::string> &names) {
    Json files = Json::array();
    for (const auto &name : names) files.push_back(file_entry(dir, name));
    return files;
}

fs::path with_raw(const fs::path &base) {
    fs::path p = base;
    p += ".raw";
    return p;
}

std::vector<std::string> raw_pair(const std::string &stem) { return {stem + ".raw", stem + ".json"}; }

void append(std::vector<std::string> &a, const std::vector<std::string> &b) { a.insert(a.end(), b.begin(), b.end()); }

void require_file(const fs::path &path, const std::string &what) {
    if (!fs::exists(path)) throw Error(ErrorCategory::Io, what + " not found at '" + path.string() + "'");
}

std::string method_dir_name(Method m) { return std::string(to_string(m)); }

void write_convergence_csv(const fs::path &path, const std::vector<ConvergenceRecord> &history) {
    std::vector<std::vector<double>> rows;
    for (const auto &r : history)
        rows.push_back({static_cast<double>(r.chunk), static_cast<double>(r.iteration), r.energy, r.residual});
    write_csv(path, {"chunk", "iteration", "energy", "residual"}, rows);
}

std::string format_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace

RunConfig config_from_json(const Json &j) {
    reject_unknown(j,
                   {"dataset", "out", "prior", "results", "seed", "phantom", "method", "alpha", "gamma", "w", "tau",
                    "sigma", "chunk", "ls_iterations", "stopping", "prior_reconstruction", "eval", "sweep"},
                   "config");
    RunConfig cfg;
    try {
        cfg.dataset = get_or<std::string>(j, "dataset", cfg.dataset.string());
        cfg.out = get_or<std::string>(j, "out", "");
        cfg.prior = get_or<std::string>(j, "prior", "");
        for (const auto &r : get_or<std::vector<std::string>>(j, "results", {})) cfg.results.emplace_back(r);
        cfg.seed = get_or(j, "seed", cfg.seed);
        if (j.contains("phantom")) parse_phantom(j["phantom"], cfg);
        if (j.contains("method")) cfg.method = parse_method(j["method"].get<std::string>());
        if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
        if (j.contains("gamma")) cfg.gamma = j["gamma"].get<double>();
        cfg.w = get_or(j, "w", cfg.w);
        if (j.contains("tau")) cfg.tau = j["tau"].get<double>();
        if (j.contains("sigma")) cfg.sigma = j["sigma"].get<double>();
        cfg.chunk = get_or(j, "chunk", cfg.chunk);
        cfg.ls_iterations = get_or(j, "ls_iterations", cfg.ls_iterations);
        if (j.contains("stopping")) {
            const Json &s = j["stopping"];
            reject_unknown(s, {"energy_tolerance", "residual_tolerance", "check_interval", "max_iterations"},
                           "stopping");
            cfg.stopping.energy_tolerance = get_or(s, "energy_tolerance", cfg.stopping.energy_tolerance);
            cfg.stopping.residual_tolerance = get_or(s, "residual_tolerance", cfg.stopping.residual_tolerance);
            cfg.stopping.check_interval = get_or(s, "check_interval", cfg.stopping.check_interval);
            cfg.stopping.max_iterations = get_or(s, "max_iterations", cfg.stopping.max_iterations);
        }
        if (j.contains("prior_reconstruction")) {
            const Json &p = j["prior_reconstruction"];
            reject_unknown(p, {"alpha0", "eta"}, "prior_reconstruction");
            cfg.alpha0 = get_or(p, "alpha0", cfg.alpha0);
            cfg.eta = get_or(p, "eta", cfg.eta);
        }
        if (j.contains("eval")) {
            const Json &e = j["eval"];
            reject_unknown(e, {"rois", "pixels", "line", "snapshot_frames"}, "eval");
            if (e.contains("rois"))
                for (const auto &r : e["rois"]) cfg.rois.push_back(roi_from_json(r));
            if (e.contains("pixels"))
                for (const auto &p : e["pixels"]) cfg.pixels.push_back({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>()});
            if (e.contains("line")) cfg.line = roi_from_json(e["line"]);
            cfg.snapshot_frames = get_or(e, "snapshot_frames", cfg.snapshot_frames);
        }
        if (j.contains("sweep")) {
            const Json &s = j["sweep"];
            reject_unknown(s, {"gammas", "alpha"}, "sweep");
            cfg.sweep_gammas = get_or(s, "gammas", cfg.sweep_gammas);
            cfg.sweep_alpha = get_or(s, "alpha", cfg.sweep_alpha);
        }
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCategory::Config, std::string("invalid config: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::Io, "cannot open config '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCategory::Config, "malformed config '" + path.string() + "': " + e.what());
    }
    return config_from_json(j);
}

Json config_to_json(const RunConfig &cfg) {
    Json j;
    j["dataset"] = cfg.dataset.string();
    j["out"] = cfg.out.string();
    j["prior"] = cfg.prior.string();
    Json results = Json::array();
    for (const auto &r : cfg.results) results.push_back(r.string());
    j["results"] = results;
    j["seed"] = cfg.seed;
    j["phantom"] = phantom_to_json(cfg);
    j["method"] = std::string(to_string(cfg.method));
    j["alpha"] = cfg.alpha.value_or(default_alpha(cfg.method));
    j["gamma"] = cfg.gamma.value_or(default_gamma(cfg.method));
    j["w"] = cfg.w;
    if (cfg.tau) j["tau"] = *cfg.tau;
    if (cfg.sigma) j["sigma"] = *cfg.sigma;
    j["chunk"] = cfg.chunk;
    j["ls_iterations"] = cfg.ls_iterations;
    j["stopping"] = {{"energy_tolerance", cfg.stopping.energy_tolerance},
                     {"residual_tolerance", cfg.stopping.residual_tolerance},
                     {"check_interval", cfg.stopping.check_interval},
                     {"max_iterations", cfg.stopping.max_iterations}};
    j["prior_reconstruction"] = {{"alpha0", cfg.alpha0}, {"eta", cfg.eta}};
    Json rois = Json::array();
    for (const auto &r : cfg.rois) rois.push_back(roi_to_json(r));
    Json pixels = Json::array();
    for (const auto &p : cfg.pixels) pixels.push_back({p.y, p.x});
    j["eval"] = {{"rois", rois}, {"pixels", pixels}, {"snapshot_frames", cfg.snapshot_frames}};
    if (cfg.line) j["eval"]["line"] = roi_to_json(*cfg.line);
    j["sweep"] = {{"gammas", cfg.sweep_gammas}, {"alpha", cfg.sweep_alpha}};
    return j;
}

double default_alpha(Method method) {
    switch (method) {
    case Method::LS: return 1.0;
    case Method::Temp: return 1.0;
    case Method::TV:
    case Method::TempTV: return 500.0;
    case Method::ICBTV: return 50.0;
    }
    return 1.0;
}

double default_gamma(Method method) {
    switch (method) {
    case Method::Temp: return 1.0;
    case Method::TempTV: return 500.0;
    case Method::ICBTV: return 25.0;
    default: return 0.0;
    }
}

MethodSpec method_spec(const RunConfig &cfg, std::size_t frames) {
    MethodSpec spec = MethodSpec::uniform(cfg.method, frames, cfg.alpha.value_or(default_alpha(cfg.method)),
                                          cfg.gamma.value_or(default_gamma(cfg.method)), cfg.w);
    spec.tau = cfg.tau;
    spec.sigma = cfg.sigma;
    spec.stopping = cfg.stopping;
    spec.chunk_size = cfg.chunk;
    spec.ls_iterations = cfg.ls_iterations;
    spec.validate(frames);
    return spec;
}

std::vector<RoiSpec> effective_rois(const RunConfig &cfg) {
    if (!cfg.rois.empty()) return cfg.rois;
    const RoiRect &a = cfg.phantom.roi;
    const RoiRect &c = cfg.phantom.control_roi;
    return {RoiSpec::rectangle(a.y0, a.x0, a.height, a.width, "activated"),
            RoiSpec::rectangle(c.y0, c.x0, c.height, c.width, "control")};
}

std::vector<Pixel> effective_pixels(const RunConfig &cfg) {
    if (!cfg.pixels.empty()) return cfg.pixels;
    // Four adjacent pixels in the middle of the activated region.
    const RoiRect &a = cfg.phantom.roi;
    const std::size_t y = a.y0 + a.height / 2, x = a.x0 + a.width / 2;
    return {{y - 1, x - 1}, {y - 1, x}, {y, x - 1}, {y, x}};
}

RoiSpec effective_line(const RunConfig &cfg) {
    if (cfg.line) return *cfg.line;
    // Vertical line through the activated region spanning the head.
    const RoiRect &a = cfg.phantom.roi;
    const std::size_t x = a.x0 + a.width / 2;
    const std::size_t h = cfg.phantom.shape.height;
    const std::size_t margin = h / 10;
    return RoiSpec::vertical_line(x, margin, h - 2 * margin, "line");
}

void cmd_simulate(const RunConfig &cfg) {
    const fs::path dir = cfg.out.empty() ? cfg.dataset : cfg.out;
    PhantomSpec spec = cfg.phantom;
    spec.seed = cfg.seed;
    if (spec.mode == PhantomMode::ExternalPair) {
        if (!cfg.prior_image || !cfg.dynamic_image)
            throw Error(ErrorCategory::Config, "external phantom mode needs prior_image and dynamic_image");
        spec.external_prior = read_image(*cfg.prior_image);
        spec.external_dynamic = read_image(*cfg.dynamic_image);
    }
    const Phantom phantom = make_phantom(spec);
    const SamplingPattern pattern =
        golden_angle_pattern(spec.frames, spec.spokes_per_frame, spec.shape, spec.angle_increment, spec.scaling);
    const KSpaceData data =
        synthesize_kspace(phantom.truth, pattern, spec.noise_fraction, spec.seed, spec.noise_normalization);
    const SamplingPattern full = SamplingPattern::full(spec.shape, 1, spec.scaling);
    const KSpaceData prior_data =
        synthesize_kspace(ImageSequence({phantom.prior}), full, spec.prior_noise_fraction, spec.seed + 1);

    ensure_directory(dir);
    write_sequence(dir / "truth", phantom.truth);
    write_image(dir / "prior_truth", phantom.prior);
    write_kspace(dir / "kspace", data);
    write_kspace(dir / "prior_kspace", prior_data);

    std::vector<std::string> files;
    append(files, raw_pair("truth"));
    append(files, raw_pair("prior_truth"));
    append(files, raw_pair("kspace"));
    files.push_back("kspace_pattern.json");
    append(files, raw_pair("prior_kspace"));
    files.push_back("prior_kspace_pattern.json");

    std::vector<double> fractions;
    for (std::size_t t = 0; t < pattern.frame_count(); ++t)
        fractions.push_back(static_cast<double>(pattern.sample_count(t)) / static_cast<double>(spec.shape.size()));
    std::vector<double> activation;
    for (std::size_t t = 0; t < spec.frames; ++t) activation.push_back(hrf_frame_value(t, spec.hrf));

    Json manifest;
    manifest["command"] = "simulate";
    manifest["config"] = config_to_json(cfg);
    if (cfg.prior_image) manifest["inputs"].push_back({{"file", cfg.prior_image->string()}, {"sha256", sha256_file(with_raw(*cfg.prior_image))}});
    if (cfg.dynamic_image) manifest["inputs"].push_back({{"file", cfg.dynamic_image->string()}, {"sha256", sha256_file(with_raw(*cfg.dynamic_image))}});
    manifest["sampling_fraction"] = fractions;
    manifest["activation"] = activation;
    manifest["files"] = hash_files(dir, files);
    write_json(dir / "manifest.json", manifest);
}

void cmd_recon_prior(const RunConfig &cfg) {
    require_file(cfg.dataset / "prior_kspace.raw", "prior k-space");
    const fs::path dir = !cfg.out.empty() ? cfg.out : (!cfg.prior.empty() ? cfg.prior : cfg.dataset / "prior");
    const KSpaceData data = read_kspace(cfg.dataset / "prior_kspace");
    if (data.frame_count() != 1) throw Error(ErrorCategory::Dimension, "prior k-space must hold one frame");
    if (!(cfg.eta >= 0.0)) throw Error(ErrorCategory::Config, "eta must be non-negative");
    const PriorResult prior = reconstruct_prior(data.samples[0], data.pattern, cfg.alpha0, cfg.stopping, cfg.tau, cfg.sigma);
    const SubgradientField sub = extract_subgradient(prior.image, cfg.eta);

    ensure_directory(dir);
    write_image(dir / "u0", prior.image);
    write_subgradient(dir / "subgradient", sub);
    const PgmRange range = write_pgm(dir / "u0.pgm", prior.image);
    write_convergence_csv(dir / "convergence.csv", prior.history);

    std::size_t edges = 0;
    for (std::size_t n = 0; n < sub.q0.size(); ++n) edges += sub.q0.magnitude(n) > 0.0 ? 1 : 0;

    std::vector<std::string> files;
    append(files, raw_pair("u0"));
    append(files, raw_pair("subgradient_q0"));
    append(files, raw_pair("subgradient_p0"));
    files.push_back("subgradient.json");
    files.push_back("u0.pgm");
    files.push_back("convergence.csv");

    Json manifest;
    manifest["command"] = "recon-prior";
    manifest["alpha0"] = cfg.alpha0;
    manifest["eta"] = cfg.eta;
    manifest["tau"] = prior.tau;
    manifest["sigma"] = prior.sigma;
    manifest["iterations"] = prior.iterations;
    manifest["converged"] = prior.converged;
    manifest["edge_pixels"] = edges;
    manifest["pgm"] = {{"u0.pgm", {{"min", range.min}, {"max", range.max}}}};
    manifest["inputs"] = {{{"file", "prior_kspace.raw"}, {"sha256", sha256_file(cfg.dataset / "prior_kspace.raw")}}};
    manifest["files"] = hash_files(dir, files);
    write_json(dir / "manifest.json", manifest);
}

void cmd_recon(const RunConfig &cfg) {
    require_file(cfg.dataset / "kspace.raw", "dynamic k-space");
    const fs::path dir = cfg.out.empty() ? fs::path("results") / method_dir_name(cfg.method) : cfg.out;
    const KSpaceData data = read_kspace(cfg.dataset / "kspace");
    const MethodSpec spec = method_spec(cfg, data.frame_count());

    std::optional<SubgradientField> sub;
    Json inputs = Json::array();
    inputs.push_back({{"file", "kspace.raw"}, {"sha256", sha256_file(cfg.dataset / "kspace.raw")}});
    if (cfg.method == Method::ICBTV) {
        if (cfg.prior.empty()) throw Error(ErrorCategory::Config, "method icbtv needs a prior directory (--prior)");
        require_file(cfg.prior / "subgradient.json", "prior subgradient");
        sub = read_subgradient(cfg.prior / "subgradient");
        if (sub->shape() != data.pattern.shape())
            throw Error(ErrorCategory::Dimension, "prior grid does not match the dynamic data grid");
        inputs.push_back({{"file", "subgradient_q0.raw"}, {"sha256", sha256_file(cfg.prior / "subgradient_q0.raw")}});
    }

    const Reconstruction recon = reconstruct_dynamic(data, spec, sub ? &*sub : nullptr);

    ensure_directory(dir);
    write_sequence(dir / "recon", recon.frames);
    write_convergence_csv(dir / "convergence.csv", recon.history);

    Json chunks = Json::array();
    for (const auto &c : recon.chunks) {
        Json jc;
        jc["first"] = c.range.first;
        jc["last"] = c.range.last;
        if (c.range.link_frame) jc["link_frame"] = *c.range.link_frame;
        jc["tau"] = c.tau;
        jc["sigma"] = c.sigma;
        jc["operator_norm"] = c.operator_norm;
        jc["iterations"] = c.iterations;
        jc["converged"] = c.converged;
        jc["energy"] = c.energy;
        jc["residual"] = c.residual;
        chunks.push_back(std::move(jc));
    }
    std::vector<std::string> files;
    append(files, raw_pair("recon"));
    files.push_back("convergence.csv");

    Json manifest;
    manifest["command"] = "recon";
    manifest["label"] = method_dir_name(cfg.method);
    manifest["method"] = std::string(to_string(cfg.method));
    manifest["alpha"] = spec.alpha;
    manifest["gamma"] = spec.gamma;
    manifest["w"] = spec.w;
    manifest["chunk"] = spec.chunk_size;
    manifest["ls_iterations"] = spec.ls_iterations;
    manifest["stopping"] = config_to_json(cfg)["stopping"];
    manifest["converged"] = recon.converged;
    manifest["chunks"] = chunks;
    manifest["inputs"] = inputs;
    manifest["files"] = hash_files(dir, files);
    write_json(dir / "manifest.json", manifest);
}

namespace {

struct LoadedResult {
    std::string label;
    ImageSequence frames;
};

std::vector<LoadedResult> load_results(const std::vector<fs::path> &dirs, const ImageSequence &truth) {
    std::vector<LoadedResult> out;
    for (const auto &dir : dirs) {
        require_file(dir / "recon.raw", "reconstruction");
        std::string label = dir.filename().string();
        if (fs::exists(dir / "manifest.json")) label = read_json(dir / "manifest.json").value("label", label);
        ImageSequence seq = read_sequence(dir / "recon");
        if (seq.frame_count() != truth.frame_count() || seq.shape() != truth.shape())
            throw Error(ErrorCategory::Dimension, "result '" + dir.string() + "' does not match the ground truth");
        out.push_back({label, std::move(seq)});
    }
    return out;
}

// Writes curves, metrics and images for labelled sequences; returns the manifest files list.
Json evaluate_into(const fs::path &dir, const RunConfig &cfg, const ImageSequence &truth,
                   const std::vector<LoadedResult> &results) {
    ensure_directory(dir);
    const auto rois = effective_rois(cfg);
    const auto pixels = effective_pixels(cfg);
    const RoiSpec line = effective_line(cfg);
    const std::size_t frames = truth.frame_count();
    std::vector<std::string> files;
    Json pgm_ranges;

    // ROI mean curves, one file per ROI with a column per sequence.
    for (const auto &roi : rois) {
        std::vector<std::string> header{"frame", "truth"};
        std::vector<std::vector<double>> columns{roi_mean_curve(truth, roi)};
        for (const auto &r : results) {
            header.push_back(r.label);
            columns.push_back(roi_mean_curve(r.frames, roi));
        }
        std::vector<std::vector<double>> rows(frames);
        for (std::size_t t = 0; t < frames; ++t) {
            rows[t].push_back(static_cast<double>(t + 1));
            for (const auto &c : columns) rows[t].push_back(c[t]);
        }
        const std::string name = "roi_" + (roi.label.empty() ? std::string("roi") : roi.label) + ".csv";
        write_csv(dir / name, header, rows);
        files.push_back(name);
    }

    // Single-pixel curves per sequence.
    auto write_pixels = [&](const std::string &label, const ImageSequence &seq) {
        const Matrix m = pixel_curves(seq, pixels);
        std::vector<std::string> header{"frame"};
        for (const auto &p : pixels) header.push_back("y" + std::to_string(p.y) + "_x" + std::to_string(p.x));
        std::vector<std::vector<double>> rows(frames);
        for (std::size_t t = 0; t < frames; ++t) {
            rows[t].push_back(static_cast<double>(t + 1));
            for (std::size_t j = 0; j < pixels.size(); ++j) rows[t].push_back(m(t, j));
        }
        const std::string name = "pixels_" + label + ".csv";
        write_csv(dir / name, header, rows);
        files.push_back(name);
    };
    write_pixels("truth", truth);
    for (const auto &r : results) write_pixels(r.label, r.frames);

    // Metrics against the activated region.
    const RoiSpec &active = rois.front();
    const auto truth_curve = roi_mean_curve(truth, active);
    const std::size_t baseline = baseline_frame_count(truth_curve);
    const std::size_t tail_start = std::min<std::size_t>(40, frames - 1);
    std::vector<std::vector<double>> metric_rows;
    Json metrics = Json::array();
    auto add_metrics = [&](const std::string &label, const ImageSequence &seq) {
        const auto curve = roi_mean_curve(seq, active);
        const CurveMetrics m = curve_metrics(curve, truth_curve);
        Json jm;
        jm["label"] = label;
        jm["curve_rmse"] = m.rmse;
        jm["series_rmse"] = roi_series_rmse(seq, truth, active);
        jm["peak_value"] = m.peak_value;
        jm["peak_frame"] = m.peak_frame + 1;
        jm["peak_amplitude"] = peak_amplitude(curve, baseline);
        jm["tail_variance"] = tail_variance(curve, tail_start);
        if (m.correlation)
            jm["correlation"] = *m.correlation;
        else
            jm["correlation"] = nullptr;
        metrics.push_back(jm);
    };
    add_metrics("truth", truth);
    for (const auto &r : results) add_metrics(r.label, r.frames);
    write_json(dir / "metrics.json", metrics);
    files.push_back("metrics.json");

    // Snapshots, ROI zoom crops and the line-over-time map.
    const RoiRect zoom = [&] {
        const RoiRect &a = cfg.phantom.roi;
        const std::size_t pad = 4;
        const std::size_t y0 = a.y0 >= pad ? a.y0 - pad : 0, x0 = a.x0 >= pad ? a.x0 - pad : 0;
        return RoiRect{y0, x0, std::min(a.height + 2 * pad, truth.shape().height - y0),
                       std::min(a.width + 2 * pad, truth.shape().width - x0)};
    }();
    auto write_images = [&](const std::string &label, const ImageSequence &seq) {
        for (std::size_t t : cfg.snapshot_frames) {
            if (t >= frames) continue;
            const std::string frame = std::to_string(t + 1);
            const std::string full = label + "_t" + frame + ".pgm";
            const PgmRange r = write_pgm(dir / full, seq[t]);
            pgm_ranges[full] = {{"min", r.min}, {"max", r.max}};
            files.push_back(full);
            std::vector<double> crop;
            for (std::size_t y = zoom.y0; y < zoom.y0 + zoom.height; ++y)
                for (std::size_t x = zoom.x0; x < zoom.x0 + zoom.width; ++x) crop.push_back(std::abs(seq[t].at(y, x)));
            const std::string zname = label + "_zoom_t" + frame + ".pgm";
            const PgmRange zr = write_pgm(dir / zname, zoom.height, zoom.width, crop);
            pgm_ranges[zname] = {{"min", zr.min}, {"max", zr.max}};
            files.push_back(zname);
        }
        const Matrix map = roi_line_map(seq, line);
        const std::string mname = label + "_line.pgm";
        const PgmRange mr = write_pgm(dir / mname, map.rows, map.cols, map.values);
        pgm_ranges[mname] = {{"min", mr.min}, {"max", mr.max}};
        files.push_back(mname);
    };
    write_images("truth", truth);
    for (const auto &r : results) write_images(r.label, r.frames);

    Json manifest;
    manifest["command"] = "eval";
    manifest["rois"] = Json::array();
    for (const auto &roi : rois) manifest["rois"].push_back(roi_to_json(roi));
    manifest["line"] = roi_to_json(line);
    manifest["baseline_frames"] = baseline;
    manifest["pgm"] = pgm_ranges;
    manifest["files"] = hash_files(dir, files);
    return manifest;
}

} // namespace

void cmd_eval(const RunConfig &cfg) {
    require_file(cfg.dataset / "truth.raw", "ground truth");
    const fs::path dir = cfg.out.empty() ? fs::path("eval") : cfg.out;
    const ImageSequence truth = read_sequence(cfg.dataset / "truth");
    const auto results = load_results(cfg.results, truth);
    Json manifest = evaluate_into(dir, cfg, truth, results);
    Json inputs = Json::array();
    inputs.push_back({{"file", "truth.raw"}, {"sha256", sha256_file(cfg.dataset / "truth.raw")}});
    for (const auto &r : cfg.results) inputs.push_back({{"file", (r / "recon.raw").string()}, {"sha256", sha256_file(r / "recon.raw")}});
    manifest["inputs"] = inputs;
    write_json(dir / "manifest.json", manifest);
}

void cmd_sweep(const RunConfig &cfg) {
    if (cfg.sweep_gammas.empty()) throw Error(ErrorCategory::Config, "sweep needs at least one gamma");
    const fs::path dir = cfg.out.empty() ? fs::path("sweep") : cfg.out;
    std::vector<fs::path> dirs;
    for (double g : cfg.sweep_gammas) {
        RunConfig run = cfg;
        run.method = Method::ICBTV;
        run.alpha = cfg.sweep_alpha;
        run.gamma = g;
        run.out = dir / ("gamma_" + format_label(g));
        cmd_recon(run);
        // Relabel so the curves carry the gamma value.
        Json m = read_json(run.out / "manifest.json");
        m["label"] = "gamma_" + format_label(g);
        write_json(run.out / "manifest.json", m);
        dirs.push_back(run.out);
    }
    RunConfig ev = cfg;
    ev.results = dirs;
    ev.out = dir / "eval";
    cmd_eval(ev);
}

void cmd_reproduce(const RunConfig &cfg) {
    const fs::path root = cfg.out.empty() ? fs::path("reproduction") : cfg.out;
    RunConfig base = cfg;
    base.dataset = root / "dataset";
    base.prior = root / "prior";

    RunConfig sim = base;
    sim.out = base.dataset;
    cmd_simulate(sim);

    RunConfig prior = base;
    prior.out = base.prior;
    cmd_recon_prior(prior);

    std::vector<fs::path> dirs;
    for (Method m : {Method::LS, Method::TV, Method::Temp, Method::TempTV, Method::ICBTV}) {
        RunConfig run = base;
        run.method = m;
        run.alpha.reset();
        run.gamma.reset();
        run.out = root / "results" / method_dir_name(m);
        cmd_recon(run);
        dirs.push_back(run.out);
    }
    RunConfig ev = base;
    ev.results = dirs;
    ev.out = root / "eval";
    cmd_eval(ev);

    RunConfig sweep = base;
    sweep.out = root / "sweep";
    cmd_sweep(sweep);
}

} // namespace dynmri
