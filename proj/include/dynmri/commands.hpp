#pragma once

#include "dynmri/core.hpp"
#include "dynmri/eval.hpp"
#include "dynmri/io.hpp"
#include "dynmri/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dynmri {

/// Everything a command needs, read from one JSON file plus flag overrides.
struct RunConfig {
    fs::path dataset = "dataset";
    fs::path out;
    fs::path prior; // directory written by recon-prior
    std::vector<fs::path> results;

    PhantomSpec phantom;
    std::optional<fs::path> prior_image;   // external-pair mode inputs
    std::optional<fs::path> dynamic_image;

    Method method = Method::ICBTV;
    std::optional<double> alpha; // per-method defaults when absent
    std::optional<double> gamma;
    double w = 0.1;
    std::optional<double> tau;
    std::optional<double> sigma;
    std::size_t chunk = 10;
    std::size_t ls_iterations = 50;
    StoppingRule stopping;

    double alpha0 = 50.0;
    double eta = 0.05;

    std::vector<RoiSpec> rois;  // first rectangle is the activated region
    std::vector<Pixel> pixels;  // single-pixel curves
    std::optional<RoiSpec> line;
    std::vector<std::size_t> snapshot_frames{3, 7, 12, 20, 34};

    std::vector<double> sweep_gammas{5.0, 25.0, 100.0};
    double sweep_alpha = 50.0;

    std::uint64_t seed = 42;
};

RunConfig config_from_json(const Json &j);
RunConfig load_config(const fs::path &path);
Json config_to_json(const RunConfig &cfg);

// Weights used for the experiments when the config leaves them open.
double default_alpha(Method method);
double default_gamma(Method method);
MethodSpec method_spec(const RunConfig &cfg, std::size_t frames);

// Activated ROI, control ROI and vertical line derived from the phantom when not configured.
std::vector<RoiSpec> effective_rois(const RunConfig &cfg);
std::vector<Pixel> effective_pixels(const RunConfig &cfg);
RoiSpec effective_line(const RunConfig &cfg);

void cmd_simulate(const RunConfig &cfg);
void cmd_recon_prior(const RunConfig &cfg);
void cmd_recon(const RunConfig &cfg);
void cmd_eval(const RunConfig &cfg);
void cmd_sweep(const RunConfig &cfg);
// simulate, recon-prior, all five methods, eval and the gamma sweep under cfg.out.
void cmd_reproduce(const RunConfig &cfg);

} // namespace dynmri
