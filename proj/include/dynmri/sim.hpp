#pragma once

#include "dynmri/core.hpp"
#include "dynmri/operators.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>

namespace dynmri {

/// Canonical double-gamma haemodynamic response.
///
/// h(s) = g(s; peak_delay) - g(s; undershoot_delay) / ratio with unit-scale
/// gamma densities (scaled by the dispersions), rescaled so its maximum is
/// `amplitude`. Frame t maps to s = (t - onset_frame) * seconds_per_frame.
struct HrfParams {
    double peak_delay = 6.0;
    double undershoot_delay = 16.0;
    double peak_dispersion = 1.0;
    double undershoot_dispersion = 1.0;
    double ratio = 6.0;
    double amplitude = 0.1;
    double onset_frame = 0.0;
    double seconds_per_frame = 0.4;
};

double hrf_canonical(double seconds, const HrfParams &params);
// Time of the maximum of the unscaled response, in seconds.
double hrf_peak_time(const HrfParams &params);
double hrf_frame_value(std::size_t frame, const HrfParams &params);

struct RoiRect {
    std::size_t y0 = 0;
    std::size_t x0 = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    bool contains(std::size_t y, std::size_t x) const {
        return y >= y0 && y < y0 + height && x >= x0 && x < x0 + width;
    }
    bool fits(GridShape shape) const {
        return height > 0 && width > 0 && y0 + height <= shape.height && x0 + width <= shape.width;
    }
};

enum class PhantomMode { Builtin, ExternalPair };

enum class NoiseNormalization { Global, PerFrame };

struct PhantomSpec {
    GridShape shape{109, 91};
    PhantomMode mode = PhantomMode::Builtin;
    RoiRect roi{30, 58, 8, 8};
    RoiRect control_roi{70, 25, 8, 8};
    std::size_t frames = 60;
    HrfParams hrf;
    std::size_t spokes_per_frame = 5;
    double angle_increment = 111.25;
    double noise_fraction = 0.05;
    double prior_noise_fraction = 0.05;
    NoiseNormalization noise_normalization = NoiseNormalization::Global;
    FourierScaling scaling = FourierScaling::Unitary;
    std::uint64_t seed = 42;
    // External-pair mode: co-registered prior (T1-like) and dynamic (T2-like) contrasts.
    std::optional<Image> external_prior;
    std::optional<Image> external_dynamic;

    void validate() const;
};

struct Phantom {
    Image prior;         // structural contrast
    Image dynamic_base;  // dynamic contrast without activation
    ImageSequence truth; // dynamic contrast with the ROI following the HRF
};

// Builtin piecewise-constant head phantom: both renderings share one edge set.
Phantom make_phantom(const PhantomSpec &spec);
Image builtin_contrast(GridShape shape, const RoiRect &roi, bool structural);

/// Golden-angle radial spokes rasterized on the Cartesian grid.
///
/// Spoke s = frame * spokes_per_frame + j has angle (s * increment) mod 180
/// degrees; samples are taken at unit radial steps through DC, rounded to the
/// nearest centred frequency and deduplicated within each frame.
SamplingPattern golden_angle_pattern(std::size_t frames, std::size_t spokes_per_frame, GridShape shape,
                                     double angle_increment = 111.25,
                                     FourierScaling scaling = FourierScaling::Forward);

// Linear DFT indices of one rasterized spoke in sampling order, possibly repeating DC.
std::vector<std::size_t> rasterize_spoke(double angle_deg, GridShape shape);

/// f_t = K_t truth_t + e_t with complex Gaussian noise scaled so that
/// ||e|| = fraction * ||f_clean|| over the whole data set (or per frame).
KSpaceData synthesize_kspace(const ImageSequence &truth, const SamplingPattern &pattern, double fraction,
                             std::uint64_t seed,
                             NoiseNormalization normalization = NoiseNormalization::Global);

} // namespace dynmri
