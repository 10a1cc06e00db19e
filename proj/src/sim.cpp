#include "dynmri/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dynmri {

namespace {

double gamma_density(double t, double shape, double scale) {
    if (t <= 0.0) return 0.0;
    const double x = t / scale;
    return std::exp((shape - 1.0) * std::log(x) - x - std::lgamma(shape)) / scale;
}

double hrf_unscaled(double t, const HrfParams &p) {
    const double peak = gamma_density(t, p.peak_delay / p.peak_dispersion, p.peak_dispersion);
    const double under =
        gamma_density(t, p.undershoot_delay / p.undershoot_dispersion, p.undershoot_dispersion);
    return peak - under / p.ratio;
}

} // namespace

double hrf_peak_time(const HrfParams &params) {
    // Coarse scan, then golden-section refinement around the best sample.
    const double step = 0.01;
    double best_t = 0.0, best = hrf_unscaled(0.0, params);
    for (double t = step; t <= 64.0; t += step) {
        const double v = hrf_unscaled(t, params);
        if (v > best) {
            best = v;
            best_t = t;
        }
    }
    double lo = std::max(0.0, best_t - step), hi = best_t + step;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int i = 0; i < 60; ++i) {
        const double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
        if (hrf_unscaled(a, params) > hrf_unscaled(b, params))
            hi = b;
        else
            lo = a;
    }
    return 0.5 * (lo + hi);
}

double hrf_canonical(double seconds, const HrfParams &params) {
    if (seconds <= 0.0 || params.amplitude == 0.0) return 0.0;
    const double peak = hrf_unscaled(hrf_peak_time(params), params);
    return params.amplitude * hrf_unscaled(seconds, params) / peak;
}

double hrf_frame_value(std::size_t frame, const HrfParams &params) {
    return hrf_canonical((static_cast<double>(frame) - params.onset_frame) * params.seconds_per_frame, params);
}

void PhantomSpec::validate() const {
    if (shape.size() == 0) throw Error(ErrorCategory::Config, "phantom grid must be non-empty");
    if (frames == 0) throw Error(ErrorCategory::Config, "phantom needs at least one frame");
    if (!roi.fits(shape)) throw Error(ErrorCategory::Config, "activation ROI lies outside the grid");
    if (!control_roi.fits(shape)) throw Error(ErrorCategory::Config, "control ROI lies outside the grid");
    if (!(hrf.amplitude >= 0.0)) throw Error(ErrorCategory::Config, "activation amplitude must be non-negative");
    if (!(noise_fraction >= 0.0 && noise_fraction < 1.0) ||
        !(prior_noise_fraction >= 0.0 && prior_noise_fraction < 1.0))
        throw Error(ErrorCategory::Config, "noise fraction must lie in [0, 1)");
    if (spokes_per_frame == 0) throw Error(ErrorCategory::Config, "at least one spoke per frame is required");
    if (!(hrf.seconds_per_frame > 0.0)) throw Error(ErrorCategory::Config, "seconds per frame must be positive");
    if (mode == PhantomMode::ExternalPair) {
        if (!external_prior || !external_dynamic)
            throw Error(ErrorCategory::Io, "external phantom mode needs both contrast images");
        if (external_prior->shape() != shape || external_dynamic->shape() != shape)
            throw Error(ErrorCategory::Dimension, "external contrast images do not match the phantom grid");
    }
}

namespace {

enum Tissue { Background, Skull, Csf, Gray, White, Ventricle, DeepGray, Patch, TissueCount };

// {structural, dynamic} intensities; adjacent tissues differ in both contrasts
// and several boundaries flip the sign of the jump between them.
constexpr double kIntensity[TissueCount][2] = {
    {0.00, 0.00}, // background
    {0.60, 0.30}, // skull
    {0.10, 0.95}, // csf
    {0.45, 0.55}, // gray matter
    {0.75, 0.30}, // white matter
    {0.10, 0.95}, // ventricles
    {0.50, 0.65}, // deep gray nuclei
    {0.45, 0.55}, // gray-matter patch carrying the activation
};

bool in_ellipse(double y, double x, double cy, double cx, double ry, double rx) {
    const double dy = (y - cy) / ry, dx = (x - cx) / rx;
    return dy * dy + dx * dx <= 1.0;
}

Tissue tissue_at(std::size_t y, std::size_t x, GridShape shape, const RoiRect &roi) {
    const double sy = static_cast<double>(shape.height) / 109.0;
    const double sx = static_cast<double>(shape.width) / 91.0;
    const double cy = 0.5 * static_cast<double>(shape.height - 1);
    const double cx = 0.5 * static_cast<double>(shape.width - 1);
    const double fy = static_cast<double>(y), fx = static_cast<double>(x);

    if (roi.contains(y, x)) return Patch;
    if (!in_ellipse(fy, fx, cy, cx, 50 * sy, 42 * sx)) return Background;
    if (!in_ellipse(fy, fx, cy, cx, 46 * sy, 38 * sx)) return Skull;
    if (!in_ellipse(fy, fx, cy, cx, 44 * sy, 36 * sx)) return Csf;
    if (!in_ellipse(fy, fx, cy, cx, 39 * sy, 31 * sx)) return Gray;
    if (in_ellipse(fy, fx, cy - 4 * sy, cx - 6 * sx, 10 * sy, 3 * sx) ||
        in_ellipse(fy, fx, cy - 4 * sy, cx + 6 * sx, 10 * sy, 3 * sx))
        return Ventricle;
    if (in_ellipse(fy, fx, cy + 8 * sy, cx - 12 * sx, 5 * sy, 4 * sx) ||
        in_ellipse(fy, fx, cy + 8 * sy, cx + 12 * sx, 5 * sy, 4 * sx))
        return DeepGray;
    // Gray-matter fold reaching into the white matter.
    if (in_ellipse(fy, fx, cy + 28 * sy, cx, 6 * sy, 3 * sx)) return Gray;
    return White;
}

} // namespace

Image builtin_contrast(GridShape shape, const RoiRect &roi, bool structural) {
    Image out(shape);
    for (std::size_t y = 0; y < shape.height; ++y)
        for (std::size_t x = 0; x < shape.width; ++x)
            out.at(y, x) = kIntensity[tissue_at(y, x, shape, roi)][structural ? 0 : 1];
    return out;
}

Phantom make_phantom(const PhantomSpec &spec) {
    spec.validate();
    Phantom phantom;
    if (spec.mode == PhantomMode::Builtin) {
        phantom.prior = builtin_contrast(spec.shape, spec.roi, true);
        phantom.dynamic_base = builtin_contrast(spec.shape, spec.roi, false);
    } else {
        phantom.prior = *spec.external_prior;
        phantom.dynamic_base = *spec.external_dynamic;
    }
    std::vector<Image> frames;
    frames.reserve(spec.frames);
    for (std::size_t t = 0; t < spec.frames; ++t) {
        Image frame = phantom.dynamic_base;
        const double activation = hrf_frame_value(t, spec.hrf);
        if (activation != 0.0) {
            for (std::size_t y = spec.roi.y0; y < spec.roi.y0 + spec.roi.height; ++y)
                for (std::size_t x = spec.roi.x0; x < spec.roi.x0 + spec.roi.width; ++x)
                    frame.at(y, x) += activation;
        }
        frames.push_back(std::move(frame));
    }
    phantom.truth = ImageSequence(std::move(frames));
    return phantom;
}

std::vector<std::size_t> rasterize_spoke(double angle_deg, GridShape shape) {
    const long n1 = static_cast<long>(shape.height), n2 = static_cast<long>(shape.width);
    const long radius = static_cast<long>(std::ceil(static_cast<double>(std::max(n1, n2)) / 2.0));
    // Centred frequency ranges [-ceil(N/2), floor(N/2)).
    const long ky_lo = -((n1 + 1) / 2), ky_hi = n1 / 2;
    const long kx_lo = -((n2 + 1) / 2), kx_hi = n2 / 2;
    const double theta = angle_deg * M_PI / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);

    std::vector<std::size_t> out;
    for (long r = -radius; r <= radius; ++r) {
        const long kx = std::lround(static_cast<double>(r) * c);
        const long ky = std::lround(static_cast<double>(r) * s);
        if (kx < kx_lo || kx >= kx_hi || ky < ky_lo || ky >= ky_hi) continue;
        const long ix = (kx + n2) % n2;
        const long iy = (ky + n1) % n1;
        out.push_back(static_cast<std::size_t>(iy * n2 + ix));
    }
    return out;
}

SamplingPattern golden_angle_pattern(std::size_t frames, std::size_t spokes_per_frame, GridShape shape,
                                     double angle_increment, FourierScaling scaling) {
    if (spokes_per_frame == 0) throw Error(ErrorCategory::Config, "at least one spoke per frame is required");
    std::vector<std::vector<std::size_t>> indices(frames);
    std::vector<std::vector<double>> angles(frames);
    std::vector<char> seen(shape.size());
    for (std::size_t t = 0; t < frames; ++t) {
        std::fill(seen.begin(), seen.end(), 0);
        for (std::size_t j = 0; j < spokes_per_frame; ++j) {
            const double s = static_cast<double>(t * spokes_per_frame + j);
            const double angle = std::fmod(s * angle_increment, 180.0);
            angles[t].push_back(angle);
            for (auto idx : rasterize_spoke(angle, shape)) {
                if (seen[idx]) continue;
                seen[idx] = 1;
                indices[t].push_back(idx);
            }
        }
    }
    return SamplingPattern(shape, std::move(indices), std::move(angles), scaling);
}

KSpaceData synthesize_kspace(const ImageSequence &truth, const SamplingPattern &pattern, double fraction,
                             std::uint64_t seed, NoiseNormalization normalization) {
    if (truth.frame_count() != pattern.frame_count())
        throw Error(ErrorCategory::Dimension, "ground truth and pattern have different frame counts");
    if (truth.shape() != pattern.shape())
        throw Error(ErrorCategory::Dimension, "ground truth and pattern grids differ");
    if (!(fraction >= 0.0 && fraction < 1.0)) throw Error(ErrorCategory::Config, "noise fraction must lie in [0, 1)");

    KSpaceData data;
    data.pattern = pattern;
    std::vector<ComplexVector> noise(truth.frame_count());
    for (std::size_t t = 0; t < truth.frame_count(); ++t) {
        data.samples.push_back(forward_op(truth[t], pattern, t));
        // One stream per frame keeps synthesis order-independent.
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(t)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal;
        noise[t].resize(data.samples[t].size());
        for (auto &e : noise[t]) {
            const double re = normal(rng);
            const double im = normal(rng);
            e = Complex(re, im);
        }
    }
    if (fraction == 0.0) return data;

    auto add_scaled = [&](std::size_t t, double scale) {
        for (std::size_t k = 0; k < noise[t].size(); ++k) data.samples[t][k] += scale * noise[t][k];
    };
    if (normalization == NoiseNormalization::Global) {
        double signal = 0.0, energy = 0.0;
        for (std::size_t t = 0; t < noise.size(); ++t) {
            signal += norm_squared(data.samples[t]);
            energy += norm_squared(noise[t]);
        }
        const double scale = energy > 0.0 ? fraction * std::sqrt(signal / energy) : 0.0;
        for (std::size_t t = 0; t < noise.size(); ++t) add_scaled(t, scale);
    } else {
        for (std::size_t t = 0; t < noise.size(); ++t) {
            const double energy = norm_squared(noise[t]);
            const double scale = energy > 0.0 ? fraction * std::sqrt(norm_squared(data.samples[t]) / energy) : 0.0;
            add_scaled(t, scale);
        }
    }
    return data;
}

} // namespace dynmri
