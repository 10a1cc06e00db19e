#include "dynmri/operators.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <utility>

namespace dynmri {

std::string_view to_string(FourierScaling scaling) {
    return scaling == FourierScaling::Unitary ? "unitary" : "forward";
}

FourierScaling parse_fourier_scaling(std::string_view name) {
    if (name == "forward") return FourierScaling::Forward;
    if (name == "unitary") return FourierScaling::Unitary;
    throw Error(ErrorCategory::Config, "unknown Fourier scaling '" + std::string(name) + "'");
}

SamplingPattern::SamplingPattern(GridShape shape, std::vector<std::vector<std::size_t>> indices,
                                 std::vector<std::vector<double>> angles_deg,
                                 FourierScaling scaling)
    : shape_(shape), indices_(std::move(indices)), angles_(std::move(angles_deg)), scaling_(scaling) {
    if (shape_.size() == 0) throw Error(ErrorCategory::Pattern, "sampling pattern on an empty grid");
    if (angles_.empty()) angles_.resize(indices_.size());
    if (angles_.size() != indices_.size())
        throw Error(ErrorCategory::Pattern, "spoke angles must be given per frame");
    std::vector<char> seen(shape_.size());
    for (std::size_t t = 0; t < indices_.size(); ++t) {
        std::fill(seen.begin(), seen.end(), 0);
        for (auto idx : indices_[t]) {
            if (idx >= shape_.size()) {
                throw Error(ErrorCategory::Pattern, "frame " + std::to_string(t) + ": k-space index " +
                                                        std::to_string(idx) + " outside grid " +
                                                        to_string(shape_));
            }
            if (seen[idx]) {
                throw Error(ErrorCategory::Pattern, "frame " + std::to_string(t) +
                                                        ": duplicate k-space index " + std::to_string(idx));
            }
            seen[idx] = 1;
        }
    }
}

SamplingPattern SamplingPattern::full(GridShape shape, std::size_t frames, FourierScaling scaling) {
    std::vector<std::size_t> all(shape.size());
    for (std::size_t n = 0; n < all.size(); ++n) all[n] = n;
    return SamplingPattern(shape, std::vector<std::vector<std::size_t>>(frames, all), {}, scaling);
}

SamplingPattern SamplingPattern::frames(std::size_t first, std::size_t count) const {
    if (first + count > indices_.size()) throw Error(ErrorCategory::Pattern, "frame range out of bounds");
    SamplingPattern out;
    out.shape_ = shape_;
    out.scaling_ = scaling_;
    out.indices_.assign(indices_.begin() + first, indices_.begin() + first + count);
    out.angles_.assign(angles_.begin() + first, angles_.begin() + first + count);
    return out;
}

void KSpaceData::validate() const {
    if (samples.size() != pattern.frame_count()) {
        throw Error(ErrorCategory::Dimension, "k-space data has " + std::to_string(samples.size()) +
                                                  " frames, pattern has " +
                                                  std::to_string(pattern.frame_count()));
    }
    for (std::size_t t = 0; t < samples.size(); ++t) {
        if (samples[t].size() != pattern.sample_count(t)) {
            throw Error(ErrorCategory::Dimension, "frame " + std::to_string(t) + " holds " +
                                                      std::to_string(samples[t].size()) +
                                                      " samples, pattern selects " +
                                                      std::to_string(pattern.sample_count(t)));
        }
    }
}

KSpaceData KSpaceData::frames(std::size_t first, std::size_t count) const {
    KSpaceData out;
    out.pattern = pattern.frames(first, count);
    out.samples.assign(samples.begin() + first, samples.begin() + first + count);
    return out;
}

namespace {

// FFTW planning is not thread-safe, execution with the new-array interface is.
class PlanCache {
public:
    struct Plans {
        fftw_plan forward = nullptr;
        fftw_plan backward = nullptr;
    };

    static PlanCache &instance() {
        static PlanCache cache;
        return cache;
    }

    Plans get(GridShape shape) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(shape.height, shape.width);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        auto *in = fftw_alloc_complex(shape.size());
        auto *out = fftw_alloc_complex(shape.size());
        // ESTIMATE keeps the chosen algorithm, and therefore the rounding, fixed across runs.
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        const int n0 = static_cast<int>(shape.height);
        const int n1 = static_cast<int>(shape.width);
        Plans plans;
        plans.forward = fftw_plan_dft_2d(n0, n1, in, out, FFTW_FORWARD, flags);
        plans.backward = fftw_plan_dft_2d(n0, n1, in, out, FFTW_BACKWARD, flags);
        fftw_free(in);
        fftw_free(out);
        plans_.emplace(key, plans);
        return plans;
    }

    ~PlanCache() {
        for (auto &[key, plans] : plans_) {
            fftw_destroy_plan(plans.forward);
            fftw_destroy_plan(plans.backward);
        }
    }

private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, std::size_t>, Plans> plans_;
};

void execute(fftw_plan plan, std::span<const Complex> in, std::span<Complex> out) {
    // fftw does not write to the input of an out-of-place complex transform.
    auto *src = reinterpret_cast<fftw_complex *>(const_cast<Complex *>(in.data()));
    auto *dst = reinterpret_cast<fftw_complex *>(out.data());
    fftw_execute_dft(plan, src, dst);
}

double forward_factor(FourierScaling scaling, std::size_t n) {
    return scaling == FourierScaling::Unitary ? 1.0 / std::sqrt(static_cast<double>(n))
                                              : 1.0 / static_cast<double>(n);
}

double inverse_factor(FourierScaling scaling, std::size_t n) {
    return scaling == FourierScaling::Unitary ? 1.0 / std::sqrt(static_cast<double>(n)) : 1.0;
}

void require_grid(const Image &image, GridShape shape, const char *where) {
    if (image.shape() != shape) {
        throw Error(ErrorCategory::Dimension, std::string(where) + ": image grid " +
                                                  to_string(image.shape()) + " does not match pattern grid " +
                                                  to_string(shape));
    }
}

} // namespace

void dft_forward(const Image &u, Image &out, FourierScaling scaling) {
    if (out.shape() != u.shape()) out = Image(u.shape());
    execute(PlanCache::instance().get(u.shape()).forward, u.data(), out.data());
    out *= forward_factor(scaling, u.size());
}

void dft_inverse(const Image &spectrum, Image &out, FourierScaling scaling) {
    if (out.shape() != spectrum.shape()) out = Image(spectrum.shape());
    execute(PlanCache::instance().get(spectrum.shape()).backward, spectrum.data(), out.data());
    const double factor = inverse_factor(scaling, spectrum.size());
    if (factor != 1.0) out *= factor;
}

Image dft_forward(const Image &u, FourierScaling scaling) {
    Image out(u.shape());
    dft_forward(u, out, scaling);
    return out;
}

Image dft_inverse(const Image &spectrum, FourierScaling scaling) {
    Image out(spectrum.shape());
    dft_inverse(spectrum, out, scaling);
    return out;
}

ComplexVector sample(const Image &spectrum, const SamplingPattern &pattern, std::size_t t) {
    require_grid(spectrum, pattern.shape(), "sample");
    if (t >= pattern.frame_count()) throw Error(ErrorCategory::Pattern, "frame index out of range");
    auto idx = pattern.indices(t);
    ComplexVector out(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) out[k] = spectrum[idx[k]];
    return out;
}

Image sample_adjoint(std::span<const Complex> z, const SamplingPattern &pattern, std::size_t t) {
    if (t >= pattern.frame_count()) throw Error(ErrorCategory::Pattern, "frame index out of range");
    auto idx = pattern.indices(t);
    if (z.size() != idx.size()) {
        throw Error(ErrorCategory::Dimension, "sample vector of length " + std::to_string(z.size()) +
                                                  " for a frame with " + std::to_string(idx.size()) +
                                                  " samples");
    }
    Image out(pattern.shape());
    for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = z[k];
    return out;
}

void forward_op(const Image &u, const SamplingPattern &pattern, std::size_t t, Image &spectrum,
                ComplexVector &out) {
    require_grid(u, pattern.shape(), "forward_op");
    if (t >= pattern.frame_count()) throw Error(ErrorCategory::Pattern, "frame index out of range");
    if (spectrum.shape() != u.shape()) spectrum = Image(u.shape());
    execute(PlanCache::instance().get(u.shape()).forward, u.data(), spectrum.data());
    const double factor = forward_factor(pattern.scaling(), u.size());
    auto idx = pattern.indices(t);
    out.resize(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) out[k] = factor * spectrum[idx[k]];
}

void adjoint_op(std::span<const Complex> z, const SamplingPattern &pattern, std::size_t t, Image &spectrum,
                Image &out) {
    if (t >= pattern.frame_count()) throw Error(ErrorCategory::Pattern, "frame index out of range");
    auto idx = pattern.indices(t);
    if (z.size() != idx.size()) {
        throw Error(ErrorCategory::Dimension, "sample vector of length " + std::to_string(z.size()) +
                                                  " for a frame with " + std::to_string(idx.size()) +
                                                  " samples");
    }
    const GridShape shape = pattern.shape();
    if (spectrum.shape() != shape) spectrum = Image(shape);
    if (out.shape() != shape) out = Image(shape);
    // The adjoint of c * F is c * F^H, whatever the convention of c.
    const double factor = forward_factor(pattern.scaling(), shape.size());
    std::fill(spectrum.data().begin(), spectrum.data().end(), Complex{});
    for (std::size_t k = 0; k < idx.size(); ++k) spectrum[idx[k]] = factor * z[k];
    execute(PlanCache::instance().get(shape).backward, spectrum.data(), out.data());
}

ComplexVector forward_op(const Image &u, const SamplingPattern &pattern, std::size_t t) {
    Image spectrum(u.shape());
    ComplexVector out;
    forward_op(u, pattern, t, spectrum, out);
    return out;
}

Image adjoint_op(std::span<const Complex> z, const SamplingPattern &pattern, std::size_t t) {
    Image spectrum(pattern.shape()), out(pattern.shape());
    adjoint_op(z, pattern, t, spectrum, out);
    return out;
}

void gradient(const Image &u, VectorField &out) {
    const auto shape = u.shape();
    if (out.shape != shape) out = VectorField(shape);
    const std::size_t h = shape.height, w = shape.width;
    for (std::size_t y = 0; y < h; ++y) {
        const std::size_t row = y * w;
        for (std::size_t x = 0; x + 1 < w; ++x) out.dx[row + x] = u[row + x + 1] - u[row + x];
        out.dx[row + w - 1] = 0.0;
        if (y + 1 < h) {
            for (std::size_t x = 0; x < w; ++x) out.dy[row + x] = u[row + w + x] - u[row + x];
        } else {
            for (std::size_t x = 0; x < w; ++x) out.dy[row + x] = 0.0;
        }
    }
}

VectorField gradient(const Image &u) {
    VectorField out(u.shape());
    gradient(u, out);
    return out;
}

void divergence(const VectorField &field, Image &out) {
    const auto shape = field.shape;
    if (out.shape() != shape) out = Image(shape);
    const std::size_t h = shape.height, w = shape.width;
    const Complex *px = field.dx.data();
    const Complex *py = field.dy.data();
    Complex *o = out.data().data();
    for (std::size_t y = 0; y < h; ++y) {
        const std::size_t row = y * w;
        if (w == 1) {
            o[row] = 0.0;
        } else {
            o[row] = px[row];
            for (std::size_t x = 1; x + 1 < w; ++x) o[row + x] = px[row + x] - px[row + x - 1];
            o[row + w - 1] = -px[row + w - 2];
        }
        if (h == 1) continue;
        if (y == 0) {
            for (std::size_t x = 0; x < w; ++x) o[x] += py[x];
        } else if (y + 1 == h) {
            for (std::size_t x = 0; x < w; ++x) o[row + x] -= py[row - w + x];
        } else {
            for (std::size_t x = 0; x < w; ++x) o[row + x] += py[row + x] - py[row - w + x];
        }
    }
}

Image divergence(const VectorField &field) {
    Image out(field.shape);
    divergence(field, out);
    return out;
}

namespace {

struct FrameStack {
    const SamplingPattern *pattern = nullptr;
    std::size_t frame = 0;
    bool data = false;
    bool tv = false;
    bool icb = false;
    GridShape shape;
};

// Returns ||L^T L x|| for a unit-norm primal x = (u, z), and overwrites x with
// the normalized L^T L x.
double power_step(const FrameStack &stack, Image &u, Image &z) {
    Image next_u(stack.shape);
    Image next_z(stack.shape);
    if (stack.data) next_u += adjoint_op(forward_op(u, *stack.pattern, stack.frame), *stack.pattern, stack.frame);
    if (stack.tv) next_u -= divergence(gradient(u));
    if (stack.icb) {
        const Image diff_div = divergence(gradient(u - z));
        const Image z_div = divergence(gradient(z));
        next_u -= diff_div;
        next_z += diff_div;
        next_z -= z_div;
    }
    const double magnitude = std::sqrt(norm_squared(next_u.data()) + norm_squared(next_z.data()));
    if (magnitude > 0.0) {
        next_u *= 1.0 / magnitude;
        next_z *= 1.0 / magnitude;
    }
    u = std::move(next_u);
    z = std::move(next_z);
    return magnitude;
}

double frame_norm(const FrameStack &stack) {
    if (!stack.data && !stack.tv && !stack.icb) return 0.0;
    std::mt19937_64 rng(0x5eedULL + stack.frame);
    std::normal_distribution<double> normal;
    Image u(stack.shape);
    Image z(stack.shape);
    for (std::size_t n = 0; n < u.size(); ++n) {
        u[n] = Complex(normal(rng), normal(rng));
        if (stack.icb) z[n] = Complex(normal(rng), normal(rng));
    }
    const double start = std::sqrt(norm_squared(u.data()) + norm_squared(z.data()));
    u *= 1.0 / start;
    z *= 1.0 / start;

    double estimate = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
        const double next = std::sqrt(power_step(stack, u, z));
        if (next == 0.0) return 0.0;
        const bool converged = iter > 0 && std::abs(next - estimate) < 1e-3 * next;
        estimate = next;
        if (converged) break;
    }
    return estimate;
}

} // namespace

double operator_norm_estimate(const SamplingPattern &pattern, std::span<const double> tv_weights,
                              std::span<const double> icb_weights, bool data_term) {
    const std::size_t frames = pattern.frame_count();
    if (frames == 0) throw Error(ErrorCategory::Pattern, "operator norm of an empty chunk");
    if (tv_weights.size() != frames || icb_weights.size() != frames)
        throw Error(ErrorCategory::Dimension, "operator weights must have one entry per frame");
    double best = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
        FrameStack stack{&pattern, t, data_term && pattern.sample_count(t) > 0, tv_weights[t] > 0.0,
                         icb_weights[t] > 0.0, pattern.shape()};
        best = std::max(best, frame_norm(stack));
    }
    return best;
}

double gradient_norm_estimate(GridShape shape) {
    FrameStack stack{nullptr, 0, false, true, false, shape};
    return frame_norm(stack);
}

} // namespace dynmri
