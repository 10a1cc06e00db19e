#pragma once

#include "dynmri/core.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace dynmri {

/// Normalization of the discrete Fourier transform.
///
/// Forward: the forward transform carries 1/(N1 N2) and the inverse none.
/// Unitary: both directions carry 1/sqrt(N1 N2), so the inverse is the adjoint.
enum class FourierScaling { Forward, Unitary };

std::string_view to_string(FourierScaling scaling);
FourierScaling parse_fourier_scaling(std::string_view name);

/// Per-frame injective selections of k-space coefficients.
///
/// Indices are linear DFT indices (DC at 0). The scaling is part of the
/// pattern so that a pattern fully determines the measurement operators.
class SamplingPattern {
public:
    SamplingPattern() = default;
    SamplingPattern(GridShape shape, std::vector<std::vector<std::size_t>> indices,
                    std::vector<std::vector<double>> angles_deg = {},
                    FourierScaling scaling = FourierScaling::Forward);

    // Every coefficient in every frame, in linear order.
    static SamplingPattern full(GridShape shape, std::size_t frames = 1,
                                FourierScaling scaling = FourierScaling::Forward);

    GridShape shape() const { return shape_; }
    FourierScaling scaling() const { return scaling_; }
    std::size_t frame_count() const { return indices_.size(); }
    std::size_t sample_count(std::size_t t) const { return indices_.at(t).size(); }
    std::span<const std::size_t> indices(std::size_t t) const { return indices_.at(t); }
    std::span<const double> angles(std::size_t t) const { return angles_.at(t); }

    // Frames [first, first + count) as a standalone pattern.
    SamplingPattern frames(std::size_t first, std::size_t count) const;

private:
    GridShape shape_;
    std::vector<std::vector<std::size_t>> indices_;
    std::vector<std::vector<double>> angles_;
    FourierScaling scaling_ = FourierScaling::Forward;
};

/// Measured samples f_t, one vector per frame, ordered as the pattern.
struct KSpaceData {
    SamplingPattern pattern;
    std::vector<ComplexVector> samples;

    std::size_t frame_count() const { return samples.size(); }
    void validate() const;
    KSpaceData frames(std::size_t first, std::size_t count) const;
};

Image dft_forward(const Image &u, FourierScaling scaling = FourierScaling::Forward);
Image dft_inverse(const Image &spectrum, FourierScaling scaling = FourierScaling::Forward);
// Buffer-reusing variants; `out` is resized when its grid differs.
void dft_forward(const Image &u, Image &out, FourierScaling scaling);
void dft_inverse(const Image &spectrum, Image &out, FourierScaling scaling);

ComplexVector sample(const Image &spectrum, const SamplingPattern &pattern, std::size_t t);
Image sample_adjoint(std::span<const Complex> z, const SamplingPattern &pattern, std::size_t t);

// K_t = S_t F and its exact adjoint under the real inner product.
ComplexVector forward_op(const Image &u, const SamplingPattern &pattern, std::size_t t);
Image adjoint_op(std::span<const Complex> z, const SamplingPattern &pattern, std::size_t t);
// Workspace variants; `spectrum` holds the full transform afterwards.
void forward_op(const Image &u, const SamplingPattern &pattern, std::size_t t, Image &spectrum,
                ComplexVector &out);
void adjoint_op(std::span<const Complex> z, const SamplingPattern &pattern, std::size_t t, Image &spectrum,
                Image &out);

// Forward differences, zero in the last column (x) and last row (y).
VectorField gradient(const Image &u);
void gradient(const Image &u, VectorField &out);

// Negative adjoint of gradient: <grad u, w> = -<u, div w>.
Image divergence(const VectorField &w);
void divergence(const VectorField &w, Image &out);

/// Spectral norm estimate of the stacked operator used by the solver.
///
/// Per frame t of the pattern the stack holds K_t (when `data_term`),
/// grad u_t (tv_weights[t] > 0) and grad(u_t - z_t), grad z_t
/// (icb_weights[t] > 0). Frames are independent blocks, so the result is
/// the largest per-frame estimate. Power iteration stops at relative change
/// below 1e-3 or after 100 iterations.
double operator_norm_estimate(const SamplingPattern &pattern, std::span<const double> tv_weights,
                              std::span<const double> icb_weights, bool data_term = true);

// Gradient-only stack on a bare grid.
double gradient_norm_estimate(GridShape shape);

} // namespace dynmri
