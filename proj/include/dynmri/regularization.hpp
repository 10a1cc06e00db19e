#pragma once

#include "dynmri/core.hpp"

#include <cstddef>
#include <span>

namespace dynmri {

/// Edge directions of a prior image and the induced TV subgradient.
///
/// q0 is the normalized gradient where its magnitude reaches the threshold
/// and zero elsewhere, so every pixel has magnitude exactly 0 or 1.
/// p0 = -div(q0).
struct SubgradientField {
    VectorField q0;
    Image p0;
    double eta = 0.0;

    GridShape shape() const { return p0.shape(); }
};

// Isotropic TV with the four-component (Re/Im of both differences) magnitude.
double tv_value(const Image &u);
double tv_value(const VectorField &grad);

SubgradientField extract_subgradient(const Image &u0, double eta);

// TV(u) - sign * <p0, u>; sign selects the subgradient p0 or -p0.
double bregman_distance(const Image &u, const SubgradientField &sub, int sign = +1);

class IcbConvergenceError : public Error {
public:
    IcbConvergenceError(const std::string &what, double last_gap, double last_residual)
        : Error(ErrorCategory::Convergence, what), last_gap_(last_gap), last_residual_(last_residual) {}

    double last_gap() const noexcept { return last_gap_; }
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_gap_;
    double last_residual_;
};

struct IcbEvaluation {
    double value = 0.0;       // best objective seen, an upper bound of the infimum
    double lower_bound = 0.0; // certified by a feasible dual point
    std::size_t iterations = 0;
};

/// Infimal convolution of the Bregman distances w.r.t. p0 and -p0.
///
/// Minimizes D^{p0}(u - psi) + D^{-p0}(psi) over psi with a primal-dual
/// iteration. Stops once the certified gap or the stagnation of the best
/// value over a 100-iteration window drops below `tolerance`; throws
/// IcbConvergenceError if neither happens within `max_iterations`.
IcbEvaluation icbtv_evaluate(const Image &u, const SubgradientField &sub, double tolerance = 1e-6,
                             std::size_t max_iterations = 50000);

double icbtv_value(const Image &u, const SubgradientField &sub, double tolerance = 1e-6);

// Proximal map of sigma * ||y||^2 / (2 alpha): elementwise factor alpha / (alpha + sigma).
ComplexVector prox_dual_quadratic(std::span<const Complex> r, double alpha, double sigma);
void prox_dual_quadratic_inplace(std::span<Complex> r, double alpha, double sigma);

// Pixelwise projection onto {|w_i| <= radius} using the four-component magnitude.
VectorField project_dual_ball(VectorField w, double radius);
void project_dual_ball_inplace(VectorField &w, double radius);

} // namespace dynmri
