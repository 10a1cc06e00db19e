#pragma once

#include "dynmri/core.hpp"

#include <cmath>
#include <complex>
#include <random>

namespace testing {

using dynmri::Complex;
using dynmri::GridShape;
using dynmri::Image;
using dynmri::VectorField;

inline Image random_image(GridShape shape, std::mt19937_64 &rng, bool real_only = false) {
    std::normal_distribution<double> n(0.0, 1.0);
    Image u(shape);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = Complex(n(rng), real_only ? 0.0 : n(rng));
    return u;
}

inline VectorField random_field(GridShape shape, std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    VectorField w(shape);
    for (std::size_t i = 0; i < w.size(); ++i) {
        w.dx[i] = Complex(n(rng), n(rng));
        w.dy[i] = Complex(n(rng), n(rng));
    }
    return w;
}

inline dynmri::ComplexVector random_vector(std::size_t len, std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    dynmri::ComplexVector v(len);
    for (auto &z : v) z = Complex(n(rng), n(rng));
    return v;
}

// Plain summation, independent of the library's inner_product.
template <class A, class B>
double re_dot(const A &a, const B &b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    return s;
}

inline double max_abs_diff(const Image &a, const Image &b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double rel_l2_diff(const Image &a, const Image &b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return std::sqrt(num / den);
}

// Two-class step image: value 0 for x < width / 2, 1 otherwise.
inline Image step_image(GridShape shape) {
    Image u(shape);
    for (std::size_t y = 0; y < shape.height; ++y)
        for (std::size_t x = shape.width / 2; x < shape.width; ++x) u.at(y, x) = 1.0;
    return u;
}

} // namespace testing
