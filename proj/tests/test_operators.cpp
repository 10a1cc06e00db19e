#include "dynmri/operators.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numbers>

using namespace dynmri;

namespace {

// Dense O(N^2) DFT with exp(-2 pi i (ky y / N1 + kx x / N2)) and a 1/N factor.
Image dense_dft(const Image &u) {
    const GridShape s = u.shape();
    Image out(s);
    for (std::size_t ky = 0; ky < s.height; ++ky)
        for (std::size_t kx = 0; kx < s.width; ++kx) {
            Complex acc = 0.0;
            for (std::size_t y = 0; y < s.height; ++y)
                for (std::size_t x = 0; x < s.width; ++x) {
                    const double phase = -2.0 * std::numbers::pi *
                                         (static_cast<double>(ky * y) / static_cast<double>(s.height) +
                                          static_cast<double>(kx * x) / static_cast<double>(s.width));
                    acc += u.at(y, x) * std::polar(1.0, phase);
                }
            out.at(ky, kx) = acc / static_cast<double>(s.size());
        }
    return out;
}

SamplingPattern random_pattern(GridShape shape, std::size_t count, std::mt19937_64 &rng,
                               FourierScaling scaling = FourierScaling::Forward) {
    std::vector<std::size_t> all(shape.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(count);
    return SamplingPattern(shape, {all}, {}, scaling);
}

} // namespace

TEST_CASE("dft matches a dense transform") {
    std::mt19937_64 rng(3);
    const auto u = testing::random_image({6, 5}, rng);
    const Image fast = dft_forward(u);
    const Image slow = dense_dft(u);
    CHECK(testing::max_abs_diff(fast, slow) < 1e-14);

    const Image unitary = dft_forward(u, FourierScaling::Unitary);
    CHECK(testing::max_abs_diff(unitary, std::sqrt(30.0) * slow) < 1e-13);
}

TEST_CASE("dft of constants and DC-only spectra") {
    const GridShape s{4, 6};
    const Complex c(2.5, -1.0);
    const Image spec = dft_forward(Image(s, c));
    CHECK(std::abs(spec[0] - c) < 1e-15);
    for (std::size_t i = 1; i < spec.size(); ++i) CHECK(std::abs(spec[i]) < 1e-15);

    Image dc(s);
    dc[0] = c;
    const Image back = dft_inverse(dc);
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(std::abs(back[i] - c) < 1e-15);

    const Image zero = dft_inverse(Image(s));
    CHECK(norm(zero) == 0.0);
}

TEST_CASE("dft round trip") {
    std::mt19937_64 rng(4);
    for (GridShape s : {GridShape{32, 32}, GridShape{109, 91}, GridShape{1, 7}}) {
        for (FourierScaling sc : {FourierScaling::Forward, FourierScaling::Unitary}) {
            const auto u = testing::random_image(s, rng);
            CHECK(testing::max_abs_diff(dft_inverse(dft_forward(u, sc), sc), u) < 1e-12);
        }
    }
}

TEST_CASE("unitary scaling preserves norms") {
    std::mt19937_64 rng(5);
    const auto u = testing::random_image({109, 91}, rng);
    CHECK(norm(dft_forward(u, FourierScaling::Unitary)) == doctest::Approx(norm(u)).epsilon(1e-12));
}

TEST_CASE("sample and sample_adjoint") {
    const GridShape s{1, 4};
    const Image F(s, ComplexVector{1.0, 2.0, 3.0, 4.0});
    const SamplingPattern pick3(s, {{3}});
    const auto z = sample(F, pick3, 0);
    REQUIRE(z.size() == 1);
    CHECK(z[0] == Complex(4.0));

    const Image filled = sample_adjoint(ComplexVector{7.0}, pick3, 0);
    CHECK(filled.values() == ComplexVector{0.0, 0.0, 0.0, 7.0});

    const auto full = SamplingPattern::full(s);
    CHECK(sample(F, full, 0) == F.values());
    CHECK(sample_adjoint(F.values(), full, 0).values() == F.values());

    CHECK_THROWS_AS(sample_adjoint(ComplexVector{1.0, 2.0}, pick3, 0), Error);
}

TEST_CASE("pattern rejects invalid index sets") {
    auto category = [](auto &&fn) {
        try {
            fn();
        } catch (const Error &e) {
            return e.category();
        }
        return ErrorCategory::Io;
    };
    CHECK(category([] { SamplingPattern(GridShape{2, 2}, {{4}}); }) == ErrorCategory::Pattern);
    CHECK(category([] { SamplingPattern(GridShape{2, 2}, {{1, 1}}); }) == ErrorCategory::Pattern);
}

TEST_CASE("sample adjointness and projection properties") {
    std::mt19937_64 rng(6);
    const GridShape s{16, 12};
    const auto pattern = random_pattern(s, 40, rng);
    const auto F = testing::random_image(s, rng);
    const auto z = testing::random_vector(40, rng);
    const double lhs = testing::re_dot(sample(F, pattern, 0), z);
    const double rhs = testing::re_dot(F.values(), sample_adjoint(z, pattern, 0).values());
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));

    // S S* = I on the sample space.
    CHECK(sample(sample_adjoint(z, pattern, 0), pattern, 0) == z);
    // S* S is idempotent and self-adjoint.
    const Image P = sample_adjoint(sample(F, pattern, 0), pattern, 0);
    CHECK(sample_adjoint(sample(P, pattern, 0), pattern, 0).values() == P.values());
    const auto G = testing::random_image(s, rng);
    const Image PG = sample_adjoint(sample(G, pattern, 0), pattern, 0);
    CHECK(inner_product(P, G) == doctest::Approx(inner_product(F, PG)).epsilon(1e-13));
}

TEST_CASE("forward_op examples") {
    const GridShape s{5, 4};
    const Complex c(0.3, 0.7);
    const SamplingPattern with_dc(s, {{7, 0, 3}});
    const auto k = forward_op(Image(s, c), with_dc, 0);
    CHECK(std::abs(k[1] - c) < 1e-15);
    CHECK(std::abs(k[0]) < 1e-15);

    const SamplingPattern empty(s, {{}});
    CHECK(forward_op(Image(s, c), empty, 0).empty());
    CHECK(norm(adjoint_op(ComplexVector{}, empty, 0)) == 0.0);
    CHECK(norm(adjoint_op(ComplexVector(3), with_dc, 0)) == 0.0);
}

TEST_CASE("forward_op and adjoint_op are adjoint") {
    std::mt19937_64 rng(7);
    for (FourierScaling sc : {FourierScaling::Forward, FourierScaling::Unitary}) {
        for (GridShape s : {GridShape{32, 32}, GridShape{109, 91}, GridShape{128, 128}}) {
            const auto pattern = random_pattern(s, s.size() / 7, rng, sc);
            const auto u = testing::random_image(s, rng);
            const auto y = testing::random_vector(pattern.sample_count(0), rng);
            const double lhs = testing::re_dot(forward_op(u, pattern, 0), y);
            const double rhs = testing::re_dot(u.values(), adjoint_op(y, pattern, 0).values());
            CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
        }
    }
}

TEST_CASE("adjoint_op on a full pattern") {
    std::mt19937_64 rng(8);
    const GridShape s{8, 6};
    const auto z = testing::random_image(s, rng);

    // Unitary: the inverse transform is the adjoint.
    const auto unitary = SamplingPattern::full(s, 1, FourierScaling::Unitary);
    CHECK(testing::max_abs_diff(adjoint_op(z.values(), unitary, 0), dft_inverse(z, FourierScaling::Unitary)) <
          1e-14);

    // Forward: the adjoint of the 1/N transform carries 1/N on the inverse.
    const auto forward = SamplingPattern::full(s);
    const Image expected = (1.0 / static_cast<double>(s.size())) * dft_inverse(z);
    CHECK(testing::max_abs_diff(adjoint_op(z.values(), forward, 0), expected) < 1e-15);
}

TEST_CASE("workspace operators match the allocating versions") {
    std::mt19937_64 rng(9);
    const GridShape s{20, 14};
    const auto pattern = random_pattern(s, 50, rng, FourierScaling::Unitary);
    const auto u = testing::random_image(s, rng);
    Image spectrum;
    ComplexVector k;
    forward_op(u, pattern, 0, spectrum, k);
    CHECK(k == forward_op(u, pattern, 0));
    Image back;
    adjoint_op(k, pattern, 0, spectrum, back);
    CHECK(back.values() == adjoint_op(k, pattern, 0).values());
}

TEST_CASE("gradient examples") {
    const GridShape s{2, 2};
    CHECK(norm(gradient(Image(s, Complex(3.0, -2.0)))) == 0.0);

    const Image u(s, ComplexVector{0.0, 1.0, 0.0, 1.0});
    const VectorField g = gradient(u);
    CHECK(g.dx == ComplexVector{1.0, 0.0, 1.0, 0.0});
    CHECK(g.dy == ComplexVector{0.0, 0.0, 0.0, 0.0});
}

TEST_CASE("divergence examples") {
    const GridShape s{3, 5};
    CHECK(norm(divergence(VectorField(s))) == 0.0);

    // Backward differences of a constant x-field: +1 entering the first column,
    // -1 leaving the last, zero in between.
    VectorField w(s);
    std::fill(w.dx.begin(), w.dx.end(), Complex(1.0));
    const Image d = divergence(w);
    for (std::size_t y = 0; y < s.height; ++y) {
        CHECK(d.at(y, 0) == Complex(1.0));
        for (std::size_t x = 1; x + 1 < s.width; ++x) CHECK(d.at(y, x) == Complex(0.0));
        CHECK(d.at(y, s.width - 1) == Complex(-1.0));
    }
}

TEST_CASE("gradient and divergence are negative adjoints") {
    std::mt19937_64 rng(10);
    for (GridShape s : {GridShape{16, 16}, GridShape{32, 32}, GridShape{109, 91}, GridShape{128, 128},
                        GridShape{1, 9}}) {
        const auto u = testing::random_image(s, rng);
        const auto w = testing::random_field(s, rng);
        const VectorField g = gradient(u);
        const double lhs = testing::re_dot(g.dx, w.dx) + testing::re_dot(g.dy, w.dy);
        const double rhs = testing::re_dot(u.values(), divergence(w).values());
        CHECK(std::abs(lhs + rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("operator norm estimates") {
    for (GridShape s : {GridShape{16, 16}, GridShape{109, 91}}) {
        const double g = gradient_norm_estimate(s);
        CHECK(g >= 2.6);
        CHECK(g <= std::sqrt(8.0));
    }

    const GridShape s{12, 10};
    const auto full = SamplingPattern::full(s);
    const std::vector<double> none{0.0};
    CHECK(operator_norm_estimate(full, none, none, false) == 0.0);

    const double fourier = operator_norm_estimate(full, none, none, true);
    CHECK(fourier == doctest::Approx(1.0 / std::sqrt(120.0)).epsilon(0.05));
    const auto unitary = SamplingPattern::full(s, 1, FourierScaling::Unitary);
    CHECK(operator_norm_estimate(unitary, none, none, true) == doctest::Approx(1.0).epsilon(0.05));

    // [grad u; grad(u - z); grad z] has norm sqrt(3) * ||grad||.
    const std::vector<double> one{1.0};
    const double stacked = operator_norm_estimate(unitary, one, one, false);
    CHECK(stacked == doctest::Approx(std::sqrt(3.0) * gradient_norm_estimate(s)).epsilon(0.05));
    // Without the plain TV term: [grad(u - z); grad z] has norm golden ratio * ||grad||.
    const double split = operator_norm_estimate(unitary, none, one, false);
    CHECK(split == doctest::Approx(std::numbers::phi * gradient_norm_estimate(s)).epsilon(0.05));
}
