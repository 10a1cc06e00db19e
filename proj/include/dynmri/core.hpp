#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dynmri {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

// Failure classes surfaced to the command line as machine-readable categories.
enum class ErrorCategory {
    Dimension,
    Pattern,
    Config,
    Io,
    Convergence,
    Divergence,
};

std::string_view to_string(ErrorCategory category);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string &what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

struct GridShape {
    std::size_t height = 0; // N1, rows (y)
    std::size_t width = 0;  // N2, columns (x)

    std::size_t size() const { return height * width; }
    std::size_t index(std::size_t y, std::size_t x) const { return y * width + x; }
    bool operator==(const GridShape &) const = default;
};

std::string to_string(GridShape shape);

/// Complex image on a row-major grid, pixel (y, x) at linear index y * width + x.
class Image {
public:
    Image() = default;
    explicit Image(GridShape shape, Complex fill = {});
    Image(GridShape shape, ComplexVector data);

    GridShape shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    Complex &operator[](std::size_t n) { return data_[n]; }
    const Complex &operator[](std::size_t n) const { return data_[n]; }
    Complex &at(std::size_t y, std::size_t x) { return data_[shape_.index(y, x)]; }
    const Complex &at(std::size_t y, std::size_t x) const { return data_[shape_.index(y, x)]; }

    std::span<Complex> data() { return data_; }
    std::span<const Complex> data() const { return data_; }
    const ComplexVector &values() const { return data_; }

    bool all_finite() const;

    Image &operator+=(const Image &other);
    Image &operator-=(const Image &other);
    Image &operator*=(double scale);

private:
    GridShape shape_;
    ComplexVector data_;
};

Image operator+(Image a, const Image &b);
Image operator-(Image a, const Image &b);
Image operator*(double scale, Image a);

/// Per-pixel pair (forward x-difference, forward y-difference).
struct VectorField {
    VectorField() = default;
    explicit VectorField(GridShape shape)
        : shape(shape), dx(shape.size()), dy(shape.size()) {}

    GridShape shape;
    ComplexVector dx;
    ComplexVector dy;

    std::size_t size() const { return dx.size(); }
    // Euclidean magnitude of the four real components at pixel n.
    double magnitude(std::size_t n) const;

    VectorField &operator+=(const VectorField &other);
    VectorField &operator-=(const VectorField &other);
    VectorField &operator*=(double scale);
};

VectorField operator+(VectorField a, const VectorField &b);
VectorField operator-(VectorField a, const VectorField &b);
VectorField operator*(double scale, VectorField a);

class ImageSequence {
public:
    ImageSequence() = default;
    explicit ImageSequence(std::vector<Image> frames);
    ImageSequence(GridShape shape, std::size_t frame_count);

    GridShape shape() const { return shape_; }
    std::size_t frame_count() const { return frames_.size(); }

    Image &operator[](std::size_t t) { return frames_[t]; }
    const Image &operator[](std::size_t t) const { return frames_[t]; }
    const std::vector<Image> &frames() const { return frames_; }

private:
    GridShape shape_;
    std::vector<Image> frames_;
};

// Real part of the Hermitian product, Re(sum conj(u_i) v_i).
double inner_product(std::span<const Complex> u, std::span<const Complex> v);
double inner_product(const Image &u, const Image &v);
double inner_product(const VectorField &u, const VectorField &v);

double norm_squared(std::span<const Complex> u);
double norm(std::span<const Complex> u);
double norm(const Image &u);
double norm(const VectorField &u);

// ---------------------------------------------------------------------------
// Reconstruction configuration

enum class Method { LS, TV, Temp, TempTV, ICBTV };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

struct StoppingRule {
    double energy_tolerance = 1e-6;   // relative energy change
    double residual_tolerance = 1e-4; // primal-dual residual
    std::size_t check_interval = 10;
    std::size_t max_iterations = 5000;

    void validate() const;
};

/// Weights and numerical settings for one dynamic reconstruction.
///
/// gamma[t] couples frames t and t + 1; the entry for the last frame is
/// never used inside a run (the boundary weight is zero). Step sizes left
/// empty are derived from an operator-norm estimate.
struct MethodSpec {
    Method method = Method::ICBTV;
    std::vector<double> alpha;
    std::vector<double> gamma;
    std::vector<double> w;
    std::optional<double> tau;
    std::optional<double> sigma;
    StoppingRule stopping;
    std::size_t chunk_size = 10;
    std::size_t ls_iterations = 50;

    static MethodSpec uniform(Method method, std::size_t frames, double alpha, double gamma,
                              double w = 0.1);

    std::size_t frame_count() const { return alpha.size(); }

    // Effective per-frame weights of the TV and structural-prior terms for
    // the configured method.
    double tv_weight(std::size_t t) const;
    double icb_weight(std::size_t t) const;
    double temporal_weight(std::size_t t) const;

    void validate(std::size_t frames) const;
};

} // namespace dynmri
