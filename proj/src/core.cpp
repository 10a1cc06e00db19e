#include "dynmri/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace dynmri {

std::string_view to_string(ErrorCategory category) {
    switch (category) {
    case ErrorCategory::Dimension: return "dimension";
    case ErrorCategory::Pattern: return "pattern";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Convergence: return "convergence";
    case ErrorCategory::Divergence: return "divergence";
    }
    return "unknown";
}

std::string to_string(GridShape shape) {
    return std::to_string(shape.height) + "x" + std::to_string(shape.width);
}

namespace {

void require_same(GridShape a, GridShape b, const char *where) {
    if (a != b) {
        throw Error(ErrorCategory::Dimension, std::string(where) + ": grid " + to_string(a) +
                                                  " does not match " + to_string(b));
    }
}

} // namespace

Image::Image(GridShape shape, Complex fill) : shape_(shape), data_(shape.size(), fill) {
    if (shape.height == 0 || shape.width == 0)
        throw Error(ErrorCategory::Dimension, "image grid must be non-empty");
}

Image::Image(GridShape shape, ComplexVector data) : shape_(shape), data_(std::move(data)) {
    if (shape.height == 0 || shape.width == 0)
        throw Error(ErrorCategory::Dimension, "image grid must be non-empty");
    if (data_.size() != shape.size()) {
        throw Error(ErrorCategory::Dimension, "image data length " + std::to_string(data_.size()) +
                                                  " does not match grid " + to_string(shape));
    }
}

bool Image::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const Complex &c) {
        return std::isfinite(c.real()) && std::isfinite(c.imag());
    });
}

Image &Image::operator+=(const Image &other) {
    require_same(shape_, other.shape_, "image addition");
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += other.data_[n];
    return *this;
}

Image &Image::operator-=(const Image &other) {
    require_same(shape_, other.shape_, "image subtraction");
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] -= other.data_[n];
    return *this;
}

Image &Image::operator*=(double scale) {
    for (auto &v : data_) v *= scale;
    return *this;
}

Image operator+(Image a, const Image &b) { return a += b; }
Image operator-(Image a, const Image &b) { return a -= b; }
Image operator*(double scale, Image a) { return a *= scale; }

double VectorField::magnitude(std::size_t n) const {
    return std::sqrt(std::norm(dx[n]) + std::norm(dy[n]));
}

VectorField &VectorField::operator+=(const VectorField &other) {
    require_same(shape, other.shape, "field addition");
    for (std::size_t n = 0; n < dx.size(); ++n) {
        dx[n] += other.dx[n];
        dy[n] += other.dy[n];
    }
    return *this;
}

VectorField &VectorField::operator-=(const VectorField &other) {
    require_same(shape, other.shape, "field subtraction");
    for (std::size_t n = 0; n < dx.size(); ++n) {
        dx[n] -= other.dx[n];
        dy[n] -= other.dy[n];
    }
    return *this;
}

VectorField &VectorField::operator*=(double scale) {
    for (std::size_t n = 0; n < dx.size(); ++n) {
        dx[n] *= scale;
        dy[n] *= scale;
    }
    return *this;
}

VectorField operator+(VectorField a, const VectorField &b) { return a += b; }
VectorField operator-(VectorField a, const VectorField &b) { return a -= b; }
VectorField operator*(double scale, VectorField a) { return a *= scale; }

ImageSequence::ImageSequence(std::vector<Image> frames) : frames_(std::move(frames)) {
    if (frames_.empty()) throw Error(ErrorCategory::Dimension, "image sequence needs at least one frame");
    shape_ = frames_.front().shape();
    for (const auto &frame : frames_) require_same(shape_, frame.shape(), "image sequence");
}

ImageSequence::ImageSequence(GridShape shape, std::size_t frame_count)
    : shape_(shape), frames_(frame_count, Image(shape)) {
    if (frame_count == 0) throw Error(ErrorCategory::Dimension, "image sequence needs at least one frame");
}

double inner_product(std::span<const Complex> u, std::span<const Complex> v) {
    if (u.size() != v.size()) {
        throw Error(ErrorCategory::Dimension, "inner product of vectors with lengths " +
                                                  std::to_string(u.size()) + " and " +
                                                  std::to_string(v.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        sum += u[i].real() * v[i].real() + u[i].imag() * v[i].imag();
    return sum;
}

double inner_product(const Image &u, const Image &v) {
    require_same(u.shape(), v.shape(), "inner product");
    return inner_product(u.data(), v.data());
}

double inner_product(const VectorField &u, const VectorField &v) {
    require_same(u.shape, v.shape, "inner product");
    return inner_product(u.dx, v.dx) + inner_product(u.dy, v.dy);
}

double norm_squared(std::span<const Complex> u) {
    double sum = 0.0;
    for (const auto &c : u) sum += std::norm(c);
    return sum;
}

double norm(std::span<const Complex> u) { return std::sqrt(norm_squared(u)); }
double norm(const Image &u) { return norm(u.data()); }
double norm(const VectorField &u) { return std::sqrt(norm_squared(u.dx) + norm_squared(u.dy)); }

std::string_view to_string(Method method) {
    switch (method) {
    case Method::LS: return "ls";
    case Method::TV: return "tv";
    case Method::Temp: return "temp";
    case Method::TempTV: return "temp_tv";
    case Method::ICBTV: return "icbtv";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "ls") return Method::LS;
    if (lower == "tv") return Method::TV;
    if (lower == "temp") return Method::Temp;
    if (lower == "temp_tv" || lower == "temp+tv" || lower == "temptv") return Method::TempTV;
    if (lower == "icbtv" || lower == "proposed") return Method::ICBTV;
    throw Error(ErrorCategory::Config, "unknown method '" + std::string(name) + "'");
}

void StoppingRule::validate() const {
    if (!(energy_tolerance > 0.0) || !(residual_tolerance > 0.0))
        throw Error(ErrorCategory::Config, "stopping tolerances must be positive");
    if (check_interval == 0) throw Error(ErrorCategory::Config, "check interval must be at least 1");
    if (max_iterations == 0) throw Error(ErrorCategory::Config, "iteration cap must be at least 1");
}

MethodSpec MethodSpec::uniform(Method method, std::size_t frames, double alpha, double gamma,
                               double w) {
    MethodSpec spec;
    spec.method = method;
    spec.alpha.assign(frames, alpha);
    spec.gamma.assign(frames, gamma);
    spec.w.assign(frames, w);
    return spec;
}

double MethodSpec::tv_weight(std::size_t t) const {
    switch (method) {
    case Method::TV:
    case Method::TempTV: return 1.0;
    case Method::ICBTV: return w[t];
    default: return 0.0;
    }
}

double MethodSpec::icb_weight(std::size_t t) const {
    return method == Method::ICBTV ? 1.0 - w[t] : 0.0;
}

double MethodSpec::temporal_weight(std::size_t t) const {
    switch (method) {
    case Method::Temp:
    case Method::TempTV:
    case Method::ICBTV: return gamma[t];
    default: return 0.0;
    }
}

void MethodSpec::validate(std::size_t frames) const {
    if (alpha.size() != frames || gamma.size() != frames || w.size() != frames) {
        throw Error(ErrorCategory::Config, "method weights must have one entry per frame (" +
                                               std::to_string(frames) + ")");
    }
    for (std::size_t t = 0; t < frames; ++t) {
        if (!(alpha[t] > 0.0) || !std::isfinite(alpha[t]))
            throw Error(ErrorCategory::Config, "alpha must be positive");
        if (!(gamma[t] >= 0.0) || !std::isfinite(gamma[t]))
            throw Error(ErrorCategory::Config, "gamma must be non-negative");
        if (!(w[t] >= 0.0 && w[t] <= 1.0)) throw Error(ErrorCategory::Config, "w must lie in [0, 1]");
    }
    if (tau && !(*tau > 0.0)) throw Error(ErrorCategory::Config, "tau must be positive");
    if (sigma && !(*sigma > 0.0)) throw Error(ErrorCategory::Config, "sigma must be positive");
    if (chunk_size == 0) throw Error(ErrorCategory::Config, "chunk size must be at least 1");
    stopping.validate();
}

} // namespace dynmri
