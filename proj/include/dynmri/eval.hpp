#pragma once

#include "dynmri/core.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dynmri {

enum class RoiKind { Rectangle, PixelSet, VerticalLine };

struct Pixel {
    std::size_t y = 0;
    std::size_t x = 0;
    bool operator==(const Pixel &) const = default;
};

/// Region of interest on the image grid.
///
/// Rectangle: rows [y0, y0+height) x cols [x0, x0+width).
/// VerticalLine: column x0, rows [y0, y0+height).
/// PixelSet: explicit pixel list.
struct RoiSpec {
    RoiKind kind = RoiKind::Rectangle;
    std::size_t y0 = 0;
    std::size_t x0 = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<Pixel> pixels;
    std::string label;

    static RoiSpec rectangle(std::size_t y0, std::size_t x0, std::size_t height, std::size_t width,
                             std::string label = {});
    static RoiSpec vertical_line(std::size_t x, std::size_t y0, std::size_t length, std::string label = {});
    static RoiSpec pixel_set(std::vector<Pixel> pixels, std::string label = {});

    // Member pixels in row-major order (line: top to bottom).
    std::vector<Pixel> members() const;
    void validate(GridShape shape) const;
};

// Matrix stored row-major with `rows` x `cols` entries.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    double &operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

std::vector<double> roi_mean_curve(const ImageSequence &seq, const RoiSpec &roi);
// T x P matrix of |u_t| at each pixel.
Matrix pixel_curves(const ImageSequence &seq, const std::vector<Pixel> &pixels);
// (line length) x T matrix of |u_t| along a vertical line.
Matrix roi_line_map(const ImageSequence &seq, const RoiSpec &line);

struct CurveMetrics {
    double rmse = 0.0;
    double peak_value = 0.0;
    std::size_t peak_frame = 0;
    std::optional<double> correlation;
};

CurveMetrics curve_metrics(const std::vector<double> &recon, const std::vector<double> &truth);

// RMSE of |recon| against |truth| over every ROI pixel and frame.
double roi_series_rmse(const ImageSequence &recon, const ImageSequence &truth, const RoiSpec &roi);

// max(curve) minus the mean of curve[0, baseline_frames).
double peak_amplitude(const std::vector<double> &curve, std::size_t baseline_frames);

// Number of leading frames whose truth curve stays within `fraction` of the
// activation peak from its first value; at least 1.
std::size_t baseline_frame_count(const std::vector<double> &truth, double fraction = 0.01);

// Population variance of curve entries with index >= first.
double tail_variance(const std::vector<double> &curve, std::size_t first);

} // namespace dynmri
