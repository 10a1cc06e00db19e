#include "dynmri/eval.hpp"

#include <algorithm>
#include <cmath>

namespace dynmri {

RoiSpec RoiSpec::rectangle(std::size_t y0, std::size_t x0, std::size_t height, std::size_t width,
                           std::string label) {
    RoiSpec roi;
    roi.kind = RoiKind::Rectangle;
    roi.y0 = y0;
    roi.x0 = x0;
    roi.height = height;
    roi.width = width;
    roi.label = std::move(label);
    return roi;
}

RoiSpec RoiSpec::vertical_line(std::size_t x, std::size_t y0, std::size_t length, std::string label) {
    RoiSpec roi;
    roi.kind = RoiKind::VerticalLine;
    roi.y0 = y0;
    roi.x0 = x;
    roi.height = length;
    roi.width = 1;
    roi.label = std::move(label);
    return roi;
}

RoiSpec RoiSpec::pixel_set(std::vector<Pixel> pixels, std::string label) {
    RoiSpec roi;
    roi.kind = RoiKind::PixelSet;
    roi.pixels = std::move(pixels);
    roi.label = std::move(label);
    return roi;
}

std::vector<Pixel> RoiSpec::members() const {
    if (kind == RoiKind::PixelSet) return pixels;
    std::vector<Pixel> out;
    const std::size_t w = kind == RoiKind::VerticalLine ? 1 : width;
    for (std::size_t y = y0; y < y0 + height; ++y)
        for (std::size_t x = x0; x < x0 + w; ++x) out.push_back({y, x});
    return out;
}

void RoiSpec::validate(GridShape shape) const {
    const auto list = members();
    if (list.empty()) throw Error(ErrorCategory::Config, "region of interest '" + label + "' is empty");
    for (const auto &p : list) {
        if (p.y >= shape.height || p.x >= shape.width) {
            throw Error(ErrorCategory::Dimension, "region of interest '" + label + "' leaves the " +
                                                      to_string(shape) + " grid");
        }
    }
}

std::vector<double> roi_mean_curve(const ImageSequence &seq, const RoiSpec &roi) {
    roi.validate(seq.shape());
    const auto list = roi.members();
    std::vector<double> curve(seq.frame_count());
    for (std::size_t t = 0; t < seq.frame_count(); ++t) {
        double sum = 0.0;
        for (const auto &p : list) sum += std::abs(seq[t].at(p.y, p.x));
        curve[t] = sum / static_cast<double>(list.size());
    }
    return curve;
}

Matrix pixel_curves(const ImageSequence &seq, const std::vector<Pixel> &pixels) {
    RoiSpec::pixel_set(pixels, "pixel curves").validate(seq.shape());
    Matrix out{seq.frame_count(), pixels.size(), std::vector<double>(seq.frame_count() * pixels.size())};
    for (std::size_t t = 0; t < seq.frame_count(); ++t)
        for (std::size_t j = 0; j < pixels.size(); ++j) out(t, j) = std::abs(seq[t].at(pixels[j].y, pixels[j].x));
    return out;
}

Matrix roi_line_map(const ImageSequence &seq, const RoiSpec &line) {
    if (line.kind != RoiKind::VerticalLine) throw Error(ErrorCategory::Config, "intensity map needs a vertical line");
    line.validate(seq.shape());
    Matrix out{line.height, seq.frame_count(), std::vector<double>(line.height * seq.frame_count())};
    for (std::size_t i = 0; i < line.height; ++i)
        for (std::size_t t = 0; t < seq.frame_count(); ++t) out(i, t) = std::abs(seq[t].at(line.y0 + i, line.x0));
    return out;
}

CurveMetrics curve_metrics(const std::vector<double> &recon, const std::vector<double> &truth) {
    if (recon.size() != truth.size())
        throw Error(ErrorCategory::Dimension, "curves have lengths " + std::to_string(recon.size()) + " and " +
                                                  std::to_string(truth.size()));
    if (recon.empty()) throw Error(ErrorCategory::Dimension, "curves are empty");
    const std::size_t n = recon.size();
    CurveMetrics m;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) sq += (recon[i] - truth[i]) * (recon[i] - truth[i]);
    m.rmse = std::sqrt(sq / static_cast<double>(n));
    const auto peak = std::max_element(recon.begin(), recon.end());
    m.peak_value = *peak;
    m.peak_frame = static_cast<std::size_t>(peak - recon.begin());

    double mr = 0.0, mt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mr += recon[i];
        mt += truth[i];
    }
    mr /= static_cast<double>(n);
    mt /= static_cast<double>(n);
    double cov = 0.0, vr = 0.0, vt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (recon[i] - mr) * (truth[i] - mt);
        vr += (recon[i] - mr) * (recon[i] - mr);
        vt += (truth[i] - mt) * (truth[i] - mt);
    }
    if (vr > 0.0 && vt > 0.0) m.correlation = std::clamp(cov / std::sqrt(vr * vt), -1.0, 1.0);
    return m;
}

double roi_series_rmse(const ImageSequence &recon, const ImageSequence &truth, const RoiSpec &roi) {
    if (recon.frame_count() != truth.frame_count() || recon.shape() != truth.shape())
        throw Error(ErrorCategory::Dimension, "reconstruction and ground truth differ in size");
    roi.validate(truth.shape());
    const auto list = roi.members();
    double sq = 0.0;
    for (std::size_t t = 0; t < truth.frame_count(); ++t) {
        for (const auto &p : list) {
            const double d = std::abs(recon[t].at(p.y, p.x)) - std::abs(truth[t].at(p.y, p.x));
            sq += d * d;
        }
    }
    return std::sqrt(sq / static_cast<double>(list.size() * truth.frame_count()));
}

double peak_amplitude(const std::vector<double> &curve, std::size_t baseline_frames) {
    if (baseline_frames == 0 || baseline_frames > curve.size())
        throw Error(ErrorCategory::Dimension, "baseline window does not fit the curve");
    double base = 0.0;
    for (std::size_t i = 0; i < baseline_frames; ++i) base += curve[i];
    base /= static_cast<double>(baseline_frames);
    return *std::max_element(curve.begin(), curve.end()) - base;
}

std::size_t baseline_frame_count(const std::vector<double> &truth, double fraction) {
    if (truth.empty()) throw Error(ErrorCategory::Dimension, "curve is empty");
    const double peak = *std::max_element(truth.begin(), truth.end()) - truth.front();
    std::size_t n = 1;
    while (n < truth.size() && std::abs(truth[n] - truth.front()) <= fraction * peak) ++n;
    return n;
}

double tail_variance(const std::vector<double> &curve, std::size_t first) {
    if (first >= curve.size()) throw Error(ErrorCategory::Dimension, "curve tail is empty");
    const double n = static_cast<double>(curve.size() - first);
    double mean = 0.0;
    for (std::size_t i = first; i < curve.size(); ++i) mean += curve[i];
    mean /= n;
    double var = 0.0;
    for (std::size_t i = first; i < curve.size(); ++i) var += (curve[i] - mean) * (curve[i] - mean);
    return var / n;
}

} // namespace dynmri
