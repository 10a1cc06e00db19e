#include "dynmri/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

namespace dynmri {

namespace {

fs::path with_suffix(const fs::path &base, const char *suffix) {
    fs::path p = base;
    p += suffix;
    return p;
}

std::vector<unsigned char> read_bytes(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::Io, "cannot open '" + path.string() + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path &path, std::span<const unsigned char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCategory::Io, "cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCategory::Io, "write to '" + path.string() + "' failed");
}

void put_f64_le(std::vector<unsigned char> &buf, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

double get_f64_le(const unsigned char *p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string sha256_hex(std::span<const unsigned char> bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCategory::Io, "sha256 computation failed");
    static const char *hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string sha256_file(const fs::path &path) { return sha256_hex(read_bytes(path)); }

Json read_json(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::Io, "cannot open '" + path.string() + "' for reading");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCategory::Io, "malformed JSON in '" + path.string() + "': " + e.what());
    }
}

void write_json(const fs::path &path, const Json &j) {
    const std::string text = j.dump(2) + "\n";
    write_bytes(path, {reinterpret_cast<const unsigned char *>(text.data()), text.size()});
}

void ensure_directory(const fs::path &dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw Error(ErrorCategory::Io, "cannot create directory '" + dir.string() + "'");
}

void write_raw_stack(const fs::path &base, const RawStack &stack) {
    std::vector<unsigned char> buf;
    std::vector<std::size_t> lengths;
    for (const auto &frame : stack.frames) {
        lengths.push_back(frame.size());
        for (const auto &c : frame) {
            put_f64_le(buf, c.real());
            put_f64_le(buf, c.imag());
        }
    }
    write_bytes(with_suffix(base, ".raw"), buf);
    Json meta;
    meta["dtype"] = "complex128-le";
    meta["kind"] = stack.kind;
    meta["height"] = stack.shape.height;
    meta["width"] = stack.shape.width;
    meta["frames"] = stack.frames.size();
    meta["frame_lengths"] = lengths;
    meta["sha256"] = sha256_hex(buf);
    write_json(with_suffix(base, ".json"), meta);
}

RawStack read_raw_stack(const fs::path &base) {
    const Json meta = read_json(with_suffix(base, ".json"));
    const auto bytes = read_bytes(with_suffix(base, ".raw"));
    RawStack stack;
    try {
        if (meta.at("dtype").get<std::string>() != "complex128-le")
            throw Error(ErrorCategory::Io, "unsupported dtype in '" + base.string() + ".json'");
        stack.kind = meta.value("kind", "");
        stack.shape = {meta.at("height").get<std::size_t>(), meta.at("width").get<std::size_t>()};
        const auto lengths = meta.at("frame_lengths").get<std::vector<std::size_t>>();
        if (lengths.size() != meta.at("frames").get<std::size_t>())
            throw Error(ErrorCategory::Io, "frame count mismatch in '" + base.string() + ".json'");
        std::size_t total = 0;
        for (auto n : lengths) total += n;
        if (bytes.size() != total * 16) {
            throw Error(ErrorCategory::Dimension, "'" + base.string() + ".raw' holds " +
                                                      std::to_string(bytes.size()) + " bytes, expected " +
                                                      std::to_string(total * 16));
        }
        if (meta.contains("sha256") && meta["sha256"].get<std::string>() != sha256_hex(bytes))
            throw Error(ErrorCategory::Io, "content hash mismatch for '" + base.string() + ".raw'");
        const unsigned char *p = bytes.data();
        for (auto n : lengths) {
            ComplexVector frame(n);
            for (auto &c : frame) {
                c = Complex(get_f64_le(p), get_f64_le(p + 8));
                p += 16;
            }
            stack.frames.push_back(std::move(frame));
        }
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCategory::Io, "malformed sidecar '" + base.string() + ".json': " + e.what());
    }
    return stack;
}

void write_sequence(const fs::path &base, const ImageSequence &seq) {
    RawStack stack{seq.shape(), {}, "image"};
    for (std::size_t t = 0; t < seq.frame_count(); ++t) stack.frames.emplace_back(seq[t].data().begin(), seq[t].data().end());
    write_raw_stack(base, stack);
}

ImageSequence read_sequence(const fs::path &base) {
    auto stack = read_raw_stack(base);
    std::vector<Image> frames;
    for (auto &f : stack.frames) frames.emplace_back(stack.shape, std::move(f));
    if (frames.empty()) throw Error(ErrorCategory::Io, "'" + base.string() + "' contains no frames");
    return ImageSequence(std::move(frames));
}

void write_image(const fs::path &base, const Image &image) { write_sequence(base, ImageSequence({image})); }

Image read_image(const fs::path &base) {
    auto seq = read_sequence(base);
    if (seq.frame_count() != 1)
        throw Error(ErrorCategory::Dimension, "'" + base.string() + "' holds " +
                                                  std::to_string(seq.frame_count()) + " frames, expected 1");
    return seq[0];
}

Json pattern_to_json(const SamplingPattern &pattern) {
    Json j;
    j["height"] = pattern.shape().height;
    j["width"] = pattern.shape().width;
    j["scaling"] = std::string(to_string(pattern.scaling()));
    Json frames = Json::array();
    for (std::size_t t = 0; t < pattern.frame_count(); ++t) {
        Json f;
        const auto idx = pattern.indices(t);
        f["indices"] = std::vector<std::size_t>(idx.begin(), idx.end());
        const auto ang = pattern.angles(t);
        f["angles_deg"] = std::vector<double>(ang.begin(), ang.end());
        frames.push_back(std::move(f));
    }
    j["frames"] = std::move(frames);
    return j;
}

SamplingPattern pattern_from_json(const Json &j) {
    try {
        GridShape shape{j.at("height").get<std::size_t>(), j.at("width").get<std::size_t>()};
        std::vector<std::vector<std::size_t>> indices;
        std::vector<std::vector<double>> angles;
        for (const auto &f : j.at("frames")) {
            indices.push_back(f.at("indices").get<std::vector<std::size_t>>());
            angles.push_back(f.value("angles_deg", std::vector<double>{}));
        }
        return SamplingPattern(shape, std::move(indices), std::move(angles),
                               parse_fourier_scaling(j.value("scaling", "forward")));
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCategory::Io, std::string("malformed sampling pattern: ") + e.what());
    }
}

void write_pattern(const fs::path &path, const SamplingPattern &pattern) { write_json(path, pattern_to_json(pattern)); }

SamplingPattern read_pattern(const fs::path &path) { return pattern_from_json(read_json(path)); }

void write_kspace(const fs::path &base, const KSpaceData &data) {
    data.validate();
    write_raw_stack(base, {data.pattern.shape(), data.samples, "kspace"});
    write_pattern(with_suffix(base, "_pattern.json"), data.pattern);
}

KSpaceData read_kspace(const fs::path &base) {
    KSpaceData data;
    data.pattern = read_pattern(with_suffix(base, "_pattern.json"));
    auto stack = read_raw_stack(base);
    if (stack.shape != data.pattern.shape())
        throw Error(ErrorCategory::Dimension, "k-space grid does not match its sampling pattern");
    data.samples = std::move(stack.frames);
    data.validate();
    return data;
}

void write_subgradient(const fs::path &base, const SubgradientField &sub) {
    const GridShape shape = sub.shape();
    write_raw_stack(with_suffix(base, "_q0"), {shape, {sub.q0.dx, sub.q0.dy}, "field"});
    write_image(with_suffix(base, "_p0"), sub.p0);
    Json meta;
    meta["eta"] = sub.eta;
    meta["height"] = shape.height;
    meta["width"] = shape.width;
    write_json(with_suffix(base, ".json"), meta);
}

SubgradientField read_subgradient(const fs::path &base) {
    const Json meta = read_json(with_suffix(base, ".json"));
    auto q = read_raw_stack(with_suffix(base, "_q0"));
    if (q.frames.size() != 2 || q.frames[0].size() != q.shape.size() || q.frames[1].size() != q.shape.size())
        throw Error(ErrorCategory::Dimension, "subgradient field must hold two full-grid components");
    SubgradientField sub;
    sub.q0 = VectorField(q.shape);
    sub.q0.dx = std::move(q.frames[0]);
    sub.q0.dy = std::move(q.frames[1]);
    sub.p0 = read_image(with_suffix(base, "_p0"));
    if (sub.p0.shape() != q.shape) throw Error(ErrorCategory::Dimension, "subgradient components disagree in size");
    sub.eta = meta.value("eta", 0.0);
    return sub;
}

PgmRange write_pgm(const fs::path &path, std::size_t rows, std::size_t cols, const std::vector<double> &values) {
    if (values.size() != rows * cols || values.empty())
        throw Error(ErrorCategory::Dimension, "image raster does not match its dimensions");
    PgmRange range{*std::min_element(values.begin(), values.end()), *std::max_element(values.begin(), values.end())};
    const std::string header = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n65535\n";
    std::vector<unsigned char> buf(header.begin(), header.end());
    const double span = range.max - range.min;
    for (double v : values) {
        const double s = span > 0.0 ? (v - range.min) / span : 0.0;
        const auto level = static_cast<std::uint16_t>(std::lround(std::clamp(s, 0.0, 1.0) * 65535.0));
        buf.push_back(static_cast<unsigned char>(level >> 8));
        buf.push_back(static_cast<unsigned char>(level & 0xFF));
    }
    write_bytes(path, buf);
    return range;
}

PgmRange write_pgm(const fs::path &path, const Image &image) {
    std::vector<double> mag(image.size());
    for (std::size_t n = 0; n < image.size(); ++n) mag[n] = std::abs(image.data()[n]);
    return write_pgm(path, image.shape().height, image.shape().width, mag);
}

void write_csv(const fs::path &path, const std::vector<std::string> &header,
               const std::vector<std::vector<double>> &rows) {
    std::string text;
    for (std::size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
    text += "\n";
    for (const auto &row : rows) {
        if (row.size() != header.size()) throw Error(ErrorCategory::Dimension, "CSV row width differs from header");
        for (std::size_t i = 0; i < row.size(); ++i) text += (i ? "," : "") + format_number(row[i]);
        text += "\n";
    }
    write_bytes(path, {reinterpret_cast<const unsigned char *>(text.data()), text.size()});
}

} // namespace dynmri
