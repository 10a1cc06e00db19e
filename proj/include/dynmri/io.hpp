#pragma once

#include "dynmri/core.hpp"
#include "dynmri/operators.hpp"
#include "dynmri/regularization.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace dynmri {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_file(const fs::path &path);

/// Raw complex stack: `<base>.raw` holds little-endian float64 (re, im) pairs,
/// frames concatenated; `<base>.json` records grid, frame lengths and hash.
struct RawStack {
    GridShape shape;
    std::vector<ComplexVector> frames;
    std::string kind; // "image" or "kspace"
};

void write_raw_stack(const fs::path &base, const RawStack &stack);
RawStack read_raw_stack(const fs::path &base);

void write_sequence(const fs::path &base, const ImageSequence &seq);
ImageSequence read_sequence(const fs::path &base);
void write_image(const fs::path &base, const Image &image);
Image read_image(const fs::path &base);

Json pattern_to_json(const SamplingPattern &pattern);
SamplingPattern pattern_from_json(const Json &j);
void write_pattern(const fs::path &path, const SamplingPattern &pattern);
SamplingPattern read_pattern(const fs::path &path);

// `<base>.raw/.json` samples plus `<base>_pattern.json`.
void write_kspace(const fs::path &base, const KSpaceData &data);
KSpaceData read_kspace(const fs::path &base);

// q0 as a two-frame stack (x then y component) plus p0 and eta in the sidecar.
void write_subgradient(const fs::path &base, const SubgradientField &sub);
SubgradientField read_subgradient(const fs::path &base);

struct PgmRange {
    double min = 0.0;
    double max = 0.0;
};

// 16-bit big-endian binary PGM of |u| linearly mapped from [min, max] to [0, 65535].
PgmRange write_pgm(const fs::path &path, const Image &image);
// Same for a real matrix given row-major.
PgmRange write_pgm(const fs::path &path, std::size_t rows, std::size_t cols, const std::vector<double> &values);

void write_csv(const fs::path &path, const std::vector<std::string> &header,
               const std::vector<std::vector<double>> &rows);

Json read_json(const fs::path &path);
void write_json(const fs::path &path, const Json &j);

void ensure_directory(const fs::path &dir);

} // namespace dynmri
