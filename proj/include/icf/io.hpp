#pragma once

#include <iosfwd>

#include "icf/fusion.hpp"
#include "icf/wavelet.hpp"

namespace icf {

// ---- tensor files -------------------------------------------------------
// Layout (all integers little-endian):
//   magic "ICFT" | version u32=1 | ndim u32=4 | dims 4*u64 | dtype u8=1 (f32)
//   payload: n*c*h*w little-endian f32, row-major NCHW
// Round-trips are bitwise lossless.

void write_tensor(const std::string& path, const Tensor& t);
Tensor read_tensor(const std::string& path);

void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in, const std::string& origin);

// ---- images --------------------------------------------------------------
// Binary PGM (P5) and PPM (P6), maxval 255 only. Pixels scale to [0,1];
// color collapses through luminance 0.299 R + 0.587 G + 0.114 B. Odd
// dimensions are reflection-padded to even at ingestion.

GrayImage read_image(const std::string& path);

struct RgbImage {
    int64_t h = 0, w = 0;
    std::vector<double> r, g, b;
};

RgbImage read_image_rgb(const std::string& path);
GrayImage to_gray(const RgbImage& img);

void write_pgm(const std::string& path, const GrayImage& img);  // clamps to [0,1]

// ---- config documents ------------------------------------------------
// Flat key-value text: one `key = value` per line, `#` comments, blank lines
// ignored. Values are integers, booleans (true/false) or comma-separated
// integer lists. Unknown keys are rejected.

FusionConfig parse_config(std::istream& in);
FusionConfig load_config(const std::string& path);

// ---- report documents --------------------------------------------------
// Deterministic text: a `schema:` line, a `tool:` line, then `key: value`
// lines in insertion order. Doubles render with up to 12 significant digits.

struct ReportDoc {
    std::string tool;
    std::vector<std::pair<std::string, std::string>> entries;

    void add(const std::string& key, const std::string& value);
    void add(const std::string& key, int64_t value);
    void add(const std::string& key, double value);
    std::string render() const;
};

std::string format_double(double v);

// ---- parameter files ----------------------------------------------------
// One tensor file per conv, named <conv>.weight.icft / <conv>.bias.icft
// (bias stored as a (1,c,1,1) tensor) inside a directory.

void write_params_dir(const std::string& dir, const FusionConfig& cfg, Seed seed);
FusionParams read_params_dir(const std::string& dir, const FusionConfig& cfg);

}  // namespace icf
