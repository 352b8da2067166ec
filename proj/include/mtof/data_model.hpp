#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mtof {

// ---------------------------------------------------------------------------
// Sample types
// ---------------------------------------------------------------------------

// Raw sensor grid. Each 16-bit word packs a 3-bit confidence code in the high
// bits and a 13-bit depth in millimeters in the low bits.
struct RawToFMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> words;  // row-major, height*width

  bool well_formed() const {
    return width > 0 && height > 0 && width % 2 == 0 && height % 2 == 0 &&
           words.size() == static_cast<std::size_t>(width) * height;
  }
};

// Decoded depth + per-pixel confidence in [0,1].
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> depth_mm;    // row-major
  std::vector<double> confidence;  // row-major, [0,1]
};

// Refined, normalized depth map; values in [0,1] on the 8-bit scale.
struct ToFMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // row-major

  double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // row-major, interleaved RGB, [0,1]

  double& at(int y, int x, int c) {
    return values[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  double at(int y, int x, int c) const {
    return values[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

enum class Label { kReal, kDisplay };

inline const char* to_string(Label l) { return l == Label::kReal ? "real" : "display"; }

struct PairSample {
  RgbImage rgb;
  ToFMap tof;
  Label label = Label::kReal;
  std::string display_id = "none";   // "none" for real samples
  std::string display_type = "none"; // taxonomy group (panel technology)
  std::string device_type = "none";  // monitor|laptop|phone|tablet|projector|none
  std::string object_category;
  std::string split;                 // train|val|test (empty before splitting)
  std::string sample_id;
};

// One manifest line: file references plus metadata. Pixel data lives on disk.
struct ManifestRecord {
  std::string sample_id;
  std::string rgb_path;      // 8-bit PNG, 3 channel
  std::string raw_tof_path;  // 16-bit PNG, 1 channel
  std::string tof_path;      // 8-bit PNG, 1 channel (refined)
  std::string label;         // "real" | "display"
  std::string display_id;
  std::string display_type;
  std::string device_type;
  std::string object_category;
  std::string split;
};

struct Manifest {
  int schema_version = 1;
  std::string root;  // directory holding manifest.jsonl; paths are relative to it
  std::vector<ManifestRecord> records;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

struct DecodedPixel {
  int depth_mm;       // low 13 bits
  double confidence;  // code 0 -> 1.0, code 1 -> 0.0, codes 2..7 -> (code-1)/7
};

DecodedPixel decode_tof_pixel(std::uint16_t word);

// Inverse of decode_tof_pixel; used by the generator and the round-trip test.
std::uint16_t encode_tof_pixel(int depth_mm, double confidence);
int confidence_code_of(double confidence);

DepthMap decode_raw_tof(const RawToFMap& raw);

// Low-confidence pixels are replaced by the mean depth of confident pixels
// (0 if none are confident), then depth is mapped mm -> 8-bit by
// round(d*255/8191) and normalized to [0,1].
ToFMap refine_tof(const DepthMap& depth, double conf_threshold);

// Pixel-center ("align corners false") bilinear resize, edge-clamped.
ToFMap resize_map(const ToFMap& m, int target_w, int target_h);
RgbImage resize_map(const RgbImage& m, int target_w, int target_h);

PairSample random_crop_pair(const PairSample& sample, int size, std::uint64_t seed);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

// Groups records by (object_category, display_id) and splits each group by
// the ratios (largest-remainder allocation after a seeded shuffle).
Manifest split_dataset(const Manifest& manifest, const SplitRatios& ratios,
                       std::uint64_t seed);

// manifest.jsonl round trip. save writes one JSON object per line.
Manifest load_manifest(const std::string& root_dir);
void save_manifest(const Manifest& manifest);

// Validates structural invariants (existing files, label/display_id
// consistency); throws on violation.
void validate_manifest(const Manifest& manifest);

// ---------------------------------------------------------------------------
// PNG I/O (data_model on-disk layout)
// ---------------------------------------------------------------------------

void write_rgb_png(const std::string& path, const RgbImage& img);
void write_raw_tof_png(const std::string& path, const RawToFMap& raw);
void write_tof_png(const std::string& path, const ToFMap& tof);

RgbImage read_rgb_png(const std::string& path);
RawToFMap read_raw_tof_png(const std::string& path);
ToFMap read_tof_png(const std::string& path);

// Loads the sample behind a record, resizing both modalities to the target.
struct PreprocessOptions {
  int resize_w = 180;
  int resize_h = 240;
  double conf_threshold = 0.5;
};

PairSample load_pair_sample(const Manifest& manifest, const ManifestRecord& rec,
                            const PreprocessOptions& opts);

}  // namespace mtof
