#include "mtof/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "mtof/rng.hpp"

namespace mtof {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr int kDepthBits = 13;
constexpr int kMaxDepthMm = (1 << kDepthBits) - 1;  // 8191
}  // namespace

DecodedPixel decode_tof_pixel(std::uint16_t word) {
  int depth = word & kMaxDepthMm;
  int code = word >> kDepthBits;
  double conf;
  if (code == 0) {
    conf = 1.0;
  } else if (code == 1) {
    conf = 0.0;
  } else {
    conf = static_cast<double>(code - 1) / 7.0;
  }
  return {depth, conf};
}

int confidence_code_of(double confidence) {
  if (confidence >= 1.0) return 0;
  if (confidence <= 0.0) return 1;
  // codes 2..7 cover (code-1)/7 in {1/7 .. 6/7}
  int code = static_cast<int>(std::lround(confidence * 7.0)) + 1;
  return std::clamp(code, 2, 7);
}

std::uint16_t encode_tof_pixel(int depth_mm, double confidence) {
  if (depth_mm < 0 || depth_mm > kMaxDepthMm)
    throw std::invalid_argument("encode_tof_pixel: depth out of 13-bit range");
  int code = confidence_code_of(confidence);
  return static_cast<std::uint16_t>((code << kDepthBits) | depth_mm);
}

DepthMap decode_raw_tof(const RawToFMap& raw) {
  if (raw.words.size() != static_cast<std::size_t>(raw.width) * raw.height)
    throw std::invalid_argument("decode_raw_tof: word count does not match declared size");
  DepthMap out;
  out.width = raw.width;
  out.height = raw.height;
  out.depth_mm.resize(raw.words.size());
  out.confidence.resize(raw.words.size());
  for (std::size_t i = 0; i < raw.words.size(); ++i) {
    DecodedPixel p = decode_tof_pixel(raw.words[i]);
    out.depth_mm[i] = p.depth_mm;
    out.confidence[i] = p.confidence;
  }
  return out;
}

ToFMap refine_tof(const DepthMap& depth, double conf_threshold) {
  ToFMap out;
  out.width = depth.width;
  out.height = depth.height;
  out.values.resize(depth.depth_mm.size());

  double sum = 0.0;
  std::size_t n_conf = 0;
  for (std::size_t i = 0; i < depth.depth_mm.size(); ++i) {
    if (depth.confidence[i] >= conf_threshold) {
      sum += depth.depth_mm[i];
      ++n_conf;
    }
  }
  double infill = n_conf > 0 ? sum / static_cast<double>(n_conf) : 0.0;

  for (std::size_t i = 0; i < depth.depth_mm.size(); ++i) {
    double d = depth.confidence[i] >= conf_threshold ? depth.depth_mm[i] : infill;
    double byte = std::round(d * 255.0 / kMaxDepthMm);
    out.values[i] = std::clamp(byte, 0.0, 255.0) / 255.0;
  }
  return out;
}

namespace {

// Shared pixel-center bilinear kernel. src/dst are row-major with `channels`
// interleaved values per pixel.
void bilinear(const double* src, int sw, int sh, double* dst, int tw, int th,
              int channels) {
  double sx = static_cast<double>(sw) / tw;
  double sy = static_cast<double>(sh) / th;
  for (int ty = 0; ty < th; ++ty) {
    double fy = (ty + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y0c = std::clamp(y0, 0, sh - 1);
    int y1c = std::clamp(y0 + 1, 0, sh - 1);
    for (int tx = 0; tx < tw; ++tx) {
      double fx = (tx + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x0c = std::clamp(x0, 0, sw - 1);
      int x1c = std::clamp(x0 + 1, 0, sw - 1);
      for (int c = 0; c < channels; ++c) {
        double v00 = src[(static_cast<std::size_t>(y0c) * sw + x0c) * channels + c];
        double v01 = src[(static_cast<std::size_t>(y0c) * sw + x1c) * channels + c];
        double v10 = src[(static_cast<std::size_t>(y1c) * sw + x0c) * channels + c];
        double v11 = src[(static_cast<std::size_t>(y1c) * sw + x1c) * channels + c];
        double top = v00 + wx * (v01 - v00);
        double bot = v10 + wx * (v11 - v10);
        dst[(static_cast<std::size_t>(ty) * tw + tx) * channels + c] = top + wy * (bot - top);
      }
    }
  }
}

void check_resize_target(int w, int h) {
  if (w < 1 || h < 1) throw std::invalid_argument("resize_map: non-positive target size");
}

}  // namespace

ToFMap resize_map(const ToFMap& m, int target_w, int target_h) {
  check_resize_target(target_w, target_h);
  if (target_w == m.width && target_h == m.height) return m;
  ToFMap out;
  out.width = target_w;
  out.height = target_h;
  out.values.resize(static_cast<std::size_t>(target_w) * target_h);
  bilinear(m.values.data(), m.width, m.height, out.values.data(), target_w, target_h, 1);
  return out;
}

RgbImage resize_map(const RgbImage& m, int target_w, int target_h) {
  check_resize_target(target_w, target_h);
  if (target_w == m.width && target_h == m.height) return m;
  RgbImage out;
  out.width = target_w;
  out.height = target_h;
  out.values.resize(static_cast<std::size_t>(target_w) * target_h * 3);
  bilinear(m.values.data(), m.width, m.height, out.values.data(), target_w, target_h, 3);
  return out;
}

PairSample random_crop_pair(const PairSample& sample, int size, std::uint64_t seed) {
  if (sample.rgb.width != sample.tof.width || sample.rgb.height != sample.tof.height)
    throw std::invalid_argument("random_crop_pair: rgb/tof size mismatch");
  if (size > sample.rgb.width || size > sample.rgb.height)
    throw std::invalid_argument("random_crop_pair: crop size exceeds input");

  Rng rng(seed);
  int max_x = sample.rgb.width - size;
  int max_y = sample.rgb.height - size;
  int ox = max_x > 0 ? static_cast<int>(rng.uniform_int(max_x + 1)) : 0;
  int oy = max_y > 0 ? static_cast<int>(rng.uniform_int(max_y + 1)) : 0;

  PairSample out = sample;
  out.rgb.width = out.rgb.height = size;
  out.tof.width = out.tof.height = size;
  out.rgb.values.resize(static_cast<std::size_t>(size) * size * 3);
  out.tof.values.resize(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      out.tof.at(y, x) = sample.tof.at(oy + y, ox + x);
      for (int c = 0; c < 3; ++c) out.rgb.at(y, x, c) = sample.rgb.at(oy + y, ox + x, c);
    }
  }
  return out;
}

Manifest split_dataset(const Manifest& manifest, const SplitRatios& ratios,
                       std::uint64_t seed) {
  if (manifest.records.empty())
    throw std::invalid_argument("split_dataset: empty manifest");
  double total = ratios.train + ratios.val + ratios.test;
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("split_dataset: ratios must sum to 1");

  // Stable grouping keyed by (object_category, display_id).
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    groups[{r.object_category, r.display_id}].push_back(i);
  }

  Manifest out = manifest;
  std::uint64_t group_idx = 0;
  for (auto& [key, idxs] : groups) {
    Rng rng(Rng::mix(seed, group_idx++));
    rng.shuffle(idxs);
    std::size_t n = idxs.size();
    double quota[3] = {ratios.train * n, ratios.val * n, ratios.test * n};
    std::size_t count[3];
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      count[s] = static_cast<std::size_t>(std::floor(quota[s] + 1e-9));
      assigned += count[s];
    }
    // Largest-remainder allocation; ties favor train, then val.
    int order[3] = {0, 1, 2};
    std::stable_sort(order, order + 3, [&](int a, int b) {
      return quota[a] - std::floor(quota[a] + 1e-9) >
             quota[b] - std::floor(quota[b] + 1e-9) + 1e-12;
    });
    for (int k = 0; assigned < n; ++k, ++assigned) ++count[order[k % 3]];
    static const char* kSplitNames[3] = {"train", "val", "test"};
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s)
      for (std::size_t k = 0; k < count[s]; ++k) out.records[idxs[pos++]].split = kSplitNames[s];
  }
  return out;
}

namespace {

json record_to_json(const ManifestRecord& r) {
  return json{{"sample_id", r.sample_id},
              {"rgb_path", r.rgb_path},
              {"raw_tof_path", r.raw_tof_path},
              {"tof_path", r.tof_path},
              {"label", r.label},
              {"display_id", r.display_id},
              {"display_type", r.display_type},
              {"device_type", r.device_type},
              {"object_category", r.object_category},
              {"split", r.split}};
}

ManifestRecord record_from_json(const json& j) {
  ManifestRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.rgb_path = j.at("rgb_path").get<std::string>();
  r.raw_tof_path = j.at("raw_tof_path").get<std::string>();
  r.tof_path = j.at("tof_path").get<std::string>();
  r.label = j.at("label").get<std::string>();
  r.display_id = j.at("display_id").get<std::string>();
  r.display_type = j.at("display_type").get<std::string>();
  r.device_type = j.at("device_type").get<std::string>();
  r.object_category = j.at("object_category").get<std::string>();
  r.split = j.value("split", "");
  return r;
}

}  // namespace

Manifest load_manifest(const std::string& root_dir) {
  fs::path path = fs::path(root_dir) / "manifest.jsonl";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_manifest: cannot open " + path.string());
  Manifest m;
  m.root = root_dir;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.contains("schema_version")) {
      m.schema_version = j.at("schema_version").get<int>();
      continue;
    }
    m.records.push_back(record_from_json(j));
  }
  return m;
}

void save_manifest(const Manifest& manifest) {
  fs::create_directories(manifest.root);
  fs::path path = fs::path(manifest.root) / "manifest.jsonl";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_manifest: cannot write " + path.string());
  out << json{{"schema_version", manifest.schema_version}}.dump() << "\n";
  for (const auto& r : manifest.records) out << record_to_json(r).dump() << "\n";
}

void validate_manifest(const Manifest& manifest) {
  for (const auto& r : manifest.records) {
    bool is_real = r.label == "real";
    if (!is_real && r.label != "display")
      throw std::runtime_error("manifest: bad label for " + r.sample_id);
    if (is_real != (r.display_id == "none"))
      throw std::runtime_error("manifest: label/display_id mismatch for " + r.sample_id);
    for (const std::string* p : {&r.rgb_path, &r.raw_tof_path, &r.tof_path}) {
      if (p->empty()) continue;
      fs::path full = fs::path(manifest.root) / *p;
      if (!fs::exists(full))
        throw std::runtime_error("manifest: missing file " + full.string());
    }
  }
}

PairSample load_pair_sample(const Manifest& manifest, const ManifestRecord& rec,
                            const PreprocessOptions& opts) {
  fs::path root(manifest.root);
  PairSample s;
  s.rgb = read_rgb_png((root / rec.rgb_path).string());
  if (!rec.tof_path.empty()) {
    s.tof = read_tof_png((root / rec.tof_path).string());
  } else {
    RawToFMap raw = read_raw_tof_png((root / rec.raw_tof_path).string());
    s.tof = refine_tof(decode_raw_tof(raw), opts.conf_threshold);
  }
  s.rgb = resize_map(s.rgb, opts.resize_w, opts.resize_h);
  s.tof = resize_map(s.tof, opts.resize_w, opts.resize_h);
  s.label = rec.label == "real" ? Label::kReal : Label::kDisplay;
  s.display_id = rec.display_id;
  s.display_type = rec.display_type;
  s.device_type = rec.device_type;
  s.object_category = rec.object_category;
  s.split = rec.split;
  s.sample_id = rec.sample_id;
  return s;
}

}  // namespace mtof
