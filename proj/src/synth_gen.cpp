#include "mtof/synth_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "mtof/rng.hpp"

namespace mtof {

namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kMaxDepthMm = 8191.0;
constexpr double kInvalidFraction = 0.02;  // sensor dropouts (confidence code 1)

RawToFMap encode_depth_field(const std::vector<double>& depth_mm, int w, int h, Rng& rng) {
  RawToFMap raw;
  raw.width = w;
  raw.height = h;
  raw.words.resize(depth_mm.size());
  for (std::size_t i = 0; i < depth_mm.size(); ++i) {
    int d = static_cast<int>(std::lround(std::clamp(depth_mm[i], 0.0, kMaxDepthMm)));
    double conf = rng.uniform() < kInvalidFraction ? 0.0 : 1.0;
    raw.words[i] = encode_tof_pixel(d, conf);
  }
  return raw;
}

std::string device_type_of(int i) {
  static const char* kDevices[5] = {"monitor", "laptop", "phone", "tablet", "projector"};
  return kDevices[i % 5];
}

std::string display_type_of(int i) {
  static const char* kPanels[4] = {"lcd", "led", "oled", "dlp"};
  return kPanels[i % 4];
}

}  // namespace

std::vector<DisplayProfile> make_default_profiles(int n, std::uint64_t seed) {
  std::vector<DisplayProfile> out;
  Rng rng(Rng::mix(seed, 0xd15f1a));
  for (int i = 0; i < n; ++i) {
    DisplayProfile p;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "display_%02d", i);
    p.display_id = buf;
    p.device_type = device_type_of(i);
    p.display_type = display_type_of(i);
    // Spread grating frequencies so every display's moiré tuple is distinct.
    p.moire_freq_a = 0.10 + 0.06 * i + rng.uniform(0.0, 0.02);
    p.moire_freq_b = 0.31 - 0.045 * i + rng.uniform(0.0, 0.015);
    p.moire_freq_a = std::clamp(p.moire_freq_a, 0.02, 0.48);
    p.moire_freq_b = std::clamp(p.moire_freq_b, 0.02, 0.48);
    p.moire_angle_a = rng.uniform(0.0, 3.14159);
    p.moire_angle_b = rng.uniform(0.0, 3.14159);
    p.moire_amplitude = rng.uniform(0.10, 0.25);
    // Keep recapture distances inside the real-scene depth range so mean
    // depth never separates the classes; flatness has to do the work.
    p.depth_plane_mm = rng.uniform(1300.0, 2900.0);
    p.depth_noise_std_mm = rng.uniform(2.0, 8.0);
    out.push_back(p);
  }
  return out;
}

SynthSample gen_real_scene(const SynthConfig& cfg, int object_id, std::uint64_t seed) {
  int w = cfg.image_w, h = cfg.image_h;
  Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(object_id) * 7919 + 1));

  // Depth: tilted base plane plus 3..8 smooth Gaussian bumps.
  double base = rng.uniform(1200.0, 3000.0);
  double tilt_x = rng.uniform(-2.0, 2.0);
  double tilt_y = rng.uniform(-2.0, 2.0);
  int n_bumps = 3 + static_cast<int>(rng.uniform_int(6));
  struct Bump {
    double cx, cy, sigma, amp;
  };
  std::vector<Bump> bumps;
  for (int i = 0; i < n_bumps; ++i) {
    Bump b;
    b.cx = rng.uniform(0.0, w);
    b.cy = rng.uniform(0.0, h);
    b.sigma = rng.uniform(w / 10.0, w / 3.0);
    b.amp = rng.uniform(200.0, 2000.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    bumps.push_back(b);
  }
  std::vector<double> depth(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double d = base + tilt_x * x + tilt_y * y;
      for (const auto& b : bumps) {
        double dx = x - b.cx, dy = y - b.cy;
        d += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
      }
      depth[static_cast<std::size_t>(y) * w + x] = std::clamp(d, 0.0, kMaxDepthMm);
    }

  // Texture: per-object base color, a couple of low-frequency sinusoid
  // patterns, shaded by the local depth gradient.
  double base_col[3] = {rng.uniform(0.25, 0.75), rng.uniform(0.25, 0.75),
                        rng.uniform(0.25, 0.75)};
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 3; ++i) {
    double f = rng.uniform(0.01, 0.06);
    double ang = rng.uniform(0.0, 3.14159);
    waves.push_back({f * std::cos(ang), f * std::sin(ang), rng.uniform(0.0, kTwoPi),
                     rng.uniform(0.05, 0.15)});
  }

  SynthSample out;
  out.sample.rgb.width = w;
  out.sample.rgb.height = h;
  out.sample.rgb.values.resize(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double gx = depth[std::min(y, h - 1) * w + std::min(x + 1, w - 1)] -
                  depth[static_cast<std::size_t>(y) * w + x];
      double gy = depth[std::min(y + 1, h - 1) * w + x] -
                  depth[static_cast<std::size_t>(y) * w + x];
      double shade = std::clamp(1.0 - 0.004 * std::hypot(gx, gy), 0.55, 1.0);
      double pat = 0.0;
      for (const auto& wv : waves)
        pat += wv.amp * std::sin(kTwoPi * (wv.fx * x + wv.fy * y) + wv.phase);
      for (int c = 0; c < 3; ++c)
        out.sample.rgb.at(y, x, c) = std::clamp(base_col[c] * shade + pat, 0.0, 1.0);
    }

  out.raw = encode_depth_field(depth, w, h, rng);
  out.sample.tof = refine_tof(decode_raw_tof(out.raw), cfg.conf_threshold);
  out.sample.label = Label::kReal;
  out.sample.display_id = "none";
  out.sample.display_type = "none";
  out.sample.device_type = "none";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "obj%02d", object_id);
  out.sample.object_category = buf;
  return out;
}

SynthSample gen_display_scene(const SynthSample& real, const DisplayProfile& profile,
                              std::uint64_t seed, double conf_threshold) {
  if (real.sample.label != Label::kReal)
    throw std::invalid_argument("gen_display_scene: input must be a real sample");
  int w = real.sample.rgb.width, h = real.sample.rgb.height;
  Rng rng(Rng::mix(seed, 0xd150));

  SynthSample out;
  out.sample = real.sample;

  // Moiré beat pattern: product of two oriented gratings.
  double ca = std::cos(profile.moire_angle_a), sa = std::sin(profile.moire_angle_a);
  double cb = std::cos(profile.moire_angle_b), sb = std::sin(profile.moire_angle_b);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double ga = std::cos(kTwoPi * profile.moire_freq_a * (x * ca + y * sa));
      double gb = std::cos(kTwoPi * profile.moire_freq_b * (x * cb + y * sb));
      double m = profile.moire_amplitude * ga * gb;
      for (int c = 0; c < 3; ++c)
        out.sample.rgb.at(y, x, c) =
            std::clamp(real.sample.rgb.at(y, x, c) + m, 0.0, 1.0);
    }

  // Flat panel depth with small sensor noise. The recapture distance moves
  // a little per shot so no single depth value identifies a display.
  double plane = profile.depth_plane_mm + rng.uniform(-250.0, 250.0);
  std::vector<double> depth(static_cast<std::size_t>(w) * h);
  for (auto& d : depth)
    d = std::clamp(plane + rng.normal(0.0, profile.depth_noise_std_mm), 0.0, kMaxDepthMm);
  out.raw = encode_depth_field(depth, w, h, rng);
  out.sample.tof = refine_tof(decode_raw_tof(out.raw), conf_threshold);

  out.sample.label = Label::kDisplay;
  out.sample.display_id = profile.display_id;
  out.sample.display_type = profile.display_type;
  out.sample.device_type = profile.device_type;
  return out;
}

Manifest gen_dataset(const SynthConfig& cfg, const std::string& out_root) {
  if (cfg.n_objects < 1 || cfg.samples_per_object < 1)
    throw std::invalid_argument("gen_dataset: counts must be >= 1");
  std::error_code ec;
  fs::create_directories(out_root, ec);
  if (ec || !fs::is_directory(out_root))
    throw std::runtime_error("gen_dataset: cannot create output path " + out_root);

  Manifest manifest;
  manifest.root = out_root;

  auto emit = [&](const SynthSample& s, const std::string& sample_id) {
    ManifestRecord rec;
    rec.sample_id = sample_id;
    rec.rgb_path = "rgb/" + sample_id + ".png";
    rec.raw_tof_path = "tof_raw/" + sample_id + ".png";
    rec.tof_path = "tof/" + sample_id + ".png";
    rec.label = s.sample.label == Label::kReal ? "real" : "display";
    rec.display_id = s.sample.display_id;
    rec.display_type = s.sample.display_type;
    rec.device_type = s.sample.device_type;
    rec.object_category = s.sample.object_category;
    write_rgb_png((fs::path(out_root) / rec.rgb_path).string(), s.sample.rgb);
    write_raw_tof_png((fs::path(out_root) / rec.raw_tof_path).string(), s.raw);
    write_tof_png((fs::path(out_root) / rec.tof_path).string(), s.sample.tof);
    manifest.records.push_back(rec);
  };

  for (int o = 0; o < cfg.n_objects; ++o)
    for (int s = 0; s < cfg.samples_per_object; ++s) {
      std::uint64_t sample_seed = Rng::mix(cfg.seed, static_cast<std::uint64_t>(o) * 1000 + s);
      SynthSample real = gen_real_scene(cfg, o, sample_seed);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "o%02d_s%02d_real", o, s);
      emit(real, buf);
      for (std::size_t p = 0; p < cfg.profiles.size(); ++p) {
        SynthSample disp = gen_display_scene(
            real, cfg.profiles[p], Rng::mix(sample_seed, p + 1), cfg.conf_threshold);
        std::snprintf(buf, sizeof(buf), "o%02d_s%02d_%s", o, s,
                      cfg.profiles[p].display_id.c_str());
        emit(disp, buf);
      }
    }

  Manifest split = split_dataset(manifest, cfg.split_ratios, cfg.seed);
  save_manifest(split);
  return split;
}

}  // namespace mtof
