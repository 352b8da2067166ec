#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtof/data_model.hpp"

namespace mtof {

// Parameters of one synthetic spoof medium. Each display gets its own moiré
// grating pair (product of two sinusoids) and a near-planar depth response.
struct DisplayProfile {
  std::string display_id;
  std::string display_type;  // taxonomy group, e.g. panel technology
  std::string device_type;   // monitor|laptop|phone|tablet|projector
  double moire_freq_a = 0.15;   // cycles/pixel, in (0, 0.5)
  double moire_freq_b = 0.2;
  double moire_angle_a = 0.0;   // radians
  double moire_angle_b = 1.2;
  double moire_amplitude = 0.15;  // in [0, 0.3]
  double depth_plane_mm = 1000.0;
  double depth_noise_std_mm = 5.0;
};

struct SynthConfig {
  int n_objects = 6;
  int samples_per_object = 10;
  std::vector<DisplayProfile> profiles;
  int image_w = 80;
  int image_h = 80;
  std::uint64_t seed = 0;
  SplitRatios split_ratios;
  double conf_threshold = 0.5;
};

// A generated sample plus its raw sensor grid (needed for the on-disk layout).
struct SynthSample {
  PairSample sample;
  RawToFMap raw;
};

// Distinct profiles across the device/display-type taxonomy; moiré parameter
// tuples are pairwise distinct.
std::vector<DisplayProfile> make_default_profiles(int n, std::uint64_t seed);

// Real scene: depth plane with smooth Gaussian bumps, per-object texture
// shaded by the depth gradient. Deterministic per (object_id, seed).
SynthSample gen_real_scene(const SynthConfig& cfg, int object_id, std::uint64_t seed);

// Display recapture of a real scene: moiré grating added to RGB, depth
// replaced by the profile's noisy plane.
SynthSample gen_display_scene(const SynthSample& real, const DisplayProfile& profile,
                              std::uint64_t seed, double conf_threshold = 0.5);

// Writes PNGs and manifest.jsonl under out_root; returns the split manifest.
Manifest gen_dataset(const SynthConfig& cfg, const std::string& out_root);

}  // namespace mtof
