#pragma once

#include <vector>

#include "mtof/data_model.hpp"

namespace mtof {

// Centered 2-D DFT magnitude spectrum.
struct Spectrum2D {
  int width = 0;   // frequency bins (same as spatial width)
  int height = 0;
  std::vector<double> magnitude;  // row-major, DC at (height/2, width/2)

  double at(int v, int u) const { return magnitude[static_cast<std::size_t>(v) * width + u]; }
  double& at(int v, int u) { return magnitude[static_cast<std::size_t>(v) * width + u]; }
};

// Azimuthally averaged 1-D profile; index = integer radius bin,
// length = floor(min(w,h)/2).
struct SpectrumProfile {
  std::vector<double> values;
};

Spectrum2D dft2_magnitude(const ToFMap& map);

SpectrumProfile azimuthal_average(const Spectrum2D& spec);

// log(1 + azimuthal_average(dft2_magnitude(map))).
SpectrumProfile power_spectrum_1d(const ToFMap& map);

// Single-channel view of an RGB image (mean over channels) so images can go
// through the same spectrum path as ToF maps.
ToFMap to_grayscale(const RgbImage& img);

}  // namespace mtof
