#include "mtof/spectrum.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace mtof {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// 1-D DFT by direct summation with precomputed twiddles. Inputs here are
// desk-scale (<= a few hundred pixels per side), so O(n^2) per row/column
// keeps the code dependency-free and exact.
void dft_1d(const std::vector<std::complex<double>>& in,
            std::vector<std::complex<double>>& out,
            const std::vector<std::complex<double>>& twiddle) {
  std::size_t n = in.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) acc += in[j] * twiddle[(k * j) % n];
    out[k] = acc;
  }
}

std::vector<std::complex<double>> make_twiddle(std::size_t n) {
  std::vector<std::complex<double>> t(n);
  for (std::size_t j = 0; j < n; ++j) {
    double ang = -kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    t[j] = {std::cos(ang), std::sin(ang)};
  }
  return t;
}

}  // namespace

Spectrum2D dft2_magnitude(const ToFMap& map) {
  int w = map.width, h = map.height;
  if (w < 2 || h < 2) throw std::invalid_argument("dft2_magnitude: size must be >= 2x2");

  // Separable 2-D DFT: rows first, then columns.
  std::vector<std::complex<double>> freq(static_cast<std::size_t>(w) * h);
  auto tw_row = make_twiddle(w);
  std::vector<std::complex<double>> row_in(w), row_out(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) row_in[x] = map.at(y, x);
    dft_1d(row_in, row_out, tw_row);
    for (int x = 0; x < w; ++x) freq[static_cast<std::size_t>(y) * w + x] = row_out[x];
  }
  auto tw_col = make_twiddle(h);
  std::vector<std::complex<double>> col_in(h), col_out(h);
  Spectrum2D spec;
  spec.width = w;
  spec.height = h;
  spec.magnitude.resize(freq.size());
  int cy = h / 2, cx = w / 2;
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) col_in[y] = freq[static_cast<std::size_t>(y) * w + x];
    dft_1d(col_in, col_out, tw_col);
    for (int y = 0; y < h; ++y) {
      // fftshift: move DC to (h/2, w/2).
      int sy = (y + cy) % h;
      int sx = (x + cx) % w;
      spec.magnitude[static_cast<std::size_t>(sy) * w + sx] = std::abs(col_out[y]);
    }
  }
  return spec;
}

SpectrumProfile azimuthal_average(const Spectrum2D& spec) {
  int w = spec.width, h = spec.height;
  int n_bins = std::min(w, h) / 2;
  std::vector<double> sum(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(n_bins), 0);
  double cy = h / 2, cx = w / 2;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double r = std::hypot(y - cy, x - cx);
      int bin = static_cast<int>(std::lround(r));
      if (bin >= n_bins) continue;  // partially sampled outer annuli excluded
      sum[bin] += spec.at(y, x);
      ++count[bin];
    }
  SpectrumProfile p;
  p.values.resize(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b)
    p.values[b] = count[b] > 0 ? sum[b] / static_cast<double>(count[b]) : 0.0;
  return p;
}

SpectrumProfile power_spectrum_1d(const ToFMap& map) {
  SpectrumProfile p = azimuthal_average(dft2_magnitude(map));
  for (double& v : p.values) v = std::log1p(v);
  return p;
}

ToFMap to_grayscale(const RgbImage& img) {
  ToFMap g;
  g.width = img.width;
  g.height = img.height;
  g.values.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      g.at(y, x) = (img.at(y, x, 0) + img.at(y, x, 1) + img.at(y, x, 2)) / 3.0;
  return g;
}

}  // namespace mtof
