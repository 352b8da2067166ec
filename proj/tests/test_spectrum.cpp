#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>

#include "doctest.h"
#include "mtof/rng.hpp"
#include "mtof/spectrum.hpp"

using namespace mtof;

namespace {

ToFMap random_map(int w, int h, std::uint64_t seed) {
  ToFMap m;
  m.width = w;
  m.height = h;
  m.values.resize(static_cast<std::size_t>(w) * h);
  Rng rng(seed);
  for (auto& v : m.values) v = rng.uniform();
  return m;
}

// O(N^2) reference DFT straight from the definition, no fftshift.
std::vector<std::complex<double>> reference_dft2(const ToFMap& m) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  std::vector<std::complex<double>> out(m.values.size());
  for (int v = 0; v < m.height; ++v)
    for (int u = 0; u < m.width; ++u) {
      std::complex<double> acc(0.0, 0.0);
      for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
          double ang = -kTwoPi * (static_cast<double>(u) * x / m.width +
                                  static_cast<double>(v) * y / m.height);
          acc += m.at(y, x) * std::complex<double>(std::cos(ang), std::sin(ang));
        }
      out[static_cast<std::size_t>(v) * m.width + u] = acc;
    }
  return out;
}

}  // namespace

TEST_CASE("dft2_magnitude constant input") {
  ToFMap m{6, 4, std::vector<double>(24, 0.25)};
  Spectrum2D s = dft2_magnitude(m);
  // DC ends up at (h/2, w/2) after shifting and carries sum = c*W*H.
  CHECK(s.at(2, 3) == doctest::Approx(0.25 * 24).epsilon(1e-12));
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x)
      if (!(y == 2 && x == 3)) CHECK(s.at(y, x) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("dft2_magnitude zero input") {
  ToFMap m{4, 4, std::vector<double>(16, 0.0)};
  Spectrum2D s = dft2_magnitude(m);
  for (double v : s.magnitude) CHECK(v == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("dft2_magnitude single horizontal cosine cycle") {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  int w = 8, h = 8;
  ToFMap m{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.at(y, x) = std::cos(kTwoPi * x / w);
  Spectrum2D s = dft2_magnitude(m);
  // Energy splits evenly between frequencies +-1 along u; magnitude W*H/2.
  CHECK(s.at(4, 5) == doctest::Approx(32.0).epsilon(1e-10));
  CHECK(s.at(4, 3) == doctest::Approx(32.0).epsilon(1e-10));
  CHECK(s.at(4, 4) == doctest::Approx(0.0).scale(64.0));
  CHECK(s.at(3, 4) == doctest::Approx(0.0).scale(64.0));
}

TEST_CASE("dft2_magnitude matches the brute-force definition") {
  ToFMap m = random_map(6, 4, 11);
  Spectrum2D s = dft2_magnitude(m);
  auto ref = reference_dft2(m);
  for (int v = 0; v < 4; ++v)
    for (int u = 0; u < 6; ++u) {
      int sv = (v + 2) % 4;
      int su = (u + 3) % 6;
      CHECK(s.at(sv, su) ==
            doctest::Approx(std::abs(ref[static_cast<std::size_t>(v) * 6 + u])).epsilon(1e-10));
    }
}

TEST_CASE("dft2_magnitude parseval identity") {
  ToFMap m = random_map(8, 6, 3);
  Spectrum2D s = dft2_magnitude(m);
  double freq_energy = 0.0;
  for (double v : s.magnitude) freq_energy += v * v;
  double spatial_energy = 0.0;
  for (double v : m.values) spatial_energy += v * v;
  CHECK(freq_energy == doctest::Approx(spatial_energy * 48.0).epsilon(1e-10));
}

TEST_CASE("dft2_magnitude rejects degenerate size") {
  ToFMap m{1, 4, std::vector<double>(4, 0.0)};
  CHECK_THROWS(dft2_magnitude(m));
}

TEST_CASE("azimuthal_average") {
  SUBCASE("profile length is floor(min(w,h)/2)") {
    CHECK(azimuthal_average(dft2_magnitude(random_map(10, 6, 1))).values.size() == 3);
    CHECK(azimuthal_average(dft2_magnitude(random_map(7, 9, 1))).values.size() == 3);
  }
  SUBCASE("constant spectrum averages to itself in every bin") {
    Spectrum2D s;
    s.width = 12;
    s.height = 12;
    s.magnitude.assign(144, 2.5);
    SpectrumProfile p = azimuthal_average(s);
    REQUIRE(p.values.size() == 6);
    for (double v : p.values) CHECK(v == doctest::Approx(2.5).epsilon(1e-15));
  }
  SUBCASE("hand-computed 4x4 case") {
    // Center (2,2). Radii from the center: bin 0 holds only the center pixel;
    // bin 1 holds the 8 neighbours at distance 1 and sqrt(2)=1.414 (rounds
    // to 1); distance-2 pixels fall into bin >= n_bins = 2 and are dropped.
    Spectrum2D s;
    s.width = 4;
    s.height = 4;
    s.magnitude.assign(16, 0.0);
    s.at(2, 2) = 7.0;  // bin 0
    s.at(2, 3) = 1.0;  // r = 1
    s.at(1, 1) = 3.0;  // r = sqrt(2)
    SpectrumProfile p = azimuthal_average(s);
    REQUIRE(p.values.size() == 2);
    CHECK(p.values[0] == doctest::Approx(7.0));
    CHECK(p.values[1] == doctest::Approx(4.0 / 8.0));
  }
  SUBCASE("brute-force oracle on a random asymmetric spectrum") {
    ToFMap m = random_map(10, 8, 21);
    Spectrum2D s = dft2_magnitude(m);
    SpectrumProfile p = azimuthal_average(s);
    int n_bins = 4;
    std::vector<double> sum(n_bins, 0.0);
    std::vector<int> cnt(n_bins, 0);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 10; ++x) {
        int bin = static_cast<int>(std::lround(std::hypot(y - 4.0, x - 5.0)));
        if (bin >= n_bins) continue;
        sum[bin] += s.at(y, x);
        ++cnt[bin];
      }
    REQUIRE(p.values.size() == static_cast<std::size_t>(n_bins));
    for (int b = 0; b < n_bins; ++b)
      CHECK(p.values[b] == doctest::Approx(sum[b] / cnt[b]).epsilon(1e-13));
  }
}

TEST_CASE("power_spectrum_1d is log1p of the averaged magnitude") {
  ToFMap m = random_map(8, 8, 17);
  SpectrumProfile raw = azimuthal_average(dft2_magnitude(m));
  SpectrumProfile p = power_spectrum_1d(m);
  REQUIRE(p.values.size() == raw.values.size());
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    CHECK(p.values[i] == doctest::Approx(std::log1p(raw.values[i])).epsilon(1e-15));
    CHECK(p.values[i] >= 0.0);
  }
}

TEST_CASE("power_spectrum_1d of a zero map is all zeros") {
  ToFMap m{6, 6, std::vector<double>(36, 0.0)};
  for (double v : power_spectrum_1d(m).values) CHECK(v == 0.0);
}

TEST_CASE("to_grayscale averages channels") {
  RgbImage img;
  img.width = 2;
  img.height = 1;
  img.values = {0.0, 0.3, 0.6, 1.0, 1.0, 1.0};
  ToFMap g = to_grayscale(img);
  CHECK(g.at(0, 0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(g.at(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
}
