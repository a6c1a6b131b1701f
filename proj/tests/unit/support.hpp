#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "ensflux/grid.hpp"
#include "ensflux/spectral.hpp"

namespace ensflux::testing {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Sum of random Fourier modes with |m_a| <= band, built spectrally; values are O(1-10).
inline ScalarField random_scalar(const GridSpec& g, std::uint64_t seed, int band = 3) {
  const auto sp = Spectral::for_grid(g);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SpectralBuffer f(sp->spectral_size(), Complex{0.0, 0.0});
  for (int mz = -band; mz <= band; ++mz)
    for (int my = -band; my <= band; ++my)
      for (int mx = 0; mx <= band; ++mx) {
        if (!(mx > 0 || my > 0 || (my == 0 && mz > 0))) continue;
        const Complex c{normal(rng), normal(rng)};
        f[sp->mode_index(mx, g.wrap(my), g.wrap(mz))] = c;
        if (mx == 0) f[sp->mode_index(0, g.wrap(-my), g.wrap(-mz))] = std::conj(c);
      }
  ScalarField s(g);
  sp->inverse(f, s.values());
  s *= static_cast<double>(g.size()) / (2.0 * band + 1.0);
  return s;
}

inline VectorField3 random_vector(const GridSpec& g, std::uint64_t seed, int band = 3) {
  return VectorField3(random_scalar(g, seed * 3 + 1, band), random_scalar(g, seed * 3 + 2, band),
                      random_scalar(g, seed * 3 + 3, band));
}

inline VectorField3 random_solenoidal(const GridSpec& g, std::uint64_t seed, int band = 3) {
  return curl(random_vector(g, seed, band));
}

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const VectorField3& a, const VectorField3& b) {
  return std::max({max_abs_diff(a[0], b[0]), max_abs_diff(a[1], b[1]), max_abs_diff(a[2], b[2])});
}

inline ScalarField nonnegative_field(const GridSpec& g, std::uint64_t seed, int band = 3) {
  ScalarField s = random_scalar(g, seed, band);
  for (auto& v : s.values()) v = v * v;
  return s;
}

}  // namespace ensflux::testing
