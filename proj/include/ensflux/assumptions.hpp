#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ensflux/mhd.hpp"
#include "ensflux/test_function.hpp"

namespace ensflux {

/// One space-time sample: snapshot index, base grid point x and offset y.
struct PairSample {
  std::size_t snapshot = 0;
  std::array<int, 3> x{0, 0, 0};
  Vec3 y{0.0, 0.0, 0.0};
};

/// Sample i depends only on (seed, i), so a longer draw extends a shorter one.
/// x is uniform in the ball B(center, region_radius) snapped to the nearest
/// grid point; y is uniform in the open ball of radius r_max.
std::vector<PairSample> draw_samples(const GridSpec& grid, std::size_t n_snapshots, std::size_t n_samples,
                                     std::uint64_t seed, const Vec3& center, double region_radius, double r_max);

enum class Interpolation { Trilinear, Spectral };

struct EstimatorResult {
  double estimate = 0.0;
  bool vacuous = true;           ///< no sample passed the gradient filter
  std::size_t drawn = 0;
  std::size_t passed = 0;        ///< samples above the gradient threshold
  std::size_t used = 0;          ///< passed and non-degenerate
  std::size_t degenerate = 0;    ///< skipped: near-zero vectors
  std::size_t excursions = 0;    ///< used samples with x + y outside the region ball
  std::vector<double> values;    ///< per drawn sample; NaN when not used
};

struct EstimatorOptions {
  double M = 0.0;
  Interpolation interpolation = Interpolation::Trilinear;
  Vec3 center{0.0, 0.0, 0.0};
  double region_radius = 0.0;
};

/// max |sin angle(w(x+y), w(x))| / |y|^(1/2) over samples with |grad u(x)| > M.
EstimatorResult coherence_constant(const SnapshotSeries& series, const std::vector<PairSample>& samples,
                                   const EstimatorOptions& opt);
/// max |j(x+y) - j(x)| / (|j(x+y)| |y|^(1/2)) over samples with |grad b(x)| > M.
EstimatorResult current_smoothness(const SnapshotSeries& series, const std::vector<PairSample>& samples,
                                   const EstimatorOptions& opt);

/// Space-time rms of the Frobenius norm of grad v over the series.
double gradient_rms(const SnapshotSeries& series, bool magnetic);

/// Periodic trilinear interpolation of a vector field.
Vec3 trilinear(const VectorField3& v, const Vec3& x);

/// int_0^T (|w|^2 + |j|^2) dt, trapezoid in time.
ScalarField enstrophy_time_integral(const SnapshotSeries& series);
/// dx^3 times the sum of f over grid points within distance < radius of y.
double ball_integral(const ScalarField& f, const Vec3& y, double radius);

struct LocalizationResult {
  double max_value = 0.0;
  Vec3 argmax{0.0, 0.0, 0.0};
  double radius = 0.0;
  std::vector<Vec3> centers;
  std::vector<double> values;
};

/// Ball integrals of the time-integrated enstrophy at the points of an
/// n_centers^3 lattice on [-2 R0, 2 R0]^3 (around `center`) lying in B(center, 2 R0).
LocalizationResult localization_check(const ScalarField& integrated, const Vec3& center, double R0, double radius,
                                      int n_centers);
/// Ball radius 2 s + s^(2/3) with s = sigma0 / beta.
inline double localization_radius(double sigma0, double beta) {
  const double s = sigma0 / beta;
  return 2.0 * s + std::cbrt(s * s);
}

struct ModulationResult {
  double ratio_omega = 1.0;
  double ratio_current = 1.0;
  std::vector<double> weighted_omega, weighted_current;  ///< per snapshot
  bool holds() const { return ratio_omega >= 0.5 && ratio_current >= 0.5; }
};

/// Final-time psi0-weighted enstrophy over its maximum over the snapshots.
ModulationResult modulation_check(const SnapshotSeries& series, const TestFunction& psi0);

}  // namespace ensflux
