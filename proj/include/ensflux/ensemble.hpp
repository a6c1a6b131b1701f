#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ensflux/test_function.hpp"

namespace ensflux {

/// Collection of scale-R test functions covering the integral-scale function
/// psi0. Members may be grouped by parent (after refinement).
struct Ensemble {
  TestFunction psi0;
  double scale = 0.0;
  std::vector<TestFunction> members;
  /// Parent index of each member; all zeros for a flat ensemble.
  std::vector<std::size_t> group;
  std::size_t n_groups = 1;
  /// Scale used by the grouped normalisation.
  double group_scale = 0.0;
  int K1 = 64;
  int K2 = 8;
  double c0 = 0.0;
};

struct PartitionResult {
  std::vector<TestFunction> pieces;
  double c0_measured = 0.0;  ///< worst grid-level bound constant over the pieces
};

/// Splits psi into the pieces psi * h_p of a cubic lattice partition of unity
/// at scale r_prime (spacing 2 r_prime). `origin` is the lattice origin as a
/// displacement from psi's root centre. Pieces whose support misses that of
/// psi are dropped. Throws ResolutionTooCoarse below `min_points` grid points
/// per r_prime.
PartitionResult lattice_partition(const TestFunction& psi, double r_prime, const GridSpec& grid,
                                  const Vec3& origin = {0.0, 0.0, 0.0}, int min_points = 8);

/// Lattice origin centred on psi's own location.
Vec3 default_origin(const TestFunction& psi);

/// Lattice partition of psi0 at scale R (R = R0 gives {psi0}). A seed adds a
/// uniform lattice offset in [-R, R)^3.
Ensemble canonical_ensemble(const TestFunction& psi0, double R, int K1, int K2, const GridSpec& grid,
                            std::optional<std::uint64_t> jitter_seed = std::nullopt, int min_points = 8);

/// Partitions every member at r_prime; members stay grouped by parent.
Ensemble refine_ensemble(const Ensemble& e, double r_prime, const GridSpec& grid, int min_points = 8);

struct EnsembleValidation {
  double max_member_excess = 0.0;  ///< max(psi_i - psi0)
  double max_cover_deficit = 0.0;  ///< max(psi0 - sum psi_i)
  std::size_t count = 0;
  double count_lower = 0.0, count_upper = 0.0;
  int max_multiplicity = 0;  ///< over grid points of B(0, 2 R0)
  double worst_c0 = 0.0;     ///< worst measured member bound constant
  bool property1 = false, property2 = false, property3 = false, bounds = false;
  bool ok() const { return property1 && property2 && property3 && bounds; }
};

EnsembleValidation validate(const Ensemble& e, const GridSpec& grid, double tolerance = 1e-12);

/// Member patches (value, gradient, Laplacian) for repeated quadrature.
class EnsembleQuadrature {
 public:
  EnsembleQuadrature(const Ensemble& e, const GridSpec& grid);

  std::size_t size() const { return jets_.size(); }
  const PatchJet& member(std::size_t i) const { return jets_[i]; }
  const Ensemble& ensemble() const { return *e_; }

  /// int f psi_i
  double integral(std::size_t i, const ScalarField& f) const;
  /// int f psi_i^delta
  double integral_power(std::size_t i, const ScalarField& f, double delta) const;
  /// int v . grad psi_i
  double gradient_integral(std::size_t i, const VectorField3& v) const;
  /// int f lap psi_i
  double laplacian_integral(std::size_t i, const ScalarField& f) const;

  /// (1/n) sum_i (1/R^3) int f psi_i
  double average(const ScalarField& f) const;
  /// (1/n_groups) sum_groups (1/R_group^3) sum_{i in group} int f psi_i
  double grouped_average(const ScalarField& f) const;
  /// (1/n) sum_i (1/R^3) int f psi_i^delta
  double delta_average(const ScalarField& f, double delta) const;

 private:
  const Ensemble* e_;
  GridSpec grid_;
  std::vector<PatchJet> jets_;
};

double ensemble_average(const ScalarField& f, const Ensemble& e);
/// F0 = (1/R0^3) int f psi0
double large_scale_mean(const ScalarField& f, const TestFunction& psi0);
/// (1/R0^3) int f psi0^delta
double large_scale_mean_power(const ScalarField& f, const TestFunction& psi0, double delta);

/// Integral of f against a patch: dx^3 sum f * weights.
double patch_integral(const ScalarField& f, const IndexBox& box, std::span<const double> weights);

struct PlateauSumRange {
  double min = 0.0, max = 0.0;
};
/// Range over the grid of sum_p g_p, where g_p is the product of the 1D
/// plateau profiles (scale r_prime) centred on lattice site p.
PlateauSumRange plateau_sum_range(double r_prime, int order, const GridSpec& grid, const Vec3& origin = {0.0, 0.0, 0.0});
/// Range of the 1D periodised plateau sum, sampled densely over one period.
PlateauSumRange plateau_sum_range_1d(double r_prime, int order, int samples = 100000);

}  // namespace ensflux
