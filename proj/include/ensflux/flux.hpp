#pragma once

#include <cstdint>
#include <vector>

#include "ensflux/ensemble.hpp"
#include "ensflux/mhd.hpp"

namespace ensflux {

/// Snapshot-count floor for the time quadrature.
inline constexpr std::size_t kMinSnapshots = 12;

/// Trapezoid weights for the series' sample times.
std::vector<double> trapezoid_weights(const std::vector<double>& times);

/// Space-time densities integrated in time (trapezoid rule) with the
/// temporal cutoff eta folded in. Pairing any of them with a test function
/// psi (or its derivatives) gives the corresponding space-time integral
/// against phi = psi * eta.
struct FluxDensities {
  GridSpec grid;
  double T = 0.0;
  double nu = 1.0, eta_m = 1.0, rho = 0.8;

  ScalarField flux_omega;         ///< -int (u.grad)w.w eta dt
  ScalarField flux_current;       ///< -int (u.grad)j.j eta dt
  ScalarField flux_unweighted;    ///< both, without eta
  VectorField3 transport;         ///< int 1/2 (|w|^2 + |j|^2) u eta dt
  ScalarField final_omega;        ///< 1/2 |w(T)|^2
  ScalarField final_current;      ///< 1/2 |j(T)|^2
  ScalarField grad_sq_omega;      ///< int |grad w|^2 eta dt
  ScalarField grad_sq_current;    ///< int |grad j|^2 eta dt
  ScalarField ens_rate_omega;     ///< int 1/2 |w|^2 eta' dt
  ScalarField ens_rate_current;   ///< int 1/2 |j|^2 eta' dt
  ScalarField ens_omega;          ///< int 1/2 |w|^2 eta dt
  ScalarField ens_current;        ///< int 1/2 |j|^2 eta dt
  ScalarField stretch_omega;      ///< -int (w.grad)u.w eta dt
  ScalarField lorentz_omega;      ///< -int (b.grad)j.w eta dt
  ScalarField tilt_omega;         ///< +int (j.grad)b.w eta dt
  ScalarField stretch_current;    ///< +int (w.grad)b.j eta dt
  ScalarField lorentz_current;    ///< -int (b.grad)w.j eta dt
  ScalarField tilt_current;       ///< -int (j.grad)u.j eta dt
  ScalarField cross_current;      ///< +int 2 sum_l (grad u_l x grad b_l).j eta dt
  ScalarField energy_weighted;    ///< int eta^(4 rho - 3) 1/2 (|u|^2 + |b|^2) dt
  ScalarField enstrophy_weighted; ///< int eta^(2 rho - 1) (|w|^2 + |j|^2) dt
  ScalarField enstrophy_total;    ///< int |w|^2 + |j|^2 dt

  /// flux_omega + flux_current
  ScalarField flux() const;
  /// Positive density 1/2 (|w(T)|^2 + |j(T)|^2) + int (|grad w|^2 + |grad j|^2) eta dt.
  ScalarField palinstrophy() const;
};

/// Throws TooFewSnapshots below kMinSnapshots states.
FluxDensities compute_densities(const SnapshotSeries& series, const TemporalCutoff& eta, double nu, double eta_m,
                                double rho);

/// -int [(u.grad)w.w + (u.grad)j.j] eta dt, trapezoid in time.
ScalarField flux_density(const SnapshotSeries& series, const TemporalCutoff& eta);

/// Transport form int int 1/2 (|w|^2 + |j|^2) u . grad(psi eta).
double surface_flux(const FluxDensities& d, const TestFunction& tf);
double surface_flux(const SnapshotSeries& series, const TestFunction& tf, const TemporalCutoff& eta);
/// Convection form -int int [(u.grad)w.w + (u.grad)j.j] psi eta.
double convection_flux(const FluxDensities& d, const TestFunction& tf);

struct EquationTerms {
  double flux = 0.0;         ///< left-hand side
  double final_time = 0.0;   ///< int 1/2 |f(T)|^2 psi
  double dissipation = 0.0;  ///< coefficient * int int |grad f|^2 phi
  double H = 0.0, N1 = 0.0, L = 0.0, N2 = 0.0;
  double rhs() const { return final_time + dissipation + H + N1 + L + N2; }
};

struct TermBreakdown {
  EquationTerms omega;
  EquationTerms current;
  double X = 0.0;
  double residual_omega = 0.0;
  double residual_current = 0.0;
  /// max of the two per-equation residuals, each relative to its largest term
  double identity_residual = 0.0;
};

TermBreakdown term_decomposition(const FluxDensities& d, const TestFunction& tf);
TermBreakdown term_decomposition(const FluxDensities& d, const EnsembleQuadrature& q, std::size_t member);

struct ScaleQuantities {
  double e0 = 0.0, E0 = 0.0, P0 = 0.0;
  double sigma0 = 0.0;  ///< 0 when P0 = 0
};

ScaleQuantities integral_scale_quantities(const FluxDensities& d, const TestFunction& psi0);
/// max{(E0/P0)^(1/2), (e0/P0)^(1/4)}; throws DegeneratePalinstrophy when P0 = 0.
double kraichnan_scale(const ScaleQuantities& q);
inline bool assumption2_holds(const ScaleQuantities& q, double beta, double R0) { return q.sigma0 < beta * R0; }

struct TheoremOptions {
  int K1 = 64;
  int K2 = 8;
  double beta = 0.1;
  int n_ensembles = 4;
  int n_scales = 6;
  std::uint64_t seed = 0;
  int min_points_per_scale = 8;
  /// Explicit scales; empty selects n_scales geometric scales in
  /// [max(sigma0 / beta, min_points * dx), R0).
  std::vector<double> scales;
};

struct ScaleRow {
  double R = 0.0;
  int ensemble = 0;  ///< 0 = unshifted lattice, k > 0 = k-th jittered lattice
  std::size_t n_members = 0;
  double phi_avg = 0.0;       ///< <Phi>_R
  double psi_avg = 0.0;       ///< <Psi>_R (transport form)
  double ratio = 0.0;         ///< <Phi>_R / P0
  double phi_unweighted_avg = 0.0;
  double p_avg = 0.0;         ///< <P>_R
  double H_avg = 0.0, N_avg = 0.0, L_avg = 0.0, X_avg = 0.0;
  double transport_mismatch = 0.0;  ///< |R^3 <Phi> - <Psi>| / max(|R^3 <Phi>|, |<Psi>|)
  double c0 = 0.0;
  bool valid = false;         ///< ensemble properties 1-3 and bounds hold
  bool sandwich_ok = false;        ///< (1/K1) P0 <= <P>_R <= K2 P0
};

struct FluxReport {
  ScaleQuantities quantities;
  double R0 = 0.0;
  double beta = 0.0;
  double T = 0.0;
  bool assumption2 = false;
  std::vector<ScaleRow> rows;
  double min_ratio = 0.0, max_ratio = 0.0;
  bool all_positive = false;
  bool all_finite = false;
  double K_star = 0.0;  ///< infinity unless all ratios are positive
  double max_transport_mismatch = 0.0;
};

/// Geometric scales for the theorem harness (see TheoremOptions::scales).
std::vector<double> theorem_scales(const ScaleQuantities& q, double R0, const GridSpec& grid, const TheoremOptions& opt);

FluxReport verify_theorem(const FluxDensities& d, const TestFunction& psi0, const TheoremOptions& opt);

struct LocalityEntry {
  std::size_t row_r = 0, row_R = 0;
  double r = 0.0, R = 0.0;
  double ratio = 0.0;       ///< <Psi>_r / <Psi>_R
  double cube = 0.0;        ///< (r/R)^3
  double phi_ratio = 0.0;   ///< (r^3 <Phi>_r) / (R^3 <Phi>_R)
  double lower = 0.0, upper = 0.0;
  bool contained = false;
};

/// All row pairs with r <= R. Containment allows the measured
/// transport/convection mismatch of the two rows as slack.
std::vector<LocalityEntry> locality_ratios(const FluxReport& report);

}  // namespace ensflux
