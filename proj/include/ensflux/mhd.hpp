#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ensflux/grid.hpp"

namespace ensflux {

/// Incompressible MHD state; the pressure is eliminated by projection.
struct MHDState {
  double t = 0.0;
  VectorField3 u;
  VectorField3 b;

  const GridSpec& grid() const { return u.grid(); }
};

struct SolverConfig {
  double nu = 1.0;     ///< kinematic viscosity
  double eta_m = 1.0;  ///< magnetic resistivity
  /// Fixed step, or the largest allowed step when `cfl` > 0.
  double dt = 1e-3;
  /// CFL number (<= 0.5); 0 disables CFL control.
  double cfl = 0.0;
  double T = 1.0;
  int n_snapshots = 48;
  bool dealias = true;
  /// BlowUp is raised when any field value exceeds this magnitude.
  double magnitude_cap = 1e6;

  void validate() const;
};

/// Time-ordered (u, b) states with cached vorticity and current.
class SnapshotSeries {
 public:
  SnapshotSeries() = default;
  explicit SnapshotSeries(std::vector<MHDState> states);

  const GridSpec& grid() const { return states_.front().grid(); }
  std::size_t size() const { return states_.size(); }
  const MHDState& state(std::size_t k) const { return states_[k]; }
  const VectorField3& vorticity(std::size_t k) const { return vorticity_[k]; }
  const VectorField3& current(std::size_t k) const { return current_[k]; }
  const std::vector<double>& times() const { return times_; }
  double final_time() const { return times_.back(); }

 private:
  std::vector<MHDState> states_;
  std::vector<VectorField3> vorticity_, current_;
  std::vector<double> times_;
};

/// One Lawson (integrating-factor) RK4 step of size `dt` with exact
/// diffusion and 2/3-rule dealiased nonlinear terms. Output is re-projected.
MHDState step(const MHDState& state, const SolverConfig& cfg, double dt);
/// Same, with cfg.dt (or the CFL step, when enabled).
MHDState step(const MHDState& state, const SolverConfig& cfg);

/// Integrates to cfg.T, calling `observer` at cfg.n_snapshots uniform times
/// (including 0 and T). Each snapshot interval is split into equal steps.
void run(const MHDState& init, const SolverConfig& cfg, const std::function<void(const MHDState&)>& observer);
SnapshotSeries run(const MHDState& init, const SolverConfig& cfg);

struct TaylorGreenOptions {
  int wavenumber = 1;          ///< base mode, in units of 2 pi / L
  double perturbation = 0.0;   ///< relative rms of the seeded random large-scale part
  int perturbation_band = 2;   ///< perturbation modes have |m| <= band per axis
};

/// Taylor-Green velocity with the matching MHD magnetic field, plus an
/// optional seeded perturbation; both fields projected, truncated to the
/// dealiased band and rescaled to rms(u) = amplitude_u, rms(b) = amplitude_b.
MHDState taylor_green_mhd_init(const GridSpec& grid, double amplitude_u, double amplitude_b, std::uint64_t seed,
                               const TaylorGreenOptions& opts = {});

/// Arnold-Beltrami-Childress field (sin z + cos y, sin x + cos z, sin y + cos x)
/// at mode `wavenumber`; curl of it equals k times itself.
VectorField3 abc_field(const GridSpec& grid, double amplitude = 1.0, int wavenumber = 1);

/// Volume-integrated (|u|^2 + |b|^2) / 2.
double total_energy(const MHDState& s);
/// nu * int |omega|^2 + eta_m * int |j|^2.
double dissipation_rate(const VectorField3& vorticity, const VectorField3& current, const SolverConfig& cfg);
/// int u . b
double cross_helicity(const MHDState& s);

/// max over snapshot intervals of |dE + int D dt| / (E dt), where the
/// dissipation rate D is integrated over the interval from its cubic
/// interpolant through the neighbouring snapshots.
double energy_balance_residual(const SnapshotSeries& series, const SolverConfig& cfg);

}  // namespace ensflux
