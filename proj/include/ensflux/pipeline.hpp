#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ensflux/assumptions.hpp"
#include "ensflux/flux.hpp"
#include "ensflux/mhd.hpp"

namespace ensflux {

/// Everything a pipeline run needs; loaded from flat `key = value` text.
struct RunConfig {
  // grid
  int n = 64;
  double L = 6.283185307179586;
  // solver
  double nu = 5e-3;
  double eta_m = 5e-3;
  double dt = 0.02;
  double cfl = 0.4;
  double T = 3.0;
  int n_snapshots = 48;
  bool dealias = true;
  double magnitude_cap = 1e6;
  std::string init = "taylor_green";  ///< taylor_green | abc | zero
  std::uint64_t seed = 1;
  double amplitude_u = 1.0;
  double amplitude_b = 1.0;
  int init_wavenumber = 1;
  double perturbation = 0.1;
  int perturbation_band = 2;
  // analysis
  double R0 = 1.0;
  double rho = 0.8;
  double C0 = 100.0;
  int K1 = 64;
  int K2 = 8;
  double beta = 0.1;
  int n_scales = 6;
  int n_ensembles = 4;
  std::vector<double> scales;
  int min_points_per_scale = 8;
  int cutoff_order = 6;
  double M_velocity = 0.0;  ///< 0 selects twice the space-time rms of |grad u|
  double M_magnetic = 0.0;  ///< 0 selects twice the space-time rms of |grad b|
  std::size_t n_samples = 20000;
  int n_centers = 9;
  double C1 = 0.0;  ///< coherence bound to test against; 0 leaves it unset
  double C2 = 0.0;  ///< localization constant; 0 leaves it unset
  std::string interpolation = "trilinear";  ///< trilinear | spectral

  void validate() const;
  SolverConfig solver() const;
  TheoremOptions theorem() const;
  GridSpec grid() const { return GridSpec(n, L); }
};

/// Throws ConfigError on syntax errors, unknown keys and invalid values.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(config_text(c)) reproduces c.
std::string config_text(const RunConfig& c);

// Snapshot files: "MHDS", u8 version 1, u32 LE header length, UTF-8
// key:value header, then one float64 LE array of n^3 values per field.
void write_snapshot(const std::filesystem::path& path, const MHDState& state);
MHDState read_snapshot(const std::filesystem::path& path);

MHDState initial_state(const RunConfig& c);

struct SimulateResult {
  int exit_code = 0;
  std::optional<double> blowup_time;
  std::size_t snapshots_written = 0;
};

/// Writes snapshots/snap_NNNN.mhds and manifest.json under out_dir.
SimulateResult simulate(const RunConfig& c, const std::filesystem::path& out_dir);
/// Reads the series listed in out_dir/manifest.json.
SnapshotSeries load_series(const std::filesystem::path& out_dir);

struct DiagnoseResult {
  FluxReport report;
  std::vector<LocalityEntry> locality;
};

/// Writes flux_report.json, flux_table.csv and flux_plot.dat.
DiagnoseResult diagnose(const RunConfig& c, const FluxDensities& d, const std::filesystem::path& out_dir);

struct AssumptionSummary {
  double sigma0 = 0.0;
  double radius = 0.0;       ///< |y| bound and localization ball radius
  double M_velocity = 0.0, M_magnetic = 0.0;
  EstimatorResult coherence, smoothness;
  LocalizationResult localization;
  ModulationResult modulation;
  bool sigma_ok = false;
};

/// Writes assumptions.json.
AssumptionSummary check_assumptions(const RunConfig& c, const SnapshotSeries& series, const FluxDensities& d,
                                    const std::filesystem::path& out_dir);

/// One-page summary from the two JSON documents.
std::string render_report(const std::string& flux_json, const std::string& assumptions_json);
/// Reads flux_report.json and assumptions.json, writes report.txt.
std::string write_report(const std::filesystem::path& out_dir);

FluxDensities densities_for(const RunConfig& c, const SnapshotSeries& series);
TestFunction integral_scale_function(const RunConfig& c);

}  // namespace ensflux
