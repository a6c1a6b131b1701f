// ensflux: simulate -> diagnose -> assumptions -> report
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ensflux/error.hpp"
#include "ensflux/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ensflux;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

class Stopwatch {
 public:
  explicit Stopwatch(bool on) : on_(on), t0_(std::chrono::steady_clock::now()) {}
  void lap(const char* what) {
    if (!on_) return;
    const auto t = std::chrono::steady_clock::now();
    std::fprintf(stderr, "[ensflux] %-12s %8.1f s\n", what, std::chrono::duration<double>(t - t0_).count());
    t0_ = t;
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point t0_;
};

RunConfig config_from(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  RunConfig c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  return c;
}

void print_rows(const FluxReport& r) {
  std::fprintf(stderr, "sigma0 = %.6g  P0 = %.6g  assumption2 = %s\n", r.quantities.sigma0, r.quantities.P0,
               r.assumption2 ? "yes" : "no");
  for (const ScaleRow& row : r.rows)
    std::fprintf(stderr, "  R = %-10.5g ens %d  members %6zu  ratio %.6g\n", row.R, row.ensemble, row.n_members, row.ratio);
}

int cmd_simulate(const Options& o) {
  const RunConfig c = config_from(o);
  Stopwatch sw(o.verbose);
  const SimulateResult r = simulate(c, o.out);
  sw.lap("simulate");
  if (r.blowup_time) std::fprintf(stderr, "ensflux: solver blew up at t = %.6g\n", *r.blowup_time);
  return r.exit_code;
}

int cmd_diagnose(const Options& o) {
  const RunConfig c = config_from(o);
  Stopwatch sw(o.verbose);
  const SnapshotSeries s = load_series(o.out);
  sw.lap("load");
  const FluxDensities d = densities_for(c, s);
  sw.lap("densities");
  const DiagnoseResult r = diagnose(c, d, o.out);
  sw.lap("diagnose");
  if (o.verbose) print_rows(r.report);
  return 0;
}

int cmd_assumptions(const Options& o) {
  const RunConfig c = config_from(o);
  Stopwatch sw(o.verbose);
  const SnapshotSeries s = load_series(o.out);
  const FluxDensities d = densities_for(c, s);
  sw.lap("densities");
  check_assumptions(c, s, d, o.out);
  sw.lap("assumptions");
  return 0;
}

int cmd_report(const Options& o) {
  std::cout << write_report(o.out);
  return 0;
}

int cmd_all(const Options& o) {
  const RunConfig c = config_from(o);
  Stopwatch sw(o.verbose);
  const SimulateResult sim = simulate(c, o.out);
  sw.lap("simulate");
  if (sim.exit_code != 0) {
    std::fprintf(stderr, "ensflux: solver blew up at t = %.6g\n", sim.blowup_time.value_or(0.0));
    return sim.exit_code;
  }
  const SnapshotSeries s = load_series(o.out);
  sw.lap("load");
  const FluxDensities d = densities_for(c, s);
  sw.lap("densities");
  const DiagnoseResult r = diagnose(c, d, o.out);
  sw.lap("diagnose");
  if (o.verbose) print_rows(r.report);
  check_assumptions(c, s, d, o.out);
  sw.lap("assumptions");
  std::cout << write_report(o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Enstrophy flux diagnostics for decaying incompressible MHD"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "Run configuration (key = value)");
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--seed", o.seed, "Override the configured seed");
  app.add_flag("--verbose,-v", o.verbose, "Stage timings and per-scale table on stderr");

  int (*action)(const Options&) = nullptr;
  app.add_subcommand("simulate", "Run the solver and write snapshots")->callback([&] { action = cmd_simulate; });
  app.add_subcommand("diagnose", "Per-scale flux averages from snapshots")->callback([&] { action = cmd_diagnose; });
  app.add_subcommand("assumptions", "Estimate the assumption constants")->callback([&] { action = cmd_assumptions; });
  app.add_subcommand("report", "Summarize flux_report.json and assumptions.json")->callback([&] { action = cmd_report; });
  app.add_subcommand("all", "simulate, diagnose, assumptions and report")->callback([&] { action = cmd_all; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    return action(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "ensflux: config: %s\n", e.what());
    return 1;
  } catch (const BlowUp& e) {
    std::fprintf(stderr, "ensflux: %s\n", e.what());
    return 2;
  } catch (const DegeneratePalinstrophy& e) {
    std::fprintf(stderr, "ensflux: degenerate: %s\n", e.what());
    return 3;
  } catch (const ScaleOutOfRange& e) {
    std::fprintf(stderr, "ensflux: degenerate: %s\n", e.what());
    return 3;
  } catch (const TooFewSnapshots& e) {
    std::fprintf(stderr, "ensflux: degenerate: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ensflux: %s\n", e.what());
    return 1;
  }
}
