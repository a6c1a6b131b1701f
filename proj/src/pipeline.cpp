#include "ensflux/pipeline.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ensflux/error.hpp"

namespace ensflux {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError("'" + key + "': expected an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ConfigError("'" + key + "': expected true or false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

template <class T>
Setter real(T RunConfig::*m) {
  return [m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = parse_double(k, v); };
}
template <class T>
Setter integer(T RunConfig::*m) {
  return [m](RunConfig& c, const std::string& k, const std::string& v) {
    const long long x = parse_int(k, v);
    if (x < 0 && std::is_unsigned_v<T>) throw ConfigError("'" + k + "': must be non-negative");
    c.*m = static_cast<T>(x);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> s = {
      {"n", integer(&RunConfig::n)},
      {"L", real(&RunConfig::L)},
      {"nu", real(&RunConfig::nu)},
      {"eta_m", real(&RunConfig::eta_m)},
      {"dt", real(&RunConfig::dt)},
      {"cfl", real(&RunConfig::cfl)},
      {"T", real(&RunConfig::T)},
      {"n_snapshots", integer(&RunConfig::n_snapshots)},
      {"dealias", [](RunConfig& c, const std::string& k, const std::string& v) { c.dealias = parse_bool(k, v); }},
      {"magnitude_cap", real(&RunConfig::magnitude_cap)},
      {"init", [](RunConfig& c, const std::string&, const std::string& v) { c.init = v; }},
      {"seed", integer(&RunConfig::seed)},
      {"amplitude_u", real(&RunConfig::amplitude_u)},
      {"amplitude_b", real(&RunConfig::amplitude_b)},
      {"init_wavenumber", integer(&RunConfig::init_wavenumber)},
      {"perturbation", real(&RunConfig::perturbation)},
      {"perturbation_band", integer(&RunConfig::perturbation_band)},
      {"R0", real(&RunConfig::R0)},
      {"rho", real(&RunConfig::rho)},
      {"C0", real(&RunConfig::C0)},
      {"K1", integer(&RunConfig::K1)},
      {"K2", integer(&RunConfig::K2)},
      {"beta", real(&RunConfig::beta)},
      {"n_scales", integer(&RunConfig::n_scales)},
      {"n_ensembles", integer(&RunConfig::n_ensembles)},
      {"scales",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.scales.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) {
           const std::string t = trim(item);
           if (!t.empty()) c.scales.push_back(parse_double(k, t));
         }
       }},
      {"min_points_per_scale", integer(&RunConfig::min_points_per_scale)},
      {"cutoff_order", integer(&RunConfig::cutoff_order)},
      {"M_velocity", real(&RunConfig::M_velocity)},
      {"M_magnetic", real(&RunConfig::M_magnetic)},
      {"n_samples", integer(&RunConfig::n_samples)},
      {"n_centers", integer(&RunConfig::n_centers)},
      {"C1", real(&RunConfig::C1)},
      {"C2", real(&RunConfig::C2)},
      {"interpolation", [](RunConfig& c, const std::string&, const std::string& v) { c.interpolation = v; }},
  };
  return s;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T>
void put_le(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(const char* p) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

const char* const kFieldNames[6] = {"ux", "uy", "uz", "bx", "by", "bz"};

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  try {
    (void)GridSpec(n, L);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  solver().validate();
  if (init != "taylor_green" && init != "abc" && init != "zero") fail("init must be taylor_green, abc or zero");
  if (!(amplitude_u >= 0.0) || !(amplitude_b >= 0.0)) fail("amplitudes must be non-negative");
  if (init_wavenumber < 1) fail("init_wavenumber must be >= 1");
  if (perturbation < 0.0) fail("perturbation must be non-negative");
  if (perturbation_band < 1) fail("perturbation_band must be >= 1");
  if (!(R0 > 0.0) || !(2.0 * R0 + std::cbrt(R0 * R0) < 0.5 * L)) fail("R0 must satisfy 2 R0 + R0^(2/3) < L/2");
  if (!(rho > 0.75 && rho < 1.0)) fail("rho must lie in (3/4, 1)");
  if (!(C0 > 1.0)) fail("C0 must exceed 1");
  if (K1 < 1 || K2 < 1) fail("K1 and K2 must be positive");
  if (!(beta > 0.0 && beta < 1.0)) fail("beta must lie in (0, 1)");
  if (n_scales < 1 || n_ensembles < 1) fail("n_scales and n_ensembles must be positive");
  for (double s : scales)
    if (!(s > 0.0) || s > R0) fail("scales must lie in (0, R0]");
  if (min_points_per_scale < 1) fail("min_points_per_scale must be positive");
  if (cutoff_order < 1) fail("cutoff_order must be positive");
  if (M_velocity < 0.0 || M_magnetic < 0.0) fail("gradient thresholds must be non-negative");
  if (n_samples < 1) fail("n_samples must be positive");
  if (n_centers < 2) fail("n_centers must be >= 2");
  if (C1 < 0.0 || C2 < 0.0) fail("C1 and C2 must be non-negative");
  if (interpolation != "trilinear" && interpolation != "spectral") fail("interpolation must be trilinear or spectral");
}

SolverConfig RunConfig::solver() const {
  SolverConfig s;
  s.nu = nu;
  s.eta_m = eta_m;
  s.dt = dt;
  s.cfl = cfl;
  s.T = T;
  s.n_snapshots = n_snapshots;
  s.dealias = dealias;
  s.magnitude_cap = magnitude_cap;
  return s;
}

TheoremOptions RunConfig::theorem() const {
  TheoremOptions o;
  o.K1 = K1;
  o.K2 = K2;
  o.beta = beta;
  o.n_ensembles = n_ensembles;
  o.n_scales = n_scales;
  o.seed = seed;
  o.min_points_per_scale = min_points_per_scale;
  o.scales = scales;
  return o;
}

RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::stringstream ss{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (value.empty() && key != "scales") throw ConfigError("line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    it->second(c, key, value);
  }
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) { return parse_config(read_file(path)); }

std::string config_text(const RunConfig& c) {
  std::ostringstream o;
  o << "n = " << c.n << "\nL = " << fmt(c.L) << "\nnu = " << fmt(c.nu) << "\neta_m = " << fmt(c.eta_m)
    << "\ndt = " << fmt(c.dt) << "\ncfl = " << fmt(c.cfl) << "\nT = " << fmt(c.T) << "\nn_snapshots = " << c.n_snapshots
    << "\ndealias = " << (c.dealias ? "true" : "false") << "\nmagnitude_cap = " << fmt(c.magnitude_cap)
    << "\ninit = " << c.init << "\nseed = " << c.seed << "\namplitude_u = " << fmt(c.amplitude_u)
    << "\namplitude_b = " << fmt(c.amplitude_b) << "\ninit_wavenumber = " << c.init_wavenumber
    << "\nperturbation = " << fmt(c.perturbation) << "\nperturbation_band = " << c.perturbation_band
    << "\nR0 = " << fmt(c.R0) << "\nrho = " << fmt(c.rho) << "\nC0 = " << fmt(c.C0) << "\nK1 = " << c.K1
    << "\nK2 = " << c.K2 << "\nbeta = " << fmt(c.beta) << "\nn_scales = " << c.n_scales
    << "\nn_ensembles = " << c.n_ensembles << "\nscales = ";
  for (std::size_t i = 0; i < c.scales.size(); ++i) o << (i ? ", " : "") << fmt(c.scales[i]);
  o << "\nmin_points_per_scale = " << c.min_points_per_scale << "\ncutoff_order = " << c.cutoff_order
    << "\nM_velocity = " << fmt(c.M_velocity) << "\nM_magnetic = " << fmt(c.M_magnetic) << "\nn_samples = " << c.n_samples
    << "\nn_centers = " << c.n_centers << "\nC1 = " << fmt(c.C1) << "\nC2 = " << fmt(c.C2)
    << "\ninterpolation = " << c.interpolation << "\n";
  return o.str();
}

void write_snapshot(const fs::path& path, const MHDState& state) {
  const GridSpec& g = state.grid();
  std::string header = "n:" + std::to_string(g.n) + "\nL:" + fmt(g.length) + "\ntime:" + fmt(state.t) +
                       "\nfields:ux,uy,uz,bx,by,bz\nordering:x-fastest\n";
  std::string out = "MHDS";
  out.push_back(static_cast<char>(1));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  out.reserve(out.size() + 6 * g.size() * sizeof(double));
  for (int f = 0; f < 6; ++f) {
    const ScalarField& s = f < 3 ? state.u[f] : state.b[f - 3];
    for (double v : s.values()) put_le<double>(out, v);
  }
  write_file(path, out);
}

MHDState read_snapshot(const fs::path& path) {
  std::string data;
  try {
    data = read_file(path);
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  if (data.size() < 9 || data.compare(0, 4, "MHDS") != 0) throw FormatError(path.string() + ": bad magic");
  if (static_cast<unsigned char>(data[4]) != 1) throw FormatError(path.string() + ": unsupported version");
  const std::uint32_t hlen = get_le<std::uint32_t>(data.data() + 5);
  if (data.size() < 9 + static_cast<std::size_t>(hlen)) throw FormatError(path.string() + ": truncated header");
  std::map<std::string, std::string> h;
  std::stringstream ss(data.substr(9, hlen));
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw FormatError(path.string() + ": malformed header line");
    h[line.substr(0, colon)] = line.substr(colon + 1);
  }
  for (const char* k : {"n", "L", "time", "fields", "ordering"})
    if (!h.count(k)) throw FormatError(path.string() + ": header lacks '" + k + "'");
  if (h["ordering"] != "x-fastest") throw FormatError(path.string() + ": unsupported ordering");
  if (h["fields"] != "ux,uy,uz,bx,by,bz") throw FormatError(path.string() + ": unsupported field list");
  GridSpec g;
  double t = 0.0;
  try {
    g = GridSpec(static_cast<int>(parse_int("n", h["n"])), parse_double("L", h["L"]));
    t = parse_double("time", h["time"]);
  } catch (const std::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  const std::size_t need = 9 + hlen + 6 * g.size() * sizeof(double);
  if (data.size() != need) throw FormatError(path.string() + ": payload size mismatch");
  MHDState s{t, VectorField3(g), VectorField3(g)};
  const char* p = data.data() + 9 + hlen;
  for (int f = 0; f < 6; ++f) {
    ScalarField& dst = f < 3 ? s.u[f] : s.b[f - 3];
    for (std::size_t i = 0; i < g.size(); ++i, p += sizeof(double)) dst[i] = get_le<double>(p);
  }
  return s;
}

MHDState initial_state(const RunConfig& c) {
  const GridSpec g = c.grid();
  if (c.init == "zero") return MHDState{0.0, VectorField3(g), VectorField3(g)};
  if (c.init == "abc") return MHDState{0.0, abc_field(g, c.amplitude_u, c.init_wavenumber), abc_field(g, c.amplitude_b, c.init_wavenumber)};
  TaylorGreenOptions o;
  o.wavenumber = c.init_wavenumber;
  o.perturbation = c.perturbation;
  o.perturbation_band = c.perturbation_band;
  return taylor_green_mhd_init(g, c.amplitude_u, c.amplitude_b, c.seed, o);
}

SimulateResult simulate(const RunConfig& c, const fs::path& out_dir) {
  fs::create_directories(out_dir / "snapshots");
  SimulateResult r;
  json files = json::array();
  auto manifest = [&](const std::string& status) {
    json m;
    m["format"] = "MHDS";
    m["version"] = 1;
    m["n"] = c.n;
    m["L"] = c.L;
    m["seed"] = c.seed;
    m["config"] = config_text(c);
    m["snapshots"] = files;
    m["status"] = status;
    m["blowup_time"] = r.blowup_time ? json(*r.blowup_time) : json(nullptr);
    write_file(out_dir / "manifest.json", m.dump(2) + "\n");
  };
  try {
    run(initial_state(c), c.solver(), [&](const MHDState& s) {
      char name[32];
      std::snprintf(name, sizeof name, "snap_%04zu.mhds", r.snapshots_written);
      write_snapshot(out_dir / "snapshots" / name, s);
      files.push_back({{"file", std::string("snapshots/") + name}, {"time", s.t}});
      ++r.snapshots_written;
    });
  } catch (const BlowUp& e) {
    r.blowup_time = e.time();
    r.exit_code = 2;
    manifest("blowup");
    return r;
  }
  manifest("complete");
  return r;
}

SnapshotSeries load_series(const fs::path& out_dir) {
  json m;
  try {
    m = json::parse(read_file(out_dir / "manifest.json"));
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }
  if (m.value("status", "") != "complete") throw FormatError("manifest.json: simulation did not complete");
  std::vector<MHDState> states;
  for (const auto& f : m.at("snapshots")) states.push_back(read_snapshot(out_dir / f.at("file").get<std::string>()));
  if (states.empty()) throw FormatError("manifest.json: no snapshots");
  return SnapshotSeries(std::move(states));
}

FluxDensities densities_for(const RunConfig& c, const SnapshotSeries& series) {
  const TemporalCutoff eta(series.final_time(), c.cutoff_order);
  return compute_densities(series, eta, c.nu, c.eta_m, c.rho);
}

TestFunction integral_scale_function(const RunConfig& c) { return make_refined({0.0, 0.0, 0.0}, c.R0, c.rho, c.C0, c.L); }

DiagnoseResult diagnose(const RunConfig& c, const FluxDensities& d, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  DiagnoseResult res;
  res.report = verify_theorem(d, integral_scale_function(c), c.theorem());
  res.locality = locality_ratios(res.report);
  const FluxReport& r = res.report;
  const ScaleQuantities& q = r.quantities;

  json j;
  j["n"] = c.n;
  j["L"] = c.L;
  j["nu"] = c.nu;
  j["eta_m"] = c.eta_m;
  j["seed"] = c.seed;
  j["T"] = r.T;
  j["R0"] = r.R0;
  j["beta"] = r.beta;
  j["K1"] = c.K1;
  j["K2"] = c.K2;
  j["quantities"] = {{"e0", q.e0}, {"E0", q.E0}, {"P0", q.P0}, {"sigma0", q.sigma0}};
  j["assumption2"] = r.assumption2;
  json rows = json::array();
  for (const ScaleRow& row : r.rows)
    rows.push_back({{"R", row.R}, {"ensemble", row.ensemble}, {"n_members", row.n_members},
                    {"phi_avg", finite_or_null(row.phi_avg)}, {"psi_avg", finite_or_null(row.psi_avg)},
                    {"ratio", finite_or_null(row.ratio)}, {"phi_unweighted_avg", finite_or_null(row.phi_unweighted_avg)},
                    {"p_avg", row.p_avg}, {"H_avg", row.H_avg}, {"N_avg", row.N_avg}, {"L_avg", row.L_avg},
                    {"X_avg", row.X_avg}, {"transport_mismatch", row.transport_mismatch}, {"c0", row.c0}, {"valid", row.valid},
                    {"sandwich_ok", row.sandwich_ok}});
  j["rows"] = rows;
  j["min_ratio"] = finite_or_null(r.min_ratio);
  j["max_ratio"] = finite_or_null(r.max_ratio);
  j["all_positive"] = r.all_positive;
  j["all_finite"] = r.all_finite;
  j["K_star"] = finite_or_null(r.K_star);
  j["max_transport_mismatch"] = r.max_transport_mismatch;
  json loc = json::array();
  std::size_t contained = 0;
  for (const LocalityEntry& e : res.locality) {
    contained += e.contained ? 1 : 0;
    loc.push_back({{"r", e.r}, {"R", e.R}, {"row_r", e.row_r}, {"row_R", e.row_R}, {"ratio", finite_or_null(e.ratio)},
                   {"cube", e.cube}, {"lower", finite_or_null(e.lower)}, {"upper", finite_or_null(e.upper)},
                   {"contained", e.contained}});
  }
  j["locality"] = {{"pairs", res.locality.size()}, {"contained", contained}, {"entries", loc}};
  write_file(out_dir / "flux_report.json", j.dump(2) + "\n");

  std::ostringstream csv;
  csv << "R,n_members,phi_avg,psi_avg,P0,E0,e0,sigma0,ratio_phi_over_P0\n";
  for (const ScaleRow& row : r.rows)
    csv << fmt(row.R) << ',' << row.n_members << ',' << fmt(row.phi_avg) << ',' << fmt(row.psi_avg) << ',' << fmt(q.P0)
        << ',' << fmt(q.E0) << ',' << fmt(q.e0) << ',' << fmt(q.sigma0) << ',' << fmt(row.ratio) << '\n';
  write_file(out_dir / "flux_table.csv", csv.str());

  std::ostringstream plot;
  plot << "# log_R log_psi_avg\n";
  for (const ScaleRow& row : r.rows)
    plot << fmt(std::log(row.R)) << ' ' << (row.psi_avg > 0.0 ? fmt(std::log(row.psi_avg)) : std::string("nan")) << '\n';
  write_file(out_dir / "flux_plot.dat", plot.str());
  return res;
}

AssumptionSummary check_assumptions(const RunConfig& c, const SnapshotSeries& series, const FluxDensities& d,
                                    const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const TestFunction psi0 = integral_scale_function(c);
  AssumptionSummary s;
  const ScaleQuantities q = integral_scale_quantities(d, psi0);
  s.sigma0 = kraichnan_scale(q);
  s.sigma_ok = assumption2_holds(q, c.beta, c.R0);
  s.radius = localization_radius(s.sigma0, c.beta);
  s.M_velocity = c.M_velocity > 0.0 ? c.M_velocity : 2.0 * gradient_rms(series, false);
  s.M_magnetic = c.M_magnetic > 0.0 ? c.M_magnetic : 2.0 * gradient_rms(series, true);
  const double region = 2.0 * c.R0 + std::cbrt(c.R0 * c.R0);
  const Vec3 center{0.0, 0.0, 0.0};
  const auto samples = draw_samples(series.grid(), series.size(), c.n_samples, c.seed, center, region, s.radius);
  EstimatorOptions opt;
  opt.center = center;
  opt.region_radius = region;
  opt.interpolation = c.interpolation == "spectral" ? Interpolation::Spectral : Interpolation::Trilinear;
  opt.M = s.M_velocity;
  s.coherence = coherence_constant(series, samples, opt);
  opt.M = s.M_magnetic;
  s.smoothness = current_smoothness(series, samples, opt);
  s.localization = localization_check(d.enstrophy_total, center, c.R0, s.radius, c.n_centers);
  s.modulation = modulation_check(series, psi0);

  auto estimator = [](const EstimatorResult& e) {
    return json{{"estimate", e.estimate}, {"vacuous", e.vacuous}, {"drawn", e.drawn}, {"passed", e.passed},
                {"used", e.used}, {"degenerate", e.degenerate}, {"excursions", e.excursions}};
  };
  json j;
  j["sigma0"] = s.sigma0;
  j["beta"] = c.beta;
  j["R0"] = c.R0;
  j["radius"] = s.radius;
  json coh = estimator(s.coherence);
  coh["M"] = s.M_velocity;
  coh["C1"] = c.C1 > 0.0 ? json(c.C1) : json(nullptr);
  const bool coh_ok = s.coherence.vacuous || c.C1 <= 0.0 || s.coherence.estimate <= c.C1;
  coh["holds"] = coh_ok;
  json smo = estimator(s.smoothness);
  smo["M"] = s.M_magnetic;
  const bool smo_ok = s.smoothness.vacuous || s.smoothness.estimate <= 1.0;
  smo["holds"] = smo_ok;
  j["coherence"] = coh;
  j["smoothness"] = smo;
  j["assumption1"] = coh_ok && smo_ok;
  j["assumption2"] = {{"sigma0", s.sigma0}, {"beta_R0", c.beta * c.R0}, {"holds", s.sigma_ok}};
  json loc = {{"max", s.localization.max_value},
              {"argmax", {s.localization.argmax[0], s.localization.argmax[1], s.localization.argmax[2]}},
              {"radius", s.radius},
              {"n_centers", s.localization.centers.size()}};
  if (c.C2 > 0.0) {
    loc["C2"] = c.C2;
    loc["threshold"] = 1.0 / c.C2;
    loc["holds"] = s.localization.max_value < 1.0 / c.C2;
  } else {
    loc["C2"] = nullptr;
    loc["threshold"] = nullptr;
    loc["holds"] = nullptr;
  }
  j["assumption3"] = loc;
  j["assumption4"] = {{"ratio_omega", s.modulation.ratio_omega},
                      {"ratio_current", s.modulation.ratio_current},
                      {"holds", s.modulation.holds()}};
  write_file(out_dir / "assumptions.json", j.dump(2) + "\n");
  return s;
}

std::string render_report(const std::string& flux_json, const std::string& assumptions_json) {
  const json f = json::parse(flux_json);
  const json a = json::parse(assumptions_json);
  auto num = [](const json& v) { return v.is_null() ? std::string("n/a") : fmt(v.get<double>()); };
  auto verdict = [](bool ok) { return ok ? "HOLDS" : "FAILS"; };
  std::ostringstream o;
  o << "Enstrophy flux concentration report\n";
  o << "===================================\n\n";
  o << "grid n = " << f.at("n").get<int>() << ", L = " << num(f.at("L")) << ", T = " << num(f.at("T"))
    << ", nu = " << num(f.at("nu")) << ", eta_m = " << num(f.at("eta_m")) << ", seed = " << f.at("seed").get<std::uint64_t>()
    << "\n";
  const json& q = f.at("quantities");
  o << "integral scale R0 = " << num(f.at("R0")) << ", beta = " << num(f.at("beta")) << "\n";
  o << "e0 = " << num(q.at("e0")) << "  E0 = " << num(q.at("E0")) << "  P0 = " << num(q.at("P0")) << "\n";
  o << "sigma0 = " << num(q.at("sigma0")) << "  (beta R0 = " << fmt(f.at("beta").get<double>() * f.at("R0").get<double>())
    << ")\n\n";

  o << "Assumptions\n";
  const json& coh = a.at("coherence");
  const json& smo = a.at("smoothness");
  o << "  1. coherence: estimate " << num(coh.at("estimate")) << " from " << coh.at("used").get<std::size_t>() << " of "
    << coh.at("drawn").get<std::size_t>() << " samples (M = " << num(coh.at("M")) << ", C1 "
    << (coh.at("C1").is_null() ? std::string("unset") : num(coh.at("C1"))) << ")"
    << (coh.at("vacuous").get<bool>() ? " VACUOUS" : "") << "\n";
  o << "     current smoothness: max ratio " << num(smo.at("estimate")) << " from " << smo.at("used").get<std::size_t>()
    << " samples (M = " << num(smo.at("M")) << ")" << (smo.at("vacuous").get<bool>() ? " VACUOUS" : "") << "\n";
  const bool a1 = a.at("assumption1").get<bool>();
  o << "     -> " << verdict(a1) << "\n";
  const bool a2 = a.at("assumption2").at("holds").get<bool>();
  o << "  2. sigma0 < beta R0: " << num(a.at("assumption2").at("sigma0")) << " vs " << num(a.at("assumption2").at("beta_R0"))
    << " -> " << verdict(a2) << "\n";
  const json& l = a.at("assumption3");
  o << "  3. localization: max ball integral " << num(l.at("max")) << " (radius " << num(l.at("radius")) << ", "
    << l.at("n_centers").get<std::size_t>() << " centers)";
  const bool a3_known = !l.at("holds").is_null();
  const bool a3 = a3_known && l.at("holds").get<bool>();
  if (a3_known)
    o << ", threshold 1/C2 = " << num(l.at("threshold")) << " -> " << verdict(a3) << "\n";
  else
    o << " -> NOT EVALUATED (C2 unset)\n";
  const json& m = a.at("assumption4");
  const bool a4 = m.at("holds").get<bool>();
  o << "  4. modulation: ratios " << num(m.at("ratio_omega")) << " (omega), " << num(m.at("ratio_current"))
    << " (j) -> " << verdict(a4) << "\n\n";

  o << "Per-scale flux (<Phi>_R / P0)\n";
  o << "  R            ens  members  ratio          sign\n";
  for (const json& r : f.at("rows")) {
    char line[160];
    const double ratio = r.at("ratio").is_null() ? std::nan("") : r.at("ratio").get<double>();
    std::snprintf(line, sizeof line, "  %-12.6g %3d  %7zu  %-13.6g  %s\n", r.at("R").get<double>(), r.at("ensemble").get<int>(),
                  r.at("n_members").get<std::size_t>(), ratio, ratio > 0.0 ? "+" : (ratio < 0.0 ? "-" : "0"));
    o << line;
  }
  const bool positive = f.at("all_positive").get<bool>();
  const bool finite = f.at("all_finite").get<bool>();
  o << "  ratios in [" << num(f.at("min_ratio")) << ", " << num(f.at("max_ratio")) << "], empirical K* = "
    << num(f.at("K_star")) << "\n";
  o << "  max transport/convection mismatch: " << num(f.at("max_transport_mismatch")) << "\n\n";
  const json& loc = f.at("locality");
  o << "Locality: " << loc.at("contained").get<std::size_t>() << " of " << loc.at("pairs").get<std::size_t>()
    << " scale pairs inside [K*^-2 (r/R)^3, K*^2 (r/R)^3]\n\n";

  const bool hyp = a1 && a2 && a3 && a4;
  const bool concl = positive && finite;
  if (hyp && concl) {
    o << "THEOREM HYPOTHESES MET / CONCLUSION OBSERVED\n";
  } else {
    if (hyp) {
      o << "THEOREM HYPOTHESES: MET\n";
    } else {
      o << "THEOREM HYPOTHESES: NOT MET\n";
      if (!a1) o << "  assumption 1 fails\n";
      if (!a2) o << "  assumption 2 fails: sigma0 >= beta R0\n";
      if (!a3_known) o << "  assumption 3 not evaluated: C2 unset\n";
      else if (!a3) o << "  assumption 3 fails: ball integral exceeds 1/C2\n";
      if (!a4) o << "  assumption 4 fails: final enstrophy below half its peak\n";
    }
    if (concl)
      o << "CONCLUSION: OBSERVED (all ratios positive, K* = " << num(f.at("K_star")) << ")\n";
    else if (!finite)
      o << "CONCLUSION: NOT OBSERVED (non-finite ratios)\n";
    else
      o << "CONCLUSION: NOT OBSERVED (non-positive ratios present, min " << num(f.at("min_ratio")) << ")\n";
  }
  return o.str();
}

std::string write_report(const fs::path& out_dir) {
  std::string flux, assumptions;
  try {
    flux = read_file(out_dir / "flux_report.json");
    assumptions = read_file(out_dir / "assumptions.json");
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  const std::string text = render_report(flux, assumptions);
  write_file(out_dir / "report.txt", text);
  return text;
}

}  // namespace ensflux
