#include "ensflux/flux.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ensflux/error.hpp"
#include "ensflux/kernels.hpp"
#include "ensflux/spectral.hpp"

namespace ensflux {

namespace {

kernels::CVec cvec(const VectorField3& v) { return {v[0].values(), v[1].values(), v[2].values()}; }

std::array<kernels::CVec, 3> ctensor(const TensorField3& t) { return {cvec(t.d[0]), cvec(t.d[1]), cvec(t.d[2])}; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double rel(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s > 0.0 ? std::abs(a - b) / s : 0.0;
}

double equation_residual(const EquationTerms& t, double extra) {
  const double big = std::max({std::abs(t.flux), std::abs(t.final_time), std::abs(t.dissipation), std::abs(t.H),
                               std::abs(t.N1), std::abs(t.L), std::abs(t.N2), std::abs(extra)});
  return big > 0.0 ? std::abs(t.flux - t.rhs() - extra) / big : 0.0;
}

TermBreakdown decompose(const FluxDensities& d, const PatchJet& p) {
  auto I = [&](const ScalarField& f) { return patch_integral(f, p.box, p.value); };
  auto IL = [&](const ScalarField& f) { return patch_integral(f, p.box, p.laplacian); };
  TermBreakdown t;
  t.omega.flux = I(d.flux_omega);
  t.omega.final_time = I(d.final_omega);
  t.omega.dissipation = d.nu * I(d.grad_sq_omega);
  t.omega.H = -(I(d.ens_rate_omega) + d.nu * IL(d.ens_omega));
  t.omega.N1 = I(d.stretch_omega);
  t.omega.L = I(d.lorentz_omega);
  t.omega.N2 = I(d.tilt_omega);
  t.current.flux = I(d.flux_current);
  t.current.final_time = I(d.final_current);
  t.current.dissipation = d.eta_m * I(d.grad_sq_current);
  t.current.H = -(I(d.ens_rate_current) + d.eta_m * IL(d.ens_current));
  t.current.N1 = I(d.stretch_current);
  t.current.L = I(d.lorentz_current);
  t.current.N2 = I(d.tilt_current);
  t.X = I(d.cross_current);
  t.residual_omega = equation_residual(t.omega, 0.0);
  t.residual_current = equation_residual(t.current, t.X);
  t.identity_residual = std::max(t.residual_omega, t.residual_current);
  return t;
}

double transport_integral(const FluxDensities& d, const PatchJet& p) {
  return patch_integral(d.transport[0], p.box, p.gx) + patch_integral(d.transport[1], p.box, p.gy) +
         patch_integral(d.transport[2], p.box, p.gz);
}

}  // namespace

std::vector<double> trapezoid_weights(const std::vector<double>& times) {
  const std::size_t n = times.size();
  std::vector<double> w(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double h = 0.5 * (times[k + 1] - times[k]);
    w[k] += h;
    w[k + 1] += h;
  }
  return w;
}

ScalarField FluxDensities::flux() const {
  ScalarField f = flux_omega;
  f += flux_current;
  return f;
}

ScalarField FluxDensities::palinstrophy() const {
  ScalarField p = final_omega;
  p += final_current;
  p += grad_sq_omega;
  p += grad_sq_current;
  return p;
}

FluxDensities compute_densities(const SnapshotSeries& series, const TemporalCutoff& eta, double nu, double eta_m,
                                double rho) {
  if (series.size() < kMinSnapshots)
    throw TooFewSnapshots("need at least " + std::to_string(kMinSnapshots) + " snapshots, got " +
                          std::to_string(series.size()));
  const GridSpec& grid = series.grid();
  FluxDensities d;
  d.grid = grid;
  d.T = series.final_time();
  d.nu = nu;
  d.eta_m = eta_m;
  d.rho = rho;
  for (ScalarField* f : {&d.flux_omega, &d.flux_current, &d.flux_unweighted, &d.final_omega, &d.final_current,
                         &d.grad_sq_omega, &d.grad_sq_current, &d.ens_rate_omega, &d.ens_rate_current, &d.ens_omega,
                         &d.ens_current, &d.stretch_omega, &d.lorentz_omega, &d.tilt_omega, &d.stretch_current,
                         &d.lorentz_current, &d.tilt_current, &d.cross_current, &d.energy_weighted,
                         &d.enstrophy_weighted, &d.enstrophy_total})
    *f = ScalarField(grid);
  d.transport = VectorField3(grid);

  const std::vector<double> w = trapezoid_weights(series.times());
  const std::size_t last = series.size() - 1;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const MHDState& s = series.state(k);
    const VectorField3& om = series.vorticity(k);
    const VectorField3& cj = series.current(k);
    const TensorField3 gw = gradient(om), gj = gradient(cj), gu = gradient(s.u), gb = gradient(s.b);
    const double et = eta(s.t), wk = w[k], we = wk * et;
    const double w_rate = wk * eta.derivative(s.t);
    const double w_energy = wk * std::pow(et, 4.0 * rho - 3.0);
    const double w_ens = wk * std::pow(et, 2.0 * rho - 1.0);

    const auto u = cvec(s.u), b = cvec(s.b), wv = cvec(om), jv = cvec(cj);
    const auto Gw = ctensor(gw), Gj = ctensor(gj), Gu = ctensor(gu), Gb = ctensor(gb);
    kernels::omp::accumulate_directional(-we, u, Gw, wv, d.flux_omega.values());
    kernels::omp::accumulate_directional(-we, u, Gj, jv, d.flux_current.values());
    kernels::omp::accumulate_directional(-wk, u, Gw, wv, d.flux_unweighted.values());
    kernels::omp::accumulate_directional(-wk, u, Gj, jv, d.flux_unweighted.values());
    kernels::omp::accumulate_directional(-we, wv, Gu, wv, d.stretch_omega.values());
    kernels::omp::accumulate_directional(-we, b, Gj, wv, d.lorentz_omega.values());
    kernels::omp::accumulate_directional(we, jv, Gb, wv, d.tilt_omega.values());
    kernels::omp::accumulate_directional(we, wv, Gb, jv, d.stretch_current.values());
    kernels::omp::accumulate_directional(-we, b, Gw, jv, d.lorentz_current.values());
    kernels::omp::accumulate_directional(-we, jv, Gu, jv, d.tilt_current.values());

    const bool final = k == last;
    const std::ptrdiff_t N = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < N; ++i) {
      const double w2 = om[0][i] * om[0][i] + om[1][i] * om[1][i] + om[2][i] * om[2][i];
      const double j2 = cj[0][i] * cj[0][i] + cj[1][i] * cj[1][i] + cj[2][i] * cj[2][i];
      const double u2 = s.u[0][i] * s.u[0][i] + s.u[1][i] * s.u[1][i] + s.u[2][i] * s.u[2][i];
      const double b2 = s.b[0][i] * s.b[0][i] + s.b[1][i] * s.b[1][i] + s.b[2][i] * s.b[2][i];
      double gw2 = 0.0, gj2 = 0.0;
      for (int c = 0; c < 3; ++c)
        for (int a = 0; a < 3; ++a) {
          gw2 += gw.d[c][a][i] * gw.d[c][a][i];
          gj2 += gj.d[c][a][i] * gj.d[c][a][i];
        }
      double x = 0.0;
      for (int l = 0; l < 3; ++l) {
        const Vec3 du{gu.d[l][0][i], gu.d[l][1][i], gu.d[l][2][i]};
        const Vec3 db{gb.d[l][0][i], gb.d[l][1][i], gb.d[l][2][i]};
        const Vec3 c = cross(du, db);
        x += c[0] * cj[0][i] + c[1] * cj[1][i] + c[2] * cj[2][i];
      }
      const double half_ens = 0.5 * (w2 + j2);
      for (int a = 0; a < 3; ++a) d.transport[a][i] += we * half_ens * s.u[a][i];
      d.grad_sq_omega[i] += we * gw2;
      d.grad_sq_current[i] += we * gj2;
      d.ens_rate_omega[i] += w_rate * 0.5 * w2;
      d.ens_rate_current[i] += w_rate * 0.5 * j2;
      d.ens_omega[i] += we * 0.5 * w2;
      d.ens_current[i] += we * 0.5 * j2;
      d.cross_current[i] += we * 2.0 * x;
      d.energy_weighted[i] += w_energy * 0.5 * (u2 + b2);
      d.enstrophy_weighted[i] += w_ens * (w2 + j2);
      d.enstrophy_total[i] += wk * (w2 + j2);
      if (final) {
        d.final_omega[i] = 0.5 * w2;
        d.final_current[i] = 0.5 * j2;
      }
    }
  }
  return d;
}

ScalarField flux_density(const SnapshotSeries& series, const TemporalCutoff& eta) {
  if (series.size() < kMinSnapshots)
    throw TooFewSnapshots("need at least " + std::to_string(kMinSnapshots) + " snapshots, got " +
                          std::to_string(series.size()));
  ScalarField phi(series.grid());
  const std::vector<double> w = trapezoid_weights(series.times());
  for (std::size_t k = 0; k < series.size(); ++k) {
    const MHDState& s = series.state(k);
    const double we = w[k] * eta(s.t);
    if (we == 0.0) continue;
    const TensorField3 gw = gradient(series.vorticity(k)), gj = gradient(series.current(k));
    kernels::omp::accumulate_directional(-we, cvec(s.u), ctensor(gw), cvec(series.vorticity(k)), phi.values());
    kernels::omp::accumulate_directional(-we, cvec(s.u), ctensor(gj), cvec(series.current(k)), phi.values());
  }
  return phi;
}

double surface_flux(const FluxDensities& d, const TestFunction& tf) { return transport_integral(d, tf.evaluate_jet(d.grid)); }

double surface_flux(const SnapshotSeries& series, const TestFunction& tf, const TemporalCutoff& eta) {
  VectorField3 V(series.grid());
  const std::vector<double> w = trapezoid_weights(series.times());
  for (std::size_t k = 0; k < series.size(); ++k) {
    const MHDState& s = series.state(k);
    const double we = w[k] * eta(s.t);
    const VectorField3& om = series.vorticity(k);
    const VectorField3& cj = series.current(k);
    for (std::size_t i = 0; i < series.grid().size(); ++i) {
      const double e = 0.5 * (dot(om.at(i), om.at(i)) + dot(cj.at(i), cj.at(i)));
      for (int a = 0; a < 3; ++a) V[a][i] += we * e * s.u[a][i];
    }
  }
  const PatchJet p = tf.evaluate_jet(series.grid());
  return patch_integral(V[0], p.box, p.gx) + patch_integral(V[1], p.box, p.gy) + patch_integral(V[2], p.box, p.gz);
}

double convection_flux(const FluxDensities& d, const TestFunction& tf) {
  const Patch p = tf.evaluate(d.grid);
  return patch_integral(d.flux_omega, p.box, p.values) + patch_integral(d.flux_current, p.box, p.values);
}

TermBreakdown term_decomposition(const FluxDensities& d, const TestFunction& tf) { return decompose(d, tf.evaluate_jet(d.grid)); }

TermBreakdown term_decomposition(const FluxDensities& d, const EnsembleQuadrature& q, std::size_t member) {
  return decompose(d, q.member(member));
}

ScaleQuantities integral_scale_quantities(const FluxDensities& d, const TestFunction& psi0) {
  ScaleQuantities q;
  q.e0 = large_scale_mean_power(d.energy_weighted, psi0, 4.0 * d.rho - 3.0) / d.T;
  q.E0 = large_scale_mean_power(d.enstrophy_weighted, psi0, 2.0 * d.rho - 1.0) / d.T;
  q.P0 = large_scale_mean(d.palinstrophy(), psi0) / d.T;
  q.sigma0 = q.P0 > 0.0 ? kraichnan_scale(q) : 0.0;
  return q;
}

double kraichnan_scale(const ScaleQuantities& q) {
  if (!(q.P0 > 0.0)) throw DegeneratePalinstrophy("palinstrophy P0 vanishes; the Kraichnan-type scale is undefined");
  return std::max(std::sqrt(q.E0 / q.P0), std::pow(q.e0 / q.P0, 0.25));
}

std::vector<double> theorem_scales(const ScaleQuantities& q, double R0, const GridSpec& grid, const TheoremOptions& opt) {
  const double lower = q.sigma0 / opt.beta;
  if (!opt.scales.empty()) {
    for (double R : opt.scales)
      if (!(R >= lower * (1.0 - 1e-12) && R <= R0 * (1.0 + 1e-12)))
        throw ScaleOutOfRange("scale " + std::to_string(R) + " outside [sigma0/beta, R0] = [" + std::to_string(lower) +
                              ", " + std::to_string(R0) + "]");
    std::vector<double> s = opt.scales;
    std::sort(s.begin(), s.end());
    return s;
  }
  const double lo = std::max(lower, opt.min_points_per_scale * grid.dx());
  if (!(lo < R0))
    throw ScaleOutOfRange("no resolvable scales in [sigma0/beta, R0): lower end " + std::to_string(lo) + " >= R0 = " +
                          std::to_string(R0));
  std::vector<double> s;
  for (int i = 0; i < opt.n_scales; ++i) s.push_back(lo * std::pow(R0 / lo, static_cast<double>(i) / opt.n_scales));
  return s;
}

FluxReport verify_theorem(const FluxDensities& d, const TestFunction& psi0, const TheoremOptions& opt) {
  FluxReport rep;
  rep.quantities = integral_scale_quantities(d, psi0);
  if (!(rep.quantities.P0 > 0.0)) throw DegeneratePalinstrophy("palinstrophy P0 vanishes");
  rep.R0 = psi0.scale();
  rep.beta = opt.beta;
  rep.T = d.T;
  rep.assumption2 = assumption2_holds(rep.quantities, opt.beta, rep.R0);
  const double P0 = rep.quantities.P0;
  const std::vector<double> scales = theorem_scales(rep.quantities, rep.R0, d.grid, opt);
  const ScalarField phi = d.flux(), p = d.palinstrophy();

  for (std::size_t si = 0; si < scales.size(); ++si) {
    const double R = scales[si];
    const bool root = std::abs(R - rep.R0) <= 1e-12 * rep.R0;
    const int n_ens = root ? 1 : opt.n_ensembles;
    for (int ei = 0; ei < n_ens; ++ei) {
      std::optional<std::uint64_t> jitter;
      if (ei > 0) jitter = splitmix64(opt.seed ^ (static_cast<std::uint64_t>(si) << 32 | static_cast<std::uint64_t>(ei)));
      const Ensemble ens = canonical_ensemble(psi0, R, opt.K1, opt.K2, d.grid, jitter, opt.min_points_per_scale);
      const EnsembleValidation val = validate(ens, d.grid);
      const EnsembleQuadrature q(ens, d.grid);
      ScaleRow row;
      row.R = ens.scale;
      row.ensemble = ei;
      row.n_members = q.size();
      row.c0 = ens.c0;
      row.valid = val.ok();
      double phi_sum = 0.0, psi_sum = 0.0, raw_sum = 0.0, p_sum = 0.0, H = 0.0, N = 0.0, L = 0.0, X = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        phi_sum += q.integral(i, phi);
        raw_sum += q.integral(i, d.flux_unweighted);
        psi_sum += transport_integral(d, q.member(i));
        p_sum += q.integral(i, p);
        const TermBreakdown t = decompose(d, q.member(i));
        H += t.omega.H + t.current.H;
        N += t.omega.N1 + t.omega.N2 + t.current.N1 + t.current.N2;
        L += t.omega.L + t.current.L;
        X += t.X;
      }
      const double norm = 1.0 / (static_cast<double>(q.size()) * d.T * std::pow(row.R, 3));
      row.phi_avg = phi_sum * norm;
      row.phi_unweighted_avg = raw_sum * norm;
      row.psi_avg = psi_sum / (static_cast<double>(q.size()) * d.T);
      row.ratio = row.phi_avg / P0;
      row.p_avg = p_sum * norm;
      row.H_avg = H * norm;
      row.N_avg = N * norm;
      row.L_avg = L * norm;
      row.X_avg = X * norm;
      row.transport_mismatch = rel(std::pow(row.R, 3) * row.phi_avg, row.psi_avg);
      row.sandwich_ok = row.p_avg >= P0 / opt.K1 && row.p_avg <= opt.K2 * P0;
      rep.rows.push_back(row);
    }
  }

  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.max_ratio = -std::numeric_limits<double>::infinity();
  rep.all_finite = true;
  for (const ScaleRow& r : rep.rows) {
    rep.min_ratio = std::min(rep.min_ratio, r.ratio);
    rep.max_ratio = std::max(rep.max_ratio, r.ratio);
    rep.all_finite = rep.all_finite && std::isfinite(r.ratio) && std::isfinite(r.psi_avg);
    rep.max_transport_mismatch = std::max(rep.max_transport_mismatch, r.transport_mismatch);
  }
  rep.all_positive = !rep.rows.empty() && rep.min_ratio > 0.0;
  rep.K_star = rep.all_positive ? std::max(rep.max_ratio, 1.0 / rep.min_ratio) : std::numeric_limits<double>::infinity();
  return rep;
}

std::vector<LocalityEntry> locality_ratios(const FluxReport& report) {
  std::vector<LocalityEntry> out;
  const double K2 = report.K_star * report.K_star;
  for (std::size_t a = 0; a < report.rows.size(); ++a)
    for (std::size_t b = 0; b < report.rows.size(); ++b) {
      if (a == b) continue;
      const ScaleRow& rr = report.rows[a];
      const ScaleRow& RR = report.rows[b];
      if (rr.R > RR.R || (rr.R == RR.R && a > b)) continue;
      LocalityEntry e;
      e.row_r = a;
      e.row_R = b;
      e.r = rr.R;
      e.R = RR.R;
      e.ratio = rr.psi_avg / RR.psi_avg;
      e.cube = std::pow(e.r / e.R, 3);
      e.phi_ratio = (std::pow(e.r, 3) * rr.phi_avg) / (std::pow(e.R, 3) * RR.phi_avg);
      e.lower = e.cube / K2;
      e.upper = e.cube * K2;
      const double slack = 2.0 * (rr.transport_mismatch + RR.transport_mismatch) + 1e-12;
      e.contained = std::isfinite(report.K_star) && e.ratio >= e.lower / (1.0 + slack) && e.ratio <= e.upper * (1.0 + slack);
      out.push_back(e);
    }
  return out;
}

}  // namespace ensflux
