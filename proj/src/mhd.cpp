#include "ensflux/mhd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ensflux/error.hpp"
#include "ensflux/kernels.hpp"
#include "ensflux/spectral.hpp"

namespace ensflux {

void SolverConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("SolverConfig: " + m); };
  if (!(nu >= 0.0) || !(eta_m >= 0.0)) fail("nu and eta_m must be non-negative");
  if (!(dt > 0.0)) fail("dt must be positive");
  if (cfl < 0.0 || cfl > 0.5) fail("cfl must lie in [0, 0.5]");
  if (!(T > 0.0)) fail("T must be positive");
  if (n_snapshots < 2) fail("n_snapshots must be at least 2");
  if (!(magnitude_cap > 0.0)) fail("magnitude_cap must be positive");
}

SnapshotSeries::SnapshotSeries(std::vector<MHDState> states) : states_(std::move(states)) {
  if (states_.empty()) throw std::invalid_argument("SnapshotSeries: no states");
  for (std::size_t k = 0; k < states_.size(); ++k) {
    if (!(states_[k].grid() == states_.front().grid())) throw std::invalid_argument("SnapshotSeries: grid mismatch");
    if (k > 0 && !(states_[k].t > states_[k - 1].t))
      throw std::invalid_argument("SnapshotSeries: times must be strictly increasing");
    times_.push_back(states_[k].t);
    vorticity_.push_back(curl(states_[k].u));
    current_.push_back(curl(states_[k].b));
  }
}

namespace {

constexpr Complex kI{0.0, 1.0};

using Spec3 = std::array<SpectralBuffer, 3>;

Spec3 make_spec3(const Spectral& sp) {
  return {SpectralBuffer(sp.spectral_size()), SpectralBuffer(sp.spectral_size()), SpectralBuffer(sp.spectral_size())};
}

// Pseudo-spectral right-hand side and Lawson-RK4 stepping in Fourier space.
class Integrator {
 public:
  Integrator(const GridSpec& grid, const SolverConfig& cfg)
      : sp_(Spectral::for_grid(grid)), cfg_(cfg), n_(grid.size()) {
    for (auto* v : {&u_, &w_, &b_, &j_, &p1_, &p2_})
      for (auto& c : *v) c.assign(n_, 0.0);
  }

  void load(const MHDState& s, Spec3& uh, Spec3& bh) const {
    uh = make_spec3(*sp_);
    bh = make_spec3(*sp_);
    for (int c = 0; c < 3; ++c) {
      sp_->forward(s.u[c].values(), uh[c]);
      sp_->forward(s.b[c].values(), bh[c]);
    }
  }

  MHDState unload(const Spec3& uh, const Spec3& bh, double t) const {
    MHDState s{t, VectorField3(sp_->grid()), VectorField3(sp_->grid())};
    for (int c = 0; c < 3; ++c) {
      sp_->inverse(uh[c], s.u[c].values());
      sp_->inverse(bh[c], s.b[c].values());
    }
    return s;
  }

  // One Lawson RK4 step of size dt. `t` is only used for error reporting.
  void advance(Spec3& uh, Spec3& bh, double dt, double t) {
    const auto k2 = sp_->k_squared();
    const std::size_t m = sp_->spectral_size();
    if (eh_u_.size() != m || dt != cached_dt_) {
      eh_u_.resize(m); e_u_.resize(m); eh_b_.resize(m); e_b_.resize(m);
      for (std::size_t id = 0; id < m; ++id) {
        eh_u_[id] = std::exp(-cfg_.nu * k2[id] * 0.5 * dt);
        e_u_[id] = eh_u_[id] * eh_u_[id];
        eh_b_[id] = std::exp(-cfg_.eta_m * k2[id] * 0.5 * dt);
        e_b_[id] = eh_b_[id] * eh_b_[id];
      }
      cached_dt_ = dt;
    }

    if (au_[0].size() != m)
      for (auto* v : {&au_, &ab_, &su_, &sb_, &bu_, &bb_, &cu_, &cb_, &du_, &db_, &tmp_}) *v = make_spec3(*sp_);
    Spec3 &au = au_, &ab = ab_, &su = su_, &sb = sb_, &bu = bu_, &bb = bb_, &cu = cu_, &cb = cb_, &du = du_, &db = db_;
    rhs(uh, bh, au, ab, true, t);

    for (int c = 0; c < 3; ++c)
      for (std::size_t id = 0; id < m; ++id) {
        su[c][id] = eh_u_[id] * (uh[c][id] + 0.5 * dt * au[c][id]);
        sb[c][id] = eh_b_[id] * (bh[c][id] + 0.5 * dt * ab[c][id]);
      }
    rhs(su, sb, bu, bb, false, t);

    for (int c = 0; c < 3; ++c)
      for (std::size_t id = 0; id < m; ++id) {
        su[c][id] = eh_u_[id] * uh[c][id] + 0.5 * dt * bu[c][id];
        sb[c][id] = eh_b_[id] * bh[c][id] + 0.5 * dt * bb[c][id];
      }
    rhs(su, sb, cu, cb, false, t);

    for (int c = 0; c < 3; ++c)
      for (std::size_t id = 0; id < m; ++id) {
        su[c][id] = e_u_[id] * uh[c][id] + dt * eh_u_[id] * cu[c][id];
        sb[c][id] = e_b_[id] * bh[c][id] + dt * eh_b_[id] * cb[c][id];
      }
    rhs(su, sb, du, db, false, t);

    const double sixth = dt / 6.0;
    for (int c = 0; c < 3; ++c)
      for (std::size_t id = 0; id < m; ++id) {
        uh[c][id] = e_u_[id] * uh[c][id] +
                    sixth * (e_u_[id] * au[c][id] + 2.0 * eh_u_[id] * (bu[c][id] + cu[c][id]) + du[c][id]);
        bh[c][id] = e_b_[id] * bh[c][id] +
                    sixth * (e_b_[id] * ab[c][id] + 2.0 * eh_b_[id] * (bb[c][id] + cb[c][id]) + db[c][id]);
      }
    project(uh);
    project(bh);
    for (int c = 0; c < 3; ++c)
      for (std::size_t id = 0; id < m; ++id)
        if (!std::isfinite(uh[c][id].real()) || !std::isfinite(uh[c][id].imag()) || !std::isfinite(bh[c][id].real()) ||
            !std::isfinite(bh[c][id].imag()))
          throw BlowUp(t + dt, "non-finite spectral coefficient at t = " + std::to_string(t + dt));
  }

  // Max over components of max |u_c| plus the same for b, from the last
  // physical evaluation at the start of a step.
  double last_speed() const { return last_speed_; }

  double speed_of(const Spec3& uh, const Spec3& bh) {
    double su = 0.0, sb = 0.0;
    for (int c = 0; c < 3; ++c) {
      sp_->inverse(uh[c], u_[c]);
      sp_->inverse(bh[c], b_[c]);
      su = std::max(su, kernels::omp::max_abs(u_[c]));
      sb = std::max(sb, kernels::omp::max_abs(b_[c]));
    }
    return su + sb;
  }

  void project(Spec3& f) const {
    const int n = sp_->grid().n, h = sp_->half();
    const auto kx = sp_->kx(), ky = sp_->ky(), kz = sp_->kz();
#pragma omp parallel for schedule(static)
    for (int iz = 0; iz < n; ++iz)
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < h; ++ix) {
          const std::size_t id = sp_->mode_index(ix, iy, iz);
          const double a = kx[ix], b = ky[iy], c = kz[iz];
          const double kk = a * a + b * b + c * c;
          if (kk == 0.0) continue;
          const Complex d = (a * f[0][id] + b * f[1][id] + c * f[2][id]) / kk;
          f[0][id] -= a * d;
          f[1][id] -= b * d;
          f[2][id] -= c * d;
        }
  }

 private:
  void curl_spec(const Spec3& f, Spec3& out) const {
    const int n = sp_->grid().n, h = sp_->half();
    const auto kx = sp_->kx(), ky = sp_->ky(), kz = sp_->kz();
#pragma omp parallel for schedule(static)
    for (int iz = 0; iz < n; ++iz)
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < h; ++ix) {
          const std::size_t id = sp_->mode_index(ix, iy, iz);
          out[0][id] = kI * (ky[iy] * f[2][id] - kz[iz] * f[1][id]);
          out[1][id] = kI * (kz[iz] * f[0][id] - kx[ix] * f[2][id]);
          out[2][id] = kI * (kx[ix] * f[1][id] - ky[iy] * f[0][id]);
        }
  }

  // nu_rhs = P[u x w + j x b], nb_rhs = curl(u x b); both dealiased.
  void rhs(const Spec3& uh, const Spec3& bh, Spec3& nu_rhs, Spec3& nb_rhs, bool check, double t) {
    Spec3& tmp = tmp_;
    curl_spec(uh, tmp);
    for (int c = 0; c < 3; ++c) sp_->inverse(tmp[c], w_[c]);
    curl_spec(bh, tmp);
    for (int c = 0; c < 3; ++c) {
      sp_->inverse(tmp[c], j_[c]);
      sp_->inverse(uh[c], u_[c]);
      sp_->inverse(bh[c], b_[c]);
    }
    if (check) {
      double su = 0.0, sb = 0.0;
      bool finite = true;
      for (int c = 0; c < 3; ++c) {
        su = std::max(su, kernels::omp::max_abs(u_[c]));
        sb = std::max(sb, kernels::omp::max_abs(b_[c]));
        finite = finite && std::isfinite(kernels::omp::sum(u_[c])) && std::isfinite(kernels::omp::sum(b_[c]));
      }
      last_speed_ = su + sb;
      if (!finite || !(std::max(su, sb) <= cfg_.magnitude_cap)) {
        std::ostringstream os;
        os << "field magnitude " << std::max(su, sb) << " exceeds cap " << cfg_.magnitude_cap << " at t = " << t;
        throw BlowUp(t, os.str());
      }
    }
    auto cv = [](const AlignedVector<double>& a) { return std::span<const double>(a); };
    auto mv = [](AlignedVector<double>& a) { return std::span<double>(a); };
    kernels::omp::mhd_products({cv(u_[0]), cv(u_[1]), cv(u_[2])}, {cv(w_[0]), cv(w_[1]), cv(w_[2])},
                               {cv(b_[0]), cv(b_[1]), cv(b_[2])}, {cv(j_[0]), cv(j_[1]), cv(j_[2])},
                               {mv(p1_[0]), mv(p1_[1]), mv(p1_[2])}, {mv(p2_[0]), mv(p2_[1]), mv(p2_[2])});
    for (int c = 0; c < 3; ++c) {
      sp_->forward(p1_[c], nu_rhs[c]);
      sp_->forward(p2_[c], tmp[c]);
    }
    if (cfg_.dealias) {
      const auto mask = sp_->dealias_mask();
      for (int c = 0; c < 3; ++c)
        for (std::size_t id = 0; id < mask.size(); ++id)
          if (!mask[id]) {
            nu_rhs[c][id] = 0.0;
            tmp[c][id] = 0.0;
          }
    }
    project(nu_rhs);
    curl_spec(tmp, nb_rhs);
  }

  std::shared_ptr<const Spectral> sp_;
  SolverConfig cfg_;
  std::size_t n_;
  std::array<RealBuffer, 3> u_, w_, b_, j_, p1_, p2_;
  std::vector<double> eh_u_, e_u_, eh_b_, e_b_;
  double cached_dt_ = -1.0;
  double last_speed_ = 0.0;
  Spec3 au_, ab_, su_, sb_, bu_, bb_, cu_, cb_, du_, db_, tmp_;
};

}  // namespace

MHDState step(const MHDState& state, const SolverConfig& cfg, double dt) {
  Integrator integ(state.grid(), cfg);
  Spec3 uh, bh;
  integ.load(state, uh, bh);
  integ.advance(uh, bh, dt, state.t);
  return integ.unload(uh, bh, state.t + dt);
}

MHDState step(const MHDState& state, const SolverConfig& cfg) {
  cfg.validate();
  double dt = cfg.dt;
  if (cfg.cfl > 0.0) {
    const double speed = state.u.max_abs() + state.b.max_abs();
    if (speed > 0.0) dt = std::min(dt, cfg.cfl * state.grid().dx() / speed);
  }
  return step(state, cfg, dt);
}

void run(const MHDState& init, const SolverConfig& cfg, const std::function<void(const MHDState&)>& observer) {
  cfg.validate();
  Integrator integ(init.grid(), cfg);
  Spec3 uh, bh;
  integ.load(init, uh, bh);
  integ.project(uh);
  integ.project(bh);

  MHDState first = integ.unload(uh, bh, 0.0);
  observer(first);
  const int intervals = cfg.n_snapshots - 1;
  const double dx = init.grid().dx();
  double t = 0.0;
  for (int s = 1; s <= intervals; ++s) {
    const double t_end = (s == intervals) ? cfg.T : cfg.T * s / intervals;
    const double span = t_end - t;
    double dt_max = cfg.dt;
    if (cfg.cfl > 0.0) {
      const double speed = integ.speed_of(uh, bh);
      if (speed > 0.0) dt_max = std::min(dt_max, cfg.cfl * dx / speed);
    }
    const long steps = std::max(1L, static_cast<long>(std::ceil(span / dt_max - 1e-9)));
    const double dt = span / static_cast<double>(steps);
    for (long i = 0; i < steps; ++i) integ.advance(uh, bh, dt, t + i * dt);
    t = t_end;
    observer(integ.unload(uh, bh, t));
  }
}

SnapshotSeries run(const MHDState& init, const SolverConfig& cfg) {
  std::vector<MHDState> states;
  run(init, cfg, [&](const MHDState& s) { states.push_back(s); });
  return SnapshotSeries(std::move(states));
}

namespace {

// Projects, truncates to the dealiased band and rescales to the given rms.
VectorField3 clean_field(const VectorField3& v, double rms) {
  const GridSpec& g = v.grid();
  const auto sp = Spectral::for_grid(g);
  VectorField3 p = leray_project(v);
  const auto mask = sp->dealias_mask();
  for (int c = 0; c < 3; ++c) {
    auto f = sp->forward(p[c].values());
    for (std::size_t id = 0; id < f.size(); ++id)
      if (!mask[id]) f[id] = 0.0;
    sp->inverse(f, p[c].values());
  }
  const double volume = g.length * g.length * g.length;
  const double current = std::sqrt(integrate_squared(p) / volume);
  if (current > 0.0) p *= rms / current;
  else p *= 0.0;
  return p;
}

VectorField3 random_large_scale(const GridSpec& g, int band, std::mt19937_64& rng) {
  const auto sp = Spectral::for_grid(g);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorField3 out(g);
  for (int c = 0; c < 3; ++c) {
    SpectralBuffer f(sp->spectral_size(), Complex{0.0, 0.0});
    for (int mz = -band; mz <= band; ++mz)
      for (int my = -band; my <= band; ++my)
        for (int mx = 0; mx <= band; ++mx) {
          const bool upper = mx > 0 || my > 0 || (my == 0 && mz > 0);
          if (!upper) continue;
          const double kk = double(mx) * mx + double(my) * my + double(mz) * mz;
          const double amp = 1.0 / kk;
          const Complex coef{amp * normal(rng), amp * normal(rng)};
          f[sp->mode_index(mx, g.wrap(my), g.wrap(mz))] = coef;
          if (mx == 0) f[sp->mode_index(0, g.wrap(-my), g.wrap(-mz))] = std::conj(coef);
        }
    sp->inverse(f, out[c].values());
  }
  return out;
}

}  // namespace

MHDState taylor_green_mhd_init(const GridSpec& grid, double amplitude_u, double amplitude_b, std::uint64_t seed,
                               const TaylorGreenOptions& opts) {
  if (opts.wavenumber < 1 || 3 * opts.wavenumber > (grid.n - 1))
    throw std::invalid_argument("taylor_green_mhd_init: wavenumber outside the dealiased band");
  const double k = 2.0 * std::numbers::pi * opts.wavenumber / grid.length;
  VectorField3 u = VectorField3::from_function(grid, [k](double x, double y, double z) -> Vec3 {
    return {std::sin(k * x) * std::cos(k * y) * std::cos(k * z), -std::cos(k * x) * std::sin(k * y) * std::cos(k * z), 0.0};
  });
  VectorField3 b = VectorField3::from_function(grid, [k](double x, double y, double z) -> Vec3 {
    return {std::cos(k * x) * std::sin(k * y) * std::sin(k * z), std::sin(k * x) * std::cos(k * y) * std::sin(k * z),
            -2.0 * std::sin(k * x) * std::sin(k * y) * std::cos(k * z)};
  });
  if (opts.perturbation > 0.0) {
    std::mt19937_64 rng(seed);
    const double volume = grid.length * grid.length * grid.length;
    for (VectorField3* f : {&u, &b}) {
      VectorField3 p = leray_project(random_large_scale(grid, opts.perturbation_band, rng));
      const double rp = std::sqrt(integrate_squared(p) / volume);
      const double rf = std::sqrt(integrate_squared(*f) / volume);
      if (rp > 0.0) {
        p *= opts.perturbation * rf / rp;
        *f += p;
      }
    }
  }
  return MHDState{0.0, clean_field(u, amplitude_u), clean_field(b, amplitude_b)};
}

VectorField3 abc_field(const GridSpec& grid, double amplitude, int wavenumber) {
  const double k = 2.0 * std::numbers::pi * wavenumber / grid.length;
  return VectorField3::from_function(grid, [=](double x, double y, double z) -> Vec3 {
    return {amplitude * (std::sin(k * z) + std::cos(k * y)), amplitude * (std::sin(k * x) + std::cos(k * z)),
            amplitude * (std::sin(k * y) + std::cos(k * x))};
  });
}

double total_energy(const MHDState& s) { return 0.5 * (integrate_squared(s.u) + integrate_squared(s.b)); }

double dissipation_rate(const VectorField3& vorticity, const VectorField3& current, const SolverConfig& cfg) {
  return cfg.nu * integrate_squared(vorticity) + cfg.eta_m * integrate_squared(current);
}

double cross_helicity(const MHDState& s) {
  double h = 0.0;
  for (int c = 0; c < 3; ++c) h += integrate_product(s.u[c], s.b[c]);
  return h;
}

double energy_balance_residual(const SnapshotSeries& series, const SolverConfig& cfg) {
  const std::size_t n = series.size();
  const std::vector<double>& t = series.times();
  std::vector<double> E(n), D(n);
  for (std::size_t k = 0; k < n; ++k) {
    E[k] = total_energy(series.state(k));
    D[k] = dissipation_rate(series.vorticity(k), series.current(k), cfg);
  }
  // Integral of the dissipation rate over [t_k, t_k+1] from the cubic through
  // four neighbouring samples (linear when fewer exist); two-point Gauss is
  // exact for the cubic.
  auto interval_integral = [&](std::size_t k) {
    const double a = t[k], b = t[k + 1];
    if (n < 4) return 0.5 * (D[k] + D[k + 1]) * (b - a);
    const std::size_t s = std::min(k > 0 ? k - 1 : 0, n - 4);
    auto cubic = [&](double x) {
      double v = 0.0;
      for (std::size_t i = s; i < s + 4; ++i) {
        double l = 1.0;
        for (std::size_t m = s; m < s + 4; ++m)
          if (m != i) l *= (x - t[m]) / (t[i] - t[m]);
        v += l * D[i];
      }
      return v;
    };
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a), g = half / std::sqrt(3.0);
    return half * (cubic(mid - g) + cubic(mid + g));
  };
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double dt = t[k + 1] - t[k];
    if (E[k] > 0.0) worst = std::max(worst, std::abs(E[k + 1] - E[k] + interval_integral(k)) / (E[k] * dt));
  }
  return worst;
}

}  // namespace ensflux
