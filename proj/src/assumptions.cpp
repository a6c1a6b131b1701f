#include "ensflux/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "ensflux/ensemble.hpp"
#include "ensflux/flux.hpp"
#include "ensflux/spectral.hpp"

namespace ensflux {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform [0, 1) number keyed by (seed, sample, slot).
double uniform(std::uint64_t seed, std::uint64_t sample, std::uint64_t slot) {
  const std::uint64_t h = mix(mix(seed) ^ mix(sample * 0x100000001b3ULL + slot));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

Vec3 in_ball(std::uint64_t seed, std::uint64_t sample, std::uint64_t base, double radius) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = radius * (2.0 * uniform(seed, sample, base + 3 * attempt + a) - 1.0);
    if (norm(p) < radius) return p;
  }
}

double minimal_image(double d, double length) {
  double v = std::fmod(d, length);
  if (v >= 0.5 * length) v -= length;
  if (v < -0.5 * length) v += length;
  return v;
}

double vector_rms(const SnapshotSeries& series, bool magnetic) {
  double s = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k)
    s += integrate_squared(magnetic ? series.current(k) : series.vorticity(k));
  const double vol = std::pow(series.grid().length, 3);
  return std::sqrt(s / (vol * static_cast<double>(series.size())));
}

double gradient_norm(const TensorField3& g, std::size_t id) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int a = 0; a < 3; ++a) s += g.d[c][a][id] * g.d[c][a][id];
  return std::sqrt(s);
}

// Shared sample loop: `ratio(vx, vxy, |y|)` returns the sample value or
// nullopt for a degenerate pair.
template <class Ratio>
EstimatorResult estimate(const SnapshotSeries& series, const std::vector<PairSample>& samples,
                         const EstimatorOptions& opt, bool magnetic, Ratio&& ratio) {
  const GridSpec& grid = series.grid();
  EstimatorResult r;
  r.drawn = samples.size();
  r.values.assign(samples.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::vector<std::size_t>> by_snapshot(series.size());
  for (std::size_t i = 0; i < samples.size(); ++i) by_snapshot.at(samples[i].snapshot).push_back(i);
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (by_snapshot[k].empty()) continue;
    const VectorField3& field = magnetic ? series.current(k) : series.vorticity(k);
    const TensorField3 g = gradient(magnetic ? series.state(k).b : series.state(k).u);
    std::array<std::unique_ptr<FourierInterpolant>, 3> spectral;
    if (opt.interpolation == Interpolation::Spectral)
      for (int c = 0; c < 3; ++c) spectral[c] = std::make_unique<FourierInterpolant>(field[c]);
    for (std::size_t i : by_snapshot[k]) {
      const PairSample& s = samples[i];
      const std::size_t id = grid.index(grid.wrap(s.x[0]), grid.wrap(s.x[1]), grid.wrap(s.x[2]));
      if (!(gradient_norm(g, id) > opt.M)) continue;
      ++r.passed;
      const Vec3 xg{s.x[0] * grid.dx(), s.x[1] * grid.dx(), s.x[2] * grid.dx()};
      const Vec3 p{xg[0] + s.y[0], xg[1] + s.y[1], xg[2] + s.y[2]};
      Vec3 vxy;
      if (opt.interpolation == Interpolation::Spectral)
        for (int c = 0; c < 3; ++c) vxy[c] = (*spectral[c])(p);
      else
        vxy = trilinear(field, p);
      const std::optional<double> v = ratio(field.at(id), vxy, norm(s.y));
      if (!v) {
        ++r.degenerate;
        continue;
      }
      ++r.used;
      r.values[i] = *v;
      r.estimate = std::max(r.estimate, *v);
      Vec3 rel;
      for (int a = 0; a < 3; ++a) rel[a] = minimal_image(p[a] - opt.center[a], grid.length);
      if (norm(rel) >= opt.region_radius) ++r.excursions;
    }
  }
  r.vacuous = r.passed == 0;
  return r;
}

}  // namespace

std::vector<PairSample> draw_samples(const GridSpec& grid, std::size_t n_snapshots, std::size_t n_samples,
                                     std::uint64_t seed, const Vec3& center, double region_radius, double r_max) {
  std::vector<PairSample> out(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    PairSample& s = out[i];
    s.snapshot = std::min(n_snapshots - 1, static_cast<std::size_t>(uniform(seed, i, 0) * n_snapshots));
    const Vec3 x = in_ball(seed, i, 16, region_radius);
    for (int a = 0; a < 3; ++a) s.x[a] = static_cast<int>(std::lround((center[a] + x[a]) / grid.dx()));
    s.y = in_ball(seed, i, 1u << 20, r_max);
  }
  return out;
}

EstimatorResult coherence_constant(const SnapshotSeries& series, const std::vector<PairSample>& samples,
                                   const EstimatorOptions& opt) {
  const double floor = 1e-10 * vector_rms(series, false);
  return estimate(series, samples, opt, false, [&](const Vec3& a, const Vec3& b, double y) -> std::optional<double> {
    const double na = norm(a), nb = norm(b);
    if (na < floor || nb < floor || !(y > 0.0)) return std::nullopt;
    return norm(cross(a, b)) / (na * nb) / std::sqrt(y);
  });
}

EstimatorResult current_smoothness(const SnapshotSeries& series, const std::vector<PairSample>& samples,
                                   const EstimatorOptions& opt) {
  const double floor = 1e-10 * vector_rms(series, true);
  return estimate(series, samples, opt, true, [&](const Vec3& a, const Vec3& b, double y) -> std::optional<double> {
    const double nb = norm(b);
    if (nb < floor || !(nb > 0.0) || !(y > 0.0)) return std::nullopt;
    const Vec3 d{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    return norm(d) / (nb * std::sqrt(y));
  });
}

double gradient_rms(const SnapshotSeries& series, bool magnetic) {
  double s = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const TensorField3 g = gradient(magnetic ? series.state(k).b : series.state(k).u);
    for (int c = 0; c < 3; ++c) s += integrate_squared(g.d[c]);
  }
  const double vol = std::pow(series.grid().length, 3);
  return std::sqrt(s / (vol * static_cast<double>(series.size())));
}

Vec3 trilinear(const VectorField3& v, const Vec3& x) {
  const GridSpec& g = v.grid();
  std::array<int, 3> i0;
  std::array<double, 3> f;
  for (int a = 0; a < 3; ++a) {
    const double s = x[a] / g.dx();
    const double fl = std::floor(s);
    i0[a] = static_cast<int>(fl);
    f[a] = s - fl;
  }
  Vec3 out{0.0, 0.0, 0.0};
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? f[0] : 1.0 - f[0]) * (dy ? f[1] : 1.0 - f[1]) * (dz ? f[2] : 1.0 - f[2]);
        if (w == 0.0) continue;
        const std::size_t id = g.index(g.wrap(i0[0] + dx), g.wrap(i0[1] + dy), g.wrap(i0[2] + dz));
        for (int c = 0; c < 3; ++c) out[c] += w * v[c][id];
      }
  return out;
}

ScalarField enstrophy_time_integral(const SnapshotSeries& series) {
  ScalarField out(series.grid());
  const std::vector<double> w = trapezoid_weights(series.times());
  for (std::size_t k = 0; k < series.size(); ++k) {
    const VectorField3& om = series.vorticity(k);
    const VectorField3& cj = series.current(k);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[k] * (dot(om.at(i), om.at(i)) + dot(cj.at(i), cj.at(i)));
  }
  return out;
}

double ball_integral(const ScalarField& f, const Vec3& y, double radius) {
  const GridSpec& g = f.grid();
  std::array<int, 3> lo, hi;
  for (int a = 0; a < 3; ++a) {
    lo[a] = static_cast<int>(std::ceil((y[a] - radius) / g.dx()));
    hi[a] = static_cast<int>(std::floor((y[a] + radius) / g.dx()));
  }
  double s = 0.0;
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const Vec3 d{i * g.dx() - y[0], j * g.dx() - y[1], k * g.dx() - y[2]};
        if (norm(d) < radius) s += f.at(i, j, k);
      }
  return s * g.cell_volume();
}

LocalizationResult localization_check(const ScalarField& integrated, const Vec3& center, double R0, double radius,
                                      int n_centers) {
  if (n_centers < 2) throw std::invalid_argument("need at least 2 centers per axis");
  LocalizationResult r;
  r.radius = radius;
  for (int k = 0; k < n_centers; ++k)
    for (int j = 0; j < n_centers; ++j)
      for (int i = 0; i < n_centers; ++i) {
        const Vec3 off{-2.0 * R0 + 4.0 * R0 * i / (n_centers - 1), -2.0 * R0 + 4.0 * R0 * j / (n_centers - 1),
                       -2.0 * R0 + 4.0 * R0 * k / (n_centers - 1)};
        if (norm(off) > 2.0 * R0) continue;
        const Vec3 y{center[0] + off[0], center[1] + off[1], center[2] + off[2]};
        const double v = ball_integral(integrated, y, radius);
        if (r.values.empty() || v > r.max_value) {
          r.max_value = v;
          r.argmax = y;
        }
        r.centers.push_back(y);
        r.values.push_back(v);
      }
  return r;
}

ModulationResult modulation_check(const SnapshotSeries& series, const TestFunction& psi0) {
  ModulationResult m;
  const Patch p = psi0.evaluate(series.grid());
  for (std::size_t k = 0; k < series.size(); ++k) {
    ScalarField w2(series.grid()), j2(series.grid());
    const VectorField3& om = series.vorticity(k);
    const VectorField3& cj = series.current(k);
    for (std::size_t i = 0; i < w2.size(); ++i) {
      w2[i] = dot(om.at(i), om.at(i));
      j2[i] = dot(cj.at(i), cj.at(i));
    }
    m.weighted_omega.push_back(patch_integral(w2, p.box, p.values));
    m.weighted_current.push_back(patch_integral(j2, p.box, p.values));
  }
  auto ratio = [](const std::vector<double>& w) {
    const double mx = *std::max_element(w.begin(), w.end());
    return mx > 0.0 ? w.back() / mx : 1.0;
  };
  m.ratio_omega = ratio(m.weighted_omega);
  m.ratio_current = ratio(m.weighted_current);
  return m;
}

}  // namespace ensflux
