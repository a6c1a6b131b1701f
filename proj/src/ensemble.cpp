#include "ensflux/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "ensflux/error.hpp"
#include "ensflux/kernels.hpp"

namespace ensflux {

namespace {

double minimal_image(double d, double length) {
  double v = std::fmod(d, length);
  if (v >= 0.5 * length) v -= length;
  if (v < -0.5 * length) v += length;
  return v;
}

std::size_t wrapped_index(const GridSpec& grid, const IndexBox& box, std::size_t l) {
  const int i = static_cast<int>(l % box.extent[0]);
  const int j = static_cast<int>((l / box.extent[0]) % box.extent[1]);
  const int k = static_cast<int>(l / (static_cast<std::size_t>(box.extent[0]) * box.extent[1]));
  return grid.index(grid.wrap(box.lo[0] + i), grid.wrap(box.lo[1] + j), grid.wrap(box.lo[2] + k));
}

}  // namespace

Vec3 default_origin(const TestFunction& psi) {
  if (psi.factors().empty()) return {0.0, 0.0, 0.0};
  const LatticeFactor& f = psi.factors().back();
  Vec3 o;
  for (int a = 0; a < 3; ++a) o[a] = f.origin[a] + 2.0 * f.scale * f.cell[a];
  return o;
}

PartitionResult lattice_partition(const TestFunction& psi, double r_prime, const GridSpec& grid, const Vec3& origin,
                                  int min_points) {
  if (!(r_prime > 0.0)) throw std::invalid_argument("partition scale must be positive");
  if (!(r_prime < psi.scale())) throw ScaleOutOfRange("partition scale must be below the test function scale");
  if (r_prime < min_points * grid.dx())
    throw ResolutionTooCoarse("partition scale " + std::to_string(r_prime) + " is resolved by fewer than " +
                              std::to_string(min_points) + " grid points");
  PartitionResult out;
  const auto bounds = psi.support_bounds();
  for (int a = 0; a < 3; ++a)
    if (!(bounds[a][0] < bounds[a][1])) return out;

  const double spacing = 2.0 * r_prime;
  std::array<int, 3> lo, hi;
  for (int a = 0; a < 3; ++a) {
    // open cell interval (c - 2r', c + 2r') must meet the open support interval
    lo[a] = static_cast<int>(std::floor((bounds[a][0] - origin[a] - spacing) / spacing)) + 1;
    hi[a] = static_cast<int>(std::ceil((bounds[a][1] - origin[a] + spacing) / spacing)) - 1;
  }
  const double root_reach = 2.0 * psi.root_scale();
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const std::array<int, 3> cell{i, j, k};
        double dist2 = 0.0;
        bool meets = true;
        for (int a = 0; a < 3; ++a) {
          const double c = origin[a] + spacing * cell[a];
          if (!(c - spacing < bounds[a][1] && c + spacing > bounds[a][0])) meets = false;
          const double d = std::max(0.0, std::abs(c) - spacing);
          dist2 += d * d;
        }
        if (!meets || !(std::sqrt(dist2) < root_reach)) continue;
        out.pieces.push_back(psi.with_factor(LatticeFactor{r_prime, origin, cell, psi.order()}, psi.c0()));
      }
  for (const TestFunction& p : out.pieces) {
    const BoundCheck b = grid_bound_ratios(p, grid);
    out.c0_measured = std::max({out.c0_measured, b.c0_grad, b.c0_lap});
  }
  for (TestFunction& p : out.pieces) p = p.with_c0(out.c0_measured);
  return out;
}

Ensemble canonical_ensemble(const TestFunction& psi0, double R, int K1, int K2, const GridSpec& grid,
                            std::optional<std::uint64_t> jitter_seed, int min_points) {
  const double R0 = psi0.scale();
  if (!(R > 0.0) || R > R0 * (1.0 + 1e-12)) throw ScaleOutOfRange("ensemble scale must lie in (0, R0]");
  Ensemble e{psi0, R, {}, {}, 1, R, K1, K2, psi0.c0()};
  if (std::abs(R - R0) <= 1e-12 * R0) {
    e.scale = R0;
    e.group_scale = R0;
    e.members.push_back(psi0);
    e.group.push_back(0);
    return e;
  }
  Vec3 origin{0.0, 0.0, 0.0};
  if (jitter_seed) {
    std::mt19937_64 rng(*jitter_seed);
    std::uniform_real_distribution<double> u(-R, R);
    for (double& o : origin) o = u(rng);
  }
  PartitionResult p = lattice_partition(psi0, R, grid, origin, min_points);
  e.members = std::move(p.pieces);
  e.group.assign(e.members.size(), 0);
  e.c0 = p.c0_measured;
  return e;
}

Ensemble refine_ensemble(const Ensemble& e, double r_prime, const GridSpec& grid, int min_points) {
  Ensemble out{e.psi0, r_prime, {}, {}, e.members.size(), e.scale, 64 * e.K1, 8 * e.K2, 0.0};
  for (std::size_t g = 0; g < e.members.size(); ++g) {
    PartitionResult p = lattice_partition(e.members[g], r_prime, grid, default_origin(e.members[g]), min_points);
    out.c0 = std::max(out.c0, p.c0_measured);
    for (TestFunction& piece : p.pieces) {
      out.members.push_back(std::move(piece));
      out.group.push_back(g);
    }
  }
  for (TestFunction& m : out.members) m = m.with_c0(out.c0);
  return out;
}

EnsembleValidation validate(const Ensemble& e, const GridSpec& grid, double tolerance) {
  EnsembleValidation v;
  const std::size_t N = grid.size();
  std::vector<double> psi0(N, 0.0), sum(N, 0.0);
  std::vector<int> mult(N, 0);
  {
    const Patch p = e.psi0.evaluate(grid);
    for (std::size_t l = 0; l < p.values.size(); ++l) psi0[wrapped_index(grid, p.box, l)] = p.values[l];
  }
  for (const TestFunction& m : e.members) {
    const PatchJet jet = m.evaluate_jet(grid);
    const double R = m.scale(), rho = m.rho();
    for (std::size_t l = 0; l < jet.value.size(); ++l) {
      const double val = jet.value[l];
      if (!(val > 0.0)) continue;
      const std::size_t g = wrapped_index(grid, jet.box, l);
      sum[g] += val;
      ++mult[g];
      v.max_member_excess = std::max(v.max_member_excess, val - psi0[g]);
      if (!m.factors().empty()) {
        const double gn = std::sqrt(jet.gx[l] * jet.gx[l] + jet.gy[l] * jet.gy[l] + jet.gz[l] * jet.gz[l]);
        v.worst_c0 = std::max(v.worst_c0, R * gn / std::pow(val, rho));
        v.worst_c0 = std::max(v.worst_c0, R * R * std::abs(jet.laplacian[l]) / std::pow(val, 2.0 * rho - 1.0));
      }
    }
    if (m.factors().empty()) {
      const BoundCheck b = verify_bounds(m, grid);
      v.worst_c0 = std::max({v.worst_c0, b.c0_grad, b.c0_lap});
    }
  }
  const Vec3& c = e.psi0.center();
  const double reach = 2.0 * e.psi0.root_scale();
  for (int k = 0; k < grid.n; ++k)
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i) {
        const std::size_t g = grid.index(i, j, k);
        v.max_cover_deficit = std::max(v.max_cover_deficit, psi0[g] - sum[g]);
        const Vec3 d{minimal_image(grid.coordinate(i) - c[0], grid.length), minimal_image(grid.coordinate(j) - c[1], grid.length),
                     minimal_image(grid.coordinate(k) - c[2], grid.length)};
        if (norm(d) < reach) v.max_multiplicity = std::max(v.max_multiplicity, mult[g]);
      }
  const double ratio = std::pow(e.psi0.scale() / e.scale, 3);
  v.count = e.members.size();
  v.count_lower = ratio;
  v.count_upper = e.K1 * ratio;
  v.property1 = v.max_member_excess <= tolerance && v.max_cover_deficit <= tolerance;
  v.property2 = static_cast<double>(v.count) >= v.count_lower * (1.0 - 1e-12) && static_cast<double>(v.count) <= v.count_upper * (1.0 + 1e-12);
  v.property3 = v.max_multiplicity <= e.K2;
  v.bounds = v.worst_c0 <= e.c0 * (1.0 + 1e-12);
  return v;
}

double patch_integral(const ScalarField& f, const IndexBox& box, std::span<const double> weights) {
  return f.grid().cell_volume() * kernels::omp::patch_weighted_sum(f.values(), f.grid().n, box.lo, box.extent, weights);
}

EnsembleQuadrature::EnsembleQuadrature(const Ensemble& e, const GridSpec& grid) : e_(&e), grid_(grid) {
  jets_.reserve(e.members.size());
  for (const TestFunction& m : e.members) jets_.push_back(m.evaluate_jet(grid));
}

double EnsembleQuadrature::integral(std::size_t i, const ScalarField& f) const {
  return patch_integral(f, jets_[i].box, jets_[i].value);
}

double EnsembleQuadrature::integral_power(std::size_t i, const ScalarField& f, double delta) const {
  RealBuffer w(jets_[i].value.size());
  for (std::size_t l = 0; l < w.size(); ++l) w[l] = jets_[i].value[l] > 0.0 ? std::pow(jets_[i].value[l], delta) : 0.0;
  return patch_integral(f, jets_[i].box, w);
}

double EnsembleQuadrature::gradient_integral(std::size_t i, const VectorField3& v) const {
  const PatchJet& p = jets_[i];
  return patch_integral(v[0], p.box, p.gx) + patch_integral(v[1], p.box, p.gy) + patch_integral(v[2], p.box, p.gz);
}

double EnsembleQuadrature::laplacian_integral(std::size_t i, const ScalarField& f) const {
  return patch_integral(f, jets_[i].box, jets_[i].laplacian);
}

double EnsembleQuadrature::average(const ScalarField& f) const {
  if (jets_.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < jets_.size(); ++i) s += integral(i, f);
  return s / (static_cast<double>(jets_.size()) * std::pow(e_->scale, 3));
}

double EnsembleQuadrature::grouped_average(const ScalarField& f) const {
  if (jets_.empty()) return 0.0;
  std::vector<double> per(e_->n_groups, 0.0);
  for (std::size_t i = 0; i < jets_.size(); ++i) per[e_->group[i]] += integral(i, f);
  double s = 0.0;
  for (double p : per) s += p;
  return s / (static_cast<double>(e_->n_groups) * std::pow(e_->group_scale, 3));
}

double EnsembleQuadrature::delta_average(const ScalarField& f, double delta) const {
  if (jets_.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < jets_.size(); ++i) s += integral_power(i, f, delta);
  return s / (static_cast<double>(jets_.size()) * std::pow(e_->scale, 3));
}

double ensemble_average(const ScalarField& f, const Ensemble& e) { return EnsembleQuadrature(e, f.grid()).average(f); }

double large_scale_mean(const ScalarField& f, const TestFunction& psi0) {
  const Patch p = psi0.evaluate(f.grid());
  return patch_integral(f, p.box, p.values) / std::pow(psi0.scale(), 3);
}

double large_scale_mean_power(const ScalarField& f, const TestFunction& psi0, double delta) {
  Patch p = psi0.evaluate(f.grid());
  for (double& v : p.values) v = v > 0.0 ? std::pow(v, delta) : 0.0;
  return patch_integral(f, p.box, p.values) / std::pow(psi0.scale(), 3);
}

PlateauSumRange plateau_sum_range(double r_prime, int order, const GridSpec& grid, const Vec3& origin) {
  const PlateauProfile prof(r_prime, order);
  PlateauSumRange r{1e300, 0.0};
  std::array<PlateauSumRange, 3> axis;
  for (int a = 0; a < 3; ++a) {
    axis[a] = {1e300, 0.0};
    for (int i = 0; i < grid.n; ++i) {
      const double s = prof.lattice_sum(grid.coordinate(i), origin[a])[0];
      axis[a].min = std::min(axis[a].min, s);
      axis[a].max = std::max(axis[a].max, s);
    }
  }
  r.min = axis[0].min * axis[1].min * axis[2].min;
  r.max = axis[0].max * axis[1].max * axis[2].max;
  return r;
}

PlateauSumRange plateau_sum_range_1d(double r_prime, int order, int samples) {
  const PlateauProfile prof(r_prime, order);
  PlateauSumRange r{1e300, 0.0};
  for (int i = 0; i <= samples; ++i) {
    const double s = prof.lattice_sum(2.0 * r_prime * i / samples, 0.0)[0];
    r.min = std::min(r.min, s);
    r.max = std::max(r.max, s);
  }
  return r;
}

}  // namespace ensflux
