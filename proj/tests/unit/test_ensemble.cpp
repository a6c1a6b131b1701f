#include <doctest.h>

#include <algorithm>
#include <numbers>

#include "ensflux/ensemble.hpp"
#include "ensflux/error.hpp"
#include "support.hpp"

using namespace ensflux;
using namespace ensflux::testing;

namespace {

const GridSpec& grid64() {
  static const GridSpec g(64, kTwoPi);
  return g;
}

const TestFunction& psi0() {
  static const TestFunction tf = make_refined({0.0, 0.0, 0.0}, 1.0, 0.8, 100.0, kTwoPi);
  return tf;
}

ScalarField on_grid(const Patch& p, const GridSpec& g) {
  ScalarField s(g);
  std::size_t l = 0;
  for (int k = 0; k < p.box.extent[2]; ++k)
    for (int j = 0; j < p.box.extent[1]; ++j)
      for (int i = 0; i < p.box.extent[0]; ++i, ++l)
        s[g.index(g.wrap(p.box.lo[0] + i), g.wrap(p.box.lo[1] + j), g.wrap(p.box.lo[2] + k))] += p.values[l];
  return s;
}

// (1/R^3) int f psi by a plain loop over the whole grid.
double direct_mean(const ScalarField& f, const TestFunction& tf) {
  const ScalarField w = on_grid(tf.evaluate(f.grid()), f.grid());
  long double acc = 0.0L;
  for (std::size_t i = 0; i < f.size(); ++i) acc += static_cast<long double>(f[i]) * w[i];
  const double R = tf.scale();
  return static_cast<double>(acc) * f.grid().cell_volume() / (R * R * R);
}

}  // namespace

TEST_CASE("lattice partition reconstructs psi with bounded multiplicity") {
  const GridSpec& g = grid64();
  const TestFunction& psi = psi0();
  const ScalarField target = on_grid(psi.evaluate(g), g);
  for (int k : {2, 3, 4}) {
    const double rp = 1.0 / k;
    const PartitionResult pr = lattice_partition(psi, rp, g, default_origin(psi), 2);
    ScalarField sum(g);
    std::vector<int> multiplicity(g.size(), 0);
    for (const TestFunction& piece : pr.pieces) {
      CHECK(piece.scale() == doctest::Approx(rp));
      const Patch p = piece.evaluate(g);
      sum += on_grid(p, g);
      std::size_t l = 0;
      for (int c = 0; c < p.box.extent[2]; ++c)
        for (int b = 0; b < p.box.extent[1]; ++b)
          for (int a = 0; a < p.box.extent[0]; ++a, ++l)
            if (p.values[l] > 0.0) ++multiplicity[g.index(g.wrap(p.box.lo[0] + a), g.wrap(p.box.lo[1] + b), g.wrap(p.box.lo[2] + c))];
    }
    CHECK(max_abs_diff(sum, target) <= 1e-12);
    CHECK(*std::max_element(multiplicity.begin(), multiplicity.end()) <= 8);
    // lattice sites within reach of the support: 2 ceil(R/R') + 1 per axis
    CHECK(pr.pieces.size() <= static_cast<std::size_t>(std::pow(2 * k + 1, 3)));
    for (std::size_t i = 0; i < pr.pieces.size(); i += 17) {
      const BoundCheck b = grid_bound_ratios(pr.pieces[i], g);
      CHECK(b.c0_grad <= pr.c0_measured * (1 + 1e-12));
      CHECK(b.c0_lap <= pr.c0_measured * (1 + 1e-12));
    }
  }
}

TEST_CASE("lattice partition preconditions") {
  const GridSpec& g = grid64();
  CHECK_THROWS_AS(lattice_partition(psi0(), 1.0, g), ScaleOutOfRange);
  CHECK_THROWS_AS(lattice_partition(psi0(), 0.2, g, {0, 0, 0}, 8), ResolutionTooCoarse);
  const TestFunction empty = psi0().with_factor(LatticeFactor{0.5, {0.0, 0.0, 0.0}, {10, 0, 0}, 6}, 100.0);
  CHECK(empty.evaluate(g).values.empty());
  CHECK(lattice_partition(empty, 0.25, g, {0, 0, 0}, 2).pieces.empty());
}

TEST_CASE("plateau sums") {
  for (double rp : {0.5, 1.0 / 3.0, 0.25}) {
    const PlateauSumRange one = plateau_sum_range_1d(rp, 6);
    CHECK(one.min >= 1.0 - 1e-12);
    CHECK(one.max <= 2.0 + 1e-12);
    CHECK(one.max == doctest::Approx(2.0).epsilon(1e-9));
    const PlateauSumRange three = plateau_sum_range(rp, 6, grid64());
    CHECK(three.min >= 1.0 - 1e-12);
    CHECK(three.max <= 8.0 + 1e-12);
  }
}

TEST_CASE("canonical ensemble at the integral scale is psi0 alone") {
  const Ensemble e = canonical_ensemble(psi0(), 1.0, 64, 8, grid64());
  REQUIRE(e.members.size() == 1);
  CHECK(e.members[0].scale() == 1.0);
  CHECK(e.members[0].factors().empty());
  const ScalarField f = ScalarField::from_function(grid64(), [](double, double, double) { return 3.0; });
  const Patch p = psi0().evaluate(grid64());
  double integral = 0.0;
  for (double v : p.values) integral += v;
  integral *= grid64().cell_volume();
  CHECK(ensemble_average(f, e) == doctest::Approx(3.0 * integral).epsilon(1e-13));
  CHECK(large_scale_mean(f, psi0()) == doctest::Approx(3.0 * integral).epsilon(1e-13));
}

TEST_CASE("canonical and jittered ensembles validate") {
  const GridSpec& g = grid64();
  for (std::optional<std::uint64_t> seed : {std::optional<std::uint64_t>{}, std::optional<std::uint64_t>{7}}) {
    const Ensemble e = canonical_ensemble(psi0(), 0.25, 64, 8, g, seed, 2);
    const EnsembleValidation v = validate(e, g);
    CHECK(v.property1);
    CHECK(v.property2);
    CHECK(v.property3);
    CHECK(v.bounds);
    CHECK(v.max_multiplicity <= 8);
    CHECK(v.count >= 64);
  }
  const Ensemble a = canonical_ensemble(psi0(), 0.5, 64, 8, g, 3, 2), b = canonical_ensemble(psi0(), 0.5, 64, 8, g, 3, 2);
  REQUIRE(a.members.size() == b.members.size());
  for (std::size_t i = 0; i < a.members.size(); ++i) CHECK(a.members[i].location() == b.members[i].location());
}

TEST_CASE("validation detects a missing member") {
  const GridSpec& g = grid64();
  Ensemble e = canonical_ensemble(psi0(), 0.5, 64, 8, g, std::nullopt, 2);
  e.members.erase(e.members.begin() + static_cast<long>(e.members.size() / 2));
  e.group.pop_back();
  const EnsembleValidation v = validate(e, g);
  CHECK_FALSE(v.property1);
  CHECK(v.max_cover_deficit > 1e-3);
}

TEST_CASE("ensemble averages are linear and order independent") {
  const GridSpec& g = grid64();
  const Ensemble e = canonical_ensemble(psi0(), 0.5, 64, 8, g, std::nullopt, 2);
  const ScalarField f = random_scalar(g, 1), h = random_scalar(g, 2);
  ScalarField fh = f;
  fh *= 2.0;
  fh += h;
  CHECK(ensemble_average(fh, e) == doctest::Approx(2.0 * ensemble_average(f, e) + ensemble_average(h, e)).epsilon(1e-11));
  Ensemble r = e;
  std::reverse(r.members.begin(), r.members.end());
  CHECK(ensemble_average(f, r) == doctest::Approx(ensemble_average(f, e)).epsilon(1e-13));
  CHECK(large_scale_mean(fh, psi0()) == doctest::Approx(2.0 * large_scale_mean(f, psi0()) + large_scale_mean(h, psi0())).epsilon(1e-12));
  // direct-summation oracle
  double direct = 0.0;
  for (const TestFunction& m : e.members) direct += direct_mean(f, m);
  CHECK(ensemble_average(f, e) == doctest::Approx(direct / e.members.size()).epsilon(1e-11));
  CHECK(large_scale_mean(f, psi0()) == doctest::Approx(direct_mean(f, psi0())).epsilon(1e-12));
}

TEST_CASE("ensemble sandwich on random nonnegative fields") {
  const GridSpec& g = grid64();
  const double delta = 2 * 0.8 - 1.0;
  std::vector<Ensemble> ensembles;
  for (double R : {0.5, 0.8}) {
    ensembles.push_back(canonical_ensemble(psi0(), R, 64, 8, g, std::nullopt, 2));
    ensembles.push_back(canonical_ensemble(psi0(), R, 64, 8, g, 11, 2));
  }
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const ScalarField f = nonnegative_field(g, seed);
    const double F0 = large_scale_mean(f, psi0());
    const double F0d = large_scale_mean_power(f, psi0(), delta);
    for (const Ensemble& e : ensembles) {
      const EnsembleQuadrature q(e, g);
      const double avg = q.average(f);
      CHECK(avg >= F0 / e.K1);
      CHECK(avg <= e.K2 * F0);
      CHECK(q.delta_average(f, delta) <= e.K2 * F0d);
    }
  }
}

TEST_CASE("refinement keeps the grouped average") {
  const GridSpec& g = grid64();
  const Ensemble parent = canonical_ensemble(psi0(), 0.5, 64, 8, g, std::nullopt, 2);
  const Ensemble child = refine_ensemble(parent, 0.25, g, 2);
  CHECK(child.K1 == 64 * parent.K1);
  CHECK(child.K2 == 8 * parent.K2);
  CHECK(child.n_groups == parent.members.size());
  CHECK(static_cast<double>(child.members.size()) <= child.K1 * std::pow(1.0 / 0.25, 3));
  const ScalarField one = ScalarField::from_function(g, [](double, double, double) { return 1.0; });
  const EnsembleQuadrature qp(parent, g), qc(child, g);
  CHECK(std::abs(qc.grouped_average(one) - qp.average(one)) <= 1e-10 * qp.average(one));
  const ScalarField f = nonnegative_field(g, 4);
  CHECK(std::abs(qc.grouped_average(f) - qp.average(f)) <= 1e-10 * qp.average(f));
  const EnsembleValidation v = validate(child, g);
  CHECK(v.max_multiplicity <= 8 * parent.K2);
  CHECK(v.property1);
}

TEST_CASE("quadrature derivative pairings integrate by parts") {
  const GridSpec& g = grid64();
  const Ensemble e = canonical_ensemble(psi0(), 0.8, 64, 8, g, std::nullopt, 2);
  const EnsembleQuadrature q(e, g);
  const ScalarField f = random_scalar(g, 21, 2);
  const VectorField3 v = random_vector(g, 22, 2);
  const ScalarField lf = laplacian(f), dv = divergence(v);
  auto absolute = [](ScalarField s) {
    for (auto& x : s.values()) x = std::abs(x);
    return s;
  };
  const ScalarField alf = absolute(lf), adv = absolute(dv);
  double scale_l = 0.0, scale_d = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    scale_l = std::max(scale_l, q.integral(i, alf));
    scale_d = std::max(scale_d, q.integral(i, adv));
  }
  for (std::size_t i = 0; i < q.size(); ++i) {
    CHECK(std::abs(q.laplacian_integral(i, f) - q.integral(i, lf)) <= 5e-3 * scale_l);
    CHECK(std::abs(q.gradient_integral(i, v) + q.integral(i, dv)) <= 5e-3 * scale_d);
  }
}
