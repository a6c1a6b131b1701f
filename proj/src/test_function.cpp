#include "ensflux/test_function.hpp"

#include <algorithm>
#include <cmath>

#include "ensflux/error.hpp"

namespace ensflux {

Smoothstep::Smoothstep(int order) : q_(order) {
  if (order < 1) throw std::invalid_argument("smoothstep order must be >= 1");
  inv_beta_ = std::exp(std::lgamma(2.0 * q_) - 2.0 * std::lgamma(static_cast<double>(q_)));
  binom_.resize(q_);
  binom_[0] = 1.0;
  for (int k = 1; k < q_; ++k) binom_[k] = binom_[k - 1] * (q_ - 1 + k) / k;
}

double Smoothstep::lower_tail(double s) const {
  // s^q sum_{k<q} C(q-1+k, k) (1-s)^k, all terms positive.
  const double t = 1.0 - s;
  double acc = 0.0;
  for (int k = q_ - 1; k >= 0; --k) acc = acc * t + binom_[k];
  return std::pow(s, q_) * acc;
}

double Smoothstep::value(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s <= 0.5 ? lower_tail(s) : 1.0 - lower_tail(1.0 - s);
}

double Smoothstep::d1(double s) const {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return inv_beta_ * std::pow(s * (1.0 - s), q_ - 1);
}

double Smoothstep::d2(double s) const {
  if (s <= 0.0 || s >= 1.0 || q_ < 2) return 0.0;
  return inv_beta_ * (q_ - 1) * std::pow(s * (1.0 - s), q_ - 2) * (1.0 - 2.0 * s);
}

int profile_order(double rho) {
  if (!(rho > 0.75 && rho < 1.0)) throw std::invalid_argument("rho must lie in (3/4, 1)");
  return static_cast<int>(std::ceil(1.0 / (1.0 - rho) - 1e-9)) + 1;
}

Jet multiply(const Jet& a, const Jet& b) {
  Jet r;
  r.value = a.value * b.value;
  for (int d = 0; d < 3; ++d) r.gradient[d] = a.value * b.gradient[d] + b.value * a.gradient[d];
  r.laplacian = a.value * b.laplacian + b.value * a.laplacian + 2.0 * dot(a.gradient, b.gradient);
  return r;
}

std::array<double, 3> PlateauProfile::g(double t) const {
  const double a = std::abs(t);
  const double s = 2.0 - a / scale;
  if (s <= 0.0) return {0.0, 0.0, 0.0};
  if (s >= 1.0) return {1.0, 0.0, 0.0};
  const double sign = t < 0.0 ? -1.0 : 1.0;
  return {step.value(s), -sign * step.d1(s) / scale, step.d2(s) / (scale * scale)};
}

std::array<double, 3> PlateauProfile::lattice_sum(double t, double origin) const {
  const double spacing = 2.0 * scale;
  const long m0 = static_cast<long>(std::floor((t - origin) / spacing));
  std::array<double, 3> acc{0.0, 0.0, 0.0};
  for (long m = m0 - 1; m <= m0 + 2; ++m) {
    const auto v = g(t - origin - spacing * static_cast<double>(m));
    for (int i = 0; i < 3; ++i) acc[i] += v[i];
  }
  return acc;
}

std::array<double, 3> PlateauProfile::h(double t, double centre, double origin) const {
  const auto gv = g(t - centre);
  if (gv[0] == 0.0 && gv[1] == 0.0) return {0.0, 0.0, 0.0};
  const auto s = lattice_sum(t, origin);
  const double inv = 1.0 / s[0];
  const double h0 = gv[0] * inv;
  const double h1 = (gv[1] - h0 * s[1]) * inv;
  const double h2 = gv[2] * inv - 2.0 * gv[1] * s[1] * inv * inv - gv[0] * s[2] * inv * inv +
                    2.0 * gv[0] * s[1] * s[1] * inv * inv * inv;
  return {h0, h1, h2};
}

TestFunction::TestFunction(const Vec3& center, double root_scale, double rho, double c0, int order, double domain_length)
    : center_(center), root_scale_(root_scale), scale_(root_scale), rho_(rho), c0_(c0), order_(order), length_(domain_length), step_(std::max(order, 1)) {
  if (!(root_scale > 0.0)) throw std::invalid_argument("test function scale must be positive");
  if (!(domain_length > 0.0)) throw std::invalid_argument("domain length must be positive");
  if (order < 1) throw std::invalid_argument("profile order must be >= 1");
  if (4.0 * root_scale >= domain_length) throw ScaleTooLarge("support of the test function wraps around the box");
}

Vec3 TestFunction::location() const {
  if (factors_.empty()) return center_;
  const LatticeFactor& f = factors_.back();
  Vec3 x;
  for (int d = 0; d < 3; ++d) {
    double v = center_[d] + f.origin[d] + 2.0 * f.scale * f.cell[d];
    v = std::fmod(v, length_);
    if (v < 0.0) v += length_;
    x[d] = v;
  }
  return x;
}

Jet TestFunction::radial(const Vec3& d) const {
  const double r = norm(d);
  const double s = 2.0 - r / root_scale_;
  Jet j;
  if (s <= 0.0) return j;
  if (s >= 1.0) {
    j.value = 1.0;
    return j;
  }
  j.value = step_.value(s);
  const double s1 = step_.d1(s), s2 = step_.d2(s);
  for (int a = 0; a < 3; ++a) j.gradient[a] = -s1 / root_scale_ * d[a] / r;
  j.laplacian = s2 / (root_scale_ * root_scale_) - 2.0 * s1 / (r * root_scale_);
  return j;
}

Jet TestFunction::jet_local(const Vec3& d) const {
  Jet j = radial(d);
  if (j.value == 0.0) return Jet{};
  if (exponent_ != 1.0) {
    const double m = exponent_;
    const double v = j.value;
    const double vm1 = std::pow(v, m - 1.0);
    const double g2 = dot(j.gradient, j.gradient);
    Jet p;
    p.value = vm1 * v;
    for (int a = 0; a < 3; ++a) p.gradient[a] = m * vm1 * j.gradient[a];
    p.laplacian = m * vm1 * j.laplacian + (g2 > 0.0 ? m * (m - 1.0) * std::pow(v, m - 2.0) * g2 : 0.0);
    j = p;
  }
  for (std::size_t fi = 0; fi < factors_.size(); ++fi) {
    const LatticeFactor& f = factors_[fi];
    const PlateauProfile& prof = profiles_[fi];
    std::array<std::array<double, 3>, 3> h;
    for (int a = 0; a < 3; ++a) {
      h[a] = prof.h(d[a], f.origin[a] + 2.0 * f.scale * f.cell[a], f.origin[a]);
      if (h[a][0] == 0.0) return Jet{};
    }
    Jet fj;
    fj.value = h[0][0] * h[1][0] * h[2][0];
    fj.gradient = {h[0][1] * h[1][0] * h[2][0], h[0][0] * h[1][1] * h[2][0], h[0][0] * h[1][0] * h[2][1]};
    fj.laplacian = h[0][2] * h[1][0] * h[2][0] + h[0][0] * h[1][2] * h[2][0] + h[0][0] * h[1][0] * h[2][2];
    j = multiply(j, fj);
  }
  return j;
}

Jet TestFunction::jet(const Vec3& x) const {
  Vec3 d;
  for (int a = 0; a < 3; ++a) {
    double v = std::fmod(x[a] - center_[a], length_);
    if (v >= 0.5 * length_) v -= length_;
    if (v < -0.5 * length_) v += length_;
    d[a] = v;
  }
  return jet_local(d);
}

std::array<std::array<double, 2>, 3> TestFunction::support_bounds() const {
  std::array<std::array<double, 2>, 3> b;
  for (int a = 0; a < 3; ++a) b[a] = {-2.0 * root_scale_, 2.0 * root_scale_};
  for (const LatticeFactor& f : factors_)
    for (int a = 0; a < 3; ++a) {
      const double c = f.origin[a] + 2.0 * f.scale * f.cell[a];
      b[a][0] = std::max(b[a][0], c - 2.0 * f.scale);
      b[a][1] = std::min(b[a][1], c + 2.0 * f.scale);
    }
  return b;
}

IndexBox TestFunction::support_box(const GridSpec& grid) const {
  const auto b = support_bounds();
  const double dx = grid.dx();
  IndexBox box;
  for (int a = 0; a < 3; ++a) {
    const int lo = static_cast<int>(std::ceil((center_[a] + b[a][0]) / dx));
    const int hi = static_cast<int>(std::floor((center_[a] + b[a][1]) / dx));
    box.lo[a] = lo;
    box.extent[a] = std::clamp(hi - lo + 1, 0, grid.n);
  }
  return box;
}

namespace {

template <class Fn>
void for_box(const GridSpec& grid, const Vec3& center, const IndexBox& box, Fn&& fn) {
  const double dx = grid.dx();
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(box.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t l = 0; l < total; ++l) {
    const int i = static_cast<int>(l % box.extent[0]);
    const int j = static_cast<int>((l / box.extent[0]) % box.extent[1]);
    const int k = static_cast<int>(l / (static_cast<std::ptrdiff_t>(box.extent[0]) * box.extent[1]));
    const Vec3 d{(box.lo[0] + i) * dx - center[0], (box.lo[1] + j) * dx - center[1], (box.lo[2] + k) * dx - center[2]};
    fn(static_cast<std::size_t>(l), d);
  }
}

}  // namespace

Patch TestFunction::evaluate(const GridSpec& grid) const {
  Patch p;
  p.box = support_box(grid);
  p.values.assign(p.box.size(), 0.0);
  for_box(grid, center_, p.box, [&](std::size_t l, const Vec3& d) { p.values[l] = jet_local(d).value; });
  return p;
}

PatchJet TestFunction::evaluate_jet(const GridSpec& grid) const {
  PatchJet p;
  p.box = support_box(grid);
  const std::size_t m = p.box.size();
  p.value.assign(m, 0.0);
  p.gx.assign(m, 0.0);
  p.gy.assign(m, 0.0);
  p.gz.assign(m, 0.0);
  p.laplacian.assign(m, 0.0);
  for_box(grid, center_, p.box, [&](std::size_t l, const Vec3& d) {
    const Jet j = jet_local(d);
    p.value[l] = j.value;
    p.gx[l] = j.gradient[0];
    p.gy[l] = j.gradient[1];
    p.gz[l] = j.gradient[2];
    p.laplacian[l] = j.laplacian;
  });
  return p;
}

TestFunction TestFunction::with_factor(const LatticeFactor& f, double c0) const {
  TestFunction t = *this;
  t.factors_.push_back(f);
  t.profiles_.emplace_back(f.scale, f.order);
  t.scale_ = f.scale;
  t.c0_ = c0;
  return t;
}

TestFunction TestFunction::powered(double m) const {
  if (!(m >= 1.0)) throw std::invalid_argument("power must be >= 1");
  TestFunction t = *this;
  t.exponent_ *= m;
  return t;
}

TestFunction TestFunction::with_c0(double c0) const {
  TestFunction t = *this;
  t.c0_ = c0;
  return t;
}

namespace {

BoundCheck radial_bounds(const TestFunction& tf) {
  // Ratios are independent of R: evaluate with R = 1 along s = 2 - r.
  const TestFunction unit({0.0, 0.0, 0.0}, 1.0, tf.rho(), tf.c0(), tf.order(), 16.0);
  const TestFunction probe = tf.exponent() == 1.0 ? unit : unit.powered(tf.exponent());
  const double rho = tf.rho();
  BoundCheck r;
  auto visit = [&](double s) {
    const Jet j = probe.jet_local({2.0 - s, 0.0, 0.0});
    if (!(j.value > 0.0)) return;
    r.c0_grad = std::max(r.c0_grad, norm(j.gradient) / std::pow(j.value, rho));
    r.c0_lap = std::max(r.c0_lap, std::abs(j.laplacian) / std::pow(j.value, 2.0 * rho - 1.0));
    ++r.samples;
  };
  constexpr int kUniform = 200000;
  for (int i = 1; i < kUniform; ++i) visit(static_cast<double>(i) / kUniform);
  for (int i = 0; i <= 2000; ++i) {
    const double e = -12.0 + 10.0 * i / 2000.0;
    visit(std::pow(10.0, e));
    visit(1.0 - std::pow(10.0, e));
  }
  r.ok = r.c0_grad <= tf.c0() && r.c0_lap <= tf.c0();
  return r;
}

}  // namespace

BoundCheck grid_bound_ratios(const TestFunction& tf, const GridSpec& grid, int refine) {
  if (refine < 1) throw std::invalid_argument("refine must be >= 1");
  const IndexBox box = tf.support_box(grid);
  const double h = grid.dx() / refine;
  const int mx = box.extent[0] * refine, my = box.extent[1] * refine, mz = box.extent[2] * refine;
  const double R = tf.scale(), rho = tf.rho();
  const Vec3& c = tf.center();
  double cg = 0.0, cl = 0.0;
  std::size_t count = 0;
#pragma omp parallel for reduction(max : cg, cl) reduction(+ : count) schedule(static)
  for (int k = 0; k < mz; ++k)
    for (int j = 0; j < my; ++j)
      for (int i = 0; i < mx; ++i) {
        const Vec3 d{box.lo[0] * grid.dx() + i * h - c[0], box.lo[1] * grid.dx() + j * h - c[1], box.lo[2] * grid.dx() + k * h - c[2]};
        const Jet jt = tf.jet_local(d);
        if (!(jt.value > 0.0)) continue;
        cg = std::max(cg, R * norm(jt.gradient) / std::pow(jt.value, rho));
        cl = std::max(cl, R * R * std::abs(jt.laplacian) / std::pow(jt.value, 2.0 * rho - 1.0));
        ++count;
      }
  BoundCheck r;
  r.c0_grad = cg;
  r.c0_lap = cl;
  r.samples = count;
  r.ok = cg <= tf.c0() && cl <= tf.c0();
  return r;
}

BoundCheck verify_bounds(const TestFunction& tf, const GridSpec& grid, int refine) {
  if (tf.factors().empty()) return radial_bounds(tf);
  return grid_bound_ratios(tf, grid, refine);
}

TestFunction make_refined(const Vec3& center, double R, double rho, double c0_target, double domain_length, int order) {
  if (!(R > 0.0)) throw std::invalid_argument("scale must be positive");
  if (!(2.0 * R + std::cbrt(R * R) < 0.5 * domain_length))
    throw ScaleTooLarge("scale too large for the box: need 2R + R^(2/3) < L/2");
  const int q = order > 0 ? order : profile_order(rho);
  if (!(rho > 0.75 && rho < 1.0)) throw std::invalid_argument("rho must lie in (3/4, 1)");
  TestFunction tf(center, R, rho, c0_target, q, domain_length);
  const BoundCheck b = radial_bounds(tf);
  if (!b.ok)
    throw BoundViolation("measured bound constants (" + std::to_string(b.c0_grad) + ", " + std::to_string(b.c0_lap) +
                         ") exceed C0 = " + std::to_string(c0_target));
  return tf;
}

TemporalCutoff::TemporalCutoff(double T, int order) : T_(T), step_(order) {
  if (!(T > 0.0)) throw std::invalid_argument("cutoff horizon must be positive");
}

double TemporalCutoff::operator()(double t) const { return step_.value(3.0 * t / T_ - 1.0); }

double TemporalCutoff::derivative(double t) const { return step_.d1(3.0 * t / T_ - 1.0) * 3.0 / T_; }

}  // namespace ensflux
