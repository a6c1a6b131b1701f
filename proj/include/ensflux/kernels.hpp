#pragma once
// Data-parallel grid kernels. Every kernel has an OpenMP version (used by the
// library) and a serial reference kept for tests and benchmarks. Reductions
// use one fixed pairwise tree, so both versions agree bitwise for any thread
// count.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace ensflux::kernels {

using CSpan = std::span<const double>;
using MSpan = std::span<double>;
using CVec = std::array<CSpan, 3>;
using MVec = std::array<MSpan, 3>;

/// Leaves of the pairwise tree are summed sequentially.
inline constexpr std::size_t kPairwiseLeaf = 256;
/// Depth of the top of the tree that the OpenMP version fans out over.
inline constexpr int kParallelDepth = 6;

namespace detail {

template <class Term>
double pairwise_range(std::size_t lo, std::size_t hi, const Term& term) {
  if (hi - lo <= kPairwiseLeaf) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_range(lo, mid, term) + pairwise_range(mid, hi, term);
}

// Node (depth, index) of the implicit tree over [0, n): returns its range.
inline void tree_node(std::size_t n, int depth, std::size_t idx, std::size_t& lo, std::size_t& hi) {
  lo = 0;
  hi = n;
  for (int d = depth - 1; d >= 0; --d) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if ((idx >> d) & 1U) lo = mid; else hi = mid;
  }
}

}  // namespace detail

namespace serial {

/// Pairwise sum of term(0) ... term(n-1).
template <class Term>
double pairwise_reduce(std::size_t n, const Term& term) {
  if (n == 0) return 0.0;
  return detail::pairwise_range(0, n, term);
}

inline double sum(CSpan a) { return pairwise_reduce(a.size(), [&](std::size_t i) { return a[i]; }); }
inline double dot(CSpan a, CSpan b) { return pairwise_reduce(a.size(), [&](std::size_t i) { return a[i] * b[i]; }); }

inline double max_abs(CSpan a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// out = a x b, pointwise.
inline void cross(const CVec& a, const CVec& b, const MVec& out) {
  const std::size_t n = a[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a[1][i] * b[2][i] - a[2][i] * b[1][i];
    const double y = a[2][i] * b[0][i] - a[0][i] * b[2][i];
    const double z = a[0][i] * b[1][i] - a[1][i] * b[0][i];
    out[0][i] = x;
    out[1][i] = y;
    out[2][i] = z;
  }
}

/// out = u x w + j x b and ub = u x b: the two nonlinear products of the
/// rotational-form MHD right-hand side.
inline void mhd_products(const CVec& u, const CVec& w, const CVec& b, const CVec& j, const MVec& out, const MVec& ub) {
  const std::size_t n = u[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    out[0][i] = (u[1][i] * w[2][i] - u[2][i] * w[1][i]) + (j[1][i] * b[2][i] - j[2][i] * b[1][i]);
    out[1][i] = (u[2][i] * w[0][i] - u[0][i] * w[2][i]) + (j[2][i] * b[0][i] - j[0][i] * b[2][i]);
    out[2][i] = (u[0][i] * w[1][i] - u[1][i] * w[0][i]) + (j[0][i] * b[1][i] - j[1][i] * b[0][i]);
    ub[0][i] = u[1][i] * b[2][i] - u[2][i] * b[1][i];
    ub[1][i] = u[2][i] * b[0][i] - u[0][i] * b[2][i];
    ub[2][i] = u[0][i] * b[1][i] - u[1][i] * b[0][i];
  }
}

/// acc += weight * sum_c w_c (a . grad) F_c, with grad[c][d] = dF_c/dx_d.
inline void accumulate_directional(double weight, const CVec& a, const std::array<CVec, 3>& grad, const CVec& w, MSpan acc) {
  const std::size_t n = acc.size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c)
      s += w[c][i] * (a[0][i] * grad[c][0][i] + a[1][i] * grad[c][1][i] + a[2][i] * grad[c][2][i]);
    acc[i] += weight * s;
  }
}

/// Sum over the patch of field[wrap(box point)] * weights[local].
/// `lo` may be negative; `extent` is the patch size per axis.
inline double patch_weighted_sum(CSpan field, int n, const std::array<int, 3>& lo, const std::array<int, 3>& extent, CSpan weights) {
  const std::size_t mx = extent[0], my = extent[1];
  auto wrap = [n](int i) { int r = i % n; return r < 0 ? r + n : r; };
  return pairwise_reduce(weights.size(), [&](std::size_t l) {
    const int i = static_cast<int>(l % mx);
    const int j = static_cast<int>((l / mx) % my);
    const int k = static_cast<int>(l / (mx * my));
    const std::size_t g = wrap(lo[0] + i) + static_cast<std::size_t>(n) * (wrap(lo[1] + j) + static_cast<std::size_t>(n) * wrap(lo[2] + k));
    return field[g] * weights[l];
  });
}

}  // namespace serial

namespace omp {

template <class Term>
double pairwise_reduce(std::size_t n, const Term& term) {
  if (n == 0) return 0.0;
  // Fan out only when every node at kParallelDepth is still above leaf size,
  // so the tree is identical to the serial recursion.
  int depth = 0;
  while (depth < kParallelDepth && (n >> (depth + 1)) > kPairwiseLeaf) ++depth;
  if (depth == 0) return detail::pairwise_range(0, n, term);
  const std::size_t nodes = std::size_t{1} << depth;
  std::vector<double> partial(nodes);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(nodes); ++t) {
    std::size_t lo, hi;
    detail::tree_node(n, depth, static_cast<std::size_t>(t), lo, hi);
    partial[t] = detail::pairwise_range(lo, hi, term);
  }
  for (std::size_t width = nodes; width > 1; width /= 2)
    for (std::size_t t = 0; t < width / 2; ++t) partial[t] = partial[2 * t] + partial[2 * t + 1];
  return partial[0];
}

inline double sum(CSpan a) { return pairwise_reduce(a.size(), [&](std::size_t i) { return a[i]; }); }
inline double dot(CSpan a, CSpan b) { return pairwise_reduce(a.size(), [&](std::size_t i) { return a[i] * b[i]; }); }

inline double max_abs(CSpan a) {
  double m = 0.0;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for reduction(max : m) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i]));
  return m;
}

inline void cross(const CVec& a, const CVec& b, const MVec& out) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a[0].size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double x = a[1][i] * b[2][i] - a[2][i] * b[1][i];
    const double y = a[2][i] * b[0][i] - a[0][i] * b[2][i];
    const double z = a[0][i] * b[1][i] - a[1][i] * b[0][i];
    out[0][i] = x;
    out[1][i] = y;
    out[2][i] = z;
  }
}

inline void mhd_products(const CVec& u, const CVec& w, const CVec& b, const CVec& j, const MVec& out, const MVec& ub) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(u[0].size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[0][i] = (u[1][i] * w[2][i] - u[2][i] * w[1][i]) + (j[1][i] * b[2][i] - j[2][i] * b[1][i]);
    out[1][i] = (u[2][i] * w[0][i] - u[0][i] * w[2][i]) + (j[2][i] * b[0][i] - j[0][i] * b[2][i]);
    out[2][i] = (u[0][i] * w[1][i] - u[1][i] * w[0][i]) + (j[0][i] * b[1][i] - j[1][i] * b[0][i]);
    ub[0][i] = u[1][i] * b[2][i] - u[2][i] * b[1][i];
    ub[1][i] = u[2][i] * b[0][i] - u[0][i] * b[2][i];
    ub[2][i] = u[0][i] * b[1][i] - u[1][i] * b[0][i];
  }
}

inline void accumulate_directional(double weight, const CVec& a, const std::array<CVec, 3>& grad, const CVec& w, MSpan acc) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(acc.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c)
      s += w[c][i] * (a[0][i] * grad[c][0][i] + a[1][i] * grad[c][1][i] + a[2][i] * grad[c][2][i]);
    acc[i] += weight * s;
  }
}

inline double patch_weighted_sum(CSpan field, int n, const std::array<int, 3>& lo, const std::array<int, 3>& extent, CSpan weights) {
  const std::size_t mx = extent[0], my = extent[1];
  auto wrap = [n](int i) { int r = i % n; return r < 0 ? r + n : r; };
  return pairwise_reduce(weights.size(), [&](std::size_t l) {
    const int i = static_cast<int>(l % mx);
    const int j = static_cast<int>((l / mx) % my);
    const int k = static_cast<int>(l / (mx * my));
    const std::size_t g = wrap(lo[0] + i) + static_cast<std::size_t>(n) * (wrap(lo[1] + j) + static_cast<std::size_t>(n) * wrap(lo[2] + k));
    return field[g] * weights[l];
  });
}

}  // namespace omp

}  // namespace ensflux::kernels
