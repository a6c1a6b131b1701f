#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>

#include "ensflux/aligned.hpp"

namespace ensflux {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Uniform periodic lattice with n cells per axis on a cube of edge `length`.
/// Point (i, j, k) sits at (i dx, j dx, k dx); storage is x-fastest.
struct GridSpec {
  int n = 0;
  double length = 0.0;

  GridSpec() = default;
  GridSpec(int n_per_axis, double domain_length);

  double dx() const { return length / n; }
  double cell_volume() const { double h = dx(); return h * h * h; }
  std::size_t size() const { return static_cast<std::size_t>(n) * n * n; }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * (j + static_cast<std::size_t>(n) * k);
  }
  int wrap(int i) const { int r = i % n; return r < 0 ? r + n : r; }
  double coordinate(int i) const { return i * dx(); }
  /// Minimal-image displacement b - a along one periodic axis.
  double periodic_delta(double a, double b) const {
    double d = std::fmod(b - a, length);
    if (d >= 0.5 * length) d -= length;
    if (d < -0.5 * length) d += length;
    return d;
  }

  bool operator==(const GridSpec&) const = default;
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const GridSpec& grid);
  ScalarField(const GridSpec& grid, RealBuffer values);

  template <class F>
  static ScalarField from_function(const GridSpec& grid, F&& f) {
    ScalarField s(grid);
    for (int k = 0; k < grid.n; ++k)
      for (int j = 0; j < grid.n; ++j)
        for (int i = 0; i < grid.n; ++i)
          s.values_[grid.index(i, j, k)] = f(grid.coordinate(i), grid.coordinate(j), grid.coordinate(k));
    return s;
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(int i, int j, int k) const { return values_[grid_.index(grid_.wrap(i), grid_.wrap(j), grid_.wrap(k))]; }

  bool all_finite() const;
  double max_abs() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator*=(double a);

 private:
  GridSpec grid_;
  RealBuffer values_;
};

class VectorField3 {
 public:
  VectorField3() = default;
  explicit VectorField3(const GridSpec& grid);
  VectorField3(ScalarField x, ScalarField y, ScalarField z);

  template <class F>
  static VectorField3 from_function(const GridSpec& grid, F&& f) {
    VectorField3 v(grid);
    for (int k = 0; k < grid.n; ++k)
      for (int j = 0; j < grid.n; ++j)
        for (int i = 0; i < grid.n; ++i) {
          const Vec3 val = f(grid.coordinate(i), grid.coordinate(j), grid.coordinate(k));
          const std::size_t id = grid.index(i, j, k);
          for (int c = 0; c < 3; ++c) v[c][id] = val[c];
        }
    return v;
  }

  const GridSpec& grid() const { return c_[0].grid(); }
  ScalarField& operator[](int c) { return c_[c]; }
  const ScalarField& operator[](int c) const { return c_[c]; }
  Vec3 at(std::size_t id) const { return {c_[0][id], c_[1][id], c_[2][id]}; }

  bool all_finite() const;
  double max_abs() const;

  VectorField3& operator+=(const VectorField3& o);
  VectorField3& operator*=(double a);

 private:
  std::array<ScalarField, 3> c_;
};

/// Velocity-gradient style tensor: d[c][a] = d v_c / d x_a.
struct TensorField3 {
  std::array<VectorField3, 3> d;
};

}  // namespace ensflux
