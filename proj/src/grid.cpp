#include "ensflux/grid.hpp"

#include <stdexcept>
#include <string>

#include "ensflux/kernels.hpp"

namespace ensflux {

GridSpec::GridSpec(int n_per_axis, double domain_length) : n(n_per_axis), length(domain_length) {
  if (n < 8 || n % 2 != 0)
    throw std::invalid_argument("GridSpec: n_per_axis must be even and >= 8, got " + std::to_string(n));
  if (!(length > 0.0) || !std::isfinite(length))
    throw std::invalid_argument("GridSpec: domain_length must be positive and finite");
}

ScalarField::ScalarField(const GridSpec& grid) : grid_(grid), values_(grid.size(), 0.0) {}

ScalarField::ScalarField(const GridSpec& grid, RealBuffer values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw std::invalid_argument("ScalarField: value count does not match grid");
}

bool ScalarField::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

double ScalarField::max_abs() const { return kernels::omp::max_abs(values_); }

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  if (!(grid_ == o.grid_)) throw std::invalid_argument("ScalarField: grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double a) {
  for (double& v : values_) v *= a;
  return *this;
}

VectorField3::VectorField3(const GridSpec& grid) : c_{ScalarField(grid), ScalarField(grid), ScalarField(grid)} {}

VectorField3::VectorField3(ScalarField x, ScalarField y, ScalarField z) : c_{std::move(x), std::move(y), std::move(z)} {
  if (!(c_[0].grid() == c_[1].grid()) || !(c_[0].grid() == c_[2].grid()))
    throw std::invalid_argument("VectorField3: components must share one grid");
}

bool VectorField3::all_finite() const { return c_[0].all_finite() && c_[1].all_finite() && c_[2].all_finite(); }

double VectorField3::max_abs() const {
  return std::max({c_[0].max_abs(), c_[1].max_abs(), c_[2].max_abs()});
}

VectorField3& VectorField3::operator+=(const VectorField3& o) {
  for (int c = 0; c < 3; ++c) c_[c] += o.c_[c];
  return *this;
}

VectorField3& VectorField3::operator*=(double a) {
  for (auto& s : c_) s *= a;
  return *this;
}

}  // namespace ensflux
