#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "ensflux/grid.hpp"

namespace ensflux {

using Complex = std::complex<double>;
using SpectralBuffer = AlignedVector<Complex>;

/// Real-to-complex FFT plans and wavenumber tables for one grid.
///
/// The half-spectrum is stored as (kz, ky, kx) with kx fastest and
/// kx in [0, n/2]. Plans are built with FFTW_ESTIMATE so transforms are
/// bitwise reproducible between processes. Instances are immutable and
/// safe to share between threads.
class Spectral {
 public:
  explicit Spectral(const GridSpec& grid);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  /// Shared instance for `grid` (built once, then cached).
  static std::shared_ptr<const Spectral> for_grid(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  int half() const { return grid_.n / 2 + 1; }
  std::size_t spectral_size() const { return static_cast<std::size_t>(grid_.n) * grid_.n * half(); }
  std::size_t mode_index(int ix, int iy, int iz) const {
    return static_cast<std::size_t>(ix) + static_cast<std::size_t>(half()) * (iy + static_cast<std::size_t>(grid_.n) * iz);
  }

  /// Signed integer mode number of storage index i on a full axis.
  int mode_number(int i) const { return i <= grid_.n / 2 ? i : i - grid_.n; }

  /// Wavenumber used for first derivatives (zero on the Nyquist plane).
  std::span<const double> kx() const { return kx_; }
  std::span<const double> ky() const { return ky_; }
  std::span<const double> kz() const { return kz_; }
  /// |k|^2 including the Nyquist plane, per half-spectrum mode.
  std::span<const double> k_squared() const { return k2_; }
  /// 1 where every |m_a| <= (n-1)/3 (2/3-rule band), else 0.
  std::span<const unsigned char> dealias_mask() const { return mask_; }

  SpectralBuffer forward(std::span<const double> real) const;
  void forward(std::span<const double> real, std::span<Complex> out) const;
  /// Normalised inverse; `spec` is left untouched.
  RealBuffer inverse(std::span<const Complex> spec) const;
  void inverse(std::span<const Complex> spec, std::span<double> out) const;

 private:
  GridSpec grid_;
  void* plan_r2c_ = nullptr;
  void* plan_c2r_ = nullptr;
  std::vector<double> kx_, ky_, kz_, k2_;
  std::vector<unsigned char> mask_;
};

// Differential operators and quadrature on periodic fields. All derivatives
// are spectral; first derivatives drop the Nyquist mode.

VectorField3 curl(const VectorField3& v);
ScalarField divergence(const VectorField3& v);
VectorField3 gradient(const ScalarField& s);
ScalarField laplacian(const ScalarField& s);
/// d[c][a] = d v_c / d x_a.
TensorField3 gradient(const VectorField3& v);
/// Helmholtz projection onto divergence-free fields; the mean mode is kept.
VectorField3 leray_project(const VectorField3& v);

/// dx^3 times the pairwise sum of the values (fixed reduction order).
double integrate(const ScalarField& s);
/// integrate(a * b) without materialising the product.
double integrate_product(const ScalarField& a, const ScalarField& b);
/// integrate(|v|^2).
double integrate_squared(const VectorField3& v);

/// ||div v||_2 / ||grad v||_2 (0 for a constant field).
double divergence_ratio(const VectorField3& v);

/// Band-limited trigonometric interpolation of a grid field at an arbitrary
/// point. O(n^3) per call; intended for validation at small n.
class FourierInterpolant {
 public:
  explicit FourierInterpolant(const ScalarField& s);
  double operator()(const Vec3& x) const;

 private:
  GridSpec grid_;
  SpectralBuffer coeffs_;
};

}  // namespace ensflux
