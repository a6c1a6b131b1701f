#include "ensflux/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include "ensflux/kernels.hpp"

namespace ensflux {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr Complex kI{0.0, 1.0};

}  // namespace

Spectral::Spectral(const GridSpec& grid) : grid_(grid) {
  const int n = grid_.n;
  const double k0 = 2.0 * std::numbers::pi / grid_.length;
  kx_.resize(half());
  ky_.resize(n);
  kz_.resize(n);
  for (int i = 0; i < half(); ++i) kx_[i] = (i == n / 2) ? 0.0 : k0 * i;
  for (int i = 0; i < n; ++i) {
    const double k = (i == n / 2) ? 0.0 : k0 * mode_number(i);
    ky_[i] = k;
    kz_[i] = k;
  }
  const int band = (n - 1) / 3;
  k2_.resize(spectral_size());
  mask_.resize(spectral_size());
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < half(); ++ix) {
        const int mx = ix, my = mode_number(iy), mz = mode_number(iz);
        const std::size_t id = mode_index(ix, iy, iz);
        k2_[id] = k0 * k0 * (double(mx) * mx + double(my) * my + double(mz) * mz);
        mask_[id] = (std::abs(mx) <= band && std::abs(my) <= band && std::abs(mz) <= band) ? 1 : 0;
      }

  RealBuffer real(grid_.size());
  SpectralBuffer spec(spectral_size());
  std::lock_guard lock(planner_mutex());
  plan_r2c_ = fftw_plan_dft_r2c_3d(n, n, n, real.data(), reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
  plan_c2r_ = fftw_plan_dft_c2r_3d(n, n, n, reinterpret_cast<fftw_complex*>(spec.data()), real.data(), FFTW_ESTIMATE);
}

Spectral::~Spectral() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_r2c_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_c2r_));
}

std::shared_ptr<const Spectral> Spectral::for_grid(const GridSpec& grid) {
  static std::mutex m;
  static std::map<std::pair<int, double>, std::shared_ptr<const Spectral>> cache;
  std::lock_guard lock(m);
  auto& slot = cache[{grid.n, grid.length}];
  if (!slot) slot = std::make_shared<Spectral>(grid);
  return slot;
}

void Spectral::forward(std::span<const double> real, std::span<Complex> out) const {
  // FFTW's r2c does not modify its input; the const_cast only satisfies the C API.
  thread_local RealBuffer scratch;
  double* in = const_cast<double*>(real.data());
  if (reinterpret_cast<std::uintptr_t>(in) % 64 != 0) {
    scratch.assign(real.begin(), real.end());
    in = scratch.data();
  }
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_r2c_), in, reinterpret_cast<fftw_complex*>(out.data()));
}

SpectralBuffer Spectral::forward(std::span<const double> real) const {
  SpectralBuffer out(spectral_size());
  forward(real, out);
  return out;
}

void Spectral::inverse(std::span<const Complex> spec, std::span<double> out) const {
  // c2r overwrites its input.
  thread_local SpectralBuffer scratch;
  scratch.assign(spec.begin(), spec.end());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_c2r_), reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (double& v : out) v *= scale;
}

RealBuffer Spectral::inverse(std::span<const Complex> spec) const {
  RealBuffer out(grid_.size());
  inverse(spec, out);
  return out;
}

namespace {

template <class F>
void for_each_mode(const Spectral& sp, F&& f) {
  const int n = sp.grid().n, h = sp.half();
  const auto kx = sp.kx(), ky = sp.ky(), kz = sp.kz();
#pragma omp parallel for schedule(static)
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < h; ++ix) f(sp.mode_index(ix, iy, iz), kx[ix], ky[iy], kz[iz]);
}

std::array<SpectralBuffer, 3> forward3(const Spectral& sp, const VectorField3& v) {
  return {sp.forward(v[0].values()), sp.forward(v[1].values()), sp.forward(v[2].values())};
}

ScalarField to_real(const Spectral& sp, const SpectralBuffer& s) { return ScalarField(sp.grid(), sp.inverse(s)); }

}  // namespace

VectorField3 curl(const VectorField3& v) {
  const auto sp = Spectral::for_grid(v.grid());
  const auto f = forward3(*sp, v);
  std::array<SpectralBuffer, 3> out{SpectralBuffer(sp->spectral_size()), SpectralBuffer(sp->spectral_size()),
                                    SpectralBuffer(sp->spectral_size())};
  for_each_mode(*sp, [&](std::size_t id, double kx, double ky, double kz) {
    out[0][id] = kI * (ky * f[2][id] - kz * f[1][id]);
    out[1][id] = kI * (kz * f[0][id] - kx * f[2][id]);
    out[2][id] = kI * (kx * f[1][id] - ky * f[0][id]);
  });
  return VectorField3(to_real(*sp, out[0]), to_real(*sp, out[1]), to_real(*sp, out[2]));
}

ScalarField divergence(const VectorField3& v) {
  const auto sp = Spectral::for_grid(v.grid());
  const auto f = forward3(*sp, v);
  SpectralBuffer out(sp->spectral_size());
  for_each_mode(*sp, [&](std::size_t id, double kx, double ky, double kz) {
    out[id] = kI * (kx * f[0][id] + ky * f[1][id] + kz * f[2][id]);
  });
  return to_real(*sp, out);
}

namespace {

VectorField3 gradient_from_spectrum(const Spectral& sp, const SpectralBuffer& f) {
  std::array<SpectralBuffer, 3> out{SpectralBuffer(sp.spectral_size()), SpectralBuffer(sp.spectral_size()),
                                    SpectralBuffer(sp.spectral_size())};
  for_each_mode(sp, [&](std::size_t id, double kx, double ky, double kz) {
    out[0][id] = kI * kx * f[id];
    out[1][id] = kI * ky * f[id];
    out[2][id] = kI * kz * f[id];
  });
  return VectorField3(to_real(sp, out[0]), to_real(sp, out[1]), to_real(sp, out[2]));
}

}  // namespace

VectorField3 gradient(const ScalarField& s) {
  const auto sp = Spectral::for_grid(s.grid());
  return gradient_from_spectrum(*sp, sp->forward(s.values()));
}

TensorField3 gradient(const VectorField3& v) {
  const auto sp = Spectral::for_grid(v.grid());
  TensorField3 t;
  for (int c = 0; c < 3; ++c) t.d[c] = gradient_from_spectrum(*sp, sp->forward(v[c].values()));
  return t;
}

ScalarField laplacian(const ScalarField& s) {
  const auto sp = Spectral::for_grid(s.grid());
  SpectralBuffer f = sp->forward(s.values());
  const auto k2 = sp->k_squared();
  for (std::size_t id = 0; id < f.size(); ++id) f[id] *= -k2[id];
  return to_real(*sp, f);
}

VectorField3 leray_project(const VectorField3& v) {
  const auto sp = Spectral::for_grid(v.grid());
  auto f = forward3(*sp, v);
  for_each_mode(*sp, [&](std::size_t id, double kx, double ky, double kz) {
    const double kk = kx * kx + ky * ky + kz * kz;
    if (kk == 0.0) return;
    const Complex kdotf = (kx * f[0][id] + ky * f[1][id] + kz * f[2][id]) / kk;
    f[0][id] -= kx * kdotf;
    f[1][id] -= ky * kdotf;
    f[2][id] -= kz * kdotf;
  });
  return VectorField3(to_real(*sp, f[0]), to_real(*sp, f[1]), to_real(*sp, f[2]));
}

double integrate(const ScalarField& s) { return s.grid().cell_volume() * kernels::omp::sum(s.values()); }

double integrate_product(const ScalarField& a, const ScalarField& b) {
  return a.grid().cell_volume() * kernels::omp::dot(a.values(), b.values());
}

double integrate_squared(const VectorField3& v) {
  const auto x = v[0].values(), y = v[1].values(), z = v[2].values();
  return v.grid().cell_volume() *
         kernels::omp::pairwise_reduce(x.size(), [&](std::size_t i) { return x[i] * x[i] + y[i] * y[i] + z[i] * z[i]; });
}

double divergence_ratio(const VectorField3& v) {
  const ScalarField div = divergence(v);
  const TensorField3 g = gradient(v);
  double grad2 = 0.0;
  for (int c = 0; c < 3; ++c) grad2 += integrate_squared(g.d[c]);
  if (grad2 == 0.0) return 0.0;
  return std::sqrt(integrate_product(div, div) / grad2);
}

FourierInterpolant::FourierInterpolant(const ScalarField& s) : grid_(s.grid()) {
  const auto sp = Spectral::for_grid(grid_);
  coeffs_ = sp->forward(s.values());
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (auto& c : coeffs_) c *= scale;
}

double FourierInterpolant::operator()(const Vec3& x) const {
  const int n = grid_.n, h = n / 2 + 1;
  const double k0 = 2.0 * std::numbers::pi / grid_.length;
  auto mode = [n](int i) { return i <= n / 2 ? i : i - n; };
  std::vector<Complex> ex(h), ey(n), ez(n);
  for (int i = 0; i < h; ++i) ex[i] = std::polar(1.0, k0 * i * x[0]);
  for (int i = 0; i < n; ++i) {
    ey[i] = std::polar(1.0, k0 * mode(i) * x[1]);
    ez[i] = std::polar(1.0, k0 * mode(i) * x[2]);
  }
  double total = 0.0;
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy) {
      const Complex eyz = ey[iy] * ez[iz];
      const Complex* row = coeffs_.data() + static_cast<std::size_t>(h) * (iy + static_cast<std::size_t>(n) * iz);
      double line = 0.0;
      for (int ix = 0; ix < h; ++ix) {
        const double w = (ix == 0 || ix == n / 2) ? 1.0 : 2.0;
        line += w * (row[ix] * ex[ix] * eyz).real();
      }
      total += line;
    }
  return total;
}

}  // namespace ensflux
