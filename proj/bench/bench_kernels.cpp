// Serial reference vs OpenMP kernels on n^3 grids.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ensflux/kernels.hpp"

namespace k = ensflux::kernels;

namespace {

struct Data {
  std::vector<std::vector<double>> in;
  std::vector<std::vector<double>> out;
  explicit Data(std::size_t size, int n_in = 12, int n_out = 6) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d;
    in.assign(n_in, std::vector<double>(size));
    out.assign(n_out, std::vector<double>(size));
    for (auto& v : in)
      for (double& x : v) x = d(rng);
  }
  k::CVec cvec(int first) const { return {in[first], in[first + 1], in[first + 2]}; }
  k::MVec mvec(int first) { return {out[first], out[first + 1], out[first + 2]}; }
};

std::size_t cells(const benchmark::State& s) {
  const auto n = static_cast<std::size_t>(s.range(0));
  return n * n * n;
}

template <bool Parallel>
void BM_dot(benchmark::State& s) {
  Data d(cells(s), 2, 0);
  for (auto _ : s) benchmark::DoNotOptimize(Parallel ? k::omp::dot(d.in[0], d.in[1]) : k::serial::dot(d.in[0], d.in[1]));
  s.SetItemsProcessed(static_cast<std::int64_t>(s.iterations() * cells(s)));
}

template <bool Parallel>
void BM_mhd_products(benchmark::State& s) {
  Data d(cells(s));
  for (auto _ : s) {
    if (Parallel)
      k::omp::mhd_products(d.cvec(0), d.cvec(3), d.cvec(6), d.cvec(9), d.mvec(0), d.mvec(3));
    else
      k::serial::mhd_products(d.cvec(0), d.cvec(3), d.cvec(6), d.cvec(9), d.mvec(0), d.mvec(3));
    benchmark::ClobberMemory();
  }
  s.SetItemsProcessed(static_cast<std::int64_t>(s.iterations() * cells(s)));
}

template <bool Parallel>
void BM_accumulate_directional(benchmark::State& s) {
  Data d(cells(s), 15, 1);
  const std::array<k::CVec, 3> grad{d.cvec(3), d.cvec(6), d.cvec(9)};
  for (auto _ : s) {
    if (Parallel)
      k::omp::accumulate_directional(0.5, d.cvec(0), grad, d.cvec(12), d.out[0]);
    else
      k::serial::accumulate_directional(0.5, d.cvec(0), grad, d.cvec(12), d.out[0]);
    benchmark::ClobberMemory();
  }
  s.SetItemsProcessed(static_cast<std::int64_t>(s.iterations() * cells(s)));
}

template <bool Parallel>
void BM_patch_weighted_sum(benchmark::State& s) {
  const int n = static_cast<int>(s.range(0));
  Data d(cells(s), 1, 0);
  const std::array<int, 3> lo{-n / 4, -n / 4, -n / 4}, extent{n / 2, n / 2, n / 2};
  std::vector<double> w(static_cast<std::size_t>(extent[0]) * extent[1] * extent[2], 0.25);
  for (auto _ : s)
    benchmark::DoNotOptimize(Parallel ? k::omp::patch_weighted_sum(d.in[0], n, lo, extent, w)
                                      : k::serial::patch_weighted_sum(d.in[0], n, lo, extent, w));
  s.SetItemsProcessed(static_cast<std::int64_t>(s.iterations() * w.size()));
}

}  // namespace

BENCHMARK(BM_dot<false>)->Name("dot/serial")->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_dot<true>)->Name("dot/omp")->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_mhd_products<false>)->Name("mhd_products/serial")->Arg(32)->Arg(64);
BENCHMARK(BM_mhd_products<true>)->Name("mhd_products/omp")->Arg(32)->Arg(64);
BENCHMARK(BM_accumulate_directional<false>)->Name("accumulate_directional/serial")->Arg(32)->Arg(64);
BENCHMARK(BM_accumulate_directional<true>)->Name("accumulate_directional/omp")->Arg(32)->Arg(64);
BENCHMARK(BM_patch_weighted_sum<false>)->Name("patch_weighted_sum/serial")->Arg(64);
BENCHMARK(BM_patch_weighted_sum<true>)->Name("patch_weighted_sum/omp")->Arg(64);

BENCHMARK_MAIN();
