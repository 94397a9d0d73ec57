// Serial reference vs OpenMP kernels on model- and pool-sized inputs.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "seqfed/kernels.hpp"

namespace {

namespace k = seqfed::kernels;

std::vector<double> filled(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

template <auto Kernel>
void dense_forward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const std::size_t fan_in = 256, fan_out = 256;
  const auto in = filled(batch * fan_in, 1);
  const auto w = filled(fan_out * fan_in, 2);
  const auto b = filled(fan_out, 3);
  std::vector<double> out(batch * fan_out);
  for (auto _ : state) {
    Kernel(in, w, b, out, batch, fan_in, fan_out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch * fan_in * fan_out));
}

template <auto Kernel>
void dense_backward_params(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const std::size_t fan_in = 256, fan_out = 256;
  const auto delta = filled(batch * fan_out, 1);
  const auto in = filled(batch * fan_in, 2);
  std::vector<double> gw(fan_out * fan_in), gb(fan_out);
  for (auto _ : state) {
    Kernel(delta, in, gw, gb, batch, fan_in, fan_out);
    benchmark::DoNotOptimize(gw.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch * fan_in * fan_out));
}

template <auto Kernel>
void mean_rows(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const std::size_t count = 6;
  const auto rows = filled(count * width, 4);
  std::vector<double> out(width);
  for (auto _ : state) {
    Kernel(rows, out, count, width);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(count * width * sizeof(double)));
}

template <auto Kernel>
void distances_to(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const std::size_t count = 6;
  const auto rows = filled(count * width, 5);
  const auto x = filled(width, 6);
  std::vector<double> out(count);
  for (auto _ : state) {
    Kernel(rows, x, out, count, width);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(count * width * sizeof(double)));
}

}  // namespace

BENCHMARK(dense_forward<k::serial::dense_forward>)->Name("dense_forward/serial")->Arg(32)->Arg(256);
BENCHMARK(dense_forward<k::omp::dense_forward>)->Name("dense_forward/omp")->Arg(32)->Arg(256);
BENCHMARK(dense_backward_params<k::serial::dense_backward_params>)->Name("dense_backward_params/serial")->Arg(32)->Arg(256);
BENCHMARK(dense_backward_params<k::omp::dense_backward_params>)->Name("dense_backward_params/omp")->Arg(32)->Arg(256);
BENCHMARK(mean_rows<k::serial::mean_rows>)->Name("mean_rows/serial")->Arg(1 << 12)->Arg(1 << 20);
BENCHMARK(mean_rows<k::omp::mean_rows>)->Name("mean_rows/omp")->Arg(1 << 12)->Arg(1 << 20);
BENCHMARK(distances_to<k::serial::distances_to>)->Name("distances_to/serial")->Arg(1 << 12)->Arg(1 << 20);
BENCHMARK(distances_to<k::omp::distances_to>)->Name("distances_to/omp")->Arg(1 << 12)->Arg(1 << 20);

BENCHMARK_MAIN();
