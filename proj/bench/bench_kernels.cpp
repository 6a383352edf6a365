// OpenMP kernels against their serial references at the model's layer sizes.

#include <benchmark/benchmark.h>

#include <vector>

#include "salguide/kernels.hpp"
#include "salguide/rng.hpp"

namespace {

using salguide::kernels::ConvGeometry;

// (batch, in_channels, out_channels, side) of each conv stage at defaults.
ConvGeometry stage(std::int64_t index) {
  static const std::size_t in_c[] = {1, 8, 16};
  static const std::size_t out_c[] = {8, 16, 16};
  static const std::size_t side[] = {64, 32, 16};
  ConvGeometry g;
  g.batch = 12;
  g.in_channels = in_c[index];
  g.out_channels = out_c[index];
  g.in_h = g.in_w = side[index];
  g.kernel_h = g.kernel_w = 3;
  g.padding = 1;
  return g;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  salguide::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <auto Kernel>
void forward(benchmark::State& state) {
  const auto g = stage(state.range(0));
  const auto x = random_values(g.input_size(), 1);
  const auto k = random_values(g.kernel_size(), 2);
  std::vector<double> out(g.output_size());
  for (auto _ : state) {
    Kernel(g, x, k, out);
    benchmark::DoNotOptimize(out.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(g.output_size() * g.in_channels * 9));
}

template <auto Kernel>
void input_grad(benchmark::State& state) {
  const auto g = stage(state.range(0));
  const auto go = random_values(g.output_size(), 3);
  const auto k = random_values(g.kernel_size(), 2);
  std::vector<double> out(g.input_size());
  for (auto _ : state) {
    Kernel(g, go, k, out);
    benchmark::DoNotOptimize(out.data());
    benchmark::ClobberMemory();
  }
}

template <auto Kernel>
void kernel_grad(benchmark::State& state) {
  const auto g = stage(state.range(0));
  const auto x = random_values(g.input_size(), 1);
  const auto go = random_values(g.output_size(), 3);
  std::vector<double> out(g.kernel_size());
  for (auto _ : state) {
    Kernel(g, x, go, out);
    benchmark::DoNotOptimize(out.data());
    benchmark::ClobberMemory();
  }
}

namespace k = salguide::kernels;
namespace r = salguide::kernels::reference;

BENCHMARK(forward<k::conv2d_forward>)->Name("conv2d_forward/omp")->DenseRange(0, 2);
BENCHMARK(forward<r::conv2d_forward>)->Name("conv2d_forward/serial")->DenseRange(0, 2);
BENCHMARK(input_grad<k::conv2d_input_grad>)->Name("conv2d_input_grad/omp")->DenseRange(1, 2);
BENCHMARK(input_grad<r::conv2d_input_grad>)->Name("conv2d_input_grad/serial")->DenseRange(1, 2);
BENCHMARK(kernel_grad<k::conv2d_kernel_grad>)->Name("conv2d_kernel_grad/omp")->DenseRange(0, 2);
BENCHMARK(kernel_grad<r::conv2d_kernel_grad>)->Name("conv2d_kernel_grad/serial")->DenseRange(0, 2);

}  // namespace

BENCHMARK_MAIN();
