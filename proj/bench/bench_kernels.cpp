// Serial reference kernels against the blocked parallel ones.
//   grouse_bench --benchmark_filter=CrossGram

#include <benchmark/benchmark.h>

#include "grouse/kernels.hpp"
#include "grouse/random.hpp"

namespace {

using grouse::Mat;
using grouse::Vec;
namespace kernels = grouse::kernels;

struct Inputs {
  Mat ubar, u, a;
  Vec left, right;
};

Inputs make_inputs(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const auto d = static_cast<Eigen::Index>(state.range(1));
  grouse::Rng rng(1);
  Inputs in{rng.gaussian_mat(n, d), rng.gaussian_mat(n, d), Mat(), rng.gaussian_vec(n), rng.gaussian_vec(d)};
  in.a = in.ubar.transpose() * in.u;
  return in;
}

void set_counters(benchmark::State& state) {
  state.counters["threads"] = kernels::thread_count();
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

template <Mat (*Kernel)(const Mat&, const Mat&)>
void CrossGram(benchmark::State& state) {
  const Inputs in = make_inputs(state);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(in.ubar, in.u));
  set_counters(state);
}

template <double (*Kernel)(const Mat&, const Mat&, const Mat&)>
void ResidualFrobenius(benchmark::State& state) {
  const Inputs in = make_inputs(state);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(in.u, in.ubar, in.a));
  set_counters(state);
}

template <void (*Kernel)(Mat&, const Vec&, const Vec&)>
void RankOneUpdate(benchmark::State& state) {
  Inputs in = make_inputs(state);
  for (auto _ : state) {
    Kernel(in.u, in.left, in.right);
    benchmark::ClobberMemory();
  }
  set_counters(state);
}

void shapes(benchmark::internal::Benchmark* b) {
  for (long n : {1000, 10000, 100000}) {
    for (long d : {10, 50}) b->Args({n, d});
  }
  b->ArgNames({"n", "d"});
}

}  // namespace

BENCHMARK(CrossGram<kernels::reference::cross_gram>)->Name("CrossGram/serial")->Apply(shapes);
BENCHMARK(CrossGram<kernels::cross_gram>)->Name("CrossGram/parallel")->Apply(shapes);
BENCHMARK(ResidualFrobenius<kernels::reference::residual_frobenius_sq>)->Name("ResidualFrobenius/serial")->Apply(shapes);
BENCHMARK(ResidualFrobenius<kernels::residual_frobenius_sq>)->Name("ResidualFrobenius/parallel")->Apply(shapes);
BENCHMARK(RankOneUpdate<kernels::reference::rank_one_update>)->Name("RankOneUpdate/serial")->Apply(shapes);
BENCHMARK(RankOneUpdate<kernels::rank_one_update>)->Name("RankOneUpdate/parallel")->Apply(shapes);

BENCHMARK_MAIN();
