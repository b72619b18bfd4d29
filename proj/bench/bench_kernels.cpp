// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS to vary the
// thread count; on a single core the two should be within noise.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gvhoi/kernels/kernels.hpp"

namespace k = gvhoi::kernels;

namespace {

std::vector<float> random_vec(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<float> d;
  std::vector<float> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

std::vector<std::uint8_t> random_mask(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::bernoulli_distribution d(0.85);
  std::vector<std::uint8_t> m(n);
  for (auto& x : m) x = d(gen);
  return m;
}

template <bool Parallel>
void BM_gemm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_vec(static_cast<std::size_t>(n * n), 1);
  const auto b = random_vec(static_cast<std::size_t>(n * n), 2);
  std::vector<float> c(static_cast<std::size_t>(n * n));
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::gemm_nn(n, n, n, a.data(), b.data(), c.data(), false);
    } else {
      k::reference::gemm_nn(n, n, n, a.data(), b.data(), c.data(), false);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}

// Frames of a clip with 5 entities of 17 keypoints at C1 = 32.
template <bool Parallel>
void BM_gat(benchmark::State& state) {
  const k::GatShape shape{static_cast<int>(state.range(0)), 85, 32, 1};
  const k::GatOptions opt;
  const std::size_t fnc = static_cast<std::size_t>(shape.frames) * shape.nodes * shape.channels;
  const auto h = random_vec(fnc, 3);
  const auto mask = random_mask(static_cast<std::size_t>(shape.frames) * shape.nodes, 4);
  const auto attn = random_vec(2 * static_cast<std::size_t>(shape.channels), 5);
  const auto dout = random_vec(fnc, 6);
  std::vector<float> out(fnc), dh(fnc), dattn(2 * static_cast<std::size_t>(shape.channels));
  std::vector<float> alpha(static_cast<std::size_t>(shape.frames) * shape.nodes * shape.nodes);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::gat_forward(shape, opt, h.data(), mask.data(), attn.data(), out.data(), alpha.data());
      k::gat_backward(shape, opt, h.data(), mask.data(), attn.data(), alpha.data(), dout.data(), dh.data(), dattn.data());
    } else {
      k::reference::gat_forward(shape, opt, h.data(), mask.data(), attn.data(), out.data(), alpha.data());
      k::reference::gat_backward(shape, opt, h.data(), mask.data(), attn.data(), alpha.data(), dout.data(), dh.data(),
                                 dattn.data());
    }
    benchmark::DoNotOptimize(dh.data());
  }
  state.SetItemsProcessed(state.iterations() * shape.frames);
}

template <bool Parallel>
void BM_neighbor(benchmark::State& state) {
  const k::NeighborShape shape{static_cast<int>(state.range(0)), 5, 64};
  const std::size_t fe = static_cast<std::size_t>(shape.frames) * shape.entities;
  const std::size_t n1 = static_cast<std::size_t>(shape.entities - 1);
  const auto s = random_vec(fe * shape.channels, 7);
  const auto mask = random_mask(fe, 8);
  const auto dctx = random_vec(fe * shape.channels, 9);
  std::vector<float> ctx(fe * shape.channels), ds(fe * shape.channels), weight(fe * n1), probs(fe * n1 * n1);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::neighbor_forward(shape, k::NeighborQuery::neighbor, s.data(), mask.data(), ctx.data(), weight.data(), probs.data());
      k::neighbor_backward(shape, k::NeighborQuery::neighbor, s.data(), mask.data(), weight.data(), probs.data(),
                           dctx.data(), ds.data());
    } else {
      k::reference::neighbor_forward(shape, k::NeighborQuery::neighbor, s.data(), mask.data(), ctx.data(),
                                     weight.data(), probs.data());
      k::reference::neighbor_backward(shape, k::NeighborQuery::neighbor, s.data(), mask.data(), weight.data(),
                                      probs.data(), dctx.data(), ds.data());
    }
    benchmark::DoNotOptimize(ds.data());
  }
  state.SetItemsProcessed(state.iterations() * shape.frames);
}

}  // namespace

BENCHMARK(BM_gemm<false>)->Name("gemm/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_gemm<true>)->Name("gemm/openmp")->Arg(64)->Arg(256);
BENCHMARK(BM_gat<false>)->Name("gat/serial")->Arg(50)->Arg(200);
BENCHMARK(BM_gat<true>)->Name("gat/openmp")->Arg(50)->Arg(200);
BENCHMARK(BM_neighbor<false>)->Name("neighbor/serial")->Arg(200)->Arg(2000);
BENCHMARK(BM_neighbor<true>)->Name("neighbor/openmp")->Arg(200)->Arg(2000);

BENCHMARK_MAIN();
