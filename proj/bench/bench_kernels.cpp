// Serial reference vs OpenMP kernels, plus one end-to-end forward pass per
// backend. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "waveformer/kernels.hpp"
#include "waveformer/model.hpp"
#include "waveformer/wavelet.hpp"

namespace kn = waveformer::kernels;

namespace {

std::vector<float> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

template <bool Parallel>
void BM_gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const kn::GemmShape s{n, n, n};
  const auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
  std::vector<float> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      kn::parallel::gemm<float>(s, a, b, c, false);
    else
      kn::serial::gemm<float>(s, a, b, c, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

// Patch-embedding shape: C channels, stride-p convolution to d/2 outputs.
template <bool Parallel>
void BM_conv1d(benchmark::State& state) {
  const auto length = static_cast<std::size_t>(state.range(0));
  const kn::ConvShape s{6, length, 64, 8, 8, 1};
  const auto x = random_vec(s.in_channels * length, 3);
  const auto w = random_vec(s.out_channels * s.in_channels * s.kernel, 4);
  const auto bias = random_vec(s.out_channels, 5);
  std::vector<float> out(s.out_channels * s.out_length());
  for (auto _ : state) {
    if constexpr (Parallel)
      kn::parallel::conv1d_forward<float>(s, x, w, bias, out);
    else
      kn::serial::conv1d_forward<float>(s, x, w, bias, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_dwt(benchmark::State& state) {
  const auto length = static_cast<std::size_t>(state.range(0));
  const kn::DwtShape s{8, length};
  const auto f = waveformer::wavelet_filters(waveformer::WaveletFamily::db4);
  const std::vector<float> lo(f.lo.begin(), f.lo.end()), hi(f.hi.begin(), f.hi.end());
  const auto x = random_vec(8 * length, 6);
  std::vector<float> approx(8 * length / 2), detail(8 * length / 2);
  for (auto _ : state) {
    if constexpr (Parallel)
      kn::parallel::dwt_analysis<float>(s, lo, hi, x, approx, detail);
    else
      kn::serial::dwt_analysis<float>(s, lo, hi, x, approx, detail);
    benchmark::DoNotOptimize(approx.data());
  }
}

template <bool Parallel>
void BM_softmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_vec(n * n, 7);
  std::vector<float> out(n * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      kn::parallel::softmax_rows<float>(n, n, x, out);
    else
      kn::serial::softmax_rows<float>(n, n, x, out);
    benchmark::DoNotOptimize(out.data());
  }
}

// Default-size model on a SelfRegulationSCP1-shaped input (C=6, L=896).
template <bool Parallel>
void BM_forward(benchmark::State& state) {
  waveformer::ModelConfig mc;
  mc.channels = 6;
  mc.length = 896;
  mc.classes = 2;
  waveformer::WaveFormer<float> model(mc, 1);
  const auto v = random_vec(6 * 896, 8);
  const auto x = waveformer::Tensor<float>::from({6, 896}, std::vector<float>(v));
  kn::set_backend(Parallel ? kn::Backend::parallel : kn::Backend::serial);
  waveformer::NoGradGuard guard;
  waveformer::Rng rng(0);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x, false, rng));
  kn::set_backend(kn::Backend::parallel);
}

}  // namespace

BENCHMARK(BM_gemm<false>)->Name("gemm/serial")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_gemm<true>)->Name("gemm/parallel")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_conv1d<false>)->Name("conv1d/serial")->Arg(896)->Arg(8192);
BENCHMARK(BM_conv1d<true>)->Name("conv1d/parallel")->Arg(896)->Arg(8192);
BENCHMARK(BM_dwt<false>)->Name("dwt_db4/serial")->Arg(1024)->Arg(16384);
BENCHMARK(BM_dwt<true>)->Name("dwt_db4/parallel")->Arg(1024)->Arg(16384);
BENCHMARK(BM_softmax<false>)->Name("softmax/serial")->Arg(113)->Arg(512);
BENCHMARK(BM_softmax<true>)->Name("softmax/parallel")->Arg(113)->Arg(512);
BENCHMARK(BM_forward<false>)->Name("forward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_forward<true>)->Name("forward/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
