// SPDX-License-Identifier: Apache-2.0
// Serial reference kernels against their OpenMP counterparts, plus the
// per-block shaping solve. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "cpsofdm/harness.hpp"
#include "cpsofdm/kernels.hpp"

using namespace cpsofdm;

namespace {

struct Fixture {
  WaveformParams params = cps_cp_params();
  CVector proto = tapered_prototype(2, 24);
  CMatrix precoder = build_precoder(proto, 2, 24);
  FastTransmitter tx{params, precoder};
  OsbRegion region;
  QuadratureRule rule;
  std::vector<CVector> sources;
  std::vector<CVector> blocks;

  Fixture() {
    std::vector<int> osb;
    for (int i = 0; i < 24; ++i) osb.push_back(i);
    for (int i = 80; i < 128; ++i) osb.push_back(i);
    region = OsbRegion::from_subcarriers(osb, params.fft_size);
    rule = make_quadrature(region, params.block_len(), 16);
    const QamConstellation qam(4, 1.0);
    for (int b = 0; b < 512; ++b) {
      auto rng = make_rng(1, Stream::Bits, static_cast<std::uint64_t>(b));
      Bits bits(static_cast<size_t>(4 * params.data_count()));
      for (auto& x : bits) x = rng() & 1;
      sources.push_back(scatter_data(qam.map(bits), params.data_idx, params.subband_size));
    }
    blocks = serial::transmit_batch(tx, sources);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_EMatrixSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(serial::accumulate_e_matrix(f.rule, f.proto, f.params));
}
void BM_EMatrixParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(parallel::accumulate_e_matrix(f.rule, f.proto, f.params));
}

void BM_PsdSerial(benchmark::State& state) {
  const auto& f = fixture();
  const std::span<const CVector> blocks(f.blocks.data(), 64);
  for (auto _ : state) benchmark::DoNotOptimize(serial::psd_average_uniform(blocks, -kPi, 1024));
}
void BM_PsdParallel(benchmark::State& state) {
  const auto& f = fixture();
  const std::span<const CVector> blocks(f.blocks.data(), 64);
  for (auto _ : state) benchmark::DoNotOptimize(parallel::psd_average_uniform(blocks, -kPi, 1024));
}

void BM_TransmitSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(serial::transmit_batch(f.tx, f.sources));
}
void BM_TransmitParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(parallel::transmit_batch(f.tx, f.sources));
}

void BM_RcmSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(serial::rcm_batch(f.blocks));
}
void BM_RcmParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(parallel::rcm_batch(f.blocks));
}

void BM_ShapeBlock(benchmark::State& state) {
  const auto& f = fixture();
  static const EMatrix e = build_e_matrix(f.proto, f.params, f.region, 16);
  const Synthesis syn = build_synthesis(f.precoder, f.params);
  static const OffsetShaper shaper(syn.data, e.data);
  const double evm = db_to_linear_amplitude(static_cast<double>(state.range(0)));
  size_t b = 0;
  for (auto _ : state) {
    const CVector d = gather_data(f.sources[b++ % f.sources.size()], f.params.data_idx);
    benchmark::DoNotOptimize(shaper.solve(d, evm));
  }
}

}  // namespace

BENCHMARK(BM_EMatrixSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EMatrixParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PsdSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PsdParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TransmitSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TransmitParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RcmSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_RcmParallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ShapeBlock)->Arg(-13)->Arg(-10)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
