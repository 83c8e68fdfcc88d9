// SPDX-License-Identifier: Apache-2.0
#include "cpsofdm/kernels.hpp"
#include "cpsofdm/qam.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cpsofdm;

namespace {

struct Setup {
  WaveformParams params = cps_cp_params();
  CVector proto = tapered_prototype(2, 24);
  FastTransmitter tx{params, build_precoder(proto, 2, 24)};
  std::vector<CVector> sources;
  Setup() {
    const QamConstellation qam(4, 1.0);
    for (int b = 0; b < 64; ++b) {
      auto rng = make_rng(4, Stream::Bits, static_cast<std::uint64_t>(b));
      Bits bits(184);
      for (auto& x : bits) x = rng() & 1;
      sources.push_back(scatter_data(qam.map(bits), params.data_idx, 48));
    }
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

OsbRegion paper_region() {
  std::vector<int> idx;
  for (int i = 0; i < 24; ++i) idx.push_back(i);
  for (int i = 80; i < 128; ++i) idx.push_back(i);
  return OsbRegion::from_subcarriers(idx, 128);
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double scale = 0.0, worst = 0.0;
  for (size_t k = 0; k < b.size(); ++k) scale = std::max(scale, std::abs(b[k]));
  for (size_t k = 0; k < b.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  return worst / scale;
}

}  // namespace

TEST_CASE("E accumulation: parallel matches serial") {
  const auto& s = setup();
  const auto rule = make_quadrature(paper_region(), s.params.block_len(), 16);
  const CMatrix ser = serial::accumulate_e_matrix(rule, s.proto, s.params);
  const CMatrix par = parallel::accumulate_e_matrix(rule, s.proto, s.params);
  CHECK(oracle::rel_err(par, ser) <= 1e-12);
}

TEST_CASE("uniform PSD: parallel matches serial, including time folding") {
  const auto& s = setup();
  const auto blocks = serial::transmit_batch(s.tx, s.sources);
  for (int count : {1096, 512, 137, 100}) {
    const double theta0 = -kPi + kPi / count;
    const auto ser = serial::psd_average_uniform(blocks, theta0, count);
    const auto par = parallel::psd_average_uniform(blocks, theta0, count);
    REQUIRE(par.size() == static_cast<size_t>(count));
    CHECK(max_rel(par, ser) <= 1e-10);
  }
  // Serial path agrees with the generic grid evaluator.
  const auto grid = uniform_grid(0.1, 64);
  const auto direct = psd_average(blocks, grid);
  const auto ser = serial::psd_average_uniform(blocks, 0.1, 64);
  CHECK(max_rel(ser, direct) <= 1e-12);
}

TEST_CASE("transmit and rcm batches: parallel matches serial") {
  const auto& s = setup();
  const auto ser = serial::transmit_batch(s.tx, s.sources);
  const auto par = parallel::transmit_batch(s.tx, s.sources);
  REQUIRE(ser.size() == par.size());
  for (size_t b = 0; b < ser.size(); ++b) CHECK((ser[b] - par[b]).norm() == 0.0);
  const auto rs = serial::rcm_batch(ser);
  const auto rp = parallel::rcm_batch(ser);
  for (size_t b = 0; b < rs.size(); ++b) CHECK(rs[b] == rp[b]);
  CHECK(serial::transmit_batch(s.tx, {}).empty());
}

TEST_CASE("parallel kernels do not depend on the thread count") {
  const auto& s = setup();
  const int before = worker_count();
  const auto rule = make_quadrature(paper_region(), s.params.block_len(), 16);
  const auto blocks = serial::transmit_batch(s.tx, s.sources);
  set_worker_count(1);
  const CMatrix e1 = parallel::accumulate_e_matrix(rule, s.proto, s.params);
  const auto p1 = parallel::psd_average_uniform(blocks, -kPi, 1096);
  const auto t1 = parallel::transmit_batch(s.tx, s.sources);
  set_worker_count(4);
  CHECK(worker_count() == 4);
  const CMatrix e4 = parallel::accumulate_e_matrix(rule, s.proto, s.params);
  const auto p4 = parallel::psd_average_uniform(blocks, -kPi, 1096);
  const auto t4 = parallel::transmit_batch(s.tx, s.sources);
  set_worker_count(before);
  CHECK((e1 - e4).norm() == 0.0);
  CHECK(p1 == p4);
  for (size_t b = 0; b < t1.size(); ++b) CHECK((t1[b] - t4[b]).norm() == 0.0);
}
