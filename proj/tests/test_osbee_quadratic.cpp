// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>

#include "cpsofdm/osbee_quadratic.hpp"
#include "cpsofdm/qam.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cpsofdm;

namespace {

OsbRegion paper_region() {
  std::vector<int> idx;
  for (int i = 0; i < 24; ++i) idx.push_back(i);
  for (int i = 80; i < 128; ++i) idx.push_back(i);
  return OsbRegion::from_subcarriers(idx, 128);
}

WaveformParams dft_s_params() {
  WaveformParams p;
  p.guard = GuardMode::None;
  p.guard_len = 0;
  p.num_shifts = 1;
  p.num_modulations = 48;
  for (int i = 0; i < 48; ++i) p.data_idx.push_back(i);
  return p;
}

CVector random_source(std::mt19937_64& rng, const WaveformParams& params) {
  static const QamConstellation qam(4, 1.0);
  Bits bits(static_cast<size_t>(4 * params.data_count()));
  for (auto& b : bits) b = rng() & 1;
  return scatter_data(qam.map(bits), params.data_idx, params.subband_size);
}

struct PaperSetup {
  WaveformParams params = cps_cp_params();
  CVector proto = tapered_prototype(2, 24);
  Synthesis syn = build_synthesis(build_precoder(proto, 2, 24), params);
  OsbRegion region = paper_region();
  EMatrix e = build_e_matrix(proto, params, region, 16);
};

const PaperSetup& paper() {
  static const PaperSetup s;
  return s;
}

}  // namespace

TEST_CASE("downshift matrix") {
  CHECK((downshift_matrix(0, 5) - RMatrix::Identity(5, 5)).norm() == 0.0);
  RMatrix swap(2, 2);
  swap << 0, 1, 1, 0;
  CHECK((downshift_matrix(1, 2) - swap).norm() == 0.0);
  RVector v(6);
  v << 0, 1, 2, 3, 4, 5;
  RVector expect(6);
  expect << 4, 5, 0, 1, 2, 3;
  CHECK((downshift_matrix(2, 6) * v - expect).norm() == 0.0);
  CHECK_THROWS_AS(downshift_matrix(6, 6), ParameterError);
  CHECK_THROWS_AS(downshift_matrix(-1, 6), ParameterError);
}

TEST_CASE("dirichlet window") {
  CHECK(dirichlet_window(0.7, 0.7, 137) == cplx(137.0));
  for (double w : {-3.0, 0.0, 2.2}) CHECK(std::abs(dirichlet_window(w, 0.4, 1) - 1.0) <= 1e-15);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int t = 0; t < 20; ++t) {
    const double w = u(rng), c = u(rng);
    cplx naive(0.0);
    for (int n = 0; n < 137; ++n) naive += std::exp(cplx(0.0, -(w - c) * n));
    CHECK(std::abs(dirichlet_window(w, c, 137) - naive) <= 1e-10);
    const double h = 1e-6;
    const cplx fd = (dirichlet_window(w + h, c, 137) - dirichlet_window(w - h, c, 137)) / (2 * h);
    CHECK(std::abs(dirichlet_window_slope(w, c, 137) - fd) <= 1e-4);
  }
  // Near the removable singularity.
  const cplx near = dirichlet_window(1.0 + 1e-12, 1.0, 137);
  CHECK(std::abs(near - 137.0) <= 1e-6);
}

TEST_CASE("u vector reproduces the transmitted spectrum") {
  const auto& s = paper();
  CHECK(build_u_vector(0.3, CVector::Zero(48), s.params).norm() == 0.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int t = 0; t < 20; ++t) {
    const double w = u(rng);
    const CVector c = oracle::random_vector(rng, 48);
    const CVector x = s.syn.full * c;
    const double lhs = std::norm(build_u_vector(w, s.proto, s.params).dot(c));
    CHECK(oracle::rel_err(lhs, oracle::esd_naive(x, w)) <= 1e-8);
  }

  const auto q = dft_s_params();
  const CVector pc = constant_prototype(48);
  const Synthesis syn = build_synthesis(build_precoder(pc, 1, 48), q);
  for (int t = 0; t < 20; ++t) {
    const double w = u(rng);
    const CVector c = oracle::random_vector(rng, 48);
    const double lhs = std::norm(build_u_vector(w, pc, q).dot(c));
    CHECK(oracle::rel_err(lhs, oracle::esd_naive(syn.full * c, w)) <= 1e-8);
  }
}

TEST_CASE("u slope matches central differences") {
  const auto& s = paper();
  for (double w : {-1.3, 0.2, 2.9}) {
    const double h = 1e-6;
    const CVector fd =
        (build_u_vector(w + h, s.proto, s.params) - build_u_vector(w - h, s.proto, s.params)) / (2 * h);
    CHECK(oracle::rel_err(build_u_slope(w, s.proto, s.params), fd) <= 1e-6);
  }
}

TEST_CASE("E matrix full circle gives the block energy") {
  const auto& s = paper();
  const EMatrix full = build_e_matrix(s.proto, s.params, OsbRegion::full_circle(), 16);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const CVector c = oracle::random_vector(rng, 48);
    CHECK(oracle::rel_err(c.dot(full.full * c).real(), (s.syn.full * c).squaredNorm()) <= 1e-6);
  }
}

TEST_CASE("quadratic form matches direct OSBEE over 100 blocks") {
  const auto& s = paper();
  const auto rule = make_quadrature(s.region, s.params.block_len(), 16);
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const CVector c = random_source(rng, s.params);
    const cplx q = c.dot(s.e.full * c);
    const double direct = osbee_direct(s.syn.full * c, rule);
    CHECK(std::abs(q.imag()) <= 1e-10 * std::abs(q.real()));
    worst = std::max(worst, oracle::rel_err(q.real(), direct));
    const CVector cb = gather_data(c, s.params.data_idx);
    CHECK(oracle::rel_err(cb.dot(s.e.data * cb).real(), direct) <= 1e-6);
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("grid refinement changes the quadratic form by less than 1e-6") {
  const auto& s = paper();
  const EMatrix fine = build_e_matrix(s.proto, s.params, s.region, 32);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const CVector c = random_source(rng, s.params);
    CHECK(oracle::rel_err(c.dot(fine.full * c).real(), c.dot(s.e.full * c).real()) <= 1e-6);
  }
}

TEST_CASE("polarization probes recover E entries") {
  const auto& s = paper();
  auto q = [&](const CVector& c) { return osbee_direct(s.syn.full * c, s.region, 16); };
  const double scale = s.e.full.cwiseAbs().maxCoeff();
  for (int i : {0, 7, 25, 47})
    for (int j : {1, 13, 24, 40}) {
      const cplx probe = oracle::polarize(q, 48, i, j);
      CHECK(std::abs(probe - s.e.full(i, j)) <= 1e-8 * std::max(1.0, scale));
    }
}

TEST_CASE("E is Hermitian and E_bar positive definite after loading") {
  for (const auto& proto : {tapered_prototype(2, 24), constant_prototype(48)}) {
    const auto& s = paper();
    const EMatrix e = build_e_matrix(proto, s.params, s.region, 16);
    CHECK((e.full - e.full.adjoint()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(e.data.rows() == 46);
    const double trace = e.data.trace().real();
    // Numerically semidefinite before loading; strictly definite after.
    CHECK(e.min_eigenvalue >= -1e-12 * trace);
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(e.data, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    CHECK(e.data.llt().info() == Eigen::Success);
  }
  CHECK_THROWS_AS(build_e_matrix(tapered_prototype(2, 24), cps_cp_params(), OsbRegion{}, 16), ParameterError);
}

TEST_CASE("matrix cache roundtrip and key checks") {
  const auto& s = paper();
  const auto dir = std::filesystem::temp_directory_path() / "cpsofdm_ecache_test";
  std::filesystem::remove_all(dir);
  const EMatrix first = cached_e_matrix(dir, s.proto, s.params, s.region, 16);
  const EMatrix second = cached_e_matrix(dir, s.proto, s.params, s.region, 16);
  CHECK((first.full - second.full).norm() == 0.0);
  CHECK((first.data - second.data).norm() == 0.0);
  CHECK((first.full - s.e.full).cwiseAbs().maxCoeff() <= 1e-15 * s.e.full.cwiseAbs().maxCoeff());

  const auto key = e_matrix_key(s.proto, s.params, s.region, 16);
  CHECK(key.size() == 64);
  CHECK(key != e_matrix_key(s.proto, s.params, s.region, 8));
  CHECK(key != e_matrix_key(constant_prototype(48), s.params, s.region, 16));
  const auto path = dir / ("E_" + key.substr(0, 16) + ".bin");
  CHECK(std::filesystem::exists(path));
  CHECK_THROWS_AS(read_matrix_file(path, std::string(64, '0')), ParameterError);
  CHECK((read_matrix_file(path) - first.full).norm() == 0.0);
  {
    std::ofstream out(dir / "junk.bin", std::ios::binary);
    out << "NOPE";
  }
  CHECK_THROWS_AS(read_matrix_file(dir / "junk.bin"), ParameterError);
  std::filesystem::remove_all(dir);
}
