// SPDX-License-Identifier: Apache-2.0
#include "cpsofdm/link.hpp"
#include "cpsofdm/qam.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cpsofdm;

namespace {

CMatrix data_columns(const CMatrix& precoder, const WaveformParams& params) {
  CMatrix m(params.subband_size, params.data_count());
  for (int j = 0; j < params.data_count(); ++j) m.col(j) = precoder.col(params.data_idx[static_cast<size_t>(j)]);
  return m;
}

// Tone amplitude at an exact DFT bin of a length-n record.
cplx tone(const CVector& x, int bin) {
  cplx acc(0.0);
  for (Eigen::Index k = 0; k < x.size(); ++k) acc += x(k) * std::polar(1.0, -kTwoPi * bin * double(k) / double(x.size()));
  return acc / double(x.size());
}

}  // namespace

TEST_CASE("channel application") {
  std::mt19937_64 rng(1);
  const CVector x = oracle::random_vector(rng, 50);
  CHECK((apply_channel(x, ChannelModel{}, 0.0, rng) - x).norm() == 0.0);

  ChannelModel delay;
  delay.taps = CVector::Zero(2);
  delay.taps(1) = 1.0;
  const CVector y = apply_channel(x, delay, 0.0, rng);
  CHECK(y(0) == 0.0);
  CHECK((y.tail(49) - x.head(49)).norm() == 0.0);

  ChannelModel three;
  three.taps = oracle::random_vector(rng, 3);
  CHECK(oracle::rel_err(apply_channel(x, three, 0.0, rng), oracle::convolve_naive(x, three.taps)) <= 1e-12);

  CHECK_THROWS_AS(apply_channel(CVector(0), three, 0.0, rng), ParameterError);
  CHECK_THROWS_AS(apply_channel(x, three, -1.0, rng), ParameterError);
}

TEST_CASE("channel noise variance and seeding") {
  const CVector zero = CVector::Zero(20000);
  auto a = make_rng(5, Stream::Noise, 0), b = make_rng(5, Stream::Noise, 0);
  const CVector n1 = apply_channel(zero, ChannelModel{}, 0.25, a);
  const CVector n2 = apply_channel(zero, ChannelModel{}, 0.25, b);
  CHECK((n1 - n2).norm() == 0.0);
  const double mean = n1.squaredNorm() / double(n1.size());
  // |z|^2 is exponential with std equal to its mean.
  CHECK(std::abs(mean - 0.25) <= 3.0 * 0.25 / std::sqrt(double(n1.size())));
}

TEST_CASE("channel profiles") {
  auto rng = make_rng(1, Stream::Channel, 0);
  const auto id = ChannelProfile::identity();
  CHECK(id.is_identity());
  CHECK(draw_channel(id, rng).taps.size() == 1);
  CHECK(draw_channel(id, rng).taps(0) == cplx(1.0));

  const auto tdl = ChannelProfile::default_tdl();
  CHECK(tdl.taps.size() == 5);
  CHECK(tdl.order() == 4);
  CHECK(std::abs(tdl.rms_delay_spread(1.92e6) - 300e-9) <= 1e-12);
  CHECK(tdl.order() <= cps_cp_params().guard_len);

  // Average tap powers follow the normalized profile.
  double total = 0.0;
  for (const auto& t : tdl.taps) total += db_to_linear_power(t.power_db);
  const int draws = 20000;
  RVector acc = RVector::Zero(5);
  for (int k = 0; k < draws; ++k) {
    auto r = make_rng(3, Stream::Channel, static_cast<std::uint64_t>(k));
    const auto ch = draw_channel(tdl, r);
    for (int l = 0; l < 5; ++l) acc(l) += std::norm(ch.taps(l));
  }
  for (int l = 0; l < 5; ++l) {
    const double expect = db_to_linear_power(tdl.taps[static_cast<size_t>(l)].power_db) / total;
    CHECK(std::abs(acc(l) / draws - expect) <= 4.0 * expect / std::sqrt(double(draws)));
  }

  ChannelProfile bad;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad.taps = {{-1, 0.0}};
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("PA models") {
  std::mt19937_64 rng(2);
  const CVector x = oracle::random_vector(rng, 100);
  PaModel ideal;
  CHECK((pa_apply(x, ideal) - x).norm() == 0.0);

  PaModel rapp;
  rapp.kind = PaKind::Rapp;
  rapp.ibo_db = 60.0;  // deep in the linear region
  CHECK(oracle::rel_err(pa_apply(x, rapp), x) <= 1e-6);
  rapp.ibo_db = 0.0;
  const CVector sat = pa_apply(x, rapp);
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    CHECK(std::abs(sat(n)) <= std::abs(x(n)) * (1.0 + 1e-12));
    CHECK(std::abs(std::arg(sat(n) / x(n))) <= 1e-12);
  }

  PaModel bad = rapp;
  bad.smoothness = 0.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = rapp;
  bad.ibo_db = std::nan("");
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  CHECK_THROWS_AS(pa_kind_from_name("tube"), ParameterError);
  CHECK(pa_kind_from_name(pa_kind_name(PaKind::Polynomial)) == PaKind::Polynomial);
  CHECK(default_phase_comp_deg(PaKind::Polynomial) == 76.3);
}

TEST_CASE("polynomial PA tone levels") {
  PaModel poly;
  poly.kind = PaKind::Polynomial;
  poly.coeffs = {cplx(1.0), cplx(-0.1), cplx(0.0), cplx(0.0), cplx(0.0)};
  poly.reference_power = 1.0;  // unit gain ahead of the nonlinearity at 0 dB backoff
  const int n = 64;
  const double amp = 0.8;

  CVector single(n);
  for (int k = 0; k < n; ++k) single(k) = amp * std::polar(1.0, kTwoPi * 5 * k / n);
  const CVector ys = pa_apply(single, poly);
  CHECK(std::abs(tone(ys, 5) - cplx(amp - 0.1 * amp * amp * amp)) <= 1e-12);
  CHECK(std::abs(tone(ys, 15)) <= 1e-12);

  // Two tones: x |x|^2 puts 3 A^3 on each fundamental and A^3 on 2 w1 - w2, 2 w2 - w1.
  CVector two(n);
  for (int k = 0; k < n; ++k) two(k) = amp * (std::polar(1.0, kTwoPi * 5 * k / n) + std::polar(1.0, kTwoPi * 9 * k / n));
  const CVector yt = pa_apply(two, poly);
  const double a3 = amp * amp * amp;
  CHECK(std::abs(tone(yt, 5) - cplx(amp - 0.3 * a3)) <= 1e-12);
  CHECK(std::abs(tone(yt, 9) - cplx(amp - 0.3 * a3)) <= 1e-12);
  CHECK(std::abs(tone(yt, 1) - cplx(-0.1 * a3)) <= 1e-12);
  CHECK(std::abs(tone(yt, 13) - cplx(-0.1 * a3)) <= 1e-12);
  CHECK(std::abs(tone(yt, 17)) <= 1e-12);

  // Phase compensation rotates the output.
  poly.phase_comp_deg = 90.0;
  CHECK(std::abs(tone(pa_apply(single, poly), 5) - cplx(0.0, -(amp - 0.1 * a3))) <= 1e-12);
}

TEST_CASE("noise variance mapping") {
  CHECK(noise_variance(0.0, 1.0, 4) == doctest::Approx(0.25));
  const double n0 = noise_variance(7.0, 1.0, 4);
  CHECK(std::abs(noise_variance(7.0 + 10.0 * std::log10(2.0), 1.0, 4) - 0.5 * n0) <= 1e-15);
  CHECK_THROWS_AS(noise_variance(0.0, 1.0, 0), ParameterError);
}

TEST_CASE("receive block inverts the transmit chain") {
  std::mt19937_64 rng(3);
  for (const auto& params : {cps_cp_params(), cps_nogi_params()}) {
    const CMatrix P = build_precoder(tapered_prototype(2, 24), 2, 24);
    const Synthesis syn = build_synthesis(P, params);
    const CVector c = oracle::random_vector(rng, 48);
    const CVector r = receive_block(syn.full * c, params);
    CHECK(oracle::rel_err(r, P * c) <= 1e-10);
    CHECK_THROWS_AS(receive_block(CVector::Zero(params.block_len() + 1), params), ParameterError);
  }
  // NoGI keeps every sample: a block of length N is accepted as is.
  CHECK(receive_block(CVector::Zero(128), cps_nogi_params()).size() == 48);
}

TEST_CASE("CP removal diagonalizes channels no longer than the guard") {
  std::mt19937_64 rng(4);
  const auto params = cps_cp_params();
  const CMatrix P = build_precoder(tapered_prototype(2, 24), 2, 24);
  const Synthesis syn = build_synthesis(P, params);
  const CMatrix w = oracle::dft_matrix(128);
  for (int len : {1, 3, 10}) {
    ChannelModel ch;
    ch.taps = oracle::random_vector(rng, len);
    const CVector cbar = oracle::random_vector(rng, 46);
    const CVector c = scatter_data(cbar, params.data_idx, 48);
    const CVector y = apply_channel(syn.full * c, ch, 0.0, rng);
    const CVector r = receive_block(y, params);

    CVector hpad = CVector::Zero(128);
    hpad.head(len) = ch.taps;
    const CVector hfull = std::sqrt(128.0) * (w * hpad);
    const CVector h = hfull.segment(28, 48);
    CHECK(oracle::rel_err(channel_response(ch, params), h) <= 1e-12);
    const CVector expect = h.asDiagonal() * (data_columns(P, params) * cbar);
    CHECK(oracle::rel_err(r, expect) <= 1e-10);
  }
}

TEST_CASE("MMSE equalizer") {
  std::mt19937_64 rng(5);
  // Unitary square precoder, identity channel, no noise.
  const CMatrix P = build_precoder(tapered_prototype(2, 24), 2, 24);
  const CVector ones = CVector::Ones(48);
  const CMatrix q0 = mmse_matrix(ones, P, 0.0, 1.0);
  CHECK((q0 - P.adjoint()).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((q0 * P - CMatrix::Identity(48, 48)).cwiseAbs().maxCoeff() <= 1e-10);

  // Large noise: Q ~ (Es / N0) (H P)^H.
  const CVector h = oracle::random_vector(rng, 48);
  const CMatrix a = h.asDiagonal() * P;
  const CMatrix big = mmse_matrix(h, P, 1e8, 1.0);
  CHECK(oracle::rel_err(big * 1e8, a.adjoint()) <= 1e-6);

  // Paper dimensions against the dense oracle.
  const auto params = cps_cp_params();
  const CMatrix pd = data_columns(P, params);
  ChannelModel ch;
  ch.taps = oracle::random_vector(rng, 5) / std::sqrt(10.0);
  const CVector hd = channel_response(ch, params);
  const CMatrix q = mmse_matrix(hd, pd, 0.1, 1.0);
  CHECK(q.rows() == 46);
  CHECK(q.cols() == 48);
  CHECK((q - oracle::mmse_dense(hd.asDiagonal() * pd, 0.1)).cwiseAbs().maxCoeff() <= 1e-8);

  CVector dead = ones;
  dead.head(10).setZero();
  CHECK_THROWS_AS(mmse_matrix(dead, P, 0.0, 1.0), DomainError);
  CHECK_NOTHROW(mmse_matrix(dead, P, 0.1, 1.0));
  CHECK_THROWS_AS(mmse_matrix(ones, P, 0.1, 0.0), ParameterError);
}

TEST_CASE("MMSE matrix is a stationary point of the empirical MSE") {
  const auto params = cps_cp_params();
  const CMatrix pd = data_columns(build_precoder(tapered_prototype(2, 24), 2, 24), params);
  std::mt19937_64 rng(6);
  ChannelModel ch;
  ch.taps = oracle::random_vector(rng, 5) / std::sqrt(10.0);
  const CVector h = channel_response(ch, params);
  const double n0 = 0.1;
  const CMatrix q = mmse_matrix(h, pd, n0, 1.0);
  const QamConstellation qam(4, 1.0);

  const int draws = 1000;
  std::vector<CVector> data, obs;
  for (int k = 0; k < draws; ++k) {
    Bits bits(184);
    for (auto& b : bits) b = rng() & 1;
    const CVector d = qam.map(bits);
    CVector r = h.asDiagonal() * (pd * d);
    for (auto& v : r) v += complex_gaussian(rng, n0);
    data.push_back(d);
    obs.push_back(r);
  }
  for (auto [i, j] : {std::pair{0, 0}, {10, 20}, {45, 47}, {23, 5}})
    for (cplx delta : {cplx(1e-4), cplx(-1e-4), cplx(0.0, 1e-4), cplx(0.0, -1e-4)}) {
      // Per-draw change of the squared error when one entry moves by delta.
      double mean = 0.0, sq = 0.0;
      for (int k = 0; k < draws; ++k) {
        const cplx base = (q.row(i) * obs[k])(0) - data[k](i);
        const cplx moved = base + delta * obs[k](j);
        const double diff = std::norm(moved) - std::norm(base);
        mean += diff;
        sq += diff * diff;
      }
      mean /= draws;
      const double sd = std::sqrt(std::max(sq / draws - mean * mean, 0.0));
      CHECK(mean >= -3.0 * sd / std::sqrt(double(draws)));
    }
}

TEST_CASE("noiseless end to end recovers every bit") {
  const QamConstellation qam(4, 1.0);
  for (const auto& params : {cps_cp_params(), cps_nogi_params()}) {
    const CMatrix P = build_precoder(tapered_prototype(2, 24), 2, 24);
    const FastTransmitter tx(params, P);
    const CMatrix q = mmse_matrix(CVector::Ones(48), data_columns(P, params), 0.0, 1.0);
    for (int b = 0; b < 50; ++b) {
      auto rng = make_rng(11, Stream::Bits, static_cast<std::uint64_t>(b));
      Bits bits(184);
      for (auto& x : bits) x = rng() & 1;
      const CVector r = receive_block(tx(scatter_data(qam.map(bits), params.data_idx, 48)), params);
      CHECK(ber_count(bits, qam.demap(q * r)).errors == 0);
    }
  }
}

TEST_CASE("bit error counting and intervals") {
  const Bits a{0, 1, 1, 0, 1, 0, 0, 1};
  Bits flip = a;
  for (auto& v : flip) v ^= 1;
  Bits two = a;
  two[2] ^= 1;
  two[7] ^= 1;
  CHECK(ber_count(a, a).ber() == 0.0);
  CHECK(ber_count(a, flip).ber() == 1.0);
  CHECK(ber_count(a, two).ber() == 0.25);
  CHECK(ber_count(a, two).errors == 2);
  CHECK_THROWS_AS(ber_count(a, Bits(3)), ParameterError);

  const auto zero = wilson_interval(0, 10);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi == doctest::Approx(0.27753).epsilon(1e-4));
  const auto half = wilson_interval(5, 10);
  CHECK(half.lo == doctest::Approx(0.23659).epsilon(1e-4));
  CHECK(half.hi == doctest::Approx(0.76341).epsilon(1e-4));
}
