// SPDX-License-Identifier: Apache-2.0
#include "cpsofdm/link.hpp"

#include <algorithm>
#include <cmath>

namespace cpsofdm {

namespace {

constexpr double kDefaultSampleRate = 1.92e6;
constexpr double kDefaultRmsSpread = 300e-9;

double rms_spread_samples(const std::vector<double>& powers) {
  double sum = 0.0, mean = 0.0, second = 0.0;
  for (size_t l = 0; l < powers.size(); ++l) {
    sum += powers[l];
    mean += powers[l] * double(l);
    second += powers[l] * double(l) * double(l);
  }
  mean /= sum;
  return std::sqrt(std::max(0.0, second / sum - mean * mean));
}

std::vector<double> exponential_profile(int count, double decay) {
  std::vector<double> p(static_cast<size_t>(count));
  for (int l = 0; l < count; ++l) p[static_cast<size_t>(l)] = std::exp(-double(l) / decay);
  return p;
}

}  // namespace

ChannelProfile ChannelProfile::identity() { return ChannelProfile{{ChannelTap{0, 0.0}}}; }

ChannelProfile ChannelProfile::default_tdl() {
  constexpr int kTaps = 5;
  const double target = kDefaultRmsSpread * kDefaultSampleRate;
  // rms spread grows monotonically with the decay constant.
  double lo = 1e-3, hi = 1e3;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (rms_spread_samples(exponential_profile(kTaps, mid)) < target)
      lo = mid;
    else
      hi = mid;
  }
  const auto p = exponential_profile(kTaps, std::sqrt(lo * hi));
  ChannelProfile prof;
  for (int l = 0; l < kTaps; ++l) prof.taps.push_back({l, 10.0 * std::log10(p[static_cast<size_t>(l)])});
  return prof;
}

bool ChannelProfile::is_identity() const { return taps.size() == 1 && taps[0].delay == 0; }

int ChannelProfile::order() const {
  int m = 0;
  for (const auto& t : taps) m = std::max(m, t.delay);
  return m;
}

double ChannelProfile::rms_delay_spread(double sample_rate_hz) const {
  std::vector<double> p(static_cast<size_t>(order() + 1), 0.0);
  for (const auto& t : taps) p[static_cast<size_t>(t.delay)] += db_to_linear_power(t.power_db);
  return rms_spread_samples(p) / sample_rate_hz;
}

void ChannelProfile::validate() const {
  if (taps.empty()) throw ParameterError("channel: profile needs at least one tap");
  for (const auto& t : taps) {
    if (t.delay < 0) throw ParameterError("channel: negative tap delay");
    if (!std::isfinite(t.power_db)) throw ParameterError("channel: tap power must be finite");
  }
}

ChannelModel draw_channel(const ChannelProfile& profile, std::mt19937_64& rng) {
  profile.validate();
  ChannelModel ch;
  if (profile.is_identity()) return ch;
  double total = 0.0;
  for (const auto& t : profile.taps) total += db_to_linear_power(t.power_db);
  ch.taps = CVector::Zero(profile.order() + 1);
  for (const auto& t : profile.taps) ch.taps(t.delay) += complex_gaussian(rng, db_to_linear_power(t.power_db) / total);
  return ch;
}

CVector apply_channel(const CVector& stream, const ChannelModel& channel, double n0, std::mt19937_64& rng) {
  if (stream.size() == 0) throw ParameterError("apply_channel: empty stream");
  if (n0 < 0.0) throw ParameterError("apply_channel: negative noise variance");
  const auto len = stream.size();
  CVector out = CVector::Zero(len);
  for (Eigen::Index l = 0; l < channel.taps.size(); ++l) {
    if (channel.taps(l) == cplx(0.0)) continue;
    if (l >= len) break;
    out.tail(len - l) += channel.taps(l) * stream.head(len - l);
  }
  if (n0 > 0.0)
    for (Eigen::Index n = 0; n < len; ++n) out(n) += complex_gaussian(rng, n0);
  return out;
}

PaKind pa_kind_from_name(const std::string& name) {
  if (name == "ideal") return PaKind::Ideal;
  if (name == "rapp") return PaKind::Rapp;
  if (name == "polynomial") return PaKind::Polynomial;
  throw ParameterError("unknown PA kind '" + name + "'");
}

std::string pa_kind_name(PaKind kind) {
  switch (kind) {
    case PaKind::Ideal: return "ideal";
    case PaKind::Rapp: return "rapp";
    case PaKind::Polynomial: return "polynomial";
  }
  throw ParameterError("unknown PA kind");
}

double default_phase_comp_deg(PaKind kind) { return kind == PaKind::Polynomial ? 76.3 : 0.0; }

double PaModel::saturation_power() const { return kind == PaKind::Rapp ? saturation * saturation : 1.0; }

void PaModel::validate() const {
  if (kind != PaKind::Ideal && kind != PaKind::Rapp && kind != PaKind::Polynomial)
    throw ParameterError("unknown PA kind");
  if (!std::isfinite(ibo_db)) throw ParameterError("pa: ibo_db must be finite");
  if (!std::isfinite(phase_comp_deg)) throw ParameterError("pa: phase compensation must be finite");
  if (reference_power < 0.0) throw ParameterError("pa: reference power must be >= 0");
  if (kind == PaKind::Rapp && (!(smoothness > 0.0) || !(saturation > 0.0)))
    throw ParameterError("pa: Rapp smoothness and saturation must be positive");
}

CVector pa_apply(const CVector& stream, const PaModel& pa) {
  pa.validate();
  if (pa.kind == PaKind::Ideal) return stream;
  double in_power = pa.reference_power;
  if (in_power == 0.0) in_power = stream.squaredNorm() / double(std::max<Eigen::Index>(stream.size(), 1));
  if (!(in_power > 0.0)) return stream;
  const double target = pa.saturation_power() * std::pow(10.0, -pa.ibo_db / 10.0);
  const double g = std::sqrt(target / in_power);
  const cplx rotate = std::polar(1.0, -pa.phase_comp_deg * kPi / 180.0);

  CVector out(stream.size());
  for (Eigen::Index n = 0; n < stream.size(); ++n) {
    const cplx x = g * stream(n);
    cplx y;
    if (pa.kind == PaKind::Rapp) {
      const double ratio = std::abs(x) / pa.saturation;
      y = x / std::pow(1.0 + std::pow(ratio, 2.0 * pa.smoothness), 1.0 / (2.0 * pa.smoothness));
    } else {
      const double r = std::norm(x);
      // Horner in |x|^2 over the odd orders.
      cplx gain = pa.coeffs[4];
      for (int q = 3; q >= 0; --q) gain = gain * r + pa.coeffs[static_cast<size_t>(q)];
      y = gain * x;
    }
    out(n) = rotate * y / g;
  }
  return out;
}

double noise_variance(double ebn0_db, double symbol_energy, int bits_per_symbol) {
  if (bits_per_symbol < 1) throw ParameterError("noise: bits per symbol must be positive");
  return symbol_energy / (double(bits_per_symbol) * db_to_linear_power(ebn0_db));
}

CVector receive_block(const CVector& y_block, const WaveformParams& params, const Fft& fft) {
  const int n = params.fft_size;
  const int g = params.guard == GuardMode::CyclicPrefix ? params.guard_len : 0;
  if (y_block.size() != n + g) throw ParameterError("receive_block: block length mismatch");
  if (fft.size() != n) throw ParameterError("receive_block: FFT size mismatch");
  CVector freq(n);
  const CVector body = y_block.tail(n);
  fft.forward(body.data(), freq.data());
  const int first = params.first_subcarrier;
  const int s = params.subband_size;
  CVector r(s);
  for (int i = 0; i < s; ++i) r(i) = freq((first + i) % n) / std::sqrt(double(n));
  return r;
}

CVector receive_block(const CVector& y_block, const WaveformParams& params) {
  const Fft fft(params.fft_size);
  return receive_block(y_block, params, fft);
}

CVector channel_response(const ChannelModel& channel, const WaveformParams& params) {
  CVector h(params.subband_size);
  for (int i = 0; i < params.subband_size; ++i) {
    const double w = kTwoPi * double(params.first_subcarrier + i) / double(params.fft_size);
    cplx acc(0.0);
    for (Eigen::Index l = 0; l < channel.taps.size(); ++l) acc += channel.taps(l) * std::polar(1.0, -w * double(l));
    h(i) = acc;
  }
  return h;
}

CMatrix mmse_matrix(const CVector& h_diag, const CMatrix& p_data, double n0, double symbol_energy) {
  if (!(symbol_energy > 0.0)) throw ParameterError("mmse: symbol energy must be positive");
  if (n0 < 0.0) throw ParameterError("mmse: negative noise variance");
  if (h_diag.size() != p_data.rows()) throw ParameterError("mmse: channel and precoder sizes differ");
  const CMatrix a = h_diag.asDiagonal() * p_data;
  CMatrix gram = a.adjoint() * a;
  gram.diagonal().array() += n0 / symbol_energy;
  Eigen::LDLT<CMatrix> ldlt(gram);
  const RVector piv = ldlt.vectorD().real();
  const double top = piv.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(piv.minCoeff() > 1e-12 * top))
    throw DomainError("mmse: equalizer system is singular");
  return ldlt.solve(a.adjoint());
}

BerCount ber_count(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx) {
  if (tx.size() != rx.size()) throw ParameterError("ber_count: length mismatch");
  BerCount c;
  c.total = tx.size();
  for (size_t i = 0; i < tx.size(); ++i) c.errors += (tx[i] != rx[i]) ? 1 : 0;
  return c;
}

ProportionInterval wilson_interval(std::uint64_t successes, std::uint64_t trials) {
  if (trials == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double n = double(trials);
  const double p = double(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace cpsofdm
