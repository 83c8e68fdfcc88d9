// SPDX-License-Identifier: Apache-2.0
#include "cpsofdm/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace cpsofdm {

double rcm(const CVector& x) {
  double p2 = 0.0;
  double p6 = 0.0;
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    const double a = std::norm(x(n));
    p2 += a;
    p6 += a * a * a;
  }
  if (!(p2 > 0.0)) throw DomainError("rcm: zero-energy block");
  return double(x.size()) * std::sqrt(p6) / (p2 * std::sqrt(p2));
}

double cm_db(double rcm_value, const CmParams& params) {
  if (!(rcm_value > 0.0)) throw DomainError("cm: RCM must be positive");
  if (params.slope_db == 0.0) throw ParameterError("cm: slope must be nonzero");
  return (20.0 * std::log10(rcm_value) - params.rcm_ref_db) / params.slope_db;
}

double evm(const CVector& x, const CVector& ref) {
  if (x.size() != ref.size()) throw ParameterError("evm: length mismatch");
  const double ref_energy = ref.squaredNorm();
  if (!(ref_energy > 0.0)) throw DomainError("evm: zero-energy reference");
  return std::sqrt((x - ref).squaredNorm() / ref_energy);
}

namespace {

// X(w) and optionally X'(w) by direct summation with a rotating phasor,
// re-anchored periodically to bound drift.
void dtft(const CVector& x, double omega, cplx& value, cplx* slope) {
  cplx acc = 0.0;
  cplx dacc = 0.0;
  const cplx step = std::polar(1.0, -omega);
  cplx phasor = 1.0;
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    if (n % 32 == 0) phasor = std::polar(1.0, -omega * double(n));
    const cplx term = x(n) * phasor;
    acc += term;
    dacc += cplx(0.0, -double(n)) * term;
    phasor *= step;
  }
  value = acc;
  if (slope) *slope = dacc;
}

}  // namespace

double esd(const CVector& x, double omega) {
  cplx v;
  dtft(x, omega, v, nullptr);
  return std::norm(v);
}

double esd_slope(const CVector& x, double omega) {
  cplx v, dv;
  dtft(x, omega, v, &dv);
  return 2.0 * (std::conj(v) * dv).real();
}

OsbRegion OsbRegion::from_intervals(std::vector<Interval> intervals) {
  std::vector<Interval> pieces;
  for (auto iv : intervals) {
    if (!(iv.hi > iv.lo)) continue;
    if (iv.hi - iv.lo >= kTwoPi) {
      pieces.push_back({-kPi, kPi});
      continue;
    }
    const double shift = std::floor((iv.lo + kPi) / kTwoPi) * kTwoPi;
    iv.lo -= shift;
    iv.hi -= shift;
    if (iv.hi > kPi) {
      pieces.push_back({iv.lo, kPi});
      pieces.push_back({-kPi, iv.hi - kTwoPi});
    } else {
      pieces.push_back(iv);
    }
  }
  std::sort(pieces.begin(), pieces.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  OsbRegion region;
  constexpr double kTouch = 1e-12;
  for (const auto& iv : pieces) {
    if (!region.intervals_.empty() && iv.lo <= region.intervals_.back().hi + kTouch) {
      region.intervals_.back().hi = std::max(region.intervals_.back().hi, iv.hi);
    } else {
      region.intervals_.push_back(iv);
    }
  }
  return region;
}

OsbRegion OsbRegion::from_subcarriers(std::span<const int> subcarriers, int fft_size) {
  if (fft_size < 1) throw ParameterError("osb region: FFT size must be positive");
  std::vector<Interval> ivs;
  const double half = kPi / fft_size;
  for (int i : subcarriers) {
    if (i < 0 || i >= fft_size) throw ParameterError("osb region: subcarrier index out of range");
    const double c = kTwoPi * i / fft_size;
    ivs.push_back({c - half, c + half});
  }
  return from_intervals(std::move(ivs));
}

OsbRegion OsbRegion::full_circle() { return from_intervals({{-kPi, kPi}}); }

double OsbRegion::measure() const {
  double m = 0.0;
  for (const auto& iv : intervals_) m += iv.hi - iv.lo;
  return m;
}

QuadratureRule make_quadrature(const OsbRegion& region, int block_len, int oversample) {
  if (oversample < 1) throw ParameterError("quadrature: oversample must be >= 1");
  if (block_len < 1) throw ParameterError("quadrature: block length must be positive");
  QuadratureRule rule;
  rule.oversample = oversample;
  rule.block_len = block_len;
  const double max_step = kTwoPi / (double(oversample) * block_len);
  for (const auto& iv : region.intervals()) {
    const double len = iv.hi - iv.lo;
    const auto steps = std::max<long>(1, static_cast<long>(std::ceil(len / max_step - 1e-9)));
    const double h = len / double(steps);
    const double w = h / kTwoPi;
    for (long k = 0; k <= steps; ++k) {
      rule.nodes.push_back(k == steps ? iv.hi : iv.lo + h * double(k));
      rule.weights.push_back((k == 0 || k == steps) ? 0.5 * w : w);
    }
    // Euler-Maclaurin: -h^2/12 [f'(hi) - f'(lo)].
    const double c = h * h / 12.0 / kTwoPi;
    rule.slope_nodes.push_back(iv.lo);
    rule.slope_weights.push_back(c);
    rule.slope_nodes.push_back(iv.hi);
    rule.slope_weights.push_back(-c);
  }
  return rule;
}

double osbee_direct(const CVector& x, const QuadratureRule& rule) {
  double acc = 0.0;
  for (size_t j = 0; j < rule.nodes.size(); ++j) acc += rule.weights[j] * esd(x, rule.nodes[j]);
  for (size_t e = 0; e < rule.slope_nodes.size(); ++e) acc += rule.slope_weights[e] * esd_slope(x, rule.slope_nodes[e]);
  return acc;
}

double osbee_direct(const CVector& x, const OsbRegion& region, int oversample) {
  if (region.empty()) return 0.0;
  return osbee_direct(x, make_quadrature(region, static_cast<int>(x.size()), oversample));
}

std::vector<double> uniform_grid(double theta0, int count) {
  std::vector<double> g(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) g[static_cast<size_t>(k)] = theta0 + kTwoPi * k / count;
  return g;
}

std::vector<double> psd_average(std::span<const CVector> blocks, std::span<const double> omegas) {
  if (blocks.empty()) throw ParameterError("psd: no blocks");
  std::vector<double> out(omegas.size(), 0.0);
  for (const auto& b : blocks)
    for (size_t k = 0; k < omegas.size(); ++k) out[k] += esd(b, omegas[k]);
  for (auto& v : out) v /= double(blocks.size());
  return out;
}

std::vector<double> ccdf(std::span<const double> samples, std::span<const double> thresholds) {
  if (samples.empty()) throw ParameterError("ccdf: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
    out.push_back(double(above) / double(sorted.size()));
  }
  return out;
}

double spectral_efficiency(const SpectralEfficiencyInputs& in) {
  if (in.bits_per_symbol < 0 || in.data_symbols < 0 || in.blocks_per_tti < 0 || in.ber < 0.0 || in.tti_s < 0.0 ||
      in.bandwidth_hz < 0.0 || in.guard_hz < 0.0)
    throw ParameterError("spectral efficiency: arguments must be nonnegative");
  const double denom = in.tti_s * (in.bandwidth_hz + in.guard_hz);
  if (!(denom > 0.0)) throw DomainError("spectral efficiency: zero denominator");
  return double(in.bits_per_symbol) * in.data_symbols * in.blocks_per_tti * (1.0 - in.ber) / denom;
}

}  // namespace cpsofdm
