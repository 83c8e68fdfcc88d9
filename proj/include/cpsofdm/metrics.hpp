// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "cpsofdm/common.hpp"

namespace cpsofdm {

/// Raw cubic metric N' (||x||_6 / ||x||_2)^3. Scale invariant, >= 1.
double rcm(const CVector& x);

struct CmParams {
  double rcm_ref_db = 0.0;
  double slope_db = 1.0;  // empirical divisor, nonzero
};

/// (20 log10(rcm) - rcm_ref_db) / slope_db.
double cm_db(double rcm_value, const CmParams& params);

/// Block EVM: ||x - ref||_2 / ||ref||_2.
double evm(const CVector& x, const CVector& ref);

/// |sum_n x_n e^{-j omega n}|^2.
double esd(const CVector& x, double omega);
/// d/d omega of esd(x, omega).
double esd_slope(const CVector& x, double omega);

struct Interval {
  double lo;
  double hi;
};

/// Union of disjoint half-open intervals inside [-pi, pi), kept sorted.
class OsbRegion {
 public:
  OsbRegion() = default;

  /// Intervals may be given in any 2pi-shifted position; they are wrapped into
  /// [-pi, pi), split at the seam, sorted and merged.
  static OsbRegion from_intervals(std::vector<Interval> intervals);
  /// Subcarrier i covers [2 pi i / N - pi / N, 2 pi i / N + pi / N).
  static OsbRegion from_subcarriers(std::span<const int> subcarriers, int fft_size);
  static OsbRegion full_circle();

  const std::vector<Interval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  double measure() const;

 private:
  std::vector<Interval> intervals_;
};

/// Trapezoid rule with endpoint slope correction over an OSB region:
///   integral f(w) dw / 2pi  ~=  sum_j weights_j f(nodes_j) + sum_e slope_weights_e f'(slope_nodes_e).
/// Each interval is split uniformly with step <= 2 pi / (oversample * block_len).
/// The same rule drives the direct OSBEE and the quadratic-form matrix.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> slope_nodes;
  std::vector<double> slope_weights;
  int oversample = 0;
  int block_len = 0;
};

QuadratureRule make_quadrature(const OsbRegion& region, int block_len, int oversample);

/// Out-of-subband emission energy of one block. Empty region gives 0.
double osbee_direct(const CVector& x, const OsbRegion& region, int oversample);
double osbee_direct(const CVector& x, const QuadratureRule& rule);

/// Angular frequencies theta0 + 2 pi k / count, k = 0..count-1.
std::vector<double> uniform_grid(double theta0, int count);

/// Reference PSD estimate (1/B) sum_b |X_b(e^{jw})|^2 by direct summation.
std::vector<double> psd_average(std::span<const CVector> blocks, std::span<const double> omegas);

/// Fraction of samples strictly above each threshold.
std::vector<double> ccdf(std::span<const double> samples, std::span<const double> thresholds);

struct SpectralEfficiencyInputs {
  int bits_per_symbol = 4;
  int data_symbols = 46;
  int blocks_per_tti = 14;
  double ber = 0.0;
  double tti_s = 1e-3;
  double bandwidth_hz = 720e3;
  double guard_hz = 0.0;
};

/// N_bit D N_B (1 - BER) / (TTI (BW + guard)), in bit/s/Hz.
double spectral_efficiency(const SpectralEfficiencyInputs& in);

/// Per-block metric record.
struct BlockRecord {
  int block = 0;
  std::string scenario;
  double rcm = 0.0;
  double evm = 0.0;
  double osbee = 0.0;
};

}  // namespace cpsofdm
