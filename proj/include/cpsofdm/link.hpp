// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cpsofdm/common.hpp"
#include "cpsofdm/fft.hpp"
#include "cpsofdm/waveform.hpp"

namespace cpsofdm {

/// One tapped-delay-line entry: delay in samples, average power in dB.
struct ChannelTap {
  int delay = 0;
  double power_db = 0.0;
};

/// Average power-delay profile. Each block draws independent Rayleigh taps.
struct ChannelProfile {
  std::vector<ChannelTap> taps;

  /// Single unit tap at delay 0 (AWGN only), never faded.
  static ChannelProfile identity();
  /// Five taps at delays 0..4 samples with an exponential power decay whose
  /// rms delay spread is 300 ns at 1.92 MHz sampling.
  static ChannelProfile default_tdl();

  bool is_identity() const;
  int order() const;  // largest delay
  double rms_delay_spread(double sample_rate_hz) const;
  void validate() const;
};

/// Impulse response h[0..L].
struct ChannelModel {
  CVector taps = CVector::Ones(1);
  int order() const { return static_cast<int>(taps.size()) - 1; }
};

/// Rayleigh realization with the profile's powers normalized to unit sum.
/// The identity profile returns h = {1}.
ChannelModel draw_channel(const ChannelProfile& profile, std::mt19937_64& rng);

/// Linear convolution truncated to the input length plus CN(0, n0) noise.
CVector apply_channel(const CVector& stream, const ChannelModel& channel, double n0, std::mt19937_64& rng);

enum class PaKind { Ideal, Rapp, Polynomial };
PaKind pa_kind_from_name(const std::string& name);
std::string pa_kind_name(PaKind kind);

/// Memoryless PA. The input is scaled by g so its mean power sits ibo_db below
/// the saturation reference (A_sat^2 for Rapp, 1 for Polynomial), passed
/// through the nonlinearity, divided by g and rotated by -phase_comp_deg.
struct PaModel {
  PaKind kind = PaKind::Ideal;
  std::array<cplx, 5> coeffs{cplx(1.0), cplx(0.0), cplx(0.0), cplx(0.0), cplx(0.0)};  // a1, a3, ..., a9
  double smoothness = 2.0;  // Rapp p
  double saturation = 1.0;  // Rapp A_sat
  double ibo_db = 0.0;
  double phase_comp_deg = 0.0;
  /// Mean input power the backoff refers to. 0 means measure it on the stream.
  double reference_power = 0.0;

  double saturation_power() const;
  void validate() const;
};

/// Phase compensation used when a config does not set one.
double default_phase_comp_deg(PaKind kind);

CVector pa_apply(const CVector& stream, const PaModel& pa);

/// N0 = Es / (bits_per_symbol 10^(EbN0/10)).
double noise_variance(double ebn0_db, double symbol_energy, int bits_per_symbol);

/// Drops the guard, applies the normalized N-point DFT and keeps the subband bins.
CVector receive_block(const CVector& y_block, const WaveformParams& params, const Fft& fft);
CVector receive_block(const CVector& y_block, const WaveformParams& params);

/// H_i = sum_l h_l exp(-j 2 pi (first + i) l / N), i = 0..S-1.
CVector channel_response(const ChannelModel& channel, const WaveformParams& params);

/// Q = [(H P_D)^H (H P_D) + (N0/Es) I]^{-1} (H P_D)^H, by an LDL^T solve.
/// Throws DomainError when N0 = 0 and H P_D is rank deficient.
CMatrix mmse_matrix(const CVector& h_diag, const CMatrix& p_data, double n0, double symbol_energy);

struct BerCount {
  std::uint64_t errors = 0;
  std::uint64_t total = 0;
  double ber() const { return total == 0 ? 0.0 : double(errors) / double(total); }
};
BerCount ber_count(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx);

/// Wilson score interval at 95% confidence.
struct ProportionInterval {
  double lo = 0.0;
  double hi = 0.0;
};
ProportionInterval wilson_interval(std::uint64_t successes, std::uint64_t trials);

}  // namespace cpsofdm
