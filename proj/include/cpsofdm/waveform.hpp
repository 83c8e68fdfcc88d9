// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "cpsofdm/common.hpp"
#include "cpsofdm/fft.hpp"

namespace cpsofdm {

enum class GuardMode { CyclicPrefix, None };

/// Structural integers and index sets of one CPS-OFDM subband.
struct WaveformParams {
  int fft_size = 128;
  int guard_len = 9;
  GuardMode guard = GuardMode::CyclicPrefix;
  int subband_size = 48;     // S = num_shifts * num_modulations
  int num_shifts = 2;        // circular shifts of the prototype
  int num_modulations = 24;  // modulation sequences per shift
  int first_subcarrier = 28;
  std::vector<int> data_idx;  // sorted positions of data symbols in [0, S)

  int block_len() const { return fft_size + guard_len; }
  int data_count() const { return static_cast<int>(data_idx.size()); }
  int zero_count() const { return subband_size - data_count(); }

  /// Throws ParameterError on any broken invariant.
  void validate() const;
};

/// 128-point grid, CP of 9, S = 48 on subcarriers 28..75, K = 2, M = 24,
/// zero symbols at positions 0 and 24.
WaveformParams cps_cp_params();
/// As cps_cp_params() without guard interval.
WaveformParams cps_nogi_params();
/// Plain OFDM benchmark: identity precoder (K = 48, M = 1), no zero symbols.
WaveformParams ofdm_params();

/// Constant prototype 1/sqrt(S); with K = 1 the precoder is the normalized DFT.
CVector constant_prototype(int subband_size);
/// Unit impulse at index 0; the precoder becomes a column permutation of I_S.
CVector impulse_prototype(int subband_size);
/// Unit-energy prototype whose squared magnitude is a raised-cosine window of
/// period M (roll-off `rolloff`), carrying a quarter-turn phase per M entries.
/// For K = 2 the resulting precoder is unitary. Requires K >= 2.
CVector tapered_prototype(int num_shifts, int num_modulations, double rolloff = 0.5);

/// Text format: one "re im" pair per line; blank lines and '#' comments skipped.
CVector load_prototype(const std::filesystem::path& path);
void save_prototype(const std::filesystem::path& path, const CVector& proto);

/// [P]_{i, kM+m} = p_<i-kM>_S * exp(-j 2 pi m i / M).
CMatrix build_precoder(const CVector& proto, int num_shifts, int num_modulations);

/// Columns `ordered` of the N-point inverse normalized DFT, entries
/// exp(+j 2 pi n k / N) / sqrt(N) for k = first + i.
CMatrix idft_columns(int fft_size, int first, int count);

/// End-to-end linear transmit map and its data-column restriction.
struct Synthesis {
  CMatrix full;  // N' x S
  CMatrix data;  // N' x D
};

/// Phi = G [W_N^H]_I P with G the CP insertion matrix (identity without GI).
Synthesis build_synthesis(const CMatrix& precoder, const WaveformParams& params);

/// Dense reference: Phi * src.
CVector transmit_block(const Synthesis& synth, const CVector& src);

/// Precode, map to subcarriers, N-point IFFT, prepend CP. Matches
/// transmit_block() to rounding. Immutable after construction.
class FastTransmitter {
 public:
  FastTransmitter(const WaveformParams& params, CMatrix precoder);

  CVector operator()(const CVector& src) const;

  const WaveformParams& params() const { return params_; }
  const CMatrix& precoder() const { return precoder_; }

 private:
  WaveformParams params_;
  CMatrix precoder_;
  std::shared_ptr<const Fft> fft_;
};

/// Block b occupies samples [b N', (b+1) N').
CVector serialize_blocks(std::span<const CVector> blocks);

}  // namespace cpsofdm
