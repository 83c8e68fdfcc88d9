// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cpsofdm/common.hpp"

namespace cpsofdm {

using Bits = std::vector<std::uint8_t>;

/// Square Gray-labelled QAM.
///
/// A symbol carries `bits_per_symbol` bits: the first half selects the
/// in-phase level, the second half the quadrature level, MSB first. Along each
/// axis levels are Gray coded from the most negative level upward, so for
/// 16-QAM the per-axis labels are 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3 before
/// scaling. All points are scaled so the mean energy over the alphabet is Es.
class QamConstellation {
 public:
  QamConstellation(int bits_per_symbol, double symbol_energy);

  static QamConstellation from_name(const std::string& name, double symbol_energy);

  int bits_per_symbol() const { return bits_per_symbol_; }
  int order() const { return 1 << bits_per_symbol_; }
  double symbol_energy() const { return symbol_energy_; }

  /// Point for an integer label in [0, order).
  cplx point(unsigned label) const;

  /// bits.size() must be a multiple of bits_per_symbol().
  CVector map(std::span<const std::uint8_t> bits) const;
  /// Nearest-neighbour hard decision.
  Bits demap(const CVector& symbols) const;

 private:
  int bits_per_symbol_;
  int levels_;  // per axis
  double symbol_energy_;
  double scale_;
};

/// Spread D symbols over an S-length vector at the data positions; zeros elsewhere.
CVector scatter_data(const CVector& symbols, std::span<const int> data_idx, int subband_size);
/// Inverse of scatter_data.
CVector gather_data(const CVector& full, std::span<const int> data_idx);

}  // namespace cpsofdm
