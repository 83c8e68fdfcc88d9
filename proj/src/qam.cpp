// SPDX-License-Identifier: Apache-2.0
#include "cpsofdm/qam.hpp"

#include <algorithm>
#include <cmath>

namespace cpsofdm {
namespace {

unsigned gray_encode(unsigned v) { return v ^ (v >> 1); }

unsigned gray_decode(unsigned g) {
  unsigned v = 0;
  for (; g; g >>= 1) v ^= g;
  return v;
}

}  // namespace

QamConstellation::QamConstellation(int bits_per_symbol, double symbol_energy)
    : bits_per_symbol_(bits_per_symbol), symbol_energy_(symbol_energy) {
  if (bits_per_symbol < 2 || bits_per_symbol % 2 != 0 || bits_per_symbol > 12)
    throw ParameterError("QAM: bits per symbol must be even and in [2, 12]");
  if (!(symbol_energy > 0.0)) throw ParameterError("QAM: symbol energy must be positive");
  levels_ = 1 << (bits_per_symbol / 2);
  // Mean energy of the unscaled square lattice {+-1, +-3, ...}^2 is 2 (L^2 - 1) / 3.
  const double lattice_energy = 2.0 * (levels_ * levels_ - 1) / 3.0;
  scale_ = std::sqrt(symbol_energy / lattice_energy);
}

QamConstellation QamConstellation::from_name(const std::string& name, double symbol_energy) {
  if (name == "qpsk" || name == "4qam") return {2, symbol_energy};
  if (name == "16qam") return {4, symbol_energy};
  if (name == "64qam") return {6, symbol_energy};
  if (name == "256qam") return {8, symbol_energy};
  throw ParameterError("QAM: unknown constellation '" + name + "'");
}

cplx QamConstellation::point(unsigned label) const {
  const int half = bits_per_symbol_ / 2;
  const unsigned mask = (1u << half) - 1u;
  const unsigned i_label = (label >> half) & mask;
  const unsigned q_label = label & mask;
  const double i_level = 2.0 * gray_decode(i_label) - (levels_ - 1);
  const double q_level = 2.0 * gray_decode(q_label) - (levels_ - 1);
  return scale_ * cplx(i_level, q_level);
}

CVector QamConstellation::map(std::span<const std::uint8_t> bits) const {
  if (bits.size() % static_cast<size_t>(bits_per_symbol_) != 0)
    throw ParameterError("QAM map: bit count is not a multiple of bits per symbol");
  const auto count = static_cast<Eigen::Index>(bits.size() / bits_per_symbol_);
  CVector out(count);
  for (Eigen::Index s = 0; s < count; ++s) {
    unsigned label = 0;
    for (int b = 0; b < bits_per_symbol_; ++b)
      label = (label << 1) | (bits[static_cast<size_t>(s * bits_per_symbol_ + b)] & 1u);
    out(s) = point(label);
  }
  return out;
}

Bits QamConstellation::demap(const CVector& symbols) const {
  const int half = bits_per_symbol_ / 2;
  auto axis_label = [&](double v) {
    const double idx = std::round((v / scale_ + (levels_ - 1)) / 2.0);
    const auto clamped = static_cast<unsigned>(std::clamp(idx, 0.0, double(levels_ - 1)));
    return gray_encode(clamped);
  };
  Bits bits;
  bits.reserve(static_cast<size_t>(symbols.size() * bits_per_symbol_));
  for (Eigen::Index s = 0; s < symbols.size(); ++s) {
    const unsigned label = (axis_label(symbols(s).real()) << half) | axis_label(symbols(s).imag());
    for (int b = bits_per_symbol_ - 1; b >= 0; --b) bits.push_back((label >> b) & 1u);
  }
  return bits;
}

CVector scatter_data(const CVector& symbols, std::span<const int> data_idx, int subband_size) {
  if (static_cast<size_t>(symbols.size()) != data_idx.size())
    throw ParameterError("scatter_data: symbol count differs from data index count");
  CVector full = CVector::Zero(subband_size);
  for (size_t i = 0; i < data_idx.size(); ++i) full(data_idx[i]) = symbols(static_cast<Eigen::Index>(i));
  return full;
}

CVector gather_data(const CVector& full, std::span<const int> data_idx) {
  CVector out(static_cast<Eigen::Index>(data_idx.size()));
  for (size_t i = 0; i < data_idx.size(); ++i) {
    if (data_idx[i] < 0 || data_idx[i] >= full.size()) throw ParameterError("gather_data: index out of range");
    out(static_cast<Eigen::Index>(i)) = full(data_idx[i]);
  }
  return out;
}

}  // namespace cpsofdm
