// SPDX-License-Identifier: Apache-2.0
#include "cpsofdm/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cpsofdm {

void WaveformParams::validate() const {
  if (fft_size < 1) throw ParameterError("waveform: FFT size must be positive");
  if (subband_size < 1) throw ParameterError("waveform: subband size must be positive");
  if (num_shifts < 1 || num_modulations < 1 || num_shifts * num_modulations != subband_size)
    throw ParameterError("waveform: subband size must equal shifts * modulations");
  if (first_subcarrier < 0 || first_subcarrier + subband_size > fft_size)
    throw ParameterError("waveform: subband does not fit in the FFT grid");
  if (guard == GuardMode::None && guard_len != 0)
    throw ParameterError("waveform: guard length must be 0 without guard interval");
  if (guard == GuardMode::CyclicPrefix && (guard_len < 1 || guard_len > fft_size))
    throw ParameterError("waveform: cyclic prefix length must be in [1, N]");
  if (data_idx.empty()) throw ParameterError("waveform: no data positions");
  for (size_t i = 0; i < data_idx.size(); ++i) {
    if (data_idx[i] < 0 || data_idx[i] >= subband_size)
      throw ParameterError("waveform: data index out of range");
    if (i > 0 && data_idx[i] <= data_idx[i - 1])
      throw ParameterError("waveform: data indices must be strictly increasing");
  }
}

WaveformParams cps_cp_params() {
  WaveformParams p;
  p.data_idx.clear();
  for (int i = 0; i < 48; ++i)
    if (i != 0 && i != 24) p.data_idx.push_back(i);
  return p;
}

WaveformParams cps_nogi_params() {
  auto p = cps_cp_params();
  p.guard = GuardMode::None;
  p.guard_len = 0;
  return p;
}

WaveformParams ofdm_params() {
  auto p = cps_cp_params();
  p.num_shifts = 48;
  p.num_modulations = 1;
  p.data_idx.resize(48);
  for (int i = 0; i < 48; ++i) p.data_idx[static_cast<size_t>(i)] = i;
  return p;
}

CVector constant_prototype(int subband_size) {
  if (subband_size < 1) throw ParameterError("prototype: size must be positive");
  return CVector::Constant(subband_size, cplx(1.0 / std::sqrt(double(subband_size)), 0.0));
}

CVector impulse_prototype(int subband_size) {
  if (subband_size < 1) throw ParameterError("prototype: size must be positive");
  CVector p = CVector::Zero(subband_size);
  p(0) = 1.0;
  return p;
}

CVector tapered_prototype(int num_shifts, int num_modulations, double rolloff) {
  if (num_shifts < 2 || num_modulations < 1)
    throw ParameterError("tapered prototype: needs at least two shifts");
  if (!(rolloff >= 0.0 && rolloff <= 1.0)) throw ParameterError("tapered prototype: roll-off must be in [0, 1]");
  const int s = num_shifts * num_modulations;
  const double m = num_modulations;
  const double flat = 0.5 * (1.0 - rolloff) * m;
  const double centre = 0.5 * (m - 1.0);
  CVector p(s);
  for (int i = 0; i < s; ++i) {
    double t = i - centre;
    if (t >= 0.5 * s) t -= s;
    const double at = std::abs(t);
    double window = 0.0;
    if (at <= flat) {
      window = 1.0;
    } else if (rolloff > 0.0 && at <= 0.5 * (1.0 + rolloff) * m) {
      window = 0.5 * (1.0 + std::cos(kPi * (at - flat) / (rolloff * m)));
    }
    p(i) = std::sqrt(window / m) * std::polar(1.0, kPi * i / (2.0 * m));
  }
  return p / p.norm();
}

CVector load_prototype(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("prototype: cannot open " + path.string());
  std::vector<cplx> taps;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    double re = 0, im = 0;
    if (!(fields >> re >> im))
      throw ParameterError("prototype: malformed entry at line " + std::to_string(line_no));
    taps.emplace_back(re, im);
  }
  if (taps.empty()) throw ParameterError("prototype: file holds no entries");
  CVector p = Eigen::Map<const CVector>(taps.data(), static_cast<Eigen::Index>(taps.size()));
  if (!(p.norm() > 0.0)) throw ParameterError("prototype: zero vector");
  return p;
}

void save_prototype(const std::filesystem::path& path, const CVector& proto) {
  std::ofstream out(path);
  if (!out) throw ParameterError("prototype: cannot write " + path.string());
  out.precision(17);
  for (Eigen::Index i = 0; i < proto.size(); ++i) out << proto(i).real() << ' ' << proto(i).imag() << '\n';
}

CMatrix build_precoder(const CVector& proto, int num_shifts, int num_modulations) {
  const int s = num_shifts * num_modulations;
  if (num_shifts < 1 || num_modulations < 1 || proto.size() != s)
    throw ParameterError("precoder: prototype length must equal K * M");
  if (!(proto.norm() > 0.0)) throw ParameterError("precoder: zero prototype");
  CMatrix p(s, s);
  for (int k = 0; k < num_shifts; ++k) {
    for (int m = 0; m < num_modulations; ++m) {
      const int col = k * num_modulations + m;
      for (int i = 0; i < s; ++i) {
        const int src = ((i - k * num_modulations) % s + s) % s;
        // Reduce m*i modulo M so the phase argument stays small.
        const int phase_idx = static_cast<int>((static_cast<long long>(m) * i) % num_modulations);
        p(i, col) = proto(src) * std::polar(1.0, -kTwoPi * phase_idx / num_modulations);
      }
    }
  }
  return p;
}

CMatrix idft_columns(int fft_size, int first, int count) {
  CMatrix w(fft_size, count);
  const double norm = 1.0 / std::sqrt(double(fft_size));
  for (int i = 0; i < count; ++i) {
    const long long k = first + i;
    for (int n = 0; n < fft_size; ++n)
      w(n, i) = std::polar(norm, kTwoPi * static_cast<double>((k * n) % fft_size) / fft_size);
  }
  return w;
}

Synthesis build_synthesis(const CMatrix& precoder, const WaveformParams& params) {
  params.validate();
  if (precoder.rows() != params.subband_size || precoder.cols() != params.subband_size)
    throw ParameterError("synthesis: precoder dimensions do not match the subband size");
  const CMatrix ofdm = idft_columns(params.fft_size, params.first_subcarrier, params.subband_size) * precoder;
  const int n = params.fft_size;
  const int g = params.guard_len;
  Synthesis synth;
  synth.full.resize(params.block_len(), params.subband_size);
  synth.full.bottomRows(n) = ofdm;
  if (g > 0) synth.full.topRows(g) = ofdm.bottomRows(g);
  synth.data.resize(params.block_len(), params.data_count());
  for (int j = 0; j < params.data_count(); ++j) synth.data.col(j) = synth.full.col(params.data_idx[static_cast<size_t>(j)]);
  return synth;
}

CVector transmit_block(const Synthesis& synth, const CVector& src) {
  if (src.size() != synth.full.cols()) throw ParameterError("transmit: source length must equal S");
  return synth.full * src;
}

FastTransmitter::FastTransmitter(const WaveformParams& params, CMatrix precoder)
    : params_(params), precoder_(std::move(precoder)) {
  params_.validate();
  if (precoder_.rows() != params_.subband_size || precoder_.cols() != params_.subband_size)
    throw ParameterError("transmitter: precoder dimensions do not match the subband size");
  fft_ = std::make_shared<const Fft>(params_.fft_size);
}

CVector FastTransmitter::operator()(const CVector& src) const {
  if (src.size() != params_.subband_size) throw ParameterError("transmit: source length must equal S");
  const int n = params_.fft_size;
  const int g = params_.guard_len;
  CVector bins = CVector::Zero(n);
  bins.segment(params_.first_subcarrier, params_.subband_size) = precoder_ * src;
  CVector time(n);
  fft_->inverse(bins.data(), time.data());
  time /= std::sqrt(double(n));
  CVector block(n + g);
  block.tail(n) = time;
  if (g > 0) block.head(g) = time.tail(g);
  return block;
}

CVector serialize_blocks(std::span<const CVector> blocks) {
  if (blocks.empty()) return CVector(0);
  const Eigen::Index len = blocks.front().size();
  CVector stream(len * static_cast<Eigen::Index>(blocks.size()));
  for (size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].size() != len) throw ParameterError("serialize: blocks differ in length");
    stream.segment(static_cast<Eigen::Index>(b) * len, len) = blocks[b];
  }
  return stream;
}

}  // namespace cpsofdm
