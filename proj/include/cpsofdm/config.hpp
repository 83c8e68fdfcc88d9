// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cpsofdm/link.hpp"
#include "cpsofdm/metrics.hpp"
#include "cpsofdm/shaper.hpp"
#include "cpsofdm/waveform.hpp"

namespace cpsofdm {

enum class WaveformKind { Ofdm, CpsCp, CpsNoGi };
WaveformKind waveform_kind_from_name(const std::string& name);
std::string waveform_kind_name(WaveformKind kind);

/// One mask segment: offsets measured outward from the subband edge.
struct SemSegment {
  double start_hz = 0.0;
  double stop_hz = 0.0;
  double limit_dbm = -10.0;  // per measurement bandwidth
  double rbw_hz = 30e3;
};

struct SemMask {
  std::vector<SemSegment> segments;
  /// -10 dBm per 30 kHz from the subband edge out to `extent_hz`.
  static SemMask flat(double extent_hz);
  void validate() const;
};

struct PsdSettings {
  int oversample = 8;  // grid cells per subcarrier spacing
  double tx_power_dbm = 22.0;
  double subcarrier_spacing_hz = 15e3;
  double guard_step_hz = 15e3;
  SemMask mask = SemMask::flat(600e3);
};

struct CcdfSettings {
  double min_db = 0.0;
  double max_db = 8.0;
  double step_db = 0.05;
  std::vector<double> thresholds_db() const;
};

struct SeSettings {
  double tti_s = 1e-3;
  double bandwidth_hz = 720e3;
  int blocks_per_tti = 0;  // 0: 14 with a cyclic prefix, 15 without
  double ebn0_db = 14.0;   // BER operating point taken from the BER sweep
};

/// Everything one simulation run depends on. Thread count and output
/// directory are deliberately not part of it.
struct Scenario {
  std::string name = "scenario";
  WaveformKind waveform = WaveformKind::CpsCp;
  std::string prototype;  // "tapered", "constant", "impulse" or a file path; empty = waveform default
  std::vector<int> zero_positions;  // empty = waveform default
  bool zero_positions_set = false;
  std::string modulation = "16qam";
  double symbol_energy = 1.0;
  std::vector<double> evm_max_db;  // one shaped series per entry; empty = shaping off
  std::vector<std::array<int, 2>> osb_ranges{{0, 23}, {80, 127}};  // inclusive subcarrier ranges
  int oversample = 16;
  std::uint64_t seed = 1;
  int blocks = 1000;
  std::vector<double> ebn0_db{0, 2, 4, 6, 8, 10, 12, 14};
  ChannelProfile channel = ChannelProfile::identity();
  PaModel pa;
  PsdSettings psd;
  CcdfSettings ccdf;
  SeSettings se;
  SolverOptions solver;
  CmParams cm;

  void validate() const;
  /// Canonical JSON text of every field (sorted keys).
  std::string canonical() const;
  /// First 16 hex digits of the SHA-256 of canonical().
  std::string hash() const;
};

Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir = {});
/// Relative file references inside the config resolve against its directory.
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace cpsofdm
