// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cpsofdm/config.hpp"
#include "cpsofdm/link.hpp"
#include "cpsofdm/osbee_quadratic.hpp"
#include "cpsofdm/qam.hpp"
#include "cpsofdm/shaper.hpp"
#include "cpsofdm/waveform.hpp"

namespace cpsofdm {

/// Immutable objects derived from a scenario, shared by every block.
class System {
 public:
  /// Builds the E matrix (and shaper) when the scenario shapes or `force_e` is
  /// set. A nonempty `cache_dir` reuses E matrix files across runs.
  explicit System(Scenario scenario, const std::filesystem::path& cache_dir = {}, bool force_e = false);

  const Scenario& scenario() const { return scenario_; }
  const WaveformParams& params() const { return params_; }
  const CVector& prototype() const { return proto_; }
  const CMatrix& precoder() const { return precoder_; }
  const Synthesis& synthesis() const { return synth_; }
  const OsbRegion& region() const { return region_; }
  const QamConstellation& qam() const { return qam_; }
  const FastTransmitter& transmitter() const { return tx_; }
  /// Null when shaping is off and no E matrix was requested.
  const EMatrix* e_matrix() const { return e_.get(); }
  const OffsetShaper* shaper() const { return shaper_.get(); }
  /// PA model with the reference power filled in.
  const PaModel& pa() const { return pa_; }
  /// Mean transmit power per sample for i.i.d. data: Es ||Phi_bar||_F^2 / N'.
  double nominal_power() const { return nominal_power_; }

 private:
  Scenario scenario_;
  WaveformParams params_;
  CVector proto_;
  CMatrix precoder_;
  Synthesis synth_;
  OsbRegion region_;
  QamConstellation qam_;
  FastTransmitter tx_;
  std::shared_ptr<const EMatrix> e_;
  std::shared_ptr<const OffsetShaper> shaper_;
  PaModel pa_;
  double nominal_power_ = 0.0;
};

/// A transmitted signal variant: the unshaped reference or one EVM budget.
struct Series {
  std::string label;  // "off" or the EVM budget in dB
  double evm_max_db = std::numeric_limits<double>::quiet_NaN();
  bool shaped() const { return label != "off"; }
};
std::vector<Series> series_list(const Scenario& scenario);
std::string format_db_label(double db);

struct BlockOutcome {
  CVector symbols;  // c_bar (d_bar for the unshaped series)
  bool ok = true;   // false: solver did not converge, block excluded
  double evm = 0.0;
  int iterations = 0;
};

/// Data and symbols for every block and series. Entry [s][b] is series s, block b.
struct BlockSet {
  std::vector<Series> series;
  std::vector<Bits> bits;
  std::vector<CVector> data;
  std::vector<std::vector<BlockOutcome>> outcomes;
  int excluded(size_t series_index) const;
};
/// Bits come from the (seed, Bits, block) stream; solves run in parallel and
/// are stored by block index.
BlockSet make_blocks(const System& sys, int blocks);

// ---- rcm-ccdf ----
struct RcmRecord {
  int block = 0;
  std::string shaping;
  bool ok = true;
  double rcm = 0.0;
  double cm_db = 0.0;
  double evm = 0.0;
  double osbee = 0.0;
};
struct CcdfCurve {
  std::string shaping;
  std::vector<double> thresholds_db;
  std::vector<double> ccdf;
  int used_blocks = 0;
  int excluded_blocks = 0;
};
struct RcmCcdfResult {
  std::vector<RcmRecord> records;
  std::vector<CcdfCurve> curves;
};
/// Writes rcm_blocks.csv and ccdf.csv when `out_dir` is nonempty.
RcmCcdfResult run_rcm_ccdf(const System& sys, const std::filesystem::path& out_dir);

// ---- psd ----
/// PSD on cells of width cell_hz centered on the subband, in dBm per cell.
struct CalibratedPsd {
  std::vector<double> freq_hz;  // cell centers relative to the subband center
  std::vector<double> power_dbm;
  double cell_hz = 0.0;
  double edge_hz = 0.0;  // half the occupied bandwidth
};
/// Smallest guard (multiple of step_hz) such that every measurement window
/// starting at least that far beyond either subband edge stays below the mask.
/// Throws DomainError if no guard within the mask extent works.
double find_guard_band(const CalibratedPsd& psd, const SemMask& mask, double step_hz);

struct PsdCurve {
  std::string shaping;
  std::string stage;  // "pre_pa" or "post_pa"
  CalibratedPsd psd;
  double inband_dbm = 0.0;
};
struct GuardBand {
  std::string shaping;
  std::string stage;
  bool ok = false;
  double delta_hz = 0.0;
};
struct PsdResult {
  std::vector<PsdCurve> curves;
  std::vector<GuardBand> guards;
};
/// Writes psd.csv, guard_band.csv and sem_mask.csv when `out_dir` is nonempty.
PsdResult run_psd(const System& sys, const std::filesystem::path& out_dir);

// ---- ber ----
struct BerPoint {
  std::string shaping;
  double ebn0_db = 0.0;
  std::uint64_t errors = 0;
  std::uint64_t bits = 0;
  double ber = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int excluded_blocks = 0;
  cplx pa_gain{1.0, 0.0};  // average PA gain folded into the receiver's channel knowledge
};
/// Paired Monte Carlo: all series share bits, channel draws and noise draws.
std::vector<BerPoint> run_ber(const System& sys, const std::filesystem::path& out_dir);

// ---- se ----
struct SeRow {
  std::string shaping;
  double ebn0_db = 0.0;
  double ber = 0.0;
  double guard_hz = 0.0;
  int blocks_per_tti = 0;
  double se = 0.0;
};
/// Reads ber.csv and guard_band.csv (post-PA guards) from `out_dir`, writes se.csv.
std::vector<SeRow> run_se(const Scenario& scenario, const std::filesystem::path& out_dir);

// ---- scatter ----
struct ScatterPoint {
  std::string shaping;
  int block = 0;
  int position = 0;  // subband position of the data symbol
  cplx value;
};
std::vector<ScatterPoint> export_scatter(const System& sys, const std::filesystem::path& out_dir);

// ---- solve-one ----
struct SolveOneResult {
  CVector data;
  ShapingSolution solution;
  double evm_max = 0.0;
};
/// Shapes one block; writes solution.csv and residuals.txt.
SolveOneResult solve_one(const System& sys, int block, double evm_max_db, const std::filesystem::path& out_dir);

// ---- export-matrices ----
/// Writes Phi (N' x S) and E (S x S) matrix files; returns their paths.
std::vector<std::filesystem::path> export_matrices(const System& sys, const std::filesystem::path& dir);

/// Provenance line placed first in every CSV.
std::string provenance_line(const Scenario& scenario);

}  // namespace cpsofdm
