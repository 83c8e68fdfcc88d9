// SPDX-License-Identifier: Apache-2.0
#include "cpsofdm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "cpsofdm/kernels.hpp"
#include "cpsofdm/metrics.hpp"

namespace cpsofdm {

namespace {

WaveformParams make_params(const Scenario& s) {
  WaveformParams p;
  switch (s.waveform) {
    case WaveformKind::Ofdm: p = ofdm_params(); break;
    case WaveformKind::CpsCp: p = cps_cp_params(); break;
    case WaveformKind::CpsNoGi: p = cps_nogi_params(); break;
  }
  if (s.zero_positions_set) {
    std::vector<int> zeros = s.zero_positions;
    std::sort(zeros.begin(), zeros.end());
    p.data_idx.clear();
    for (int i = 0; i < p.subband_size; ++i)
      if (!std::binary_search(zeros.begin(), zeros.end(), i)) p.data_idx.push_back(i);
  }
  p.validate();
  return p;
}

CVector make_prototype(const Scenario& s, const WaveformParams& p) {
  std::string name = s.prototype;
  if (name.empty()) name = s.waveform == WaveformKind::Ofdm ? "impulse" : "tapered";
  if (name == "tapered") return tapered_prototype(p.num_shifts, p.num_modulations);
  if (name == "constant") return constant_prototype(p.subband_size);
  if (name == "impulse") return impulse_prototype(p.subband_size);
  CVector proto = load_prototype(name);
  if (proto.size() != p.subband_size) throw ParameterError("prototype file length must equal the subband size");
  return proto;
}

OsbRegion make_region(const Scenario& s, const WaveformParams& p) {
  std::vector<int> subcarriers;
  for (const auto& r : s.osb_ranges)
    for (int k = r[0]; k <= r[1]; ++k) subcarriers.push_back(k);
  return OsbRegion::from_subcarriers(subcarriers, p.fft_size);
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& dir, const std::string& name, const Scenario& s, const std::string& header)
      : enabled_(!dir.empty()) {
    if (!enabled_) return;
    std::filesystem::create_directories(dir);
    path_ = dir / name;
    text_ << provenance_line(s) << '\n' << header << '\n';
  }
  template <typename... T>
  void row(const T&... fields) {
    if (!enabled_) return;
    bool first = true;
    ((text_ << (first ? "" : ",") << fields, first = false), ...);
    text_ << '\n';
  }
  ~CsvFile() {
    if (!enabled_) return;
    std::ofstream out(path_, std::ios::binary);
    out << text_.str();
  }
  CsvFile(const CsvFile&) = delete;
  CsvFile& operator=(const CsvFile&) = delete;

 private:
  bool enabled_;
  std::filesystem::path path_;
  std::ostringstream text_;
};

Bits block_bits(const System& sys, int block) {
  auto rng = make_rng(sys.scenario().seed, Stream::Bits, static_cast<std::uint64_t>(block));
  Bits bits(static_cast<size_t>(sys.params().data_count() * sys.qam().bits_per_symbol()));
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() >> 63);
  return bits;
}

// Runs body(i) for i in [0, count) in parallel and rethrows the first failure
// in index order.
template <typename F>
void parallel_blocks(int count, F&& body) {
  std::vector<std::string> errors(static_cast<size_t>(count));
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(i)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw DomainError(e);
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::string provenance;

  size_t column(const std::string& name, const std::filesystem::path& path) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ParameterError(path.string() + ": missing column '" + name + "'");
    return static_cast<size_t>(it - columns.begin());
  }
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("missing input " + path.string());
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (t.provenance.empty()) t.provenance = line;
      continue;
    }
    if (t.columns.empty())
      t.columns = split_csv(line);
    else
      t.rows.push_back(split_csv(line));
  }
  if (t.columns.empty()) throw ParameterError(path.string() + ": no header row");
  return t;
}

}  // namespace

std::string provenance_line(const Scenario& scenario) {
  return "# config_hash=" + scenario.hash() + " seed=" + std::to_string(scenario.seed);
}

std::string format_db_label(double db) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", db);
  return buf;
}

std::vector<Series> series_list(const Scenario& scenario) {
  std::vector<Series> out{Series{}};
  out[0].label = "off";
  for (double db : scenario.evm_max_db) out.push_back({format_db_label(db), db});
  return out;
}

System::System(Scenario scenario, const std::filesystem::path& cache_dir, bool force_e)
    : scenario_(std::move(scenario)),
      params_(make_params(scenario_)),
      proto_(make_prototype(scenario_, params_)),
      precoder_(build_precoder(proto_, params_.num_shifts, params_.num_modulations)),
      synth_(build_synthesis(precoder_, params_)),
      region_(make_region(scenario_, params_)),
      qam_(QamConstellation::from_name(scenario_.modulation, scenario_.symbol_energy)),
      tx_(params_, precoder_) {
  scenario_.validate();
  const int guard = params_.guard == GuardMode::CyclicPrefix ? params_.guard_len : 0;
  if (scenario_.channel.order() > guard)
    std::clog << "warning: channel order " << scenario_.channel.order() << " exceeds the guard length " << guard
              << "; inter-block interference is not removed\n";
  if (!scenario_.evm_max_db.empty() || force_e) {
    EMatrix e = cache_dir.empty() ? build_e_matrix(proto_, params_, region_, scenario_.oversample)
                                  : cached_e_matrix(cache_dir, proto_, params_, region_, scenario_.oversample);
    e_ = std::make_shared<const EMatrix>(std::move(e));
    shaper_ = std::make_shared<const OffsetShaper>(synth_.data, e_->data);
  }
  nominal_power_ = scenario_.symbol_energy * synth_.data.squaredNorm() / double(params_.block_len());
  pa_ = scenario_.pa;
  if (pa_.reference_power == 0.0) pa_.reference_power = nominal_power_;
}

int BlockSet::excluded(size_t series_index) const {
  int n = 0;
  for (const auto& o : outcomes[series_index]) n += o.ok ? 0 : 1;
  return n;
}

BlockSet make_blocks(const System& sys, int blocks) {
  if (blocks < 1) throw ParameterError("blocks must be positive");
  BlockSet set;
  set.series = series_list(sys.scenario());
  if (set.series.size() > 1 && sys.shaper() == nullptr) throw ParameterError("shaping requested without a shaper");
  const auto count = static_cast<size_t>(blocks);
  set.bits.resize(count);
  set.data.resize(count);
  set.outcomes.assign(set.series.size(), std::vector<BlockOutcome>(count));
  parallel_blocks(blocks, [&](int b) {
    const auto i = static_cast<size_t>(b);
    set.bits[i] = block_bits(sys, b);
    set.data[i] = sys.qam().map(set.bits[i]);
    set.outcomes[0][i].symbols = set.data[i];
    for (size_t s = 1; s < set.series.size(); ++s) {
      const double eps = db_to_linear_amplitude(set.series[s].evm_max_db);
      const auto sol = sys.shaper()->solve(set.data[i], eps, sys.scenario().solver);
      auto& out = set.outcomes[s][i];
      out.symbols = sol.c_bar;
      out.ok = sol.converged;
      out.evm = sol.residuals.evm;
      out.iterations = sol.inner_iterations;
    }
  });
  return set;
}

// ---------------------------------------------------------------- rcm-ccdf

RcmCcdfResult run_rcm_ccdf(const System& sys, const std::filesystem::path& out_dir) {
  const auto& sc = sys.scenario();
  const BlockSet set = make_blocks(sys, sc.blocks);
  const auto& phi = sys.synthesis().data;
  const int block_len = sys.params().block_len();
  const QuadratureRule rule =
      sys.region().empty() ? QuadratureRule{} : make_quadrature(sys.region(), block_len, sc.oversample);
  const auto nblocks = static_cast<size_t>(sc.blocks);

  RcmCcdfResult res;
  res.records.resize(set.series.size() * nblocks);
  parallel_blocks(sc.blocks, [&](int b) {
    const auto i = static_cast<size_t>(b);
    const CVector ref = phi * set.data[i];
    for (size_t s = 0; s < set.series.size(); ++s) {
      const auto& o = set.outcomes[s][i];
      const CVector x = phi * o.symbols;
      auto& r = res.records[s * nblocks + i];
      r.block = b;
      r.shaping = set.series[s].label;
      r.ok = o.ok;
      r.rcm = rcm(x);
      r.cm_db = cm_db(r.rcm, sc.cm);
      r.evm = evm(x, ref);
      r.osbee = rule.nodes.empty() ? 0.0 : osbee_direct(x, rule);
    }
  });

  const auto thresholds_db = sc.ccdf.thresholds_db();
  std::vector<double> thresholds;
  for (double t : thresholds_db) thresholds.push_back(db_to_linear_amplitude(t));
  for (size_t s = 0; s < set.series.size(); ++s) {
    CcdfCurve curve;
    curve.shaping = set.series[s].label;
    curve.thresholds_db = thresholds_db;
    std::vector<double> samples;
    for (size_t i = 0; i < nblocks; ++i) {
      const auto& r = res.records[s * nblocks + i];
      if (r.ok) samples.push_back(r.rcm);
    }
    curve.used_blocks = static_cast<int>(samples.size());
    curve.excluded_blocks = sc.blocks - curve.used_blocks;
    curve.ccdf = samples.empty() ? std::vector<double>(thresholds.size(), std::nan(""))
                                 : ccdf(samples, thresholds);
    res.curves.push_back(std::move(curve));
  }

  {
    CsvFile f(out_dir, "rcm_blocks.csv", sc, "scenario,shaping,block,status,rcm,rcm_db,cm_db,evm,osbee");
    for (const auto& r : res.records)
      f.row(sc.name, r.shaping, r.block, r.ok ? "ok" : "failed", num(r.rcm), num(20.0 * std::log10(r.rcm)),
            num(r.cm_db), num(r.evm), num(r.osbee));
  }
  {
    CsvFile f(out_dir, "ccdf.csv", sc, "scenario,shaping,threshold_db,ccdf,used_blocks,excluded_blocks");
    for (const auto& c : res.curves)
      for (size_t k = 0; k < c.thresholds_db.size(); ++k)
        f.row(sc.name, c.shaping, num(c.thresholds_db[k]), num(c.ccdf[k]), c.used_blocks, c.excluded_blocks);
  }
  return res;
}

// ---------------------------------------------------------------- psd

double find_guard_band(const CalibratedPsd& psd, const SemMask& mask, double step_hz) {
  mask.validate();
  if (!(step_hz > 0.0)) throw ParameterError("guard band: step must be positive");
  if (psd.freq_hz.empty() || psd.freq_hz.size() != psd.power_dbm.size())
    throw ParameterError("guard band: malformed PSD");
  std::vector<double> mw(psd.power_dbm.size());
  double reach = 0.0;
  for (size_t k = 0; k < mw.size(); ++k) {
    mw[k] = std::pow(10.0, psd.power_dbm[k] / 10.0);
    reach = std::max(reach, std::abs(psd.freq_hz[k]) + 0.5 * psd.cell_hz - psd.edge_hz);
  }
  constexpr double kSlack = 1e-6;  // Hz, absorbs rounding of grid positions

  // Worst (left or right) window power in dBm for offsets [lo, hi) past the edge.
  auto window_dbm = [&](double lo, double hi) {
    double right = 0.0, left = 0.0;
    for (size_t k = 0; k < mw.size(); ++k) {
      const double f = psd.freq_hz[k];
      if (f >= psd.edge_hz + lo && f < psd.edge_hz + hi) right += mw[k];
      if (f <= -psd.edge_hz - lo && f > -psd.edge_hz - hi) left += mw[k];
    }
    return 10.0 * std::log10(std::max({right, left, 1e-300}));
  };

  double extent = 0.0, min_rbw = mask.segments[0].rbw_hz;
  for (const auto& s : mask.segments) {
    extent = std::max(extent, std::min(s.stop_hz, reach));
    min_rbw = std::min(min_rbw, s.rbw_hz);
  }
  double worst_dbm = -std::numeric_limits<double>::infinity();
  double worst_at = 0.0;
  for (int k = 0; k * step_hz + min_rbw <= extent + kSlack; ++k) {
    const double delta = k * step_hz;
    bool pass = true;
    for (const auto& s : mask.segments) {
      const double stop = std::min(s.stop_hz, reach);
      double o = std::ceil(std::max(delta, s.start_hz) / step_hz - 1e-9) * step_hz;
      for (; pass && o + s.rbw_hz <= stop + kSlack; o += step_hz) {
        const double p = window_dbm(o, o + s.rbw_hz);
        if (p > s.limit_dbm) {
          pass = false;
          if (k == 0 || p > worst_dbm) {
            worst_dbm = p;
            worst_at = o;
          }
        }
      }
      if (!pass) break;
    }
    if (pass) return delta;
  }
  throw DomainError("guard band: mask exceeded for every guard up to " + num(extent) + " Hz (" + num(worst_dbm) +
                    " dBm in the window starting " + num(worst_at) + " Hz past the edge)");
}

PsdResult run_psd(const System& sys, const std::filesystem::path& out_dir) {
  const auto& sc = sys.scenario();
  const auto& p = sys.params();
  const BlockSet set = make_blocks(sys, sc.blocks);
  const int grid = sc.psd.oversample * p.fft_size;
  const double center = kTwoPi * (p.first_subcarrier + 0.5 * (p.subband_size - 1)) / double(p.fft_size);
  const double theta0 = center - kPi + kPi / double(grid);
  const double fs = p.fft_size * sc.psd.subcarrier_spacing_hz;

  CalibratedPsd shape;
  shape.cell_hz = fs / double(grid);
  shape.edge_hz = 0.5 * p.subband_size * sc.psd.subcarrier_spacing_hz;
  for (int k = 0; k < grid; ++k) shape.freq_hz.push_back((-0.5 + (k + 0.5) / double(grid)) * fs);

  struct Raw {
    std::string shaping, stage;
    std::vector<double> esd;
  };
  std::vector<Raw> raw;
  for (size_t s = 0; s < set.series.size(); ++s) {
    std::vector<size_t> index;
    for (size_t i = 0; i < set.outcomes[s].size(); ++i)
      if (set.outcomes[s][i].ok) index.push_back(i);
    std::vector<CVector> pre(index.size()), post(index.size());
    parallel_blocks(static_cast<int>(index.size()), [&](int k) {
      const auto i = index[static_cast<size_t>(k)];
      pre[static_cast<size_t>(k)] =
          sys.transmitter()(scatter_data(set.outcomes[s][i].symbols, p.data_idx, p.subband_size));
      post[static_cast<size_t>(k)] = pa_apply(pre[static_cast<size_t>(k)], sys.pa());
    });
    if (index.empty()) continue;
    raw.push_back({set.series[s].label, "pre_pa", parallel::psd_average_uniform(pre, theta0, grid)});
    raw.push_back({set.series[s].label, "post_pa", parallel::psd_average_uniform(post, theta0, grid)});
  }
  if (raw.empty()) throw DomainError("psd: every block was excluded");

  auto inband = [&](const std::vector<double>& esd) {
    double sum = 0.0;
    for (size_t k = 0; k < esd.size(); ++k)
      if (std::abs(shape.freq_hz[k]) < shape.edge_hz) sum += esd[k];
    return sum;
  };
  // One scale for every curve: the unshaped pre-PA in-band power maps to the transmit power.
  const double scale = std::pow(10.0, sc.psd.tx_power_dbm / 10.0) / inband(raw[0].esd);

  PsdResult res;
  for (const auto& r : raw) {
    PsdCurve c;
    c.shaping = r.shaping;
    c.stage = r.stage;
    c.psd = shape;
    for (double v : r.esd) c.psd.power_dbm.push_back(10.0 * std::log10(std::max(scale * v, 1e-30)));
    c.inband_dbm = 10.0 * std::log10(scale * inband(r.esd));
    GuardBand g{c.shaping, c.stage, false, std::nan("")};
    try {
      g.delta_hz = find_guard_band(c.psd, sc.psd.mask, sc.psd.guard_step_hz);
      g.ok = true;
    } catch (const DomainError& e) {
      std::clog << "warning: " << sc.name << " shaping=" << c.shaping << " " << c.stage << ": " << e.what() << '\n';
    }
    res.guards.push_back(g);
    res.curves.push_back(std::move(c));
  }

  {
    CsvFile f(out_dir, "psd.csv", sc, "scenario,shaping,stage,omega,freq_hz,power_dbm,psd_dbm_hz,cell_hz");
    for (const auto& c : res.curves)
      for (size_t k = 0; k < c.psd.freq_hz.size(); ++k)
        f.row(sc.name, c.shaping, c.stage, num(theta0 + kTwoPi * double(k) / double(grid)), num(c.psd.freq_hz[k]),
              num(c.psd.power_dbm[k]),
              num(c.psd.power_dbm[k] - 10.0 * std::log10(c.psd.cell_hz)), num(c.psd.cell_hz));
  }
  {
    CsvFile f(out_dir, "guard_band.csv", sc, "scenario,shaping,stage,status,guard_hz,inband_dbm");
    for (size_t i = 0; i < res.guards.size(); ++i) {
      const auto& g = res.guards[i];
      f.row(sc.name, g.shaping, g.stage, g.ok ? "ok" : "unsatisfied", num(g.delta_hz), num(res.curves[i].inband_dbm));
    }
  }
  {
    CsvFile f(out_dir, "sem_mask.csv", sc, "edge_hz,start_hz,stop_hz,limit_dbm,rbw_hz");
    for (const auto& s : sc.psd.mask.segments)
      f.row(num(shape.edge_hz), num(s.start_hz), num(s.stop_hz), num(s.limit_dbm), num(s.rbw_hz));
  }
  return res;
}

// ---------------------------------------------------------------- ber

std::vector<BerPoint> run_ber(const System& sys, const std::filesystem::path& out_dir) {
  const auto& sc = sys.scenario();
  const auto& p = sys.params();
  if (sc.ebn0_db.empty()) throw ParameterError("ber: EbN0 sweep is empty");
  const BlockSet set = make_blocks(sys, sc.blocks);
  const auto nseries = set.series.size();
  const auto nblocks = static_cast<size_t>(sc.blocks);
  const int block_len = p.block_len();
  const int bps = sys.qam().bits_per_symbol();
  const CMatrix p_data = [&] {
    CMatrix m(p.subband_size, p.data_count());
    for (int j = 0; j < p.data_count(); ++j) m.col(j) = sys.precoder().col(p.data_idx[static_cast<size_t>(j)]);
    return m;
  }();

  // PA output per series and block; failed solves transmit nothing.
  std::vector<std::vector<CVector>> sent(nseries, std::vector<CVector>(nblocks));
  std::vector<cplx> cross(nseries * nblocks);
  std::vector<double> power(nseries * nblocks);
  std::vector<ChannelModel> channels(nblocks);
  parallel_blocks(sc.blocks, [&](int b) {
    const auto i = static_cast<size_t>(b);
    auto rng = make_rng(sc.seed, Stream::Channel, i);
    channels[i] = draw_channel(sc.channel, rng);
    for (size_t s = 0; s < nseries; ++s) {
      const auto& o = set.outcomes[s][i];
      if (!o.ok) {
        sent[s][i] = CVector::Zero(block_len);
        continue;
      }
      const CVector x = sys.transmitter()(scatter_data(o.symbols, p.data_idx, p.subband_size));
      sent[s][i] = pa_apply(x, sys.pa());
      cross[s * nblocks + i] = x.dot(sent[s][i]);
      power[s * nblocks + i] = x.squaredNorm();
    }
  });
  // The receiver knows the composite channel: taps times the PA's average
  // (Bussgang) gain of each series.
  std::vector<cplx> pa_gain(nseries, cplx(1.0));
  for (size_t s = 0; s < nseries; ++s) {
    cplx num(0.0);
    double den = 0.0;
    for (size_t i = 0; i < nblocks; ++i) {
      num += cross[s * nblocks + i];
      den += power[s * nblocks + i];
    }
    if (den > 0.0) pa_gain[s] = num / den;
  }
  std::vector<CVector> responses(nblocks);
  for (size_t i = 0; i < nblocks; ++i) responses[i] = channel_response(channels[i], p);

  const Fft fft(p.fft_size);
  std::vector<BerPoint> points;
  for (size_t j = 0; j < sc.ebn0_db.size(); ++j) {
    const double n0 = noise_variance(sc.ebn0_db[j], sc.symbol_energy, bps);
    std::vector<CMatrix> shared_q(nseries);
    if (sc.channel.is_identity())
      for (size_t s = 0; s < nseries; ++s)
        shared_q[s] = mmse_matrix(pa_gain[s] * responses[0], p_data, n0, sc.symbol_energy);
    std::vector<std::uint64_t> errors(nseries * nblocks, 0);
    parallel_blocks(sc.blocks, [&](int b) {
      const auto i = static_cast<size_t>(b);
      auto noise_rng = make_rng(sc.seed, Stream::Noise, (static_cast<std::uint64_t>(j) << 32) | i);
      CVector noise(block_len);
      for (auto& z : noise) z = complex_gaussian(noise_rng, n0);
      const ChannelModel& ch = channels[i];
      const int order = ch.order();
      std::mt19937_64 unused;
      for (size_t s = 0; s < nseries; ++s) {
        if (!set.outcomes[s][i].ok) continue;
        CVector y;
        if (order == 0) {
          y = ch.taps(0) * sent[s][i];
        } else {
          // Previous block's tail leaks into this one through the same taps.
          CVector stream = CVector::Zero(order + block_len);
          if (i > 0) stream.head(order) = sent[s][i - 1].tail(order);
          stream.tail(block_len) = sent[s][i];
          y = apply_channel(stream, ch, 0.0, unused).tail(block_len);
        }
        y += noise;
        const CVector r = receive_block(y, p, fft);
        const CMatrix q = sc.channel.is_identity()
                              ? shared_q[s]
                              : mmse_matrix(pa_gain[s] * responses[i], p_data, n0, sc.symbol_energy);
        const Bits rx = sys.qam().demap(q * r);
        errors[s * nblocks + i] = ber_count(set.bits[i], rx).errors;
      }
    });
    for (size_t s = 0; s < nseries; ++s) {
      BerPoint pt;
      pt.shaping = set.series[s].label;
      pt.ebn0_db = sc.ebn0_db[j];
      pt.excluded_blocks = set.excluded(s);
      pt.pa_gain = pa_gain[s];
      for (size_t i = 0; i < nblocks; ++i) {
        if (!set.outcomes[s][i].ok) continue;
        pt.errors += errors[s * nblocks + i];
        pt.bits += set.bits[i].size();
      }
      pt.ber = pt.bits == 0 ? std::nan("") : double(pt.errors) / double(pt.bits);
      const auto ci = wilson_interval(pt.errors, pt.bits);
      pt.ci_lo = ci.lo;
      pt.ci_hi = ci.hi;
      points.push_back(pt);
    }
  }

  CsvFile f(out_dir, "ber.csv", sc, "scenario,shaping,ebn0_db,errors,bits,ber,ci_lo,ci_hi,excluded_blocks,pa_gain_db,pa_phase_deg");
  for (const auto& pt : points)
    f.row(sc.name, pt.shaping, num(pt.ebn0_db), pt.errors, pt.bits, num(pt.ber), num(pt.ci_lo), num(pt.ci_hi),
          pt.excluded_blocks, num(20.0 * std::log10(std::abs(pt.pa_gain))), num(std::arg(pt.pa_gain) * 180.0 / kPi));
  return points;
}

// ---------------------------------------------------------------- se

std::vector<SeRow> run_se(const Scenario& scenario, const std::filesystem::path& out_dir) {
  const WaveformParams p = make_params(scenario);
  const auto ber_path = out_dir / "ber.csv";
  const auto guard_path = out_dir / "guard_band.csv";
  const CsvTable ber = read_csv(ber_path);
  const CsvTable guard = read_csv(guard_path);
  for (const auto* t : {&ber, &guard})
    if (t->provenance.find("config_hash=" + scenario.hash()) == std::string::npos)
      std::clog << "warning: se inputs were produced with a different configuration (" << t->provenance << ")\n";

  std::map<std::string, double> guards;
  {
    const auto c_shaping = guard.column("shaping", guard_path);
    const auto c_stage = guard.column("stage", guard_path);
    const auto c_status = guard.column("status", guard_path);
    const auto c_guard = guard.column("guard_hz", guard_path);
    for (const auto& row : guard.rows) {
      if (row.size() <= std::max({c_shaping, c_stage, c_status, c_guard}) || row[c_stage] != "post_pa") continue;
      if (row[c_status] != "ok")
        throw DomainError("se: post-PA spectrum of shaping=" + row[c_shaping] + " never meets the mask");
      guards[row[c_shaping]] = std::stod(row[c_guard]);
    }
  }

  const int blocks_per_tti =
      scenario.se.blocks_per_tti > 0 ? scenario.se.blocks_per_tti : (p.guard == GuardMode::None ? 15 : 14);
  const int bps = QamConstellation::from_name(scenario.modulation, scenario.symbol_energy).bits_per_symbol();
  std::vector<SeRow> rows;
  const auto c_shaping = ber.column("shaping", ber_path);
  const auto c_ebn0 = ber.column("ebn0_db", ber_path);
  const auto c_ber = ber.column("ber", ber_path);
  for (const auto& row : ber.rows) {
    if (row.size() <= std::max({c_shaping, c_ebn0, c_ber})) throw ParameterError(ber_path.string() + ": short row");
    if (std::abs(std::stod(row[c_ebn0]) - scenario.se.ebn0_db) > 1e-9) continue;
    const auto it = guards.find(row[c_shaping]);
    if (it == guards.end()) throw ParameterError("se: no post-PA guard band for shaping=" + row[c_shaping]);
    SeRow r;
    r.shaping = row[c_shaping];
    r.ebn0_db = scenario.se.ebn0_db;
    r.ber = std::stod(row[c_ber]);
    r.guard_hz = it->second;
    r.blocks_per_tti = blocks_per_tti;
    r.se = spectral_efficiency(
        {bps, p.data_count(), blocks_per_tti, r.ber, scenario.se.tti_s, scenario.se.bandwidth_hz, r.guard_hz});
    rows.push_back(r);
  }
  if (rows.empty()) throw ParameterError("se: ber.csv has no rows at EbN0 = " + num(scenario.se.ebn0_db) + " dB");

  CsvFile f(out_dir, "se.csv", scenario, "scenario,shaping,ebn0_db,ber,guard_hz,blocks_per_tti,se_bps_hz");
  for (const auto& r : rows)
    f.row(scenario.name, r.shaping, num(r.ebn0_db), num(r.ber), num(r.guard_hz), r.blocks_per_tti, num(r.se));
  return rows;
}

// ---------------------------------------------------------------- scatter

std::vector<ScatterPoint> export_scatter(const System& sys, const std::filesystem::path& out_dir) {
  const auto& sc = sys.scenario();
  if (sc.evm_max_db.empty()) throw ParameterError("scatter: shaping is off in this scenario");
  const BlockSet set = make_blocks(sys, sc.blocks);
  const auto& idx = sys.params().data_idx;
  std::vector<ScatterPoint> pts;
  for (size_t s = 1; s < set.series.size(); ++s)
    for (size_t i = 0; i < set.outcomes[s].size(); ++i) {
      const auto& o = set.outcomes[s][i];
      if (!o.ok) continue;
      for (Eigen::Index k = 0; k < o.symbols.size(); ++k)
        pts.push_back({set.series[s].label, static_cast<int>(i), idx[static_cast<size_t>(k)], o.symbols(k)});
    }
  CsvFile f(out_dir, "scatter.csv", sc, "scenario,waveform,shaping,block,position,re,im");
  for (const auto& pt : pts)
    f.row(sc.name, waveform_kind_name(sc.waveform), pt.shaping, pt.block, pt.position, num(pt.value.real()),
          num(pt.value.imag()));
  return pts;
}

// ---------------------------------------------------------------- solve-one

SolveOneResult solve_one(const System& sys, int block, double evm_max_db, const std::filesystem::path& out_dir) {
  if (block < 0) throw ParameterError("solve-one: block index must be >= 0");
  if (sys.shaper() == nullptr) throw ParameterError("solve-one: system was built without an E matrix");
  const auto& sc = sys.scenario();
  SolveOneResult res;
  res.data = sys.qam().map(block_bits(sys, block));
  res.evm_max = db_to_linear_amplitude(evm_max_db);
  res.solution = sys.shaper()->solve(res.data, res.evm_max, sc.solver);
  const auto& sol = res.solution;
  const auto& idx = sys.params().data_idx;
  if (!out_dir.empty()) {
    {
      CsvFile f(out_dir, "solution.csv", sc, "scenario,shaping,block,position,re,im,data_re,data_im");
      for (Eigen::Index k = 0; k < sol.c_bar.size(); ++k)
        f.row(sc.name, format_db_label(evm_max_db), block, idx[static_cast<size_t>(k)], num(sol.c_bar(k).real()),
              num(sol.c_bar(k).imag()), num(res.data(k).real()), num(res.data(k).imag()));
    }
    std::ostringstream t;
    const auto& r = sol.residuals;
    t << provenance_line(sc) << '\n'
      << "block = " << block << '\n'
      << "evm_max_db = " << num(evm_max_db) << '\n'
      << "converged = " << (sol.converged ? "true" : "false") << '\n'
      << "message = " << sol.message << '\n'
      << "outer_iterations = " << sol.outer_iterations << '\n'
      << "inner_iterations = " << sol.inner_iterations << '\n'
      << "objective_6norm = " << num(sol.objective) << '\n'
      << "unshaped_6norm = " << num(norm6(sys.synthesis().data * res.data)) << '\n'
      << "rcm_shaped = " << num(rcm(sys.synthesis().data * sol.c_bar)) << '\n'
      << "rcm_unshaped = " << num(rcm(sys.synthesis().data * res.data)) << '\n'
      << "evm = " << num(r.evm) << '\n'
      << "slack_lin = " << num(r.slack_lin) << '\n'
      << "slack_evm = " << num(r.slack_evm) << '\n'
      << "slack_osb = " << num(r.slack_osb) << '\n'
      << "rel_lin = " << num(r.rel_lin) << '\n'
      << "rel_evm = " << num(r.rel_evm) << '\n'
      << "rel_osb = " << num(r.rel_osb) << '\n'
      << "feasible = " << (r.feasible ? "true" : "false") << '\n'
      << "energy_kept = " << (r.energy_kept ? "true" : "false") << '\n'
      << "trace =";
    for (double v : sol.trace) t << ' ' << num(v);
    t << '\n';
    std::filesystem::create_directories(out_dir);
    std::ofstream(out_dir / "residuals.txt", std::ios::binary) << t.str();
  }
  return res;
}

// ---------------------------------------------------------------- export-matrices

std::vector<std::filesystem::path> export_matrices(const System& sys, const std::filesystem::path& dir) {
  const auto& sc = sys.scenario();
  std::filesystem::create_directories(dir);
  const std::string phi_key = sha256_hex("Phi;" + e_matrix_key(sys.prototype(), sys.params(), OsbRegion{}, 0));
  const auto phi_path = dir / ("Phi_" + phi_key.substr(0, 16) + ".bin");
  write_matrix_file(phi_path, phi_key, sys.synthesis().full);
  const std::string e_key = e_matrix_key(sys.prototype(), sys.params(), sys.region(), sc.oversample);
  const auto e_path = dir / ("E_" + e_key.substr(0, 16) + ".bin");
  if (sys.e_matrix() != nullptr)
    write_matrix_file(e_path, e_key, sys.e_matrix()->full);
  else
    (void)cached_e_matrix(dir, sys.prototype(), sys.params(), sys.region(), sc.oversample);
  return {phi_path, e_path};
}

}  // namespace cpsofdm
