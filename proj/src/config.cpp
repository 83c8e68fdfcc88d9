// SPDX-License-Identifier: Apache-2.0
#include "cpsofdm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cpsofdm {

using nlohmann::json;

WaveformKind waveform_kind_from_name(const std::string& name) {
  if (name == "ofdm") return WaveformKind::Ofdm;
  if (name == "cps_cp") return WaveformKind::CpsCp;
  if (name == "cps_nogi") return WaveformKind::CpsNoGi;
  throw ParameterError("unknown waveform '" + name + "' (expected ofdm, cps_cp or cps_nogi)");
}

std::string waveform_kind_name(WaveformKind kind) {
  switch (kind) {
    case WaveformKind::Ofdm: return "ofdm";
    case WaveformKind::CpsCp: return "cps_cp";
    case WaveformKind::CpsNoGi: return "cps_nogi";
  }
  throw ParameterError("unknown waveform kind");
}

SemMask SemMask::flat(double extent_hz) { return SemMask{{SemSegment{0.0, extent_hz, -10.0, 30e3}}}; }

void SemMask::validate() const {
  if (segments.empty()) throw ParameterError("mask: no segments");
  for (size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (!(s.start_hz >= 0.0) || !(s.stop_hz > s.start_hz)) throw ParameterError("mask: bad segment range");
    if (!(s.rbw_hz > 0.0)) throw ParameterError("mask: measurement bandwidth must be positive");
    for (size_t j = 0; j < i; ++j) {
      const auto& o = segments[j];
      if (s.start_hz < o.stop_hz && o.start_hz < s.stop_hz) throw ParameterError("mask: overlapping segments");
    }
  }
}

std::vector<double> CcdfSettings::thresholds_db() const {
  if (!(step_db > 0.0) || !(max_db >= min_db)) throw ParameterError("ccdf: bad threshold range");
  std::vector<double> out;
  const auto count = static_cast<int>(std::floor((max_db - min_db) / step_db + 1e-9)) + 1;
  for (int i = 0; i < count; ++i) out.push_back(min_db + step_db * i);
  return out;
}

void Scenario::validate() const {
  if (name.empty() || name.find_first_of(",\n\"") != std::string::npos)
    throw ParameterError("scenario: name must be nonempty without commas, quotes or newlines");
  if (!(symbol_energy > 0.0)) throw ParameterError("scenario: symbol energy must be positive");
  if (blocks < 1) throw ParameterError("scenario: blocks must be positive");
  if (oversample < 1) throw ParameterError("scenario: oversample must be positive");
  for (double e : evm_max_db)
    if (!std::isfinite(e)) throw ParameterError("scenario: evm_max_db entries must be finite");
  for (double e : ebn0_db)
    if (!std::isfinite(e)) throw ParameterError("scenario: ebn0_db entries must be finite");
  for (const auto& r : osb_ranges)
    if (r[0] > r[1]) throw ParameterError("scenario: OSB range must be ascending");
  channel.validate();
  pa.validate();
  psd.mask.validate();
  if (psd.oversample < 1) throw ParameterError("psd: oversample must be positive");
  if (!(psd.subcarrier_spacing_hz > 0.0) || !(psd.guard_step_hz > 0.0)) throw ParameterError("psd: bad spacing");
  (void)ccdf.thresholds_db();
  if (!(se.tti_s > 0.0) || !(se.bandwidth_hz > 0.0) || se.blocks_per_tti < 0)
    throw ParameterError("se: bad settings");
  solver.validate();
  if (cm.slope_db == 0.0) throw ParameterError("cm: slope must be nonzero");
}

namespace {

std::string prototype_digest(const std::string& proto) {
  if (proto.empty() || proto == "tapered" || proto == "constant" || proto == "impulse") return proto;
  const CVector p = load_prototype(proto);
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < p.size(); ++i) os << p(i).real() << ' ' << p(i).imag() << ';';
  return "file:" + sha256_hex(os.str());
}

json complex_list(const std::array<cplx, 5>& v) {
  json out = json::array();
  for (const auto& c : v) out.push_back({c.real(), c.imag()});
  return out;
}

json to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["waveform"] = waveform_kind_name(s.waveform);
  j["prototype"] = prototype_digest(s.prototype);
  if (s.zero_positions_set) j["zero_positions"] = s.zero_positions;
  j["modulation"] = s.modulation;
  j["symbol_energy"] = s.symbol_energy;
  j["evm_max_db"] = s.evm_max_db;
  json ranges = json::array();
  for (const auto& r : s.osb_ranges) ranges.push_back({r[0], r[1]});
  j["osb_subcarriers"] = ranges;
  j["oversample"] = s.oversample;
  j["seed"] = s.seed;
  j["blocks"] = s.blocks;
  j["ebn0_db"] = s.ebn0_db;
  json taps = json::array();
  for (const auto& t : s.channel.taps) taps.push_back({{"delay", t.delay}, {"power_db", t.power_db}});
  j["channel"] = {{"taps", taps}};
  j["pa"] = {{"kind", pa_kind_name(s.pa.kind)},           {"coeffs", complex_list(s.pa.coeffs)},
             {"smoothness", s.pa.smoothness},             {"saturation", s.pa.saturation},
             {"ibo_db", s.pa.ibo_db},                     {"phase_comp_deg", s.pa.phase_comp_deg},
             {"reference_power", s.pa.reference_power}};
  json mask = json::array();
  for (const auto& m : s.psd.mask.segments)
    mask.push_back({{"start_hz", m.start_hz}, {"stop_hz", m.stop_hz}, {"limit_dbm", m.limit_dbm}, {"rbw_hz", m.rbw_hz}});
  j["psd"] = {{"oversample", s.psd.oversample},
              {"tx_power_dbm", s.psd.tx_power_dbm},
              {"subcarrier_spacing_hz", s.psd.subcarrier_spacing_hz},
              {"guard_step_hz", s.psd.guard_step_hz},
              {"mask", mask}};
  j["ccdf"] = {{"min_db", s.ccdf.min_db}, {"max_db", s.ccdf.max_db}, {"step_db", s.ccdf.step_db}};
  j["se"] = {{"tti_s", s.se.tti_s},
             {"bandwidth_hz", s.se.bandwidth_hz},
             {"blocks_per_tti", s.se.blocks_per_tti},
             {"ebn0_db", s.se.ebn0_db}};
  j["solver"] = {{"tol", s.solver.tol},
                 {"max_outer", s.solver.max_outer},
                 {"max_inner", s.solver.max_inner},
                 {"barrier_growth", s.solver.barrier_growth},
                 {"initial_weight", s.solver.initial_weight}};
  j["cm"] = {{"rcm_ref_db", s.cm.rcm_ref_db}, {"slope_db", s.cm.slope_db}};
  return j;
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ParameterError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ParameterError("config: unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

cplx read_complex(const json& v) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2) return {v[0].get<double>(), v[1].get<double>()};
  throw ParameterError("config: complex values are numbers or [re, im] pairs");
}

ChannelProfile parse_channel(const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "awgn") return ChannelProfile::identity();
    if (name == "tdl") return ChannelProfile::default_tdl();
    throw ParameterError("config: unknown channel '" + name + "' (expected awgn, tdl or {taps: ...})");
  }
  check_keys(j, {"taps"}, "channel");
  ChannelProfile p;
  for (const auto& t : j.at("taps")) {
    check_keys(t, {"delay", "power_db"}, "channel.taps");
    p.taps.push_back({t.at("delay").get<int>(), t.at("power_db").get<double>()});
  }
  return p;
}

PaModel parse_pa(const json& j, const std::filesystem::path& base) {
  check_keys(j, {"kind", "coeffs", "coeff_file", "smoothness", "saturation", "ibo_db", "phase_comp_deg",
                 "reference_power"},
             "pa");
  PaModel pa;
  pa.kind = pa_kind_from_name(j.value("kind", std::string("ideal")));
  pa.phase_comp_deg = default_phase_comp_deg(pa.kind);
  read(j, "smoothness", pa.smoothness);
  read(j, "saturation", pa.saturation);
  read(j, "ibo_db", pa.ibo_db);
  read(j, "phase_comp_deg", pa.phase_comp_deg);
  read(j, "reference_power", pa.reference_power);
  if (j.contains("coeffs") && j.contains("coeff_file")) throw ParameterError("config: give coeffs or coeff_file, not both");
  std::vector<cplx> coeffs;
  if (j.contains("coeffs")) {
    for (const auto& c : j.at("coeffs")) coeffs.push_back(read_complex(c));
  } else if (j.contains("coeff_file")) {
    std::filesystem::path path = j.at("coeff_file").get<std::string>();
    if (path.is_relative()) path = base / path;
    const CVector c = load_prototype(path);
    coeffs.assign(c.data(), c.data() + c.size());
  }
  if (coeffs.size() > 5) throw ParameterError("config: at most five odd-order PA coefficients (a1..a9)");
  if (!coeffs.empty()) {
    pa.coeffs.fill(cplx(0.0));
    for (size_t i = 0; i < coeffs.size(); ++i) pa.coeffs[i] = coeffs[i];
  }
  return pa;
}

}  // namespace

std::string Scenario::canonical() const { return to_json(*this).dump(); }

std::string Scenario::hash() const { return sha256_hex(canonical()).substr(0, 16); }

Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  check_keys(j, {"name", "waveform", "prototype", "zero_positions", "modulation", "symbol_energy", "evm_max_db",
                 "osb_subcarriers", "oversample", "seed", "blocks", "ebn0_db", "channel", "pa", "psd", "ccdf", "se",
                 "solver", "cm"},
             "config");
  Scenario s;
  try {
    read(j, "name", s.name);
    if (j.contains("waveform")) s.waveform = waveform_kind_from_name(j.at("waveform").get<std::string>());
    read(j, "prototype", s.prototype);
    if (!s.prototype.empty() && s.prototype != "tapered" && s.prototype != "constant" && s.prototype != "impulse") {
      std::filesystem::path path = s.prototype;
      if (path.is_relative()) path = base_dir / path;
      s.prototype = path.lexically_normal().string();
    }
    if (j.contains("zero_positions")) {
      s.zero_positions = j.at("zero_positions").get<std::vector<int>>();
      s.zero_positions_set = true;
    }
    read(j, "modulation", s.modulation);
    read(j, "symbol_energy", s.symbol_energy);
    if (j.contains("evm_max_db")) {
      const auto& e = j.at("evm_max_db");
      if (e.is_string() && e.get<std::string>() == "off")
        s.evm_max_db.clear();
      else if (e.is_number())
        s.evm_max_db = {e.get<double>()};
      else
        s.evm_max_db = e.get<std::vector<double>>();
    }
    if (j.contains("osb_subcarriers")) {
      s.osb_ranges.clear();
      for (const auto& r : j.at("osb_subcarriers")) {
        if (r.is_number())
          s.osb_ranges.push_back({r.get<int>(), r.get<int>()});
        else
          s.osb_ranges.push_back({r.at(0).get<int>(), r.at(1).get<int>()});
      }
    }
    read(j, "oversample", s.oversample);
    read(j, "seed", s.seed);
    read(j, "blocks", s.blocks);
    read(j, "ebn0_db", s.ebn0_db);
    if (j.contains("channel")) s.channel = parse_channel(j.at("channel"));
    if (j.contains("pa")) s.pa = parse_pa(j.at("pa"), base_dir);
    if (j.contains("psd")) {
      const auto& p = j.at("psd");
      check_keys(p, {"oversample", "tx_power_dbm", "subcarrier_spacing_hz", "guard_step_hz", "mask"}, "psd");
      read(p, "oversample", s.psd.oversample);
      read(p, "tx_power_dbm", s.psd.tx_power_dbm);
      read(p, "subcarrier_spacing_hz", s.psd.subcarrier_spacing_hz);
      read(p, "guard_step_hz", s.psd.guard_step_hz);
      if (p.contains("mask")) {
        s.psd.mask.segments.clear();
        for (const auto& m : p.at("mask")) {
          check_keys(m, {"start_hz", "stop_hz", "limit_dbm", "rbw_hz"}, "psd.mask");
          SemSegment seg;
          read(m, "start_hz", seg.start_hz);
          read(m, "stop_hz", seg.stop_hz);
          read(m, "limit_dbm", seg.limit_dbm);
          read(m, "rbw_hz", seg.rbw_hz);
          s.psd.mask.segments.push_back(seg);
        }
      }
    }
    if (j.contains("ccdf")) {
      const auto& c = j.at("ccdf");
      check_keys(c, {"min_db", "max_db", "step_db"}, "ccdf");
      read(c, "min_db", s.ccdf.min_db);
      read(c, "max_db", s.ccdf.max_db);
      read(c, "step_db", s.ccdf.step_db);
    }
    if (j.contains("se")) {
      const auto& c = j.at("se");
      check_keys(c, {"tti_s", "bandwidth_hz", "blocks_per_tti", "ebn0_db"}, "se");
      read(c, "tti_s", s.se.tti_s);
      read(c, "bandwidth_hz", s.se.bandwidth_hz);
      read(c, "blocks_per_tti", s.se.blocks_per_tti);
      read(c, "ebn0_db", s.se.ebn0_db);
    }
    if (j.contains("solver")) {
      const auto& c = j.at("solver");
      check_keys(c, {"tol", "max_outer", "max_inner", "barrier_growth", "initial_weight"}, "solver");
      read(c, "tol", s.solver.tol);
      read(c, "max_outer", s.solver.max_outer);
      read(c, "max_inner", s.solver.max_inner);
      read(c, "barrier_growth", s.solver.barrier_growth);
      read(c, "initial_weight", s.solver.initial_weight);
    }
    if (j.contains("cm")) {
      const auto& c = j.at("cm");
      check_keys(c, {"rcm_ref_db", "slope_db"}, "cm");
      read(c, "rcm_ref_db", s.cm.rcm_ref_db);
      read(c, "slope_db", s.cm.slope_db);
    }
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("config: cannot open " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path.parent_path());
}

}  // namespace cpsofdm
