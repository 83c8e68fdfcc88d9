// SPDX-License-Identifier: Apache-2.0
// Command-line front end: one subcommand per experiment.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cpsofdm/harness.hpp"
#include "cpsofdm/kernels.hpp"

namespace fs = std::filesystem;
using namespace cpsofdm;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> blocks;
  std::string out_dir = "results";
  std::string cache_dir;
  int threads = 0;
  std::optional<double> tol;
  std::optional<int> max_outer;
  std::optional<int> max_inner;
  std::optional<double> barrier_growth;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Master RNG seed (overrides the config)");
  cmd->add_option("--blocks", f.blocks, "Number of blocks (overrides the config)");
  cmd->add_option("--out-dir", f.out_dir, "Directory for CSV outputs")->capture_default_str();
  cmd->add_option("--cache-dir", f.cache_dir, "Reuse E matrix files from this directory");
  cmd->add_option("--threads", f.threads, "Worker threads (0 = runtime default)");
  cmd->add_option("--tol", f.tol, "Solver barrier-gap tolerance");
  cmd->add_option("--max-outer", f.max_outer, "Solver outer iteration cap");
  cmd->add_option("--max-inner", f.max_inner, "Solver Newton iteration cap per outer step");
  cmd->add_option("--barrier-growth", f.barrier_growth, "Solver barrier weight growth factor");
}

Scenario load(const CommonFlags& f) {
  Scenario s = load_scenario(f.config);
  if (f.seed) s.seed = *f.seed;
  if (f.blocks) s.blocks = *f.blocks;
  if (f.tol) s.solver.tol = *f.tol;
  if (f.max_outer) s.solver.max_outer = *f.max_outer;
  if (f.max_inner) s.solver.max_inner = *f.max_inner;
  if (f.barrier_growth) s.solver.barrier_growth = *f.barrier_growth;
  s.validate();
  set_worker_count(f.threads);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CPS-OFDM constellation-shaping simulator"};
  app.require_subcommand(1);

  CommonFlags ccdf_f, psd_f, ber_f, se_f, scatter_f, one_f, mat_f;
  auto* ccdf_cmd = app.add_subcommand("rcm-ccdf", "Per-block RCM and its CCDF for every shaping level");
  add_common(ccdf_cmd, ccdf_f);
  auto* psd_cmd = app.add_subcommand("psd", "Averaged pre/post-PA PSD and SEM guard bands");
  add_common(psd_cmd, psd_f);
  auto* ber_cmd = app.add_subcommand("ber", "Uncoded BER versus Eb/N0 with paired seeds");
  add_common(ber_cmd, ber_f);
  auto* se_cmd = app.add_subcommand("se", "Spectral efficiency from ber.csv and guard_band.csv in --out-dir");
  add_common(se_cmd, se_f);
  auto* scatter_cmd = app.add_subcommand("scatter", "Shaped data symbols of every block");
  add_common(scatter_cmd, scatter_f);
  auto* one_cmd = app.add_subcommand("solve-one", "Shape a single block and dump residuals");
  add_common(one_cmd, one_f);
  int block = 0;
  std::optional<double> evm_db;
  one_cmd->add_option("--block", block, "Block index")->capture_default_str();
  one_cmd->add_option("--evm-max-db", evm_db, "EVM budget in dB (default: first configured level)");
  auto* mat_cmd = app.add_subcommand("export-matrices", "Write Phi and E matrix files to --out-dir");
  add_common(mat_cmd, mat_f);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ccdf_cmd->parsed()) {
      const System sys(load(ccdf_f), ccdf_f.cache_dir);
      const auto res = run_rcm_ccdf(sys, ccdf_f.out_dir);
      for (const auto& c : res.curves)
        std::cout << "shaping=" << c.shaping << " used=" << c.used_blocks << " excluded=" << c.excluded_blocks << '\n';
    } else if (psd_cmd->parsed()) {
      const System sys(load(psd_f), psd_f.cache_dir);
      const auto res = run_psd(sys, psd_f.out_dir);
      for (size_t i = 0; i < res.guards.size(); ++i)
        std::cout << "shaping=" << res.guards[i].shaping << " stage=" << res.guards[i].stage
                  << " inband_dbm=" << res.curves[i].inband_dbm
                  << " guard_hz=" << (res.guards[i].ok ? std::to_string(res.guards[i].delta_hz) : "unsatisfied")
                  << '\n';
    } else if (ber_cmd->parsed()) {
      const System sys(load(ber_f), ber_f.cache_dir);
      for (const auto& p : run_ber(sys, ber_f.out_dir))
        std::cout << "shaping=" << p.shaping << " ebn0_db=" << p.ebn0_db << " errors=" << p.errors
                  << " bits=" << p.bits << " ber=" << p.ber << '\n';
    } else if (se_cmd->parsed()) {
      for (const auto& r : run_se(load(se_f), se_f.out_dir))
        std::cout << "shaping=" << r.shaping << " ber=" << r.ber << " guard_hz=" << r.guard_hz << " se=" << r.se
                  << '\n';
    } else if (scatter_cmd->parsed()) {
      const System sys(load(scatter_f), scatter_f.cache_dir);
      std::cout << "points=" << export_scatter(sys, scatter_f.out_dir).size() << '\n';
    } else if (one_cmd->parsed()) {
      Scenario s = load(one_f);
      if (!evm_db && s.evm_max_db.empty()) throw ParameterError("solve-one: give --evm-max-db or configure a level");
      const double level = evm_db ? *evm_db : s.evm_max_db.front();
      const System sys(std::move(s), one_f.cache_dir, true);
      const auto res = solve_one(sys, block, level, one_f.out_dir);
      std::cout << "converged=" << (res.solution.converged ? "true" : "false")
                << " objective=" << res.solution.objective << " evm=" << res.solution.residuals.evm << '\n';
      if (!res.solution.converged) return 2;
    } else if (mat_cmd->parsed()) {
      const System sys(load(mat_f), mat_f.cache_dir, true);
      for (const auto& p : export_matrices(sys, mat_f.out_dir)) std::cout << p.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
