// pairsmc command-line driver.
//
//   pairsmc run           --config FILE [overrides]   CSV report of a study
//   pairsmc calibrate     --config FILE [overrides]   equal-cost M_tilde
//   pairsmc oracle-check  --config FILE [overrides]   statistical checks vs exact values
//   pairsmc simulate-data [--config FILE] [...]       Lotka-Volterra observations
//
// Exit codes: 0 success, 1 other error, 2 config error, 3 degenerate weights,
// 4 failed check.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pairsmc/experiment.hpp"

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitCheckFailed = 4;

struct Overrides {
  std::string config_path;
  std::optional<std::size_t> N, M, M_tilde, n_steps, replicates, parallelism, M_prime, N_prime;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy, output;

  void add_to(CLI::App& app) {
    app.add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--N", N, "particles per filter");
    app.add_option("--M", M, "pair particles");
    app.add_option("--M-tilde", M_tilde, "independent filters per simple-averaging estimate");
    app.add_option("--n-steps", n_steps, "time steps after time 0");
    app.add_option("--replicates", replicates, "independent repetitions");
    app.add_option("--seed", seed, "root seed");
    app.add_option("--strategy", strategy, "pf | pairs | mc | compare | oracle_check");
    app.add_option("-o,--output", output, "output CSV path (default: stdout)");
    app.add_option("-j,--parallelism", parallelism, "worker threads (default: $PAIRSMC_PARALLELISM or 1)");
    app.add_option("--benchmark-M-prime", M_prime, "benchmark pairs run with this many pairs");
    app.add_option("--benchmark-N-prime", N_prime, "benchmark filter with this many particles");
  }

  pairsmc::ExperimentConfig load(const std::optional<std::string>& forced_strategy = {}) const {
    pairsmc::json j = config_path.empty() ? pairsmc::json::object() : pairsmc::read_config_json(config_path);
    if (!j.contains("parallelism"))
      if (const char* env = std::getenv("PAIRSMC_PARALLELISM")) {
        try {
          j["parallelism"] = std::stoll(env);
        } catch (const std::exception&) {
          throw pairsmc::ConfigError({std::string("PAIRSMC_PARALLELISM: not an integer: '") + env + "'"});
        }
      }
    auto set = [&](const char* key, const auto& opt) {
      if (opt) j[key] = *opt;
    };
    set("N", N);
    set("M", M);
    set("M_tilde", M_tilde);
    set("n_steps", n_steps);
    set("replicates", replicates);
    set("root_seed", seed);
    set("strategy", strategy);
    set("output_path", output);
    set("parallelism", parallelism);
    if (M_prime) j["benchmark"] = {{"M_prime", *M_prime}};
    if (N_prime) j["benchmark"] = {{"N_prime", *N_prime}};
    if (forced_strategy) j["strategy"] = *forced_strategy;
    const auto base = config_path.empty() ? std::filesystem::path{} : std::filesystem::path(config_path).parent_path();
    return pairsmc::parse_config(j, base);
  }
};

void write_output(const std::string& path, const pairsmc::RunReport& report) {
  if (path.empty()) {
    pairsmc::write_report(std::cout, report);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  pairsmc::write_report(out, report);
}

int cmd_run(const Overrides& o) {
  const auto config = o.load();
  const auto report = pairsmc::run_experiment(config);
  write_output(config.output_path, report);
  return pairsmc::report_passed(report) ? 0 : kExitCheckFailed;
}

int cmd_calibrate(const Overrides& o) {
  const auto config = o.load();
  const auto cal = pairsmc::calibrate_equal_cost(config);
  std::cerr << "pairs step " << cal.pairs_step_seconds << " s, filter step " << cal.pf_step_seconds << " s\n";
  std::cout << cal.m_tilde << '\n';
  if (!config.output_path.empty()) write_output(config.output_path, pairsmc::calibration_report(config, cal));
  return 0;
}

int cmd_oracle_check(const Overrides& o) {
  const auto config = o.load(std::string("oracle_check"));
  const auto report = pairsmc::run_experiment(config);
  for (const auto& row : report.rows) std::cout << row.strategy << " n=" << row.n << ' ' << row.flag << '\n';
  const bool ok = pairsmc::report_passed(report);
  std::cout << (ok ? "PASS" : "FAIL") << '\n';
  if (!config.output_path.empty()) write_output(config.output_path, report);
  return ok ? 0 : kExitCheckFailed;
}

struct SimulateOptions {
  std::string config_path;
  std::optional<double> sigma2;
  std::size_t n_steps = 100;
  std::uint64_t seed = 1;
  std::string output;
};

int cmd_simulate(const SimulateOptions& s) {
  pairsmc::models::LvParams params;
  if (!s.config_path.empty()) {
    pairsmc::json j = pairsmc::read_config_json(s.config_path);
    j["strategy"] = "pf";
    const auto config = pairsmc::parse_config(j);
    if (config.model.type != "lv") throw pairsmc::ConfigError({"model.type: simulate-data needs an lv model"});
    params = config.model.lv;
  }
  if (s.sigma2) params.sigma2 = *s.sigma2;
  auto rng = pairsmc::derive_stream(s.seed, 0);
  const auto ys = pairsmc::models::simulate_lv_data(params, s.n_steps, rng);
  if (s.output.empty()) {
    pairsmc::write_observations(std::cout, ys);
  } else {
    std::ofstream out(s.output);
    if (!out) throw std::runtime_error("cannot write '" + s.output + "'");
    pairsmc::write_observations(out, ys);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairs-algorithm and particle-filter experiments"};
  app.require_subcommand(1);

  Overrides run_opts, cal_opts, oracle_opts;
  auto* run = app.add_subcommand("run", "run a study and emit a CSV report");
  run_opts.add_to(*run);
  auto* cal = app.add_subcommand("calibrate", "measure the equal-cost M_tilde for the config");
  cal_opts.add_to(*cal);
  auto* oracle = app.add_subcommand("oracle-check", "compare estimators with exact values on a finite model");
  oracle_opts.add_to(*oracle);

  SimulateOptions sim_opts;
  auto* sim = app.add_subcommand("simulate-data", "simulate Lotka-Volterra observations (CSV n,y1,y2)");
  sim->add_option("-c,--config", sim_opts.config_path, "config with an lv model block")->check(CLI::ExistingFile);
  sim->add_option("--sigma2", sim_opts.sigma2, "observation noise variance");
  sim->add_option("--n-steps", sim_opts.n_steps, "number of observations")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_opts.seed, "simulation seed");
  sim->add_option("-o,--output", sim_opts.output, "output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*cal) return cmd_calibrate(cal_opts);
    if (*oracle) return cmd_oracle_check(oracle_opts);
    if (*sim) return cmd_simulate(sim_opts);
  } catch (const pairsmc::ConfigError& e) {
    std::cerr << "config error:\n" << e.what() << '\n';
    return kExitConfig;
  } catch (const pairsmc::DegenerateWeights& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const pairsmc::DegeneratePair& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}
