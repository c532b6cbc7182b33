#ifndef PAIRSMC_EXPERIMENT_HPP
#define PAIRSMC_EXPERIMENT_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "pairsmc/errors.hpp"
#include "pairsmc/estimators.hpp"
#include "pairsmc/io/config.hpp"
#include "pairsmc/io/dataset.hpp"
#include "pairsmc/io/report.hpp"
#include "pairsmc/models/ar1.hpp"
#include "pairsmc/models/finite.hpp"
#include "pairsmc/models/lotka_volterra.hpp"
#include "pairsmc/oracle.hpp"
#include "pairsmc/pairs_filter.hpp"
#include "pairsmc/particle_filter.hpp"

#ifndef PAIRSMC_GIT_REVISION
#define PAIRSMC_GIT_REVISION "unknown"
#endif

namespace pairsmc {

/// Each kind of run draws from its own family of streams, so that e.g. the
/// pairs rows of a `compare` run equal those of a `pairs` run with the same seed.
enum class StreamRole : std::uint64_t {
  pf = 1,
  pairs = 2,
  mc = 3,
  benchmark = 4,
  pairs_replicates = 5,
  oracle_pf = 6,
  oracle_pairs = 7,
};

/// Root seed of a stream family; this is the `seed` column of the report.
inline std::uint64_t role_seed(std::uint64_t root_seed, StreamRole role) {
  std::uint64_t s = root_seed ^ (static_cast<std::uint64_t>(role) * 0xA0761D6478BD642FULL);
  return detail::splitmix64(s);
}

/// Observations for an lv config: read from the data file, or simulated
/// with data_seed for n_steps when no file is given.
inline std::vector<models::Vec2> lv_observations(const ExperimentConfig& c) {
  if (!c.model.lv_data.empty()) {
    try {
      return load_observations(c.model.lv_data);
    } catch (const ContractViolation& e) {
      throw ConfigError({std::string("model.data: ") + e.what()});
    }
  }
  auto rng = derive_stream(c.model.lv_data_seed, 0);
  return models::simulate_lv_data(c.model.lv, c.n_steps, rng);
}

/// Builds the configured model and calls fn(model).
template <class Fn>
void visit_model(const ExperimentConfig& c, Fn&& fn) {
  const auto& m = c.model;
  if (m.type == "ar1") {
    fn(models::Ar1Model(m.ar1));
  } else if (m.type == "lv") {
    auto params = m.lv;
    params.y_seq = lv_observations(c);
    if (params.y_seq.size() < c.n_steps)
      throw ConfigError({"n_steps: the observation data has only " + std::to_string(params.y_seq.size()) + " steps"});
    fn(models::LvModel(std::move(params)));
  } else if (m.type == "finite") {
    fn(models::FiniteModel(m.finite));
  } else if (m.type == "iid_toy") {
    fn(models::IidToyModel(m.iid_g, m.iid_pi0));
  } else {
    throw ConfigError({"model.type: unknown model '" + m.type + "'"});
  }
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class Fn>
auto tag_replicate(std::size_t replicate, Fn&& fn) {
  try {
    return fn();
  } catch (const DegenerateWeights& e) {
    throw DegenerateWeights(e.step(), replicate);
  }
}

inline std::string z_flag(bool pass, double z) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s z=%.3f", pass ? "pass" : "fail", z);
  return buf;
}

/// Mean and standard error of exp(log_values - log_ref); z against 1.
struct RatioStats {
  double mean = 0.0;
  double se = 0.0;
  double z = 0.0;
};

inline RatioStats ratio_stats(const std::vector<double>& log_values, double log_ref) {
  RatioStats s;
  const double R = static_cast<double>(log_values.size());
  double sum = 0.0, sum2 = 0.0;
  for (double v : log_values) {
    const double r = std::exp(v - log_ref);
    sum += r;
    sum2 += r * r;
  }
  s.mean = sum / R;
  const double var = std::max(0.0, (sum2 - R * s.mean * s.mean) / (R - 1.0));
  s.se = std::sqrt(var / R);
  const double diff = s.mean - 1.0;
  if (s.se > 0.0)
    s.z = diff / s.se;
  else
    s.z = std::abs(diff) < 1e-12 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  return s;
}

/// Second-moment scale b_n subtracted in compare mode: log Xi_n with M' pairs,
/// or 2 log Z_n with N' particles.
template <StateSpaceModel Model>
std::vector<double> benchmark_values(const Model& model, const ExperimentConfig& c) {
  auto rng = derive_stream(role_seed(c.root_seed, StreamRole::benchmark), 0);
  if (c.benchmark->M_prime) return pairs_run(model, c.N, c.benchmark->M_prime, c.n_steps, rng).values;
  auto z = pf_run(model, c.benchmark->N_prime, c.n_steps, rng).values;
  for (double& v : z) v *= 2.0;
  return z;
}

template <StateSpaceModel Model>
std::vector<LogXiTrajectory> pairs_trajectories(const Model& model, const ExperimentConfig& c, std::uint64_t seed) {
  std::vector<LogXiTrajectory> out(c.replicates);
  parallel_for(c.replicates, c.parallelism, [&](std::size_t r) {
    auto rng = derive_stream(seed, r);
    out[r] = tag_replicate(r, [&] { return pairs_run(model, c.N, c.M, c.n_steps, rng); });
  });
  return out;
}

/// Per replicate r, M_tilde filters on streams r * M_tilde + j.
template <StateSpaceModel Model>
std::vector<ReplicateTable> mc_tables(const Model& model, const ExperimentConfig& c, std::size_t count,
                                      std::uint64_t seed) {
  std::vector<ReplicateTable> out(c.replicates);
  parallel_for(c.replicates, c.parallelism, [&](std::size_t r) {
    out[r] = tag_replicate(r, [&] { return run_replicates(model, c.N, c.n_steps, count, seed, 1, r * count); });
  });
  return out;
}

template <StateSpaceModel Model>
void run_oracle_check(const Model& model, const ExperimentConfig& c, const FiniteHmmSpec& spec, RunReport& report) {
  const std::uint64_t pf_seed = role_seed(c.root_seed, StreamRole::oracle_pf);
  const std::uint64_t pairs_seed = role_seed(c.root_seed, StreamRole::oracle_pairs);
  const auto pf = run_replicates(model, c.N, c.n_steps, c.replicates, pf_seed, c.parallelism);
  const auto pairs = pairs_trajectories(model, c, pairs_seed);
  constexpr double z_limit = 4.0;
  for (std::size_t n = 0; n <= c.n_steps; ++n) {
    const double log_z = exact_marginal_likelihood(spec, n);
    const double log_e2 = oracle_second_moment(spec, c.N, n);

    const auto pf_stats = ratio_stats(pf.slice(n).log_z, log_z);
    report.rows.push_back({"oracle_pf", 0, n, log_z + std::log(pf_stats.mean), std::nullopt,
                           z_flag(std::abs(pf_stats.z) < z_limit, pf_stats.z), pf_seed});

    std::vector<double> xi(c.replicates);
    for (std::size_t r = 0; r < c.replicates; ++r) xi[r] = pairs[r][n];
    const auto xi_stats = ratio_stats(xi, log_e2);
    report.rows.push_back({"oracle_pairs", 0, n, log_e2 + std::log(xi_stats.mean), std::nullopt,
                           z_flag(std::abs(xi_stats.z) < z_limit, xi_stats.z), pairs_seed});

    try {
      const double rel = std::abs(std::expm1(exact_second_moment_epsilon(spec, c.N, n) - log_e2));
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s rel=%.3g", rel < 1e-12 ? "pass" : "fail", rel);
      report.rows.push_back({"oracle_self", 0, n, log_e2, std::nullopt, buf, 0});
    } catch (const CapacityExceeded&) {
    }
  }
}

template <StateSpaceModel Model>
void run_with_model(const Model& model, const ExperimentConfig& c, RunReport& report) {
  const std::size_t steps = c.n_steps;
  std::optional<std::vector<double>> bench;
  if (c.benchmark && c.strategy != "oracle_check") {
    bench = benchmark_values(model, c);
    const std::uint64_t seed = role_seed(c.root_seed, StreamRole::benchmark);
    for (std::size_t n = 0; n <= steps; ++n) report.rows.push_back({"benchmark", 0, n, (*bench)[n], std::nullopt, "", seed});
  }
  const bool subtract = bench && c.strategy == "compare";
  auto shifted = [&](double v, std::size_t n) { return subtract ? v - (*bench)[n] : v; };
  const std::string shift_flag = subtract ? "minus_benchmark" : "";

  if (c.strategy == "pf") {
    const std::uint64_t seed = role_seed(c.root_seed, StreamRole::pf);
    const auto table = run_replicates(model, c.N, steps, c.replicates, seed, c.parallelism);
    for (std::size_t r = 0; r < c.replicates; ++r)
      for (std::size_t n = 0; n <= steps; ++n)
        report.rows.push_back({"pf", r, n, table.trajectories[r][n], std::nullopt, "", seed});
  }

  if (c.strategy == "pairs" || c.strategy == "compare") {
    const std::uint64_t seed = role_seed(c.root_seed, StreamRole::pairs);
    const auto xi = pairs_trajectories(model, c, seed);
    std::vector<ReplicateTable> reps;
    if (c.strategy == "pairs" && c.variance_report)
      reps = mc_tables(model, c, c.M, role_seed(c.root_seed, StreamRole::pairs_replicates));
    for (std::size_t r = 0; r < c.replicates; ++r)
      for (std::size_t n = 0; n <= steps; ++n) {
        ReportRow row{"pairs", r, n, shifted(xi[r][n], n), std::nullopt, shift_flag, seed};
        if (!reps.empty()) {
          const auto v = pairs_strategy(reps[r].slice(n), xi[r][n], c.M);
          row.rel_var = v.relative_variance;
          if (v.negative) row.flag = "negative";
        }
        report.rows.push_back(std::move(row));
      }
  }

  if (c.strategy == "mc" || c.strategy == "compare") {
    const std::uint64_t seed = role_seed(c.root_seed, StreamRole::mc);
    const auto tables = mc_tables(model, c, c.M_tilde, seed);
    for (std::size_t r = 0; r < c.replicates; ++r)
      for (std::size_t n = 0; n <= steps; ++n) {
        const auto batch = tables[r].slice(n);
        ReportRow row{"mc", r, n, shifted(iid_second_moment(batch), n), std::nullopt, shift_flag, seed};
        if (batch.size() >= 2) row.rel_var = mc_strategy(batch).relative_variance;
        report.rows.push_back(std::move(row));
      }
  }

  if (c.strategy == "oracle_check") {
    const FiniteHmmSpec spec = c.model.type == "finite" ? c.model.finite
                                                        : make_iid_spec(c.model.iid_g, c.model.iid_pi0, c.n_steps);
    run_oracle_check(model, c, spec, report);
  }

  if constexpr (std::is_same_v<Model, models::LvModel>)
    report.metadata.emplace_back("lv_proposal_failures", std::to_string(model.proposal_failures()));
}

}  // namespace detail

/// Runs the configured study. Rows are sorted by (strategy, replicate, n);
/// given the config, every byte except the timing lines is reproducible,
/// whatever the parallelism.
inline RunReport run_experiment(const ExperimentConfig& config) {
  const auto t0 = detail::Clock::now();
  RunReport report;
  report.metadata.emplace_back("git_revision", PAIRSMC_GIT_REVISION);
  report.metadata.emplace_back("config", config_to_json(config).dump());
  visit_model(config, [&](const auto& model) { detail::run_with_model(model, config, report); });
  report.sort_rows();
  report.timings.emplace_back("total_seconds", detail::seconds_since(t0));
  return report;
}

/// True unless some row is flagged as a failed check.
inline bool report_passed(const RunReport& report) {
  return std::none_of(report.rows.begin(), report.rows.end(),
                      [](const ReportRow& r) { return r.flag.rfind("fail", 0) == 0; });
}

/// M_tilde = round(M * t_pairs / t_pf), at least 1.
inline std::size_t equal_cost_m_tilde(std::size_t M, double pairs_step_seconds, double pf_step_seconds) {
  if (!(pairs_step_seconds > 0.0) || !(pf_step_seconds > 0.0))
    throw ContractViolation("calibration timings must be positive");
  const double m = std::round(static_cast<double>(M) * pairs_step_seconds / pf_step_seconds);
  return static_cast<std::size_t>(std::max(1.0, m));
}

struct Calibration {
  std::size_t m_tilde = 0;
  /// Median wall time of one pairs step with M pairs.
  double pairs_step_seconds = 0.0;
  /// Median wall time of one step of a single N-particle filter.
  double pf_step_seconds = 0.0;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

template <StateSpaceModel Model>
Calibration calibrate_model(const Model& model, const ExperimentConfig& c) {
  const std::size_t steps = std::min<std::size_t>(c.n_steps, 20);
  auto rng = derive_stream(c.root_seed, 0);

  std::vector<double> pairs_times;
  auto sys = pairs_init(model, c.N, c.M, rng);
  for (std::size_t k = 0; k < steps; ++k) {
    const auto t0 = Clock::now();
    pairs_step(sys, model, rng);
    pairs_times.push_back(seconds_since(t0));
  }

  // A single small filter step is too short to time; step a bank of filters
  // holding about as many particles as the pairs system and divide.
  const std::size_t bank = std::max<std::size_t>(1, (c.M + c.N - 1) / c.N);
  std::vector<ParticleSystem<Model>> filters;
  filters.reserve(bank);
  for (std::size_t b = 0; b < bank; ++b) filters.push_back(pf_init(model, c.N, rng));
  std::vector<double> pf_times;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto t0 = Clock::now();
    for (auto& f : filters) pf_step(f, model, rng);
    pf_times.push_back(seconds_since(t0) / static_cast<double>(bank));
  }

  Calibration cal;
  cal.pairs_step_seconds = median(pairs_times);
  cal.pf_step_seconds = median(pf_times);
  cal.m_tilde = equal_cost_m_tilde(c.M, cal.pairs_step_seconds, cal.pf_step_seconds);
  return cal;
}

}  // namespace detail

/// Times both algorithms over a warm-up run of min(n_steps, 20) steps and
/// solves for the replicate count of equal cost.
inline Calibration calibrate_equal_cost(const ExperimentConfig& config) {
  if (config.n_steps < 1) throw ConfigError({"n_steps: calibration needs at least one step"});
  if (config.N < 2) throw ConfigError({"N: must be >= 2 for calibration"});
  Calibration cal;
  visit_model(config, [&](const auto& model) { cal = detail::calibrate_model(model, config); });
  return cal;
}

/// Header-only report recording a calibration.
inline RunReport calibration_report(const ExperimentConfig& config, const Calibration& cal) {
  RunReport report;
  report.metadata.emplace_back("git_revision", PAIRSMC_GIT_REVISION);
  report.metadata.emplace_back("config", config_to_json(config).dump());
  report.metadata.emplace_back("M_tilde", std::to_string(cal.m_tilde));
  report.timings.emplace_back("pairs_step_seconds", cal.pairs_step_seconds);
  report.timings.emplace_back("pf_step_seconds", cal.pf_step_seconds);
  return report;
}

}  // namespace pairsmc

#endif  // PAIRSMC_EXPERIMENT_HPP
