#ifndef PAIRSMC_ESTIMATORS_HPP
#define PAIRSMC_ESTIMATORS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "pairsmc/errors.hpp"
#include "pairsmc/model.hpp"
#include "pairsmc/numerics.hpp"
#include "pairsmc/pairs_filter.hpp"
#include "pairsmc/particle_filter.hpp"
#include "pairsmc/random.hpp"

namespace pairsmc {

/// Runs body(i) for i in [0, count) on up to `parallelism` threads. Work
/// items are independent, so results do not depend on the thread count. The
/// exception of the lowest failing index is rethrown.
inline void parallel_for(std::size_t count, std::size_t parallelism, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(parallelism, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_index = count;
  auto run = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  }
  if (error) std::rethrow_exception(error);
}

/// log Z_n^N of independent filters at one fixed time n.
struct ReplicateBatch {
  std::vector<double> log_z;
  std::size_t N = 0;
  std::size_t n = 0;
  std::uint64_t root_seed = 0;
  /// Replicate j used stream first_stream + j.
  std::uint64_t first_stream = 0;

  std::size_t size() const noexcept { return log_z.size(); }
};

/// Full trajectories of independent filters; slice(n) gives the batch at time n.
struct ReplicateTable {
  std::vector<LogZTrajectory> trajectories;
  std::size_t N = 0;
  std::uint64_t root_seed = 0;
  std::uint64_t first_stream = 0;

  std::size_t size() const noexcept { return trajectories.size(); }

  ReplicateBatch slice(std::size_t n) const {
    ReplicateBatch b{{}, N, n, root_seed, first_stream};
    b.log_z.reserve(trajectories.size());
    for (const auto& t : trajectories) b.log_z.push_back(t[n]);
    return b;
  }
};

/// `count` independent pf_run trajectories, replicate j on
/// derive_stream(root_seed, first_stream + j). Identical for any parallelism.
template <StateSpaceModel Model>
ReplicateTable run_replicates(const Model& model, std::size_t N, std::size_t n_steps, std::size_t count,
                              std::uint64_t root_seed, std::size_t parallelism = 1, std::uint64_t first_stream = 0) {
  if (count < 1) throw ContractViolation("replicate count must be at least 1");
  ReplicateTable table;
  table.N = N;
  table.root_seed = root_seed;
  table.first_stream = first_stream;
  table.trajectories.resize(count);
  parallel_for(count, parallelism, [&](std::size_t j) {
    auto rng = derive_stream(root_seed, first_stream + j);
    try {
      table.trajectories[j] = pf_run(model, N, n_steps, rng);
    } catch (const DegenerateWeights& e) {
      throw DegenerateWeights(e.step(), j);
    }
  });
  return table;
}

/// Simple-averaging estimate log[(1/M) sum_j (Z_n^{N,j})^2].
inline double iid_second_moment(const ReplicateBatch& batch) {
  if (batch.log_z.empty()) throw ContractViolation("replicate batch must be non-empty");
  std::vector<double> doubled(batch.log_z.size());
  std::transform(batch.log_z.begin(), batch.log_z.end(), doubled.begin(), [](double v) { return 2.0 * v; });
  return log_mean_exp(doubled);
}

enum class Strategy { MC, Pairs };

inline std::string to_string(Strategy s) { return s == Strategy::MC ? "mc" : "pairs"; }

/// Point estimate of Z_n with a variance estimate for it, in relative scale
/// (variance divided by the squared point estimate).
struct VarianceReport {
  Strategy strategy = Strategy::MC;
  double log_point_estimate = 0.0;
  double relative_variance = 0.0;
  /// Pairs-strategy estimates can be negative; they are reported unclamped.
  bool negative = false;
  /// The log inputs: replicate log Z values, then log Xi for the Pairs strategy.
  std::vector<double> components;

  /// Variance in linear scale; underflows to zero for tiny Z.
  double absolute_variance() const { return relative_variance * std::exp(2.0 * log_point_estimate); }
};

/// MC strategy: mean of the replicates, and their unbiased sample variance
/// divided by the replicate count, computed on replicates rescaled by the mean.
inline VarianceReport mc_strategy(const ReplicateBatch& batch) {
  const std::size_t m = batch.size();
  if (m < 2) throw ContractViolation("the MC strategy needs at least two replicates");
  VarianceReport r;
  r.strategy = Strategy::MC;
  r.log_point_estimate = log_mean_exp(batch.log_z);
  r.components = batch.log_z;
  std::vector<double> scaled(m);
  for (std::size_t j = 0; j < m; ++j) scaled[j] = std::exp(batch.log_z[j] - r.log_point_estimate);
  double mean = 0.0;
  for (double s : scaled) mean += s;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double s : scaled) ss += (s - mean) * (s - mean);
  const double md = static_cast<double>(m);
  r.relative_variance = ss / (md - 1.0) / md;
  return r;
}

/// Pairs strategy: mean of M replicates, and (Xi - mean^2) / (M - 1) from one
/// pairs run with the same M, divided by mean^2.
inline VarianceReport pairs_strategy(const ReplicateBatch& batch, double log_Xi, std::size_t pairs_M) {
  const std::size_t m = batch.size();
  if (m < 2) throw ContractViolation("the Pairs strategy needs at least two replicates");
  if (pairs_M != m)
    throw ContractViolation("pairs run used M = " + std::to_string(pairs_M) + " but the batch holds " +
                            std::to_string(m) + " replicates");
  VarianceReport r;
  r.strategy = Strategy::Pairs;
  r.log_point_estimate = log_mean_exp(batch.log_z);
  r.components = batch.log_z;
  r.components.push_back(log_Xi);
  r.relative_variance = std::expm1(log_Xi - 2.0 * r.log_point_estimate) / (static_cast<double>(m) - 1.0);
  r.negative = r.relative_variance < 0.0;
  return r;
}

}  // namespace pairsmc

#endif  // PAIRSMC_ESTIMATORS_HPP
