#ifndef PAIRSMC_PARTICLE_FILTER_HPP
#define PAIRSMC_PARTICLE_FILTER_HPP

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "pairsmc/errors.hpp"
#include "pairsmc/model.hpp"
#include "pairsmc/numerics.hpp"
#include "pairsmc/random.hpp"

namespace pairsmc {

/// Per-step log estimates; entry n holds the estimate at time n.
struct LogTrajectory {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t n) const { return values[n]; }
  double back() const { return values.back(); }
  bool operator==(const LogTrajectory&) const = default;
};

/// Trajectory of log Z_n^N.
using LogZTrajectory = LogTrajectory;

/// N equally weighted particles after the resampling of step n, together
/// with the running log normalising-constant estimate.
///
/// `prev` and `cur` hold the (X_{n-1}, X_n) segment of each particle; both
/// slices are moved under the same ancestor index. At n = 0 `prev` is empty.
template <StateSpaceModel Model>
struct ParticleSystem {
  using state_type = state_t<Model>;

  std::size_t n = 0;
  std::size_t N = 0;
  std::vector<state_type> prev;
  std::vector<state_type> cur;
  double log_Z = 0.0;
  /// log-weights of the most recent step, before resampling.
  std::vector<double> log_weights;

  // Scratch reused across steps.
  std::vector<double> probs;
  std::vector<std::size_t> ancestors;
  std::vector<state_type> buffer;
  ResampleScratch resample_scratch;
};

namespace detail {

template <class State>
void gather(std::vector<State>& states, const std::vector<std::size_t>& ancestors, std::vector<State>& buffer) {
  buffer.resize(ancestors.size());
  for (std::size_t i = 0; i < ancestors.size(); ++i) buffer[i] = states[ancestors[i]];
  states.swap(buffer);
}

template <StateSpaceModel Model>
void weigh_and_resample(ParticleSystem<Model>& sys, RandomSource& rng) {
  sys.probs.resize(sys.N);
  sys.ancestors.resize(sys.N);
  sys.log_Z += normalize_into(sys.log_weights, sys.probs, sys.n);
  resample_multinomial_into(sys.probs, rng, sys.ancestors, sys.resample_scratch);
  if (!sys.prev.empty()) gather(sys.prev, sys.ancestors, sys.buffer);
  gather(sys.cur, sys.ancestors, sys.buffer);
}

}  // namespace detail

/// Samples N initial particles from q_0, weights them, records log Z_0^N and
/// resamples.
template <StateSpaceModel Model>
ParticleSystem<Model> pf_init(const Model& model, std::size_t N, RandomSource& rng) {
  if (N < 1) throw ContractViolation("particle count N must be at least 1");
  ParticleSystem<Model> sys;
  sys.N = N;
  sys.cur.reserve(N);
  sys.log_weights.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    sys.cur.push_back(model.sample_q0(rng));
    sys.log_weights[i] = initial_log_weight(model, sys.cur[i]);
  }
  detail::weigh_and_resample(sys, rng);
  return sys;
}

/// Advances an initialised system from time n to n + 1: propagate through
/// q_{n+1}, weight, multiply the running estimate by the mean weight, resample.
template <StateSpaceModel Model>
void pf_step(ParticleSystem<Model>& sys, const Model& model, RandomSource& rng) {
  const std::size_t n = sys.n + 1;
  sys.prev.swap(sys.cur);
  sys.cur.resize(sys.N);
  for (std::size_t i = 0; i < sys.N; ++i) {
    sys.cur[i] = model.sample_q(n, sys.prev[i], rng);
    sys.log_weights[i] = step_log_weight(model, n, sys.prev[i], sys.cur[i]);
  }
  sys.n = n;
  detail::weigh_and_resample(sys, rng);
}

/// Runs the particle filter for n_steps steps after initialisation.
/// Entry n of the result is log Z_n^N.
template <StateSpaceModel Model>
LogZTrajectory pf_run(const Model& model, std::size_t N, std::size_t n_steps, RandomSource& rng) {
  LogZTrajectory out;
  out.values.reserve(n_steps + 1);
  auto sys = pf_init(model, N, rng);
  out.values.push_back(sys.log_Z);
  for (std::size_t k = 0; k < n_steps; ++k) {
    pf_step(sys, model, rng);
    out.values.push_back(sys.log_Z);
  }
  return out;
}

}  // namespace pairsmc

#endif  // PAIRSMC_PARTICLE_FILTER_HPP
