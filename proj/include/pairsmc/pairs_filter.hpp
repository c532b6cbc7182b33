#ifndef PAIRSMC_PAIRS_FILTER_HPP
#define PAIRSMC_PAIRS_FILTER_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "pairsmc/errors.hpp"
#include "pairsmc/model.hpp"
#include "pairsmc/numerics.hpp"
#include "pairsmc/particle_filter.hpp"
#include "pairsmc/random.hpp"

namespace pairsmc {

/// Trajectory of log Xi_n^(N,M), the pairs estimate of E[(Z_n^N)^2].
using LogXiTrajectory = LogTrajectory;

/// One pair particle: the "check" and "hat" halves, each with its
/// (previous, current) state segment. At time 0 only the current slices are
/// meaningful.
template <class State>
struct PairParticle {
  State check_prev{};
  State check_cur{};
  State hat_prev{};
  State hat_cur{};

  bool operator==(const PairParticle&) const = default;
};

/// Mixture coefficients of the pair kernel for a given N, computed once.
struct PairMixture {
  double log_coalesced;    // ln(1/N)
  double log_independent;  // ln(1 - 1/N)
  double log_n_minus_1;    // ln(N - 1)
  double inv_n;            // 1/N
  double n_minus_1;        // N - 1

  explicit PairMixture(std::size_t N) {
    if (N < 2) throw ContractViolation("the pairs algorithm needs N >= 2");
    const double n = static_cast<double>(N);
    log_coalesced = -std::log(n);
    log_independent = std::log1p(-1.0 / n);
    log_n_minus_1 = std::log(n - 1.0);
    inv_n = 1.0 / n;
    n_minus_1 = n - 1.0;
  }

  /// log[(1/N) e^{2a} + (1 - 1/N) e^{a+b}] for per-half log importance ratios a (check) and b (hat).
  ///
  /// Evaluated as a + b + log(1 + expm1(a - b) / N), which is exactly 2a when
  /// a == b; for a > b the e^{2a} factor is pulled out instead.
  double pair_log_weight(double check_log_ratio, double hat_log_ratio) const noexcept {
    const double a = check_log_ratio, b = hat_log_ratio;
    if (a == kNegInf) return kNegInf;
    const double d = a - b;
    if (d <= 0.0) return a + b + std::log1p(std::expm1(d) * inv_n);
    return 2.0 * a + log_coalesced + std::log1p(n_minus_1 * std::exp(-d));
  }

  /// 1 / (1 + (N-1) e^{b-a}), saturating to exactly 0 or 1.
  double coalescence_prob(double check_log_ratio, double hat_log_ratio, std::size_t step = 0) const {
    if (check_log_ratio == kNegInf && hat_log_ratio == kNegInf) throw DegeneratePair(step);
    if (hat_log_ratio == kNegInf) return 1.0;
    if (check_log_ratio == kNegInf) return 0.0;
    const double t = hat_log_ratio - check_log_ratio + log_n_minus_1;
    if (t > 0.0) {
      const double e = std::exp(-t);
      return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(t));
  }
};

/// M pair particles after the resampling and coalescence of step n.
template <StateSpaceModel Model>
struct PairSystem {
  using state_type = state_t<Model>;

  std::size_t n = 0;
  std::size_t N = 0;
  std::size_t M = 0;
  std::vector<PairParticle<state_type>> pairs;
  double log_Xi = 0.0;
  PairMixture mixture;

  /// Per-pair log importance ratios of the two halves and the pair
  /// log-weights for the most recent step (resampled along with the pairs).
  std::vector<double> check_log_ratio;
  std::vector<double> hat_log_ratio;
  std::vector<double> log_weights;
  /// Y_n^i of the most recent step.
  std::vector<char> coalesced;

  std::vector<double> probs;
  std::vector<std::size_t> ancestors;
  std::vector<PairParticle<state_type>> buffer;
  std::vector<double> ratio_buffer;
  ResampleScratch resample_scratch;

  PairSystem(std::size_t N_, std::size_t M_) : N(N_), M(M_), mixture(N_) {}
};

/// Pair weight at time 0 for states drawn from q_0.
template <StateSpaceModel Model>
double pair_log_weight_0(const Model& model, const state_t<Model>& check_x, const state_t<Model>& hat_x,
                         std::size_t N) {
  return PairMixture(N).pair_log_weight(initial_log_weight(model, check_x), initial_log_weight(model, hat_x));
}

/// Pair weight at time n >= 1 from the (prev, cur) segments of both halves.
template <StateSpaceModel Model>
double pair_log_weight_n(const Model& model, std::size_t n, const PairParticle<state_t<Model>>& pair, std::size_t N) {
  return PairMixture(N).pair_log_weight(step_log_weight(model, n, pair.check_prev, pair.check_cur),
                                        step_log_weight(model, n, pair.hat_prev, pair.hat_cur));
}

/// Probability p_n that the hat half is overwritten by the check half.
/// At n = 0 only the current slices are used.
template <StateSpaceModel Model>
double coalescence_prob(const Model& model, std::size_t n, const PairParticle<state_t<Model>>& pair, std::size_t N) {
  const PairMixture mix(N);
  if (n == 0) return mix.coalescence_prob(initial_log_weight(model, pair.check_cur),
                                          initial_log_weight(model, pair.hat_cur), 0);
  return mix.coalescence_prob(step_log_weight(model, n, pair.check_prev, pair.check_cur),
                              step_log_weight(model, n, pair.hat_prev, pair.hat_cur), n);
}

namespace detail {

template <StateSpaceModel Model>
void pairs_weigh_resample_coalesce(PairSystem<Model>& sys, RandomSource& rng) {
  const std::size_t M = sys.M;
  for (std::size_t i = 0; i < M; ++i)
    sys.log_weights[i] = sys.mixture.pair_log_weight(sys.check_log_ratio[i], sys.hat_log_ratio[i]);
  sys.probs.resize(M);
  sys.ancestors.resize(M);
  sys.log_Xi += normalize_into(sys.log_weights, sys.probs, sys.n);
  resample_multinomial_into(sys.probs, rng, sys.ancestors, sys.resample_scratch);
  // Whole pairs move together: both halves, both time slices.
  gather(sys.pairs, sys.ancestors, sys.buffer);
  gather(sys.check_log_ratio, sys.ancestors, sys.ratio_buffer);
  gather(sys.hat_log_ratio, sys.ancestors, sys.ratio_buffer);
  gather(sys.log_weights, sys.ancestors, sys.ratio_buffer);
  for (std::size_t i = 0; i < M; ++i) {
    const double p = sys.mixture.coalescence_prob(sys.check_log_ratio[i], sys.hat_log_ratio[i], sys.n);
    const bool y = rng.bernoulli(p);
    sys.coalesced[i] = y ? 1 : 0;
    // hat_prev is dead after this step's weight; only hat_cur is overwritten.
    if (y) sys.pairs[i].hat_cur = sys.pairs[i].check_cur;
  }
}

}  // namespace detail

/// Time-0 stage: 2M independent q_0 draws, pair weights, log Xi_0,
/// resampling of whole pairs and Bernoulli coalescence.
template <StateSpaceModel Model>
PairSystem<Model> pairs_init(const Model& model, std::size_t N, std::size_t M, RandomSource& rng) {
  if (M < 1) throw ContractViolation("the pairs algorithm needs M >= 1");
  PairSystem<Model> sys(N, M);
  sys.pairs.resize(M);
  sys.check_log_ratio.resize(M);
  sys.hat_log_ratio.resize(M);
  sys.log_weights.resize(M);
  sys.coalesced.assign(M, 0);
  for (std::size_t i = 0; i < M; ++i) {
    auto& pair = sys.pairs[i];
    pair.check_cur = model.sample_q0(rng);
    pair.hat_cur = model.sample_q0(rng);
    sys.check_log_ratio[i] = initial_log_weight(model, pair.check_cur);
    sys.hat_log_ratio[i] = initial_log_weight(model, pair.hat_cur);
  }
  detail::pairs_weigh_resample_coalesce(sys, rng);
  return sys;
}

/// Advances from time n to n + 1: both halves propagate through q_{n+1}
/// (the post-coalescence current states become the previous states), then
/// weight, accumulate, resample whole pairs and coalesce.
template <StateSpaceModel Model>
void pairs_step(PairSystem<Model>& sys, const Model& model, RandomSource& rng) {
  const std::size_t n = sys.n + 1;
  for (std::size_t i = 0; i < sys.M; ++i) {
    auto& pair = sys.pairs[i];
    pair.check_prev = pair.check_cur;
    pair.check_cur = model.sample_q(n, pair.check_prev, rng);
    pair.hat_prev = pair.hat_cur;
    pair.hat_cur = model.sample_q(n, pair.hat_prev, rng);
    sys.check_log_ratio[i] = step_log_weight(model, n, pair.check_prev, pair.check_cur);
    sys.hat_log_ratio[i] = step_log_weight(model, n, pair.hat_prev, pair.hat_cur);
  }
  sys.n = n;
  detail::pairs_weigh_resample_coalesce(sys, rng);
}

/// Entry n of the result is log Xi_n^(N,M). Per-step cost is O(M) whatever N is.
template <StateSpaceModel Model>
LogXiTrajectory pairs_run(const Model& model, std::size_t N, std::size_t M, std::size_t n_steps, RandomSource& rng) {
  LogXiTrajectory out;
  out.values.reserve(n_steps + 1);
  auto sys = pairs_init(model, N, M, rng);
  out.values.push_back(sys.log_Xi);
  for (std::size_t k = 0; k < n_steps; ++k) {
    pairs_step(sys, model, rng);
    out.values.push_back(sys.log_Xi);
  }
  return out;
}

}  // namespace pairsmc

#endif  // PAIRSMC_PAIRS_FILTER_HPP
