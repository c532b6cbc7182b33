#ifndef PAIRSMC_MODELS_FINITE_HPP
#define PAIRSMC_MODELS_FINITE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pairsmc/errors.hpp"
#include "pairsmc/finite_hmm.hpp"
#include "pairsmc/numerics.hpp"
#include "pairsmc/random.hpp"

namespace pairsmc::models {

/// Categorical law on {0..K-1} with cached log-probabilities and CDF.
class Categorical {
 public:
  Categorical() = default;
  explicit Categorical(const std::vector<double>& probs) : log_p_(probs.size()), cdf_(probs.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      log_p_[i] = probs[i] > 0.0 ? std::log(probs[i]) : kNegInf;
      cdf_[i] = (acc += probs[i]);
    }
  }

  int sample(RandomSource& rng) const {
    const double u = rng.uniform() * cdf_.back();
    return static_cast<int>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  }
  double log_prob(int x) const { return log_p_[static_cast<std::size_t>(x)]; }
  std::size_t size() const noexcept { return log_p_.size(); }

 private:
  std::vector<double> log_p_;
  std::vector<double> cdf_;
};

/// Integer-coded model whose densities are table lookups into a FiniteHmmSpec.
/// Defined for times 0..spec.n_max().
class FiniteModel {
 public:
  using state_type = int;

  explicit FiniteModel(FiniteHmmSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    const std::size_t K = spec_.K;
    pi0_ = Categorical(spec_.pi0);
    q0_ = Categorical(spec_.q0);
    for (const auto& row : spec_.f) f_.emplace_back(row);
    for (const auto& q : spec_.q_seq) {
      std::vector<Categorical> rows;
      for (const auto& row : q) rows.emplace_back(row);
      q_.push_back(std::move(rows));
    }
    log_g_.resize(spec_.g_seq.size());
    for (std::size_t n = 0; n < spec_.g_seq.size(); ++n) {
      log_g_[n].resize(K);
      for (std::size_t x = 0; x < K; ++x) log_g_[n][x] = std::log(spec_.g_seq[n][x]);
    }
  }

  const FiniteHmmSpec& spec() const noexcept { return spec_; }
  std::size_t state_dim() const noexcept { return 1; }

  double log_pi0(int x) const { return pi0_.log_prob(x); }
  double log_f(int prev, int x) const { return f_[idx(prev)].log_prob(x); }
  double log_g(std::size_t n, int x) const {
    if (n >= log_g_.size())
      throw ContractViolation("time " + std::to_string(n) + " beyond the finite model's horizon");
    return log_g_[n][idx(x)];
  }
  int sample_q0(RandomSource& rng) const { return q0_.sample(rng); }
  double log_q0(int x) const { return q0_.log_prob(x); }
  int sample_q(std::size_t n, int prev, RandomSource& rng) const { return proposal(n)[idx(prev)].sample(rng); }
  double log_q(std::size_t n, int prev, int x) const { return proposal(n)[idx(prev)].log_prob(x); }

 private:
  static std::size_t idx(int x) { return static_cast<std::size_t>(x); }
  const std::vector<Categorical>& proposal(std::size_t n) const {
    if (n == 0) throw ContractViolation("step proposals are indexed from 1");
    return q_[std::min(n - 1, q_.size() - 1)];
  }

  FiniteHmmSpec spec_;
  Categorical pi0_, q0_;
  std::vector<Categorical> f_;
  std::vector<std::vector<Categorical>> q_;
  std::vector<std::vector<double>> log_g_;
};

inline FiniteModel make_finite_toy(const FiniteHmmSpec& spec) { return FiniteModel(spec); }

/// q_n(x, .) = f(x, .) = pi0, q0 = pi0 and g_n = g for every n: the particles
/// at each time are i.i.d. pi0 and Z_n^N is a product of independent sample means.
class IidToyModel {
 public:
  using state_type = int;

  IidToyModel(const std::vector<double>& g_values, const ProbabilityVector& pi0)
      : g_(g_values), pi0_probs_(pi0), pi0_(pi0) {
    make_iid_spec(g_values, pi0, 0);  // validates lengths, normalisation and g > 0
    for (double g : g_values) log_g_.push_back(std::log(g));
  }

  const std::vector<double>& g_values() const noexcept { return g_; }
  const ProbabilityVector& pi0() const noexcept { return pi0_probs_; }
  /// Equivalent finite spec with horizon n_max, for the exact oracles.
  FiniteHmmSpec spec(std::size_t n_max) const { return make_iid_spec(g_, pi0_probs_, n_max); }

  std::size_t state_dim() const noexcept { return 1; }
  double log_pi0(int x) const { return pi0_.log_prob(x); }
  double log_f(int, int x) const { return pi0_.log_prob(x); }
  double log_g(std::size_t, int x) const { return log_g_[static_cast<std::size_t>(x)]; }
  int sample_q0(RandomSource& rng) const { return pi0_.sample(rng); }
  double log_q0(int x) const { return pi0_.log_prob(x); }
  int sample_q(std::size_t, int, RandomSource& rng) const { return pi0_.sample(rng); }
  double log_q(std::size_t, int, int x) const { return pi0_.log_prob(x); }

  double initial_log_weight(int x) const { return log_g(0, x); }
  double step_log_weight(std::size_t n, int, int x) const { return log_g(n, x); }

 private:
  std::vector<double> g_;
  ProbabilityVector pi0_probs_;
  Categorical pi0_;
  std::vector<double> log_g_;
};

inline IidToyModel make_iid_toy(const std::vector<double>& g_values, const ProbabilityVector& pi0) {
  return IidToyModel(g_values, pi0);
}

}  // namespace pairsmc::models

#endif  // PAIRSMC_MODELS_FINITE_HPP
