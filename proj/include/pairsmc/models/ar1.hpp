#ifndef PAIRSMC_MODELS_AR1_HPP
#define PAIRSMC_MODELS_AR1_HPP

#include <cmath>
#include <cstddef>
#include <numbers>

#include "pairsmc/errors.hpp"
#include "pairsmc/random.hpp"

namespace pairsmc::models {

struct Ar1Params {
  double alpha = 0.5;
  double sigma = 10.0;
  /// g_n(x) = exp(-x^2 / obs_scale).
  double obs_scale = 100.0;
};

inline double normal_log_density(double x, double mean, double variance) noexcept {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

/// Stationary AR(1) signal X_{n+1} = alpha X_n + N(0, sigma^2) under the
/// potential g_n(x) = exp(-x^2 / obs_scale), proposing from the prior
/// (q_0 = pi_0, q_n = f).
class Ar1Model {
 public:
  using state_type = double;

  explicit Ar1Model(Ar1Params params) : p_(params) {
    if (!(std::abs(p_.alpha) < 1.0)) throw ContractViolation("AR(1) needs |alpha| < 1");
    if (!(p_.sigma > 0.0)) throw ContractViolation("AR(1) needs sigma > 0");
    if (!(p_.obs_scale > 0.0)) throw ContractViolation("AR(1) needs obs_scale > 0");
    transition_var_ = p_.sigma * p_.sigma;
    stationary_var_ = transition_var_ / (1.0 - p_.alpha * p_.alpha);
  }

  const Ar1Params& params() const noexcept { return p_; }
  double stationary_variance() const noexcept { return stationary_var_; }

  std::size_t state_dim() const noexcept { return 1; }
  double log_pi0(double x) const noexcept { return normal_log_density(x, 0.0, stationary_var_); }
  double log_f(double prev, double x) const noexcept { return normal_log_density(x, p_.alpha * prev, transition_var_); }
  double log_g(std::size_t, double x) const noexcept { return -x * x / p_.obs_scale; }

  double sample_q0(RandomSource& rng) const { return std::sqrt(stationary_var_) * rng.normal(); }
  double log_q0(double x) const noexcept { return log_pi0(x); }
  double sample_q(std::size_t, double prev, RandomSource& rng) const {
    return p_.alpha * prev + p_.sigma * rng.normal();
  }
  double log_q(std::size_t, double prev, double x) const noexcept { return log_f(prev, x); }

  // The proposal equals the prior, so the importance ratio is the potential alone.
  double initial_log_weight(double x) const noexcept { return log_g(0, x); }
  double step_log_weight(std::size_t n, double, double x) const noexcept { return log_g(n, x); }

 private:
  Ar1Params p_;
  double transition_var_;
  double stationary_var_;
};

inline Ar1Model make_ar1(const Ar1Params& params) { return Ar1Model(params); }

}  // namespace pairsmc::models

#endif  // PAIRSMC_MODELS_AR1_HPP
