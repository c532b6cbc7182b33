#ifndef PAIRSMC_MODEL_HPP
#define PAIRSMC_MODEL_HPP

#include <concepts>
#include <cstddef>

#include "pairsmc/random.hpp"

namespace pairsmc {

/// Contract shared by every algorithm in the library.
///
/// A model owns its observation sequence, so the observation likelihood is
/// addressed by time index only. All densities are in log domain. Models are
/// immutable once built and may be shared between threads; every sampler
/// takes the caller's RandomSource.
///
///   log_pi0(x)               initial density
///   log_f(x_prev, x)         transition density
///   log_g(n, x)              observation log-likelihood at time n
///   sample_q0(rng), log_q0   initial proposal
///   sample_q(n, x_prev, rng), log_q(n, x_prev, x)   step-n proposal, n >= 1
template <class M>
concept StateSpaceModel = requires(const M& m, const typename M::state_type& x, std::size_t n, RandomSource& rng) {
  typename M::state_type;
  { m.state_dim() } -> std::convertible_to<std::size_t>;
  { m.log_pi0(x) } -> std::convertible_to<double>;
  { m.log_f(x, x) } -> std::convertible_to<double>;
  { m.log_g(n, x) } -> std::convertible_to<double>;
  { m.sample_q0(rng) } -> std::convertible_to<typename M::state_type>;
  { m.log_q0(x) } -> std::convertible_to<double>;
  { m.sample_q(n, x, rng) } -> std::convertible_to<typename M::state_type>;
  { m.log_q(n, x, x) } -> std::convertible_to<double>;
};

template <StateSpaceModel M>
using state_t = typename M::state_type;

/// log[g_0(x) pi_0(x) / q_0(x)]. Models may supply a fused
/// `initial_log_weight` member when the ratio simplifies.
template <StateSpaceModel M>
double initial_log_weight(const M& model, const state_t<M>& x) {
  if constexpr (requires { { model.initial_log_weight(x) } -> std::convertible_to<double>; }) {
    return model.initial_log_weight(x);
  } else {
    return model.log_g(0, x) + (model.log_pi0(x) - model.log_q0(x));
  }
}

/// log[g_n(x) f(x_prev, x) / q_n(x_prev, x)] for n >= 1, with the same
/// optional `step_log_weight` override.
template <StateSpaceModel M>
double step_log_weight(const M& model, std::size_t n, const state_t<M>& prev, const state_t<M>& cur) {
  if constexpr (requires { { model.step_log_weight(n, prev, cur) } -> std::convertible_to<double>; }) {
    return model.step_log_weight(n, prev, cur);
  } else {
    return model.log_g(n, cur) + (model.log_f(prev, cur) - model.log_q(n, prev, cur));
  }
}

}  // namespace pairsmc

#endif  // PAIRSMC_MODEL_HPP
