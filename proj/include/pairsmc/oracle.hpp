#ifndef PAIRSMC_ORACLE_HPP
#define PAIRSMC_ORACLE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pairsmc/errors.hpp"
#include "pairsmc/finite_hmm.hpp"
#include "pairsmc/numerics.hpp"

// Exact expectations for finite-state models.
//
// Index convention: every function taking `n` returns the exact value of the
// quantity the particle algorithms report at time n. In kernel notation the
// filter estimate Z_n^N is the mass after n + 1 kernel stages, and the pairs
// estimate Xi_n is the mass of the pair measure after n + 1 stages, so
// exact_second_moment_*(spec, N, n) == E[Xi_n] == E[(Z_n^N)^2].
//
// Working spaces: the time-0 stage acts on single states (K values, K^2 for
// pairs); every later stage acts on (previous, current) segments, K^2 values
// per half and K^4 per pair.

namespace pairsmc {

namespace detail {

inline void require_horizon(const FiniteHmmSpec& spec, std::size_t n) {
  if (n > spec.n_max())
    throw ContractViolation("time index " + std::to_string(n) + " beyond the spec's observation horizon");
}

/// Linear weights exp(log G - shift) for one stage together with the shift.
struct StageWeights {
  std::vector<double> value;  // K entries at stage 0, K*K (prev, cur) entries later
  double log_shift = 0.0;
};

inline StageWeights stage_weights(const FiniteHmmSpec& spec, std::size_t k) {
  const std::size_t K = spec.K;
  StageWeights w;
  std::vector<double> logs;
  if (k == 0) {
    logs.resize(K);
    for (std::size_t x = 0; x < K; ++x)
      logs[x] = std::log(spec.g_seq[0][x]) + std::log(spec.pi0[x]) - std::log(spec.q0[x]);
  } else {
    const auto& q = spec.q_at(k);
    logs.resize(K * K);
    for (std::size_t p = 0; p < K; ++p)
      for (std::size_t a = 0; a < K; ++a)
        logs[p * K + a] = q[p][a] > 0.0 ? std::log(spec.g_seq[k][a]) + std::log(spec.f[p][a]) - std::log(q[p][a])
                                        : kNegInf;
  }
  // Unreachable points (zero proposal mass) get weight zero: they never carry measure.
  for (double& l : logs)
    if (std::isnan(l)) l = kNegInf;
  w.log_shift = *std::max_element(logs.begin(), logs.end());
  w.value.resize(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) w.value[i] = std::exp(logs[i] - w.log_shift);
  return w;
}

inline double rescale(std::vector<double>& v) {
  const double hi = *std::max_element(v.begin(), v.end());
  if (hi <= 0.0) return kNegInf;
  for (double& x : v) x /= hi;
  return std::log(hi);
}

}  // namespace detail

/// log Z_n by the forward recursion, normalised at every step.
inline double exact_marginal_likelihood(const FiniteHmmSpec& spec, std::size_t n) {
  detail::require_horizon(spec, n);
  const std::size_t K = spec.K;
  std::vector<double> pred = spec.pi0;  // prediction filter pi_k
  double log_z = 0.0;
  for (std::size_t k = 0;; ++k) {
    std::vector<double> joint(K);
    double mass = 0.0;
    for (std::size_t x = 0; x < K; ++x) mass += (joint[x] = pred[x] * spec.g_seq[k][x]);
    log_z += std::log(mass);
    if (k == n) return log_z;
    std::fill(pred.begin(), pred.end(), 0.0);
    for (std::size_t x = 0; x < K; ++x)
      for (std::size_t y = 0; y < K; ++y) pred[y] += joint[x] / mass * spec.f[x][y];
  }
}

/// log E[(Z_n^N)^2] by forward propagation of the pair measure through the
/// kernels (1/N) C Q^{(x)2} + (1 - 1/N) Q^{(x)2}, the coalescence operator C
/// restricting the pair to its diagonal before both halves move.
inline double exact_second_moment_tensor(const FiniteHmmSpec& spec, std::size_t N, std::size_t n) {
  if (N < 1) throw ContractViolation("N must be at least 1");
  detail::require_horizon(spec, n);
  const std::size_t K = spec.K;
  const double work = static_cast<double>(n + 1) * std::pow(static_cast<double>(K), 4);
  if (K > 32 || work > 1e9) throw CapacityExceeded("tensor oracle budget exceeded (K^4 * (n+1) > 1e9)");

  const double w_coal = 1.0 / static_cast<double>(N);
  const double w_ind = 1.0 - w_coal;

  // Stage 0 measure on X^2: q0 (x) q0.
  std::vector<double> mu(K * K);
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t c = 0; c < K; ++c) mu[a * K + c] = spec.q0[a] * spec.q0[c];
  double log_scale = 0.0;

  for (std::size_t k = 0;; ++k) {
    const auto G = detail::stage_weights(spec, k);
    // Weighted marginals over the current slices (a: check, c: hat):
    //   indep[a][c] = sum mu(x_check, x_hat) G(x_check) G(x_hat)
    //   coal[a]     = sum mu(x_check, x_hat) G(x_check)^2
    std::vector<double> indep(K * K, 0.0), coal(K, 0.0);
    if (k == 0) {
      for (std::size_t a = 0; a < K; ++a)
        for (std::size_t c = 0; c < K; ++c) {
          const double m = mu[a * K + c];
          indep[a * K + c] += m * G.value[a] * G.value[c];
          coal[a] += m * G.value[a] * G.value[a];
        }
    } else {
      const std::size_t KK = K * K;
      for (std::size_t check = 0; check < KK; ++check)
        for (std::size_t hat = 0; hat < KK; ++hat) {
          const double m = mu[check * KK + hat];
          if (m == 0.0) continue;
          const std::size_t a = check % K, c = hat % K;
          indep[a * K + c] += m * G.value[check] * G.value[hat];
          coal[a] += m * G.value[check] * G.value[check];
        }
    }
    log_scale += 2.0 * G.log_shift;

    if (k == n) {
      double total = 0.0;
      for (double v : indep) total += w_ind * v;
      for (double v : coal) total += w_coal * v;
      return log_scale + std::log(total);
    }

    // Propagate both halves with q_{k+1}; a coalesced pair restarts from the check state.
    const auto& q = spec.q_at(k + 1);
    const std::size_t KK = K * K;
    std::vector<double> next(KK * KK, 0.0);
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t b = 0; b < K; ++b) {
        const double qab = q[a][b];
        if (qab == 0.0) continue;
        const std::size_t check = a * K + b;
        for (std::size_t c = 0; c < K; ++c) {
          const double base = w_ind * indep[a * K + c] * qab;
          for (std::size_t d = 0; d < K; ++d) next[check * KK + c * K + d] += base * q[c][d];
        }
        for (std::size_t d = 0; d < K; ++d) next[check * KK + a * K + d] += w_coal * coal[a] * qab * q[a][d];
      }
    mu.swap(next);
    log_scale += detail::rescale(mu);
  }
}

/// log E[(Z_n^N)^2] as the explicit sum over all coalescence indicator
/// sequences eps_0..eps_n, each weighted by prod (1/N)^eps (1 - 1/N)^(1 - eps):
/// every term composes q0 (x) q0, C_{eps_0}, Q_1^{(x)2}, ..., C_{eps_n},
/// Q_{n+1}^{(x)2} applied backwards to the constant function.
inline double exact_second_moment_epsilon(const FiniteHmmSpec& spec, std::size_t N, std::size_t n) {
  if (N < 1) throw ContractViolation("N must be at least 1");
  detail::require_horizon(spec, n);
  const std::size_t K = spec.K;
  const double work = std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(n + 1, 60))) *
                      static_cast<double>(n + 1) * std::pow(static_cast<double>(K), 6);
  if (n > 12 || work > 4e9) throw CapacityExceeded("epsilon-expansion oracle budget exceeded (n <= 12)");

  std::vector<detail::StageWeights> G;
  for (std::size_t k = 0; k <= n; ++k) G.push_back(detail::stage_weights(spec, k));
  const double log_p1 = -std::log(static_cast<double>(N));
  const double log_p0 = N == 1 ? kNegInf : std::log1p(-1.0 / static_cast<double>(N));
  const std::size_t KK = K * K;

  std::vector<double> terms;
  const std::size_t count = std::size_t{1} << (n + 1);
  terms.reserve(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    auto eps = [&](std::size_t k) { return (mask >> k) & 1u; };
    double log_term = 0.0;
    for (std::size_t k = 0; k <= n; ++k) log_term += eps(k) ? log_p1 : log_p0;
    if (log_term == kNegInf) continue;

    // H on (segment_check, segment_hat); for k >= 1 a segment is (prev, cur).
    std::vector<double> H;
    double log_h = 0.0;
    // Q_{n+1}^{(x)2}(1) = G_n (x) G_n, then C_{eps_n}.
    const std::size_t dim_n = n == 0 ? K : KK;
    H.assign(dim_n * dim_n, 0.0);
    for (std::size_t x = 0; x < dim_n; ++x)
      for (std::size_t y = 0; y < dim_n; ++y)
        H[x * dim_n + y] = G[n].value[x] * (eps(n) ? G[n].value[x] : G[n].value[y]);
    log_h += 2.0 * G[n].log_shift;

    for (std::size_t k = n; k >= 1; --k) {
      // H_{k-1}(x, y) = G_{k-1}(x) G_{k-1}(y) sum_{b,d} q_k(cur(x), b) q_k(cur(y), d) H_k((cur(x), b), (cur(y), d))
      const auto& q = spec.q_at(k);
      const std::size_t dim = k == 1 ? K : KK;
      // Inner sums depend only on the current slices of x and y.
      std::vector<double> inner(KK, 0.0);
      for (std::size_t a = 0; a < K; ++a)
        for (std::size_t c = 0; c < K; ++c) {
          double s = 0.0;
          for (std::size_t b = 0; b < K; ++b)
            for (std::size_t d = 0; d < K; ++d) s += q[a][b] * q[c][d] * H[(a * K + b) * KK + c * K + d];
          inner[a * K + c] = s;
        }
      std::vector<double> lower(dim * dim);
      const auto& g = G[k - 1].value;
      for (std::size_t x = 0; x < dim; ++x) {
        for (std::size_t y = 0; y < dim; ++y) {
          const std::size_t y_eval = eps(k - 1) ? x : y;  // C: evaluate at (x, x)
          const std::size_t a = x % K, c = y_eval % K;
          lower[x * dim + y] = g[x] * g[y_eval] * inner[a * K + c];
        }
      }
      log_h += 2.0 * G[k - 1].log_shift;
      H.swap(lower);
      log_h += detail::rescale(H);
    }

    double total = 0.0;
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t c = 0; c < K; ++c) total += spec.q0[a] * spec.q0[c] * H[a * K + c];
    terms.push_back(log_term + log_h + std::log(total));
  }
  return log_sum_exp(terms);
}

/// log E[Xi_n^(N,M)] for any M, i.e. log E[(Z_n^N)^2].
inline double oracle_second_moment(const FiniteHmmSpec& spec, std::size_t N, std::size_t n) {
  return exact_second_moment_tensor(spec, N, n);
}

/// C = E[S^4] / E[S^2]^2 for S the mean of N i.i.d. draws of g(X), X ~ pi0,
/// in the regime q_n = f = pi0, q0 = pi0, g_n = g.
inline double iid_case_C(const FiniteHmmSpec& spec, std::size_t N) {
  if (N < 1) throw ContractViolation("N must be at least 1");
  const std::size_t K = spec.K;
  auto same = [](const std::vector<double>& a, const std::vector<double>& b) { return a == b; };
  bool iid = same(spec.q0, spec.pi0);
  for (std::size_t i = 0; i < K && iid; ++i) iid = same(spec.f[i], spec.pi0);
  for (const auto& q : spec.q_seq)
    for (std::size_t i = 0; i < K && iid; ++i) iid = same(q[i], spec.pi0);
  for (const auto& g : spec.g_seq) iid = iid && same(g, spec.g_seq.front());
  if (!iid) throw ContractViolation("iid_case_C needs q_n = f = pi0 rows, q0 = pi0 and a constant g");

  const auto& g = spec.g_seq.front();
  // Raw moments m_r = E[g(X)^r], r = 0..4.
  std::array<double, 5> m{};
  for (std::size_t x = 0; x < K; ++x) {
    double p = 1.0;
    for (int r = 0; r <= 4; ++r) {
      m[r] += spec.pi0[x] * p;
      p *= g[x];
    }
  }
  // Moments of the running sum T_j = Y_1 + ... + Y_j by binomial expansion.
  constexpr std::array<std::array<double, 5>, 5> binom{{{1, 0, 0, 0, 0},
                                                        {1, 1, 0, 0, 0},
                                                        {1, 2, 1, 0, 0},
                                                        {1, 3, 3, 1, 0},
                                                        {1, 4, 6, 4, 1}}};
  std::array<double, 5> t{1, 0, 0, 0, 0};
  for (std::size_t j = 0; j < N; ++j) {
    std::array<double, 5> next{};
    for (int r = 0; r <= 4; ++r)
      for (int s = 0; s <= r; ++s) next[r] += binom[r][s] * t[s] * m[r - s];
    t = next;
  }
  // S = T / N cancels in the ratio.
  return t[4] / (t[2] * t[2]);
}

}  // namespace pairsmc

#endif  // PAIRSMC_ORACLE_HPP
