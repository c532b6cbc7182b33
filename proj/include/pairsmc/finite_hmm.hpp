#ifndef PAIRSMC_FINITE_HMM_HPP
#define PAIRSMC_FINITE_HMM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pairsmc/errors.hpp"
#include "pairsmc/random.hpp"

namespace pairsmc {

using ProbabilityVector = std::vector<double>;
/// Row-major K x K matrix stored as rows.
using StochasticMatrix = std::vector<std::vector<double>>;

/// Explicit K-state hidden Markov model with a finite observation horizon.
///
/// States are coded 0..K-1. `g_seq[n][x]` is g_n(x) for n = 0..n_max.
/// `q_seq[k]` is the proposal matrix used at step k + 1; when the sequence is
/// shorter than the horizon its last entry is reused.
struct FiniteHmmSpec {
  std::size_t K = 0;
  ProbabilityVector pi0;
  StochasticMatrix f;
  std::vector<std::vector<double>> g_seq;
  ProbabilityVector q0;
  std::vector<StochasticMatrix> q_seq;

  std::size_t n_max() const noexcept { return g_seq.empty() ? 0 : g_seq.size() - 1; }

  const StochasticMatrix& q_at(std::size_t n) const {
    if (n == 0) throw ContractViolation("proposal matrices are indexed from step 1");
    return q_seq[std::min(n - 1, q_seq.size() - 1)];
  }

  /// Throws ContractViolation when sizes, normalisation or absolute
  /// continuity of the proposals fail.
  void validate() const {
    constexpr double tol = 1e-12;
    auto fail = [](const std::string& what) { throw ContractViolation("invalid finite HMM spec: " + what); };
    auto check_prob = [&](const std::vector<double>& v, const std::string& name) {
      if (v.size() != K) fail(name + " must have length K");
      double s = 0.0;
      for (double p : v) {
        if (!(p >= 0.0) || !std::isfinite(p)) fail(name + " has a negative or non-finite entry");
        s += p;
      }
      if (std::abs(s - 1.0) > tol) fail(name + " does not sum to one");
    };
    auto check_matrix = [&](const StochasticMatrix& m, const std::string& name) {
      if (m.size() != K) fail(name + " must have K rows");
      for (std::size_t i = 0; i < K; ++i) check_prob(m[i], name + " row " + std::to_string(i));
    };
    if (K < 1) fail("K must be at least 1");
    check_prob(pi0, "pi0");
    check_prob(q0, "q0");
    check_matrix(f, "f");
    if (g_seq.empty()) fail("g_seq must hold at least g_0");
    for (std::size_t n = 0; n < g_seq.size(); ++n) {
      if (g_seq[n].size() != K) fail("g_" + std::to_string(n) + " must have length K");
      for (double g : g_seq[n])
        if (!(g > 0.0) || !std::isfinite(g)) fail("g entries must lie in (0, inf)");
    }
    if (q_seq.empty()) fail("q_seq must hold at least one proposal matrix");
    for (std::size_t k = 0; k < q_seq.size(); ++k) check_matrix(q_seq[k], "q_seq[" + std::to_string(k) + "]");
    for (std::size_t x = 0; x < K; ++x)
      if (pi0[x] > 0.0 && q0[x] == 0.0) fail("q0 must be positive wherever pi0 is");
    for (const auto& q : q_seq)
      for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j)
          if (f[i][j] > 0.0 && q[i][j] == 0.0) fail("proposal must be positive wherever f is");
  }

  bool operator==(const FiniteHmmSpec&) const = default;
};

/// The regime q_n(x, .) = f(x, .) = pi0 and g_n = g for every n.
inline FiniteHmmSpec make_iid_spec(const std::vector<double>& g, const ProbabilityVector& pi0, std::size_t n_max) {
  if (g.size() != pi0.size()) throw ContractViolation("g and pi0 must have the same length");
  FiniteHmmSpec spec;
  spec.K = pi0.size();
  spec.pi0 = pi0;
  spec.q0 = pi0;
  spec.f.assign(spec.K, pi0);
  spec.g_seq.assign(n_max + 1, g);
  spec.q_seq.assign(1, spec.f);
  spec.validate();
  return spec;
}

/// Random K-state spec with strictly positive entries. When
/// `distinct_proposal` is set, q0 and q_n differ from pi0 and f so that
/// importance ratios are non-trivial.
inline FiniteHmmSpec random_finite_spec(std::size_t K, std::size_t n_max, RandomSource& rng,
                                        bool distinct_proposal = true) {
  auto prob = [&] {
    std::vector<double> v(K);
    double s = 0.0;
    for (auto& x : v) s += (x = 0.2 + rng.uniform());
    for (auto& x : v) x /= s;
    return v;
  };
  auto matrix = [&] {
    StochasticMatrix m(K);
    for (auto& row : m) row = prob();
    return m;
  };
  FiniteHmmSpec spec;
  spec.K = K;
  spec.pi0 = prob();
  spec.f = matrix();
  spec.g_seq.resize(n_max + 1);
  for (auto& g : spec.g_seq) {
    g.resize(K);
    for (auto& x : g) x = 0.1 + 1.9 * rng.uniform();
  }
  if (distinct_proposal) {
    spec.q0 = prob();
    spec.q_seq = {matrix(), matrix()};
  } else {
    spec.q0 = spec.pi0;
    spec.q_seq = {spec.f};
  }
  return spec;
}

}  // namespace pairsmc

#endif  // PAIRSMC_FINITE_HMM_HPP
