#ifndef PAIRSMC_NUMERICS_HPP
#define PAIRSMC_NUMERICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "pairsmc/errors.hpp"
#include "pairsmc/random.hpp"

namespace pairsmc {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) noexcept {
  const double hi = std::max(a, b);
  if (hi == kNegInf) return kNegInf;
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

namespace detail {

inline double checked_max(std::span<const double> values) {
  if (values.empty()) throw ContractViolation("log-weight vector must be non-empty");
  const double hi = *std::max_element(values.begin(), values.end());
  if (hi == std::numeric_limits<double>::infinity())
    throw ContractViolation("log-weights must not contain +inf");
  return hi;
}

inline double sum_exp_shifted(std::span<const double> values, double shift) noexcept {
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - shift);
  return acc;
}

}  // namespace detail

/// log sum_i exp(values[i]); exactly -inf when every entry is -inf.
inline double log_sum_exp(std::span<const double> values) {
  const double hi = detail::checked_max(values);
  if (hi == kNegInf) return kNegInf;
  return hi + std::log(detail::sum_exp_shifted(values, hi));
}

/// log of the arithmetic mean of exp(values[i]).
inline double log_mean_exp(std::span<const double> values) {
  const double hi = detail::checked_max(values);
  if (hi == kNegInf) return kNegInf;
  // Divide before the log so that equal entries give exactly `hi`.
  return hi + std::log(detail::sum_exp_shifted(values, hi) / static_cast<double>(values.size()));
}

/// Fills `probs` with exp(v_i - log_sum_exp(v)) and returns log_mean_exp(v).
///
/// The fused form used inside the filters: one pass of exponentials serves
/// both the normalising constant and the resampling probabilities.
inline double normalize_into(std::span<const double> values, std::span<double> probs, std::size_t step = 0) {
  const double hi = detail::checked_max(values);
  if (hi == kNegInf) throw DegenerateWeights(step);
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    probs[i] = std::exp(values[i] - hi);
    acc += probs[i];
  }
  const double inv = 1.0 / acc;
  for (double& p : probs) p *= inv;
  return hi + std::log(acc / static_cast<double>(values.size()));
}

/// Normalised probability vector from log-weights.
inline std::vector<double> normalize(std::span<const double> values) {
  std::vector<double> probs(values.size());
  normalize_into(values, probs);
  return probs;
}

/// Reusable buffer for repeated resampling.
struct ResampleScratch {
  std::vector<double> cumulative;
};

/// Draws out.size() i.i.d. categorical(probs) indices into `out`.
inline void resample_multinomial_into(std::span<const double> probs, RandomSource& rng, std::span<std::size_t> out,
                                      ResampleScratch& scratch) {
  if (probs.empty()) throw ContractViolation("resampling needs at least one category");
  auto& cum = scratch.cumulative;
  const std::size_t K = probs.size();
  cum.resize(K);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < K; ++i) {
    const double p = probs[i];
    if (!(p >= 0.0) || !std::isfinite(p)) throw ContractViolation("probabilities must be finite and non-negative");
    if (p > 0.0) last_positive = i;
    acc += p;
    cum[i] = acc;
  }
  if (std::abs(acc - 1.0) > 1e-9) throw ContractViolation("probabilities must sum to one");
  const double* c = cum.data();
  for (auto& idx : out) {
    // Scaling u by the realised total keeps every draw inside [0, K).
    const double u = rng.uniform() * acc;
    // Branchless upper_bound: first i with cum[i] > u.
    std::size_t lo = 0;
    for (std::size_t len = K; len > 1;) {
      const std::size_t half = len / 2;
      lo = c[lo + half - 1] <= u ? lo + half : lo;
      len -= half;
    }
    lo += c[lo] <= u ? 1 : 0;
    idx = std::min(lo, last_positive);
  }
}

/// `count` i.i.d. categorical(probs) indices.
inline std::vector<std::size_t> resample_multinomial(std::span<const double> probs, std::size_t count,
                                                     RandomSource& rng) {
  if (count < 1) throw ContractViolation("resample count must be at least 1");
  std::vector<std::size_t> out(count);
  ResampleScratch scratch;
  resample_multinomial_into(probs, rng, out, scratch);
  return out;
}

}  // namespace pairsmc

#endif  // PAIRSMC_NUMERICS_HPP
