#ifndef PAIRSMC_MODELS_LOTKA_VOLTERRA_HPP
#define PAIRSMC_MODELS_LOTKA_VOLTERRA_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pairsmc/errors.hpp"
#include "pairsmc/numerics.hpp"
#include "pairsmc/random.hpp"

namespace pairsmc::models {

using Vec2 = std::array<double, 2>;

/// Row-major 2x2 matrix [[xx, xy], [yx, yy]].
struct Mat2 {
  double xx = 0, xy = 0, yx = 0, yy = 0;

  double det() const noexcept { return xx * yy - xy * yx; }
  Mat2 operator+(const Mat2& o) const noexcept { return {xx + o.xx, xy + o.xy, yx + o.yx, yy + o.yy}; }
  Mat2 operator-(const Mat2& o) const noexcept { return {xx - o.xx, xy - o.xy, yx - o.yx, yy - o.yy}; }
  Mat2 operator*(double s) const noexcept { return {xx * s, xy * s, yx * s, yy * s}; }
  Mat2 operator*(const Mat2& o) const noexcept {
    return {xx * o.xx + xy * o.yx, xx * o.xy + xy * o.yy, yx * o.xx + yy * o.yx, yx * o.xy + yy * o.yy};
  }
  Vec2 operator*(const Vec2& v) const noexcept { return {xx * v[0] + xy * v[1], yx * v[0] + yy * v[1]}; }
  Mat2 inverse() const noexcept {
    const double d = det();
    return {yy / d, -xy / d, -yx / d, xx / d};
  }
  Mat2 symmetrized() const noexcept {
    const double off = 0.5 * (xy + yx);
    return {xx, off, off, yy};
  }
  static Mat2 identity(double s = 1.0) noexcept { return {s, 0, 0, s}; }
  bool operator==(const Mat2&) const = default;
};

/// Lower Cholesky factor of a symmetric 2x2 matrix; empty when not positive definite.
inline std::optional<Mat2> cholesky(const Mat2& m) noexcept {
  if (!(m.xx > 0.0)) return std::nullopt;
  const double l11 = std::sqrt(m.xx);
  const double l21 = m.yx / l11;
  const double rem = m.yy - l21 * l21;
  if (!(rem > 0.0)) return std::nullopt;
  return Mat2{l11, 0.0, l21, std::sqrt(rem)};
}

/// Bivariate normal log-density for a positive-definite covariance.
inline double mvn2_log_density(const Vec2& x, const Vec2& mean, const Mat2& cov) noexcept {
  const Vec2 d{x[0] - mean[0], x[1] - mean[1]};
  const double det = cov.det();
  const Vec2 s = cov.inverse() * d;
  return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * (d[0] * s[0] + d[1] * s[1]);
}

/// Drift of the Lotka-Volterra diffusion.
inline Vec2 lv_drift(const Vec2& x, const std::array<double, 3>& c) noexcept {
  const double inter = c[1] * x[0] * x[1];
  return {c[0] * x[0] - inter, inter - c[2] * x[1]};
}

/// Diffusion matrix of the Lotka-Volterra diffusion.
inline Mat2 lv_diffusion(const Vec2& x, const std::array<double, 3>& c) noexcept {
  const double inter = c[1] * x[0] * x[1];
  return {c[0] * x[0] + inter, -inter, -inter, inter + c[2] * x[1]};
}

struct LvParams {
  std::array<double, 3> c{0.5, 0.0025, 0.3};
  /// Observation noise variance (Sigma = sigma2 * I).
  double sigma2 = 10.0;
  /// Euler sub-steps per unit time.
  std::size_t m = 1;
  Vec2 x0{100.0, 100.0};
  /// y_seq[n - 1] is the observation at integer time n >= 1.
  std::vector<Vec2> y_seq;
  /// Populations are clamped at this floor before drift/diffusion evaluation.
  double floor = 1e-6;
  /// Added to every covariance before factorisation.
  double jitter = 1e-10;
};

/// Mean increment rate a_j and covariance rate b_j of the guided Gaussian
/// step from x towards observation y, `remaining` = 1 - j dt time to go.
struct GuidedMoments {
  Vec2 a;
  Mat2 b;
};

inline GuidedMoments lv_guided_moments(const Vec2& x, const Vec2& y, const std::array<double, 3>& c, double sigma2,
                                       double dt, double remaining) noexcept {
  const Vec2 alpha = lv_drift(x, c);
  const Mat2 beta = lv_diffusion(x, c);
  const Mat2 gain = beta * (beta * remaining + Mat2::identity(sigma2)).inverse();
  const Vec2 resid{y[0] - (x[0] + alpha[0] * remaining), y[1] - (x[1] + alpha[1] * remaining)};
  const Vec2 corr = gain * resid;
  return {{alpha[0] + corr[0], alpha[1] + corr[1]}, (beta - gain * beta * dt).symmetrized()};
}

/// Deterministic part plus `chi`-driven noise of one Euler step.
inline Vec2 lv_euler_step(const Vec2& x, const std::array<double, 3>& c, double dt, const Vec2& chi,
                          double floor = 1e-6, double jitter = 1e-10) {
  const Vec2 xe{std::max(x[0], floor), std::max(x[1], floor)};
  const Vec2 alpha = lv_drift(xe, c);
  Vec2 out{x[0] + alpha[0] * dt, x[1] + alpha[1] * dt};
  if (chi[0] != 0.0 || chi[1] != 0.0) {
    const auto L = cholesky(lv_diffusion(xe, c) * dt + Mat2::identity(jitter));
    if (!L) throw ContractViolation("diffusion matrix is not positive definite");
    const Vec2 z = *L * chi;
    out[0] += z[0];
    out[1] += z[1];
  }
  return out;
}

/// Block state: the m Euler slices X_{n-1+dt}, ..., X_n (a single slice X_0 at time 0).
using LvBlock = std::vector<Vec2>;

/// Euler-discretised stochastic Lotka-Volterra system observed in Gaussian
/// noise at integer times, with a guided Gaussian proposal conditioned on the
/// next observation. X_0 is deterministic and time 0 carries no observation,
/// so the time-0 importance ratio is one.
class LvModel {
 public:
  using state_type = LvBlock;

  explicit LvModel(LvParams params) : p_(std::move(params)), failures_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
    for (double ci : p_.c)
      if (!(ci > 0.0)) throw ContractViolation("Lotka-Volterra rate constants must be positive");
    if (p_.m < 1) throw ContractViolation("Lotka-Volterra needs m >= 1");
    if (!(p_.sigma2 > 0.0)) throw ContractViolation("Lotka-Volterra needs sigma2 > 0");
    dt_ = 1.0 / static_cast<double>(p_.m);
    obs_cov_ = Mat2::identity(p_.sigma2);
  }

  const LvParams& params() const noexcept { return p_; }
  std::size_t horizon() const noexcept { return p_.y_seq.size(); }
  /// Number of proposal evaluations that met a non-positive-definite covariance.
  std::uint64_t proposal_failures() const noexcept { return failures_->load(std::memory_order_relaxed); }

  std::size_t state_dim() const noexcept { return 2 * p_.m; }

  double log_pi0(const LvBlock& x) const noexcept { return is_x0(x) ? 0.0 : kNegInf; }
  double log_q0(const LvBlock& x) const noexcept { return log_pi0(x); }
  LvBlock sample_q0(RandomSource&) const { return {p_.x0}; }

  double log_g(std::size_t n, const LvBlock& x) const {
    if (n == 0) return 0.0;
    return mvn2_log_density(observation(n), x.back(), obs_cov_);
  }

  double log_f(const LvBlock& prev, const LvBlock& cur) const {
    double acc = 0.0;
    Vec2 s = prev.back();
    for (const Vec2& next : cur) {
      const Vec2 xe = clamp(s);
      const Vec2 alpha = lv_drift(xe, p_.c);
      const Mat2 cov = lv_diffusion(xe, p_.c) * dt_ + Mat2::identity(p_.jitter);
      acc += mvn2_log_density(next, {s[0] + alpha[0] * dt_, s[1] + alpha[1] * dt_}, cov);
      s = next;
    }
    return acc;
  }

  LvBlock sample_q(std::size_t n, const LvBlock& prev, RandomSource& rng) const {
    const Vec2& y = observation(n);
    LvBlock out(p_.m);
    Vec2 s = prev.back();
    for (std::size_t j = 0; j < p_.m; ++j) {
      const auto [mean, cov] = proposal_slice(s, y, j);
      const auto L = cholesky(cov);
      const Vec2 chi{rng.normal(), rng.normal()};
      if (L) {
        const Vec2 z = *L * chi;
        out[j] = {mean[0] + z[0], mean[1] + z[1]};
      } else {
        out[j] = mean;
      }
      s = out[j];
    }
    return out;
  }

  /// +inf when a slice covariance is not positive definite (the draw is then a
  /// point mass), which sends the importance weight to -inf.
  double log_q(std::size_t n, const LvBlock& prev, const LvBlock& cur) const {
    const Vec2& y = observation(n);
    double acc = 0.0;
    Vec2 s = prev.back();
    for (std::size_t j = 0; j < p_.m; ++j) {
      const auto [mean, cov] = proposal_slice(s, y, j);
      if (!cholesky(cov)) return std::numeric_limits<double>::infinity();
      acc += mvn2_log_density(cur[j], mean, cov);
      s = cur[j];
    }
    return acc;
  }

  double initial_log_weight(const LvBlock& x) const noexcept { return is_x0(x) ? 0.0 : kNegInf; }

  double step_log_weight(std::size_t n, const LvBlock& prev, const LvBlock& cur) const {
    const double lq = log_q(n, prev, cur);
    if (lq == std::numeric_limits<double>::infinity()) {
      failures_->fetch_add(1, std::memory_order_relaxed);
      return kNegInf;
    }
    return log_g(n, cur) + log_f(prev, cur) - lq;
  }

  /// Mean and covariance of the guided Gaussian for slice j leaving state s.
  std::pair<Vec2, Mat2> proposal_slice(const Vec2& s, const Vec2& y, std::size_t j) const {
    const double remaining = 1.0 - static_cast<double>(j) * dt_;
    const auto [a, b] = lv_guided_moments(clamp(s), y, p_.c, p_.sigma2, dt_, remaining);
    return {{s[0] + a[0] * dt_, s[1] + a[1] * dt_}, b * dt_ + Mat2::identity(p_.jitter)};
  }

 private:
  Vec2 clamp(const Vec2& x) const noexcept { return {std::max(x[0], p_.floor), std::max(x[1], p_.floor)}; }
  bool is_x0(const LvBlock& x) const noexcept { return x.size() == 1 && x[0] == p_.x0; }
  const Vec2& observation(std::size_t n) const {
    if (n == 0 || n > p_.y_seq.size())
      throw ContractViolation("no Lotka-Volterra observation at time " + std::to_string(n));
    return p_.y_seq[n - 1];
  }

  LvParams p_;
  double dt_ = 1.0;
  Mat2 obs_cov_;
  std::shared_ptr<std::atomic<std::uint64_t>> failures_;
};

inline LvModel make_lv(const LvParams& params) { return LvModel(params); }

struct LvSimulationOptions {
  /// Multiplies the Euler noise; 0 gives the deterministic Euler orbit.
  double process_noise = 1.0;
};

struct LvSimulation {
  /// Latent states at integer times 0..n_steps.
  std::vector<Vec2> states;
  /// Observations at times 1..n_steps.
  std::vector<Vec2> observations;
};

/// Forward simulation of the Euler dynamics from x0: the same chain as the
/// model's f, so populations are clamped at params.floor only where drift and
/// diffusion are evaluated. Observations add N(0, sigma2 I) noise (sigma2 = 0 allowed).
inline LvSimulation simulate_lv(const LvParams& params, std::size_t n_steps, RandomSource& rng,
                                LvSimulationOptions options = {}) {
  if (n_steps < 1) throw ContractViolation("simulation needs at least one step");
  if (params.m < 1) throw ContractViolation("Lotka-Volterra needs m >= 1");
  if (!(params.sigma2 >= 0.0)) throw ContractViolation("observation variance must be non-negative");
  const double dt = 1.0 / static_cast<double>(params.m);
  const double obs_sd = std::sqrt(params.sigma2);
  LvSimulation sim;
  Vec2 x = params.x0;
  sim.states.push_back(x);
  for (std::size_t n = 1; n <= n_steps; ++n) {
    for (std::size_t j = 0; j < params.m; ++j) {
      const Vec2 chi{rng.normal() * options.process_noise, rng.normal() * options.process_noise};
      x = lv_euler_step(x, params.c, dt, chi, params.floor, params.jitter);
    }
    sim.states.push_back(x);
    const double e0 = rng.normal(), e1 = rng.normal();
    sim.observations.push_back({x[0] + obs_sd * e0, x[1] + obs_sd * e1});
  }
  return sim;
}

/// Observations y_1..y_n of a fresh simulation.
inline std::vector<Vec2> simulate_lv_data(const LvParams& params, std::size_t n_steps, RandomSource& rng) {
  return simulate_lv(params, n_steps, rng).observations;
}

}  // namespace pairsmc::models

#endif  // PAIRSMC_MODELS_LOTKA_VOLTERRA_HPP
