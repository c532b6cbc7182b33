#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "pairsmc/model.hpp"
#include "pairsmc/models/ar1.hpp"
#include "pairsmc/models/finite.hpp"
#include "pairsmc/models/lotka_volterra.hpp"
#include "support/fixtures.hpp"

using namespace pairsmc;
using namespace pairsmc::models;
using pairsmc::testing::toy_spec;

namespace {

const std::array<double, 3> kLvRates{0.5, 0.0025, 0.3};

long double reference_normal_log_density(long double x, long double mean, long double var) {
  const long double pi = 3.141592653589793238462643383279502884L;
  return -0.5L * std::log(2.0L * pi * var) - (x - mean) * (x - mean) / (2.0L * var);
}

LvParams lv_params_with_data(std::size_t n_steps, std::uint64_t seed) {
  LvParams p;
  auto rng = derive_stream(seed, 0);
  p.y_seq = simulate_lv_data(p, n_steps, rng);
  return p;
}

template <StateSpaceModel Model>
void expect_round_trip_finite(const Model& model, const state_t<Model>& start, std::size_t n_max, int trials) {
  RandomSource rng(12, 34);
  auto prev = start;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(t) % n_max;
    const auto x = model.sample_q(n, prev, rng);
    ASSERT_TRUE(std::isfinite(model.log_q(n, prev, x))) << "trial " << t;
    prev = n == n_max ? start : x;
  }
  const auto x0 = model.sample_q0(rng);
  EXPECT_TRUE(std::isfinite(model.log_q0(x0)));
}

}  // namespace

TEST(Ar1, StationaryVarianceAndPotential) {
  const Ar1Model model(Ar1Params{0.5, 10.0, 100.0});
  EXPECT_NEAR(model.stationary_variance(), 100.0 / 0.75, 1e-12);
  EXPECT_EQ(model.log_g(0, 0.0), 0.0);
  EXPECT_EQ(model.log_g(3, 5.0), -0.25);
  EXPECT_EQ(step_log_weight(model, 7, 1.0, 4.0), -0.16);
  EXPECT_EQ(initial_log_weight(model, 2.0), -0.04);
}

TEST(Ar1, LogDensitiesMatchExtendedPrecisionReference) {
  const Ar1Model model(Ar1Params{});
  RandomSource rng(5, 6);
  for (int i = 0; i < 1000; ++i) {
    const double prev = 30.0 * rng.normal(), x = 30.0 * rng.normal();
    const long double ref_f = reference_normal_log_density(x, 0.5L * prev, 100.0L);
    const long double ref_pi = reference_normal_log_density(x, 0.0L, 100.0L / 0.75L);
    EXPECT_NEAR(model.log_f(prev, x), static_cast<double>(ref_f), 1e-12 * std::max(1.0L, std::abs(ref_f)));
    EXPECT_NEAR(model.log_pi0(x), static_cast<double>(ref_pi), 1e-12 * std::max(1.0L, std::abs(ref_pi)));
    EXPECT_EQ(model.log_f(prev, x), model.log_f(prev, x));
  }
}

TEST(Ar1, RejectsInvalidParameters) {
  EXPECT_THROW(Ar1Model(Ar1Params{1.0, 10.0, 100.0}), ContractViolation);
  EXPECT_THROW(Ar1Model(Ar1Params{0.5, 0.0, 100.0}), ContractViolation);
  EXPECT_THROW(Ar1Model(Ar1Params{0.5, 1.0, -1.0}), ContractViolation);
}

TEST(Models, ProposalRoundTripIsFinite) {
  expect_round_trip_finite(Ar1Model(Ar1Params{}), 0.0, 50, 10000);
  expect_round_trip_finite(FiniteModel(toy_spec()), 0, 6, 10000);
  expect_round_trip_finite(IidToyModel({1.0, 2.0}, {0.5, 0.5}), 0, 20, 10000);
  const LvModel lv(lv_params_with_data(20, 3));
  expect_round_trip_finite(lv, LvBlock{lv.params().x0}, 20, 10000);
}

TEST(FiniteModel, DensitiesAreNormalised) {
  const FiniteModel model(toy_spec());
  double pi_sum = 0.0, q0_sum = 0.0;
  for (int x = 0; x < 3; ++x) {
    pi_sum += std::exp(model.log_pi0(x));
    q0_sum += std::exp(model.log_q0(x));
  }
  EXPECT_NEAR(pi_sum, 1.0, 1e-12);
  EXPECT_NEAR(q0_sum, 1.0, 1e-12);
  for (int x = 0; x < 3; ++x) {
    double f_sum = 0.0, q_sum = 0.0;
    for (int y = 0; y < 3; ++y) {
      f_sum += std::exp(model.log_f(x, y));
      q_sum += std::exp(model.log_q(3, x, y));
    }
    EXPECT_NEAR(f_sum, 1.0, 1e-12);
    EXPECT_NEAR(q_sum, 1.0, 1e-12);
  }
}

TEST(FiniteModel, UniformTransitionDensity) {
  const FiniteModel model(make_iid_spec({1.0, 1.0}, {0.5, 0.5}, 2));
  EXPECT_EQ(model.log_f(0, 1), std::log(0.5));
}

TEST(FiniteModel, TransitionFrequenciesMatchTheMatrix) {
  auto spec = toy_spec();
  spec.q_seq = {spec.f};
  const FiniteModel model(spec);
  RandomSource rng(2, 9);
  std::vector<std::vector<double>> counts(3, std::vector<double>(3, 0.0));
  int x = 0;
  for (int t = 0; t < 100000; ++t) {
    const int y = model.sample_q(1, x, rng);
    counts[x][y] += 1.0;
    x = y;
  }
  for (int i = 0; i < 3; ++i) {
    const double row = counts[i][0] + counts[i][1] + counts[i][2];
    for (int j = 0; j < 3; ++j) {
      const double p = spec.f[i][j];
      const double se = std::sqrt(p * (1 - p) / row);
      EXPECT_LT(std::abs(counts[i][j] / row - p), 3.0 * se) << i << "->" << j;
    }
  }
}

TEST(FiniteModel, HorizonAndValidation) {
  const FiniteModel model(toy_spec());
  EXPECT_THROW(model.log_g(7, 0), ContractViolation);
  auto bad = toy_spec();
  bad.pi0 = {0.5, 0.5, 0.5};
  EXPECT_THROW(FiniteModel{bad}, ContractViolation);
  auto no_support = toy_spec();
  no_support.q_seq[0][0] = {1.0, 0.0, 0.0};
  EXPECT_THROW(FiniteModel{no_support}, ContractViolation);
}

TEST(IidToy, WeightsDependOnlyOnTheCurrentState) {
  const IidToyModel model({1.0, 2.0}, {0.5, 0.5});
  for (int prev = 0; prev < 2; ++prev)
    for (int x = 0; x < 2; ++x) {
      EXPECT_EQ(step_log_weight(model, 3, prev, x), std::log(model.g_values()[x]));
      const double generic = model.log_g(3, x) + model.log_f(prev, x) - model.log_q(3, prev, x);
      EXPECT_EQ(step_log_weight(model, 3, prev, x), generic);
    }
  const auto spec = model.spec(4);
  EXPECT_EQ(spec.n_max(), 4u);
  EXPECT_EQ(spec.q0, spec.pi0);
}

TEST(LotkaVolterra, DriftAndDiffusion) {
  const auto a = lv_drift({100.0, 100.0}, kLvRates);
  EXPECT_NEAR(a[0], 25.0, 1e-12);
  EXPECT_NEAR(a[1], -5.0, 1e-12);
  const auto b = lv_diffusion({100.0, 100.0}, kLvRates);
  EXPECT_NEAR(b.xx, 75.0, 1e-12);
  EXPECT_NEAR(b.xy, -25.0, 1e-12);
  EXPECT_NEAR(b.yx, -25.0, 1e-12);
  EXPECT_NEAR(b.yy, 55.0, 1e-12);
  const auto a0 = lv_drift({0.0, 0.0}, kLvRates);
  const auto b0 = lv_diffusion({0.0, 0.0}, kLvRates);
  EXPECT_EQ(a0, (Vec2{0.0, 0.0}));
  EXPECT_EQ(b0.xx, 0.0);
  EXPECT_EQ(b0.xy, 0.0);
  EXPECT_EQ(b0.yy, 0.0);
}

TEST(LotkaVolterra, GuidedMomentsReduceToPriorForVagueObservations) {
  const Vec2 x{80.0, 120.0}, y{90.0, 110.0};
  const auto [a, b] = lv_guided_moments(x, y, kLvRates, 1e12, 1.0, 1.0);
  const auto alpha = lv_drift(x, kLvRates);
  const auto beta = lv_diffusion(x, kLvRates);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(a[i], alpha[i], 1e-6 * std::abs(alpha[i]));
  }
  EXPECT_NEAR(b.xx, beta.xx, 1e-6 * std::abs(beta.xx));
  EXPECT_NEAR(b.xy, beta.xy, 1e-6 * std::abs(beta.xy));
  EXPECT_NEAR(b.yy, beta.yy, 1e-6 * std::abs(beta.yy));
}

TEST(LotkaVolterra, ZeroNoiseEulerStep) {
  const auto next = lv_euler_step({100.0, 100.0}, kLvRates, 1.0, {0.0, 0.0});
  EXPECT_NEAR(next[0], 125.0, 1e-12);
  EXPECT_NEAR(next[1], 95.0, 1e-12);
}

TEST(LotkaVolterra, SingleSliceProposalIsANormalisedDensity) {
  auto params = lv_params_with_data(5, 8);
  params.y_seq[0] = {118.0, 97.0};
  const LvModel model(params);
  const LvBlock prev{params.x0};
  EXPECT_EQ(model.state_dim(), 2u);
  RandomSource rng(1, 0);
  EXPECT_EQ(model.sample_q(1, prev, rng).size(), 1u);
  const auto [mean, cov] = model.proposal_slice(params.x0, params.y_seq[0], 0);
  const double s0 = std::sqrt(cov.xx), s1 = std::sqrt(cov.yy);
  constexpr int kGrid = 600;
  const double h0 = 16.0 * s0 / kGrid, h1 = 16.0 * s1 / kGrid;
  double total = 0.0;
  for (int i = 0; i < kGrid; ++i)
    for (int j = 0; j < kGrid; ++j) {
      const Vec2 pt{mean[0] - 8.0 * s0 + (i + 0.5) * h0, mean[1] - 8.0 * s1 + (j + 0.5) * h1};
      total += std::exp(model.log_q(1, prev, LvBlock{pt})) * h0 * h1;
    }
  EXPECT_NEAR(total, 1.0, 1e-3);
}

TEST(LotkaVolterra, WeightsFiniteUnderTheProposal) {
  const auto params = lv_params_with_data(3, 4);
  const LvModel model(params);
  const LvBlock prev{params.x0};
  RandomSource rng(7, 7);
  int non_finite = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto x = model.sample_q(1, prev, rng);
    non_finite += !std::isfinite(step_log_weight(model, 1, prev, x));
  }
  EXPECT_EQ(non_finite, 0);
  EXPECT_EQ(model.proposal_failures(), 0u);
}

TEST(LotkaVolterra, ObservationIndexing) {
  const auto params = lv_params_with_data(3, 4);
  const LvModel model(params);
  EXPECT_EQ(model.horizon(), 3u);
  EXPECT_EQ(model.log_g(0, {params.x0}), 0.0);
  EXPECT_THROW(model.log_g(4, {params.x0}), ContractViolation);
  EXPECT_EQ(initial_log_weight(model, LvBlock{params.x0}), 0.0);
}

TEST(LotkaVolterra, NoiselessSimulationFollowsTheEulerOrbit) {
  LvParams p;
  p.sigma2 = 0.0;
  RandomSource rng(3, 3);
  const auto sim = simulate_lv(p, 30, rng, LvSimulationOptions{0.0});
  Vec2 x = p.x0;
  for (std::size_t n = 0; n < 30; ++n) {
    x = lv_euler_step(x, p.c, 1.0, {0.0, 0.0}, p.floor, p.jitter);
    EXPECT_EQ(sim.observations[n], x);
    EXPECT_EQ(sim.states[n + 1], x);
  }
}

TEST(LotkaVolterra, ObservationNoiseScale) {
  LvParams p;
  double total = 0.0;
  int count = 0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    auto rng = derive_stream(55, r);
    const auto sim = simulate_lv(p, 100, rng);
    for (std::size_t n = 0; n < 100; ++n)
      for (int k = 0; k < 2; ++k) {
        total += std::abs(sim.observations[n][k] - sim.states[n + 1][k]);
        ++count;
      }
  }
  const double expected = std::sqrt(10.0) * std::sqrt(2.0 / std::numbers::pi);
  EXPECT_NEAR(expected, 2.523, 1e-3);
  EXPECT_NEAR(total / count, expected, 0.05);
}

TEST(LotkaVolterra, SimulationIsDeterministicAndFinite) {
  LvParams p;
  auto a = derive_stream(10, 0), b = derive_stream(10, 0);
  const auto s1 = simulate_lv(p, 100, a), s2 = simulate_lv(p, 100, b);
  EXPECT_EQ(s1.observations, s2.observations);
  // States may dip below zero; the floor applies only inside drift and diffusion.
  for (const auto& x : s1.states) {
    EXPECT_TRUE(std::isfinite(x[0]));
    EXPECT_TRUE(std::isfinite(x[1]));
  }
}
