#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pairsmc/estimators.hpp"
#include "pairsmc/models/ar1.hpp"
#include "pairsmc/models/finite.hpp"
#include "pairsmc/oracle.hpp"
#include "support/fixtures.hpp"

using namespace pairsmc;
using pairsmc::testing::constant_spec;
using pairsmc::testing::ratio_mean_se;
using pairsmc::testing::toy_spec;

namespace {

ReplicateBatch batch_of(std::vector<double> log_z) {
  ReplicateBatch b;
  b.log_z = std::move(log_z);
  return b;
}

// Every weight vanishes at step 3 for replicates whose first draw is small.
struct FlakyModel {
  using state_type = double;
  std::size_t state_dim() const { return 1; }
  double log_pi0(double) const { return 0.0; }
  double log_f(double, double) const { return 0.0; }
  double log_g(std::size_t n, double x) const {
    return n == 3 && x < 0.5 ? -std::numeric_limits<double>::infinity() : 0.0;
  }
  double sample_q0(RandomSource& rng) const { return rng.uniform(); }
  double log_q0(double) const { return 0.0; }
  double sample_q(std::size_t, double prev, RandomSource&) const { return prev; }
  double log_q(std::size_t, double, double) const { return 0.0; }
};

}  // namespace

TEST(McStrategy, ClosedForms) {
  const auto same = mc_strategy(batch_of({0.3, 0.3}));
  EXPECT_EQ(same.relative_variance, 0.0);
  EXPECT_EQ(same.log_point_estimate, 0.3);
  const auto r = mc_strategy(batch_of({std::log(2.0), std::log(1.0)}));
  EXPECT_NEAR(r.relative_variance, 1.0 / 9.0, 1e-15);
  EXPECT_NEAR(r.log_point_estimate, std::log(1.5), 1e-15);
  EXPECT_NEAR(r.absolute_variance(), 0.25, 1e-15);
  EXPECT_EQ(r.strategy, Strategy::MC);
  EXPECT_FALSE(r.negative);
  EXPECT_THROW(mc_strategy(batch_of({1.0})), ContractViolation);
}

TEST(McStrategy, HugeMagnitudesStayInRelativeScale) {
  const auto r = mc_strategy(batch_of({-5000.0 + std::log(2.0), -5000.0}));
  EXPECT_NEAR(r.relative_variance, 1.0 / 9.0, 1e-12);
  EXPECT_EQ(r.absolute_variance(), 0.0);
}

TEST(PairsStrategy, ClosedForms) {
  const auto b = batch_of({std::log(2.0), std::log(1.0)});
  const double point = std::log(1.5);
  EXPECT_EQ(pairs_strategy(b, 2.0 * point, 2).relative_variance, 0.0);
  const auto neg = pairs_strategy(b, 2.0 * point - 0.1, 2);
  EXPECT_TRUE(neg.negative);
  EXPECT_LT(neg.relative_variance, 0.0);
  EXPECT_EQ(neg.strategy, Strategy::Pairs);
  EXPECT_EQ(neg.components.size(), 3u);
  const auto pos = pairs_strategy(b, std::log(3.0), 2);
  EXPECT_NEAR(pos.relative_variance, 3.0 / 2.25 - 1.0, 1e-15);
  EXPECT_THROW(pairs_strategy(b, 0.0, 3), ContractViolation);
}

TEST(PairsStrategy, ConstantModelGivesZero) {
  const models::FiniteModel model(constant_spec(1.3, 4));
  const auto table = run_replicates(model, 3, 4, 6, 1);
  auto rng = derive_stream(2, 0);
  const auto xi = pairs_run(model, 3, 6, 4, rng);
  for (std::size_t n = 0; n <= 4; ++n) {
    EXPECT_NEAR(pairs_strategy(table.slice(n), xi[n], 6).relative_variance, 0.0, 1e-12);
    EXPECT_EQ(mc_strategy(table.slice(n)).relative_variance, 0.0);
  }
}

TEST(IidSecondMoment, Examples) {
  EXPECT_EQ(iid_second_moment(batch_of({-1.25})), -2.5);
  const models::FiniteModel model(constant_spec(0.7, 5));
  const auto table = run_replicates(model, 4, 5, 10, 3);
  for (std::size_t n = 0; n <= 5; ++n) EXPECT_NEAR(iid_second_moment(table.slice(n)), 2.0 * (n + 1) * std::log(0.7), 1e-12);
  EXPECT_THROW(iid_second_moment(batch_of({})), ContractViolation);
}

TEST(IidSecondMoment, UnbiasedOnToyModel) {
  const auto spec = toy_spec();
  const models::FiniteModel model(spec);
  const auto table = run_replicates(model, 3, 6, 10000, 77);
  std::vector<double> squares;
  for (double v : table.slice(6).log_z) squares.push_back(2.0 * v);
  const auto s = ratio_mean_se(squares, oracle_second_moment(spec, 3, 6));
  EXPECT_LT(std::abs(s.z()), 4.0) << s.mean;
  const double log_ratio = iid_second_moment(table.slice(6)) - oracle_second_moment(spec, 3, 6);
  EXPECT_NEAR(std::exp(log_ratio), s.mean, 1e-12);
}

TEST(RunReplicates, SingleReplicateEqualsPfRun) {
  const models::Ar1Model model(models::Ar1Params{});
  const auto table = run_replicates(model, 20, 8, 1, 5);
  auto rng = derive_stream(5, 0);
  EXPECT_EQ(table.trajectories[0], pf_run(model, 20, 8, rng));
  const auto b = table.slice(8);
  EXPECT_EQ(b.size(), 1u);
  EXPECT_EQ(b.n, 8u);
  EXPECT_EQ(b.N, 20u);
  EXPECT_EQ(b.root_seed, 5u);
}

TEST(RunReplicates, IndependentOfParallelism) {
  const models::Ar1Model model(models::Ar1Params{});
  const auto serial = run_replicates(model, 30, 10, 40, 9, 1);
  const auto parallel = run_replicates(model, 30, 10, 40, 9, 8);
  for (std::size_t j = 0; j < 40; ++j) EXPECT_EQ(serial.trajectories[j], parallel.trajectories[j]);
  const auto offset = run_replicates(model, 30, 10, 5, 9, 3, 35);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(offset.trajectories[j], serial.trajectories[35 + j]);
}

TEST(RunReplicates, ErrorsCarryTheReplicateIndex) {
  const FlakyModel model;
  for (std::size_t par : {1u, 4u}) {
    try {
      run_replicates(model, 1, 5, 50, 3, par);
      FAIL() << "expected DegenerateWeights";
    } catch (const DegenerateWeights& e) {
      ASSERT_TRUE(e.replicate().has_value());
      EXPECT_EQ(e.step(), 3u);
      // The lowest failing replicate is reported whatever the thread count.
      std::size_t first = 0;
      for (;; ++first) {
        auto rng = derive_stream(3, first);
        if (rng.uniform() < 0.5) break;
      }
      EXPECT_EQ(*e.replicate(), first);
    }
  }
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}
