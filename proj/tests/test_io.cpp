#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>

#include "pairsmc/io/config.hpp"
#include "pairsmc/io/dataset.hpp"
#include "pairsmc/io/report.hpp"
#include "support/fixtures.hpp"

using namespace pairsmc;
using pairsmc::testing::fixture_path;
using pairsmc::testing::toy_spec;

namespace {

// Problems reported for a config, joined; empty when it parses.
std::string problems_of(const json& j) {
  try {
    parse_config(j);
    return "";
  } catch (const ConfigError& e) {
    return e.what();
  }
}

}  // namespace

TEST(Config, Defaults) {
  const auto c = parse_config(json::object());
  EXPECT_EQ(c.model.type, "ar1");
  EXPECT_EQ(c.model.ar1.alpha, 0.5);
  EXPECT_EQ(c.model.ar1.sigma, 10.0);
  EXPECT_EQ(c.model.ar1.obs_scale, 100.0);
  EXPECT_EQ(c.N, 50u);
  EXPECT_EQ(c.M, 1000u);
  EXPECT_EQ(c.M_tilde, 1000u);
  EXPECT_EQ(c.n_steps, 100u);
  EXPECT_EQ(c.replicates, 20u);
  EXPECT_EQ(c.strategy, "pairs");
  EXPECT_FALSE(c.benchmark.has_value());
  EXPECT_EQ(c.parallelism, 1u);
}

TEST(Config, MTildeFollowsM) {
  EXPECT_EQ(parse_config(json{{"M", 64}}).M_tilde, 64u);
  EXPECT_EQ(parse_config(json{{"M", 64}, {"M_tilde", 7}}).M_tilde, 7u);
}

TEST(Config, ProblemsNameTheField) {
  EXPECT_NE(problems_of(json{{"N", 0}}).find("N: must be >= 1"), std::string::npos);
  EXPECT_NE(problems_of(json{{"N", 1}}).find("N: must be >= 2 for strategy pairs"), std::string::npos);
  EXPECT_EQ(problems_of(json{{"N", 1}, {"strategy", "pf"}}), "");
  EXPECT_NE(problems_of(json{{"M", "many"}}).find("M: expected an integer"), std::string::npos);
  EXPECT_NE(problems_of(json{{"n_step", 3}}).find("n_step: unknown key"), std::string::npos);
  EXPECT_NE(problems_of(json{{"strategy", "magic"}}).find("strategy:"), std::string::npos);
  EXPECT_NE(problems_of(json{{"model", {{"type", "ar1"}, {"alpha", 1.5}}}}).find("model.alpha"), std::string::npos);
  EXPECT_NE(problems_of(json{{"model", {{"type", "ar1"}, {"beta", 1}}}}).find("model.beta: unknown key"),
            std::string::npos);
  EXPECT_NE(problems_of(json{{"model", {{"type", "cubic"}}}}).find("model.type"), std::string::npos);
  EXPECT_NE(problems_of(json{{"benchmark", {{"N_prime", 10}, {"M_prime", 10}}}}).find("benchmark:"), std::string::npos);
  EXPECT_NE(problems_of(json{{"strategy", "mc"}, {"M_tilde", 1}}).find("M_tilde"), std::string::npos);
  EXPECT_NE(problems_of(json{{"strategy", "oracle_check"}}).find("model.type: oracle_check"), std::string::npos);
  EXPECT_NE(problems_of(json{{"model", {{"type", "lv"}}}, {"n_steps", 0}}).find("n_steps"), std::string::npos);
}

TEST(Config, AllProblemsReportedAtOnce) {
  try {
    parse_config(json{{"N", 0}, {"M", -3}, {"bogus", true}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.problems().size(), 3u) << e.what();
  }
}

TEST(Config, FiniteSpecDefaultsAndHorizon) {
  json spec{{"K", 2}, {"pi0", {0.5, 0.5}}, {"f", {{0.9, 0.1}, {0.1, 0.9}}}, {"g_seq", {{1, 2}, {2, 1}, {1, 1}}}};
  const auto c = parse_config(json{{"model", {{"type", "finite"}, {"spec", spec}}}, {"n_steps", 2}});
  EXPECT_EQ(c.model.finite.q0, c.model.finite.pi0);
  ASSERT_EQ(c.model.finite.q_seq.size(), 1u);
  EXPECT_EQ(c.model.finite.q_seq[0], c.model.finite.f);
  EXPECT_NE(problems_of(json{{"model", {{"type", "finite"}, {"spec", spec}}}, {"n_steps", 3}}).find("horizon"),
            std::string::npos);
  spec["pi0"] = {0.5, 0.6};
  EXPECT_NE(problems_of(json{{"model", {{"type", "finite"}, {"spec", spec}}}, {"n_steps", 2}}).find("model.spec"),
            std::string::npos);
  spec.erase("f");
  EXPECT_NE(problems_of(json{{"model", {{"type", "finite"}, {"spec", spec}}}}).find("model.spec.f: missing"),
            std::string::npos);
}

TEST(Config, SpecFileResolvesAgainstConfigDirectory) {
  const auto c = parse_config(json{{"model", {{"type", "finite"}, {"spec_file", "toy_hmm.json"}}}, {"n_steps", 6}},
                              PAIRSMC_FIXTURE_DIR);
  EXPECT_EQ(c.model.finite.K, 3u);
  EXPECT_EQ(c.model.finite.pi0, toy_spec().pi0);
}

TEST(Config, SpecRoundTrip) {
  const auto spec = toy_spec();
  const auto back = json(spec).get<FiniteHmmSpec>();
  EXPECT_EQ(back.K, spec.K);
  EXPECT_EQ(back.pi0, spec.pi0);
  EXPECT_EQ(back.f, spec.f);
  EXPECT_EQ(back.g_seq, spec.g_seq);
  EXPECT_EQ(back.q0, spec.q0);
  EXPECT_EQ(back.q_seq, spec.q_seq);
}

TEST(Config, EffectiveConfigReparses) {
  auto c = load_config(fixture_path("constant_g.json"));
  c.benchmark = BenchmarkConfig{0, 16};
  const auto again = parse_config(config_to_json(c));
  EXPECT_EQ(config_to_json(again), config_to_json(c));
  EXPECT_EQ(again.root_seed, 11u);
  EXPECT_FALSE(config_to_json(c).contains("parallelism"));
}

TEST(Config, OverridesMergeOverTheFile) {
  const auto c = load_config(fixture_path("constant_g.json"), json{{"N", 9}, {"strategy", "pairs"}});
  EXPECT_EQ(c.N, 9u);
  EXPECT_EQ(c.strategy, "pairs");
  EXPECT_EQ(c.n_steps, 5u);
  EXPECT_THROW(load_config(fixture_path("no_such_file.json")), ConfigError);
}

TEST(Report, RoundTripIsExact) {
  RunReport r;
  r.metadata = {{"git_revision", "abc"}, {"config", R"({"N":3})"}};
  r.timings = {{"total_seconds", 0.125}};
  const double inf = std::numeric_limits<double>::infinity();
  r.rows = {{"pf", 0, 0, -0.1, std::nullopt, "", 7},
            {"pairs", 2, 5, 1.0 / 3.0, 0.25, "negative", 18446744073709551615ULL},
            {"mc", 1, 3, -inf, -1e-300, "", 0}};
  const std::string text = emit_report(r);
  EXPECT_EQ(text.rfind("# pairsmc report v1\n", 0), 0u);
  EXPECT_NE(text.find("\nstrategy,replicate,n,log_value,rel_var,flag,seed\n"), std::string::npos);
  EXPECT_NE(text.find("\npf,0,0,-0.10000000000000001,,,7\n"), std::string::npos);
  const auto back = parse_report(text);
  EXPECT_EQ(back, r);
  EXPECT_EQ(emit_report(back), text);
}

TEST(Report, SortsByStrategyReplicateTime) {
  RunReport r;
  r.rows = {{"pf", 1, 0, 0, {}, "", 0}, {"mc", 0, 1, 0, {}, "", 0}, {"pf", 0, 2, 0, {}, "", 0}, {"pf", 0, 1, 0, {}, "", 0}};
  r.sort_rows();
  EXPECT_EQ(r.rows[0].strategy, "mc");
  EXPECT_EQ(r.rows[1].n, 1u);
  EXPECT_EQ(r.rows[2].n, 2u);
  EXPECT_EQ(r.rows[3].replicate, 1u);
}

TEST(Report, RejectsMalformedInput) {
  EXPECT_THROW(parse_report("strategy,replicate\n"), ContractViolation);
  EXPECT_THROW(parse_report("# pairsmc report v1\n# a=1\n"), ContractViolation);
  EXPECT_THROW(parse_report("# pairsmc report v1\nstrategy,replicate,n,log_value,rel_var,flag,seed\npf,0,0,x,,,1\n"),
               ContractViolation);
  RunReport bad;
  bad.rows = {{"pf", 0, 0, 0.0, {}, "a,b", 0}};
  EXPECT_THROW(emit_report(bad), ContractViolation);
}

TEST(Dataset, RoundTrip) {
  const std::vector<models::Vec2> ys{{101.5, 98.25}, {1e-7, 3.0 / 7.0}, {-2.0, 0.0}};
  std::stringstream ss;
  write_observations(ss, ys);
  EXPECT_EQ(ss.str().substr(0, 8), "n,y1,y2\n");
  EXPECT_EQ(read_observations(ss), ys);
}

TEST(Dataset, RejectsBadRows) {
  std::istringstream wrong_header("t,y1,y2\n1,2,3\n");
  EXPECT_THROW(read_observations(wrong_header), ContractViolation);
  std::istringstream gap("n,y1,y2\n1,2,3\n3,4,5\n");
  EXPECT_THROW(read_observations(gap), ContractViolation);
  std::istringstream short_row("n,y1,y2\n1,2\n");
  EXPECT_THROW(read_observations(short_row), ContractViolation);
}

TEST(Config, ShippedConfigsParse) {
  std::size_t count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(PAIRSMC_CONFIG_DIR)) {
    if (entry.path().filename() == "toy_hmm.json") continue;
    EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
    ++count;
  }
  EXPECT_EQ(count, 4u);
}
