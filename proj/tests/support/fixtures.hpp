#ifndef PAIRSMC_TESTS_FIXTURES_HPP
#define PAIRSMC_TESTS_FIXTURES_HPP

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pairsmc/finite_hmm.hpp"
#include "pairsmc/io/config.hpp"

namespace pairsmc::testing {

inline std::string fixture_path(const std::string& name) { return std::string(PAIRSMC_FIXTURE_DIR) + "/" + name; }

/// Three-state HMM with a proposal distinct from the prior, horizon 6.
inline FiniteHmmSpec toy_spec() {
  std::ifstream in(fixture_path("toy_hmm.json"));
  return nlohmann::json::parse(in).get<FiniteHmmSpec>();
}

/// g_n = c everywhere and q = f, so every importance weight is exactly c.
inline FiniteHmmSpec constant_spec(double c, std::size_t n_max) { return make_iid_spec({c, c, c}, {0.2, 0.5, 0.3}, n_max); }

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  /// (mean - 1) / se.
  double z() const { return (mean - 1.0) / se; }
};

/// Mean and standard error of exp(v - log_ref) over the sample.
inline MeanSe ratio_mean_se(const std::vector<double>& log_values, double log_ref) {
  const double R = static_cast<double>(log_values.size());
  double s = 0.0, s2 = 0.0;
  for (double v : log_values) {
    const double r = std::exp(v - log_ref);
    s += r;
    s2 += r * r;
  }
  MeanSe out;
  out.mean = s / R;
  out.se = std::sqrt((s2 / R - out.mean * out.mean) / (R - 1.0));
  return out;
}

inline double sample_variance(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace pairsmc::testing

#endif  // PAIRSMC_TESTS_FIXTURES_HPP
