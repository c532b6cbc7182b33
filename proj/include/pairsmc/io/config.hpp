#ifndef PAIRSMC_IO_CONFIG_HPP
#define PAIRSMC_IO_CONFIG_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pairsmc/finite_hmm.hpp"
#include "pairsmc/models/ar1.hpp"
#include "pairsmc/models/lotka_volterra.hpp"

namespace pairsmc {

using nlohmann::json;

/// Invalid experiment configuration. what() lists one "field: problem" entry per line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& problems) {
    std::string out;
    for (const auto& p : problems) out += (out.empty() ? "" : "\n") + p;
    return out;
  }
  std::vector<std::string> problems_;
};

inline void to_json(json& j, const FiniteHmmSpec& s) {
  j = json{{"K", s.K}, {"pi0", s.pi0}, {"f", s.f}, {"g_seq", s.g_seq}, {"q0", s.q0}, {"q_seq", s.q_seq}};
}

/// Reads a spec object; throws ConfigError naming the offending field.
inline void from_json(const json& j, FiniteHmmSpec& s) {
  std::vector<std::string> problems;
  auto field = [&](const char* name, auto& out) {
    if (!j.contains(name)) {
      problems.push_back(std::string("spec.") + name + ": missing");
      return;
    }
    try {
      j.at(name).get_to(out);
    } catch (const json::exception&) {
      problems.push_back(std::string("spec.") + name + ": wrong type or shape");
    }
  };
  if (!j.is_object()) throw ConfigError({"spec: expected an object"});
  field("K", s.K);
  field("pi0", s.pi0);
  field("f", s.f);
  field("g_seq", s.g_seq);
  if (j.contains("q0"))
    field("q0", s.q0);
  else
    s.q0 = s.pi0;
  if (j.contains("q_seq"))
    field("q_seq", s.q_seq);
  else
    s.q_seq = {s.f};
  if (!problems.empty()) throw ConfigError(problems);
  try {
    s.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError({std::string("spec: ") + e.what()});
  }
}

/// Experiment configuration. Defaults:
///
///   model        {"type": "ar1"} with alpha 0.5, sigma 10, obs_scale 100
///   N 50, M 1000, M_tilde = M, n_steps 100, replicates 20, root_seed 1
///   strategy     "pairs" (one of pf, pairs, mc, compare, oracle_check)
///   benchmark    none; {"M_prime": k} or {"N_prime": k}
///   variance_report false   (pairs mode: also run M filters per replicate
///                            and report the Pairs-strategy variance)
///   output_path  "" (standard output)
///   parallelism  1 (results do not depend on it, so it is not echoed)
///
/// Model blocks:
///   ar1      alpha, sigma, obs_scale
///   lv       c [0.5, 0.0025, 0.3], sigma2 10, m 1, x0 [100, 100], floor 1e-6,
///            jitter 1e-10, data "" (CSV n,y1,y2; empty simulates fresh data
///            with data_seed, default 1, for n_steps)
///   finite   spec {K, pi0, f, g_seq, q0 = pi0, q_seq = [f]} or spec_file
///   iid_toy  g [1, 2], pi0 [0.5, 0.5]
struct ModelConfig {
  std::string type = "ar1";
  models::Ar1Params ar1;
  models::LvParams lv;
  std::string lv_data;
  std::uint64_t lv_data_seed = 1;
  FiniteHmmSpec finite;
  std::string finite_spec_file;
  std::vector<double> iid_g{1.0, 2.0};
  std::vector<double> iid_pi0{0.5, 0.5};
};

struct BenchmarkConfig {
  std::size_t N_prime = 0;
  std::size_t M_prime = 0;
};

struct ExperimentConfig {
  ModelConfig model;
  std::size_t N = 50;
  std::size_t M = 1000;
  std::size_t M_tilde = 1000;
  std::size_t n_steps = 100;
  std::size_t replicates = 20;
  std::uint64_t root_seed = 1;
  std::string strategy = "pairs";
  std::optional<BenchmarkConfig> benchmark;
  bool variance_report = false;
  std::string output_path;
  std::size_t parallelism = 1;
};

inline bool strategy_uses_pairs(const std::string& s) {
  return s == "pairs" || s == "compare" || s == "oracle_check";
}

namespace detail {

class FieldReader {
 public:
  FieldReader(const json& j, std::string prefix, std::vector<std::string>& problems)
      : j_(j), prefix_(std::move(prefix)), problems_(problems) {}

  void known(const char* name) { seen_.push_back(name); }

  template <class T>
  void read(const char* name, T& out) {
    seen_.push_back(name);
    if (!j_.contains(name)) return;
    try {
      j_.at(name).get_to(out);
    } catch (const json::exception&) {
      problems_.push_back(path(name) + ": wrong type");
    }
  }

  void count(const char* name, std::size_t& out, std::size_t minimum) {
    seen_.push_back(name);
    if (!j_.contains(name)) return;
    const json& v = j_.at(name);
    if (!v.is_number_integer() && !(v.is_number_float() && v.get<double>() == static_cast<double>(v.get<std::int64_t>()))) {
      problems_.push_back(path(name) + ": expected an integer");
      return;
    }
    const auto value = v.get<std::int64_t>();
    if (value < static_cast<std::int64_t>(minimum)) {
      problems_.push_back(path(name) + ": must be >= " + std::to_string(minimum));
      return;
    }
    out = static_cast<std::size_t>(value);
  }

  void reject_unknown() {
    for (const auto& [key, value] : j_.items())
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) problems_.push_back(path(key) + ": unknown key");
  }

  std::string path(const std::string& name) const { return prefix_.empty() ? name : prefix_ + "." + name; }

 private:
  const json& j_;
  std::string prefix_;
  std::vector<std::string>& problems_;
  std::vector<std::string> seen_;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open file '" + path + "'"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void parse_model(const json& j, ModelConfig& m, const std::filesystem::path& base_dir,
                        std::vector<std::string>& problems) {
  if (!j.is_object()) {
    problems.push_back("model: expected an object");
    return;
  }
  FieldReader r(j, "model", problems);
  r.read("type", m.type);
  if (m.type == "ar1") {
    r.read("alpha", m.ar1.alpha);
    r.read("sigma", m.ar1.sigma);
    r.read("obs_scale", m.ar1.obs_scale);
    if (!(std::abs(m.ar1.alpha) < 1.0)) problems.push_back("model.alpha: must satisfy |alpha| < 1");
    if (!(m.ar1.sigma > 0.0)) problems.push_back("model.sigma: must be > 0");
    if (!(m.ar1.obs_scale > 0.0)) problems.push_back("model.obs_scale: must be > 0");
  } else if (m.type == "lv") {
    r.read("c", m.lv.c);
    r.read("sigma2", m.lv.sigma2);
    r.count("m", m.lv.m, 1);
    r.read("x0", m.lv.x0);
    r.read("floor", m.lv.floor);
    r.read("jitter", m.lv.jitter);
    r.read("data", m.lv_data);
    r.read("data_seed", m.lv_data_seed);
    for (double c : m.lv.c)
      if (!(c > 0.0)) problems.push_back("model.c: rate constants must be > 0");
    if (!(m.lv.sigma2 > 0.0)) problems.push_back("model.sigma2: must be > 0");
    if (!(m.lv.floor > 0.0)) problems.push_back("model.floor: must be > 0");
    if (!(m.lv.jitter >= 0.0)) problems.push_back("model.jitter: must be >= 0");
    if (!m.lv_data.empty()) {
      const std::filesystem::path p(m.lv_data);
      if (p.is_relative() && !base_dir.empty()) m.lv_data = (base_dir / p).lexically_normal().string();
    }
  } else if (m.type == "finite") {
    r.read("spec_file", m.finite_spec_file);
    const bool inline_spec = j.contains("spec");
    r.known("spec");
    if (inline_spec == !m.finite_spec_file.empty()) {
      problems.push_back("model: give exactly one of spec and spec_file");
    } else {
      try {
        if (inline_spec) {
          m.finite = j.at("spec").get<FiniteHmmSpec>();
        } else {
          std::filesystem::path p(m.finite_spec_file);
          if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
          m.finite_spec_file = p.lexically_normal().string();
          m.finite = json::parse(read_text_file(m.finite_spec_file)).get<FiniteHmmSpec>();
        }
      } catch (const ConfigError& e) {
        for (const auto& msg : e.problems()) problems.push_back("model." + msg);
      } catch (const json::exception& e) {
        problems.push_back(std::string("model.spec_file: ") + e.what());
      }
    }
  } else if (m.type == "iid_toy") {
    r.read("g", m.iid_g);
    r.read("pi0", m.iid_pi0);
    try {
      make_iid_spec(m.iid_g, m.iid_pi0, 0);
    } catch (const ContractViolation& e) {
      problems.push_back(std::string("model: ") + e.what());
    }
  } else {
    problems.push_back("model.type: expected one of ar1, lv, finite, iid_toy (got '" + m.type + "')");
    return;
  }
  r.reject_unknown();
}

}  // namespace detail

/// Parses and validates a config object. Relative data paths resolve against
/// `base_dir`. Every problem found is reported, not only the first.
inline ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir = {}) {
  std::vector<std::string> problems;
  if (!j.is_object()) throw ConfigError({"config: expected a JSON object"});
  ExperimentConfig c;
  detail::FieldReader r(j, "", problems);
  r.known("model");
  if (j.contains("model")) detail::parse_model(j.at("model"), c.model, base_dir, problems);
  r.count("N", c.N, 1);
  r.count("M", c.M, 1);
  c.M_tilde = c.M;
  r.count("M_tilde", c.M_tilde, 1);
  r.count("n_steps", c.n_steps, 0);
  r.count("replicates", c.replicates, 1);
  r.read("root_seed", c.root_seed);
  r.read("strategy", c.strategy);
  r.read("variance_report", c.variance_report);
  r.read("output_path", c.output_path);
  r.count("parallelism", c.parallelism, 1);
  r.known("benchmark");
  if (j.contains("benchmark") && !j.at("benchmark").is_null()) {
    const json& b = j.at("benchmark");
    if (!b.is_object()) {
      problems.push_back("benchmark: expected an object");
    } else {
      BenchmarkConfig bc;
      detail::FieldReader br(b, "benchmark", problems);
      br.count("N_prime", bc.N_prime, 1);
      br.count("M_prime", bc.M_prime, 1);
      br.reject_unknown();
      if ((bc.N_prime == 0) == (bc.M_prime == 0)) problems.push_back("benchmark: give exactly one of N_prime and M_prime");
      c.benchmark = bc;
    }
  }
  r.reject_unknown();

  const std::vector<std::string> strategies{"pf", "pairs", "mc", "compare", "oracle_check"};
  if (std::find(strategies.begin(), strategies.end(), c.strategy) == strategies.end())
    problems.push_back("strategy: expected one of pf, pairs, mc, compare, oracle_check (got '" + c.strategy + "')");
  if (strategy_uses_pairs(c.strategy) && c.N < 2) problems.push_back("N: must be >= 2 for strategy " + c.strategy);
  if (c.strategy == "mc" && c.M_tilde < 2)
    problems.push_back("M_tilde: must be >= 2 for strategy mc");
  if (c.strategy == "pairs" && c.variance_report && c.M < 2)
    problems.push_back("M: must be >= 2 when variance_report is set");
  if (c.strategy == "oracle_check" && c.model.type != "finite" && c.model.type != "iid_toy")
    problems.push_back("model.type: oracle_check needs a finite or iid_toy model");
  if (c.strategy == "oracle_check" && c.replicates < 2) problems.push_back("replicates: must be >= 2 for oracle_check");
  if (c.model.type == "finite" && problems.empty() && c.n_steps > c.model.finite.n_max())
    problems.push_back("n_steps: exceeds the finite spec's horizon (" + std::to_string(c.model.finite.n_max()) + ")");
  if (c.model.type == "lv" && c.n_steps < 1) problems.push_back("n_steps: must be >= 1 for the lv model");
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

/// Parsed but unvalidated contents of a config file.
inline json read_config_json(const std::string& path) {
  json j;
  try {
    j = json::parse(detail::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError({"config: " + std::string(e.what())});
  }
  if (!j.is_object()) throw ConfigError({"config: expected a JSON object"});
  return j;
}

/// Loads a config file; `overrides` (e.g. from command-line flags) are merged
/// over the file contents before validation.
inline ExperimentConfig load_config(const std::string& path, const json& overrides = json::object()) {
  json j = read_config_json(path);
  j.merge_patch(overrides);
  return parse_config(j, std::filesystem::path(path).parent_path());
}

/// The effective configuration, for echoing into report headers.
inline json config_to_json(const ExperimentConfig& c) {
  json model{{"type", c.model.type}};
  if (c.model.type == "ar1") {
    model["alpha"] = c.model.ar1.alpha;
    model["sigma"] = c.model.ar1.sigma;
    model["obs_scale"] = c.model.ar1.obs_scale;
  } else if (c.model.type == "lv") {
    const auto& p = c.model.lv;
    model.update({{"c", p.c}, {"sigma2", p.sigma2}, {"m", p.m}, {"x0", p.x0}, {"floor", p.floor}, {"jitter", p.jitter},
                  {"data", c.model.lv_data}, {"data_seed", c.model.lv_data_seed}});
  } else if (c.model.type == "finite") {
    model["spec"] = c.model.finite;
  } else {
    model["g"] = c.model.iid_g;
    model["pi0"] = c.model.iid_pi0;
  }
  json j{{"model", model},
         {"N", c.N},
         {"M", c.M},
         {"M_tilde", c.M_tilde},
         {"n_steps", c.n_steps},
         {"replicates", c.replicates},
         {"root_seed", c.root_seed},
         {"strategy", c.strategy},
         {"variance_report", c.variance_report},
         {"output_path", c.output_path}};
  if (c.benchmark) {
    json b = json::object();
    if (c.benchmark->N_prime) b["N_prime"] = c.benchmark->N_prime;
    if (c.benchmark->M_prime) b["M_prime"] = c.benchmark->M_prime;
    j["benchmark"] = b;
  }
  return j;
}

}  // namespace pairsmc

#endif  // PAIRSMC_IO_CONFIG_HPP
