#ifndef PAIRSMC_IO_REPORT_HPP
#define PAIRSMC_IO_REPORT_HPP

#include <algorithm>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "pairsmc/errors.hpp"

namespace pairsmc {

/// One CSV row. For oracle-check rows `flag` holds "pass z=..." or "fail z=...".
struct ReportRow {
  std::string strategy;
  std::size_t replicate = 0;
  std::size_t n = 0;
  double log_value = 0.0;
  std::optional<double> rel_var;
  std::string flag;
  std::uint64_t seed = 0;

  bool operator==(const ReportRow&) const = default;
};

/// Rows plus a `#` header. `metadata` lines are part of the reproducible
/// output; `timings` lines (prefixed "timing.") vary from run to run.
struct RunReport {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::pair<std::string, double>> timings;
  std::vector<ReportRow> rows;

  bool operator==(const RunReport&) const = default;

  /// Orders rows by (strategy, replicate, n).
  void sort_rows() {
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
      return std::tie(a.strategy, a.replicate, a.n) < std::tie(b.strategy, b.replicate, b.n);
    });
  }
};

inline constexpr const char* kReportVersionLine = "# pairsmc report v1";
inline constexpr const char* kReportColumns = "strategy,replicate,n,log_value,rel_var,flag,seed";

/// 17 significant digits, so every double survives a text round trip.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& text) {
  if (text.empty()) throw ContractViolation("empty numeric field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) throw ContractViolation("malformed number '" + text + "'");
  return v;
}

namespace detail {

inline void require_single_field(const std::string& s, const char* what) {
  if (s.find_first_of(",\n\r") != std::string::npos)
    throw ContractViolation(std::string(what) + " must not contain commas or newlines: '" + s + "'");
}

inline std::uint64_t parse_unsigned(const std::string& text) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
    throw ContractViolation("malformed integer '" + text + "'");
  return std::stoull(text);
}

}  // namespace detail

inline void write_report(std::ostream& out, const RunReport& r) {
  out << kReportVersionLine << '\n';
  for (const auto& [k, v] : r.metadata) {
    if (k.find('=') != std::string::npos || v.find('\n') != std::string::npos)
      throw ContractViolation("metadata entry '" + k + "' is not a single key=value line");
    out << "# " << k << '=' << v << '\n';
  }
  for (const auto& [k, v] : r.timings) out << "# timing." << k << '=' << format_double(v) << '\n';
  out << kReportColumns << '\n';
  for (const auto& row : r.rows) {
    detail::require_single_field(row.strategy, "strategy");
    detail::require_single_field(row.flag, "flag");
    out << row.strategy << ',' << row.replicate << ',' << row.n << ',' << format_double(row.log_value) << ','
        << (row.rel_var ? format_double(*row.rel_var) : "") << ',' << row.flag << ',' << row.seed << '\n';
  }
}

inline std::string emit_report(const RunReport& r) {
  std::ostringstream ss;
  write_report(ss, r);
  return ss.str();
}

inline RunReport read_report(std::istream& in) {
  RunReport r;
  std::string line;
  if (!std::getline(in, line) || line != kReportVersionLine) throw ContractViolation("not a pairsmc v1 report");
  bool columns_seen = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!columns_seen) {
      if (line == kReportColumns) {
        columns_seen = true;
        continue;
      }
      if (line.rfind("# ", 0) != 0) throw ContractViolation("line " + std::to_string(line_no) + ": expected header");
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ContractViolation("line " + std::to_string(line_no) + ": missing '='");
      std::string key = line.substr(2, eq - 2);
      std::string value = line.substr(eq + 1);
      if (key.rfind("timing.", 0) == 0)
        r.timings.emplace_back(key.substr(7), parse_double(value));
      else
        r.metadata.emplace_back(std::move(key), std::move(value));
      continue;
    }
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1)
      f.push_back(line.substr(start, pos - start));
    f.push_back(line.substr(start));
    if (f.size() != 7) throw ContractViolation("line " + std::to_string(line_no) + ": expected 7 fields");
    ReportRow row;
    row.strategy = f[0];
    row.replicate = detail::parse_unsigned(f[1]);
    row.n = detail::parse_unsigned(f[2]);
    row.log_value = parse_double(f[3]);
    if (!f[4].empty()) row.rel_var = parse_double(f[4]);
    row.flag = f[5];
    row.seed = detail::parse_unsigned(f[6]);
    r.rows.push_back(std::move(row));
  }
  if (!columns_seen) throw ContractViolation("report has no column line");
  return r;
}

inline RunReport parse_report(const std::string& text) {
  std::istringstream ss(text);
  return read_report(ss);
}

}  // namespace pairsmc

#endif  // PAIRSMC_IO_REPORT_HPP
