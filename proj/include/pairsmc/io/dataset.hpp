#ifndef PAIRSMC_IO_DATASET_HPP
#define PAIRSMC_IO_DATASET_HPP

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "pairsmc/errors.hpp"
#include "pairsmc/io/report.hpp"
#include "pairsmc/models/lotka_volterra.hpp"

namespace pairsmc {

/// Observation CSV with header `n,y1,y2`; rows n = 1, 2, ... in order.
inline void write_observations(std::ostream& out, const std::vector<models::Vec2>& ys) {
  out << "n,y1,y2\n";
  for (std::size_t i = 0; i < ys.size(); ++i)
    out << i + 1 << ',' << format_double(ys[i][0]) << ',' << format_double(ys[i][1]) << '\n';
}

inline std::vector<models::Vec2> read_observations(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "n,y1,y2") throw ContractViolation("observation file must start with n,y1,y2");
  std::vector<models::Vec2> ys;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto a = line.find(',');
    const auto b = a == std::string::npos ? a : line.find(',', a + 1);
    if (b == std::string::npos) throw ContractViolation("malformed observation row '" + line + "'");
    if (detail::parse_unsigned(line.substr(0, a)) != ys.size() + 1)
      throw ContractViolation("observation rows must be numbered 1, 2, ... (at '" + line + "')");
    ys.push_back({parse_double(line.substr(a + 1, b - a - 1)), parse_double(line.substr(b + 1))});
  }
  return ys;
}

inline std::vector<models::Vec2> load_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open observation file '" + path + "'");
  return read_observations(in);
}

}  // namespace pairsmc

#endif  // PAIRSMC_IO_DATASET_HPP
