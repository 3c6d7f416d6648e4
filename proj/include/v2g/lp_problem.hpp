#pragma once

// Generic linear program in bounded row form:
//
//   minimize    c'x + offset
//   subject to  row_lower <= A x <= row_upper
//               col_lower <=  x  <= col_upper
//
// A is stored as an unordered list of (row, col, value) triplets; duplicates
// are summed by consumers.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace v2g {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct LpEntry {
  int row;
  int col;
  double value;
};

struct LpProblem {
  std::vector<double> objective;
  std::vector<double> col_lower;
  std::vector<double> col_upper;
  std::vector<std::string> col_names;

  std::vector<double> row_lower;
  std::vector<double> row_upper;
  std::vector<std::string> row_names;

  std::vector<LpEntry> entries;
  double objective_offset = 0.0;

  // Optional crash hint: hint_basic[r] is a column to make basic in row r's
  // position of the starting basis, or -1 to keep the row's slack.
  std::vector<int> hint_basic;

  int num_cols() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(row_lower.size()); }

  int add_column(std::string name, double cost, double lower, double upper) {
    objective.push_back(cost);
    col_lower.push_back(lower);
    col_upper.push_back(upper);
    col_names.push_back(std::move(name));
    return num_cols() - 1;
  }

  int add_row(std::string name, double lower, double upper) {
    row_lower.push_back(lower);
    row_upper.push_back(upper);
    row_names.push_back(std::move(name));
    hint_basic.push_back(-1);
    return num_rows() - 1;
  }

  void add_entry(int row, int col, double value) {
    if (value != 0.0) entries.push_back({row, col, value});
  }

  void validate() const {
    const int n = num_cols(), m = num_rows();
    if (static_cast<int>(col_lower.size()) != n || static_cast<int>(col_upper.size()) != n ||
        static_cast<int>(row_upper.size()) != m)
      throw std::invalid_argument("lp: inconsistent vector lengths");
    for (int j = 0; j < n; ++j)
      if (!(col_lower[j] <= col_upper[j]) || col_lower[j] == kInf || col_upper[j] == -kInf ||
          !std::isfinite(objective[j]))
        throw std::invalid_argument("lp: bad bounds or cost on column " + std::to_string(j));
    for (int i = 0; i < m; ++i)
      if (!(row_lower[i] <= row_upper[i]) || row_lower[i] == kInf || row_upper[i] == -kInf)
        throw std::invalid_argument("lp: bad bounds on row " + std::to_string(i));
    for (const auto& e : entries)
      if (e.row < 0 || e.row >= m || e.col < 0 || e.col >= n || !std::isfinite(e.value))
        throw std::invalid_argument("lp: matrix entry out of range");
  }

  std::vector<double> row_activity(std::span<const double> x) const {
    std::vector<double> act(row_lower.size(), 0.0);
    for (const auto& e : entries) act[e.row] += e.value * x[e.col];
    return act;
  }

  double objective_value(std::span<const double> x) const {
    double v = objective_offset;
    for (std::size_t j = 0; j < objective.size(); ++j) v += objective[j] * x[j];
    return v;
  }

  /// Largest absolute bound violation over rows and columns.
  double max_violation(std::span<const double> x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < objective.size(); ++j)
      worst = std::max({worst, col_lower[j] - x[j], x[j] - col_upper[j]});
    const auto act = row_activity(x);
    for (std::size_t i = 0; i < act.size(); ++i)
      worst = std::max({worst, row_lower[i] - act[i], act[i] - row_upper[i]});
    return worst;
  }
};

namespace detail {

// Shortest %g rendering that fits the 12-character MPS numeric field.
inline std::string mps_number(double v) {
  char buf[32];
  for (int prec = 12; prec >= 1; --prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::string(buf).size() <= 12) return buf;
  }
  return buf;
}

inline std::string mps_line(const std::string& f1, const std::string& f2, const std::string& f3,
                            const std::string& f4, const std::string& f5 = {},
                            const std::string& f6 = {}) {
  // Field start columns (1-based): 2, 5, 15, 25, 40, 50.
  std::string line(61, ' ');
  auto put = [&line](std::size_t col, const std::string& s) {
    if (line.size() < col - 1 + s.size()) line.resize(col - 1 + s.size(), ' ');
    line.replace(col - 1, s.size(), s);
  };
  put(2, f1);
  put(5, f2);
  put(15, f3);
  put(25, f4);
  if (!f5.empty()) {
    put(40, f5);
    put(50, f6);
  }
  while (!line.empty() && line.back() == ' ') line.pop_back();
  return line;
}

}  // namespace detail

/// Writes the problem in fixed-format MPS. Names are replaced by 8-character
/// codes (Cnnnnnnn / Rnnnnnnn); the original names are listed in leading
/// comment lines. Two-sided rows are emitted as E/L/G rows plus RANGES.
inline void write_mps(const LpProblem& lp, std::ostream& os, const std::string& name = "V2GPLAN") {
  lp.validate();
  const int n = lp.num_cols(), m = lp.num_rows();
  auto code = [](char prefix, int idx) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%c%07d", prefix, idx);
    return std::string(buf);
  };
  for (int j = 0; j < n; ++j) os << "* " << code('C', j) << " " << lp.col_names[j] << "\n";
  for (int i = 0; i < m; ++i) os << "* " << code('R', i) << " " << lp.row_names[i] << "\n";
  if (lp.objective_offset != 0.0)
    os << "* objective offset " << detail::mps_number(lp.objective_offset) << "\n";

  os << "NAME          " << name.substr(0, 8) << "\n";
  os << "ROWS\n";
  os << detail::mps_line("N", "COST", "", "") << "\n";
  std::vector<char> type(m);
  for (int i = 0; i < m; ++i) {
    const double lo = lp.row_lower[i], hi = lp.row_upper[i];
    if (lo == hi)
      type[i] = 'E';
    else if (lo == -kInf && hi == kInf)
      type[i] = 'N';
    else if (lo == -kInf)
      type[i] = 'L';
    else
      type[i] = 'G';
    os << detail::mps_line(std::string(1, type[i]), code('R', i), "", "") << "\n";
  }

  std::vector<std::vector<std::pair<int, double>>> cols(n);
  for (const auto& e : lp.entries) cols[e.col].emplace_back(e.row, e.value);
  os << "COLUMNS\n";
  for (int j = 0; j < n; ++j) {
    auto& c = cols[j];
    std::sort(c.begin(), c.end());
    // merge duplicates
    std::vector<std::pair<int, double>> merged;
    for (const auto& [r, v] : c) {
      if (!merged.empty() && merged.back().first == r)
        merged.back().second += v;
      else
        merged.emplace_back(r, v);
    }
    if (lp.objective[j] != 0.0)
      os << detail::mps_line("", code('C', j), "COST", detail::mps_number(lp.objective[j]))
         << "\n";
    for (const auto& [r, v] : merged)
      os << detail::mps_line("", code('C', j), code('R', r), detail::mps_number(v)) << "\n";
    if (lp.objective[j] == 0.0 && merged.empty())
      os << detail::mps_line("", code('C', j), "COST", "0") << "\n";
  }

  os << "RHS\n";
  for (int i = 0; i < m; ++i) {
    double rhs = 0.0;
    if (type[i] == 'E' || type[i] == 'G')
      rhs = lp.row_lower[i];
    else if (type[i] == 'L')
      rhs = lp.row_upper[i];
    if (rhs != 0.0)
      os << detail::mps_line("", "RHS", code('R', i), detail::mps_number(rhs)) << "\n";
  }

  bool any_range = false;
  for (int i = 0; i < m; ++i) {
    if (type[i] != 'G' || lp.row_upper[i] == kInf) continue;
    if (!any_range) os << "RANGES\n";
    any_range = true;
    os << detail::mps_line("", "RNG", code('R', i),
                           detail::mps_number(lp.row_upper[i] - lp.row_lower[i]))
       << "\n";
  }

  os << "BOUNDS\n";
  for (int j = 0; j < n; ++j) {
    const double lo = lp.col_lower[j], hi = lp.col_upper[j];
    const auto c = code('C', j);
    if (lo == hi) {
      os << detail::mps_line("FX", "BND", c, detail::mps_number(lo)) << "\n";
      continue;
    }
    if (lo == -kInf && hi == kInf) {
      os << detail::mps_line("FR", "BND", c, "") << "\n";
      continue;
    }
    if (lo == -kInf)
      os << detail::mps_line("MI", "BND", c, "") << "\n";
    else if (lo != 0.0)
      os << detail::mps_line("LO", "BND", c, detail::mps_number(lo)) << "\n";
    if (hi != kInf) os << detail::mps_line("UP", "BND", c, detail::mps_number(hi)) << "\n";
  }
  os << "ENDATA\n";
}

}  // namespace v2g
