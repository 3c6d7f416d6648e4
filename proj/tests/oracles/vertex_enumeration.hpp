#pragma once

// Brute-force LP oracle: enumerates every basic point (n linearly independent
// active constraints out of all row and bound half-spaces), keeps the feasible
// ones and returns the cheapest. Only valid for bounded problems (all column
// bounds finite), where an optimum is attained at a vertex.

#include <cmath>
#include <optional>
#include <vector>

#include "v2g/lp_problem.hpp"

namespace v2g::oracle {

struct HalfSpace {
  std::vector<double> a;  // a'x <= b
  double b;
};

inline std::vector<HalfSpace> half_spaces(const LpProblem& lp) {
  const int n = lp.num_cols();
  std::vector<std::vector<double>> dense(lp.num_rows(), std::vector<double>(n, 0.0));
  for (const auto& e : lp.entries) dense[e.row][e.col] += e.value;
  std::vector<HalfSpace> hs;
  for (int i = 0; i < lp.num_rows(); ++i) {
    if (lp.row_upper[i] < kInf) hs.push_back({dense[i], lp.row_upper[i]});
    if (lp.row_lower[i] > -kInf) {
      auto neg = dense[i];
      for (auto& v : neg) v = -v;
      hs.push_back({neg, -lp.row_lower[i]});
    }
  }
  for (int j = 0; j < n; ++j) {
    std::vector<double> unit(n, 0.0);
    unit[j] = 1.0;
    hs.push_back({unit, lp.col_upper[j]});
    unit[j] = -1.0;
    hs.push_back({unit, -lp.col_lower[j]});
  }
  return hs;
}

// Solves the square system by Gaussian elimination with partial pivoting.
inline std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> m,
                                                       std::vector<double> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (std::abs(m[piv][c]) < 1e-10) return std::nullopt;
    std::swap(m[piv], m[c]);
    std::swap(rhs[piv], rhs[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
      rhs[r] -= f * rhs[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t c = n; c-- > 0;) {
    double s = rhs[c];
    for (std::size_t k = c + 1; k < n; ++k) s -= m[c][k] * x[k];
    x[c] = s / m[c][c];
  }
  return x;
}

struct VertexOptimum {
  double objective;
  std::vector<double> x;
};

/// Minimum over all feasible vertices, or nullopt when none exists (infeasible).
inline std::optional<VertexOptimum> enumerate_vertices(const LpProblem& lp, double tol = 1e-9) {
  const int n = lp.num_cols();
  const auto hs = half_spaces(lp);
  const int k = static_cast<int>(hs.size());
  std::optional<VertexOptimum> best;
  std::vector<int> pick(n);

  auto feasible = [&](const std::vector<double>& x) {
    for (const auto& h : hs) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += h.a[j] * x[j];
      if (s > h.b + tol * (1.0 + std::abs(h.b))) return false;
    }
    return true;
  };

  auto visit = [&](auto&& self, int depth, int start) -> void {
    if (depth == n) {
      std::vector<std::vector<double>> m(n);
      std::vector<double> rhs(n);
      for (int r = 0; r < n; ++r) {
        m[r] = hs[pick[r]].a;
        rhs[r] = hs[pick[r]].b;
      }
      auto x = solve_square(std::move(m), std::move(rhs));
      if (!x || !feasible(*x)) return;
      const double obj = lp.objective_value(*x);
      if (!best || obj < best->objective) best = VertexOptimum{obj, *x};
      return;
    }
    for (int c = start; c <= k - (n - depth); ++c) {
      pick[depth] = c;
      self(self, depth + 1, c + 1);
    }
  };
  visit(visit, 0, 0);
  return best;
}

}  // namespace v2g::oracle
