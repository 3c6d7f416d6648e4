#pragma once

// Bounded-variable revised primal simplex.
//
// Internally every row i gets a logical variable r_i with bounds
// [row_lower_i, row_upper_i] and the constraint system becomes A x - r = 0.
// The basis is factorized with a sparse LU (Eigen::SparseLU, COLAMD ordering)
// and updated in product form (one eta column per pivot) until the next
// refactorization.
//
// Phase 1 minimizes the sum of bound infeasibilities of the basic variables
// (composite method: the phase-1 cost is rebuilt every iteration). When no
// improving column remains with a positive infeasibility sum, the problem is
// reported Infeasible and the sum is returned as the certificate.
//
// Pricing is Dantzig (largest reduced cost) until `degenerate_threshold`
// consecutive degenerate pivots occur; from then on Bland's smallest-index
// rule is used until a step makes progress. The ratio test is the two-pass
// Harris test, except under Bland where ties break on the smallest index.
//
// Scale: the basis is sparse, so memory grows with nnz(L+U) rather than m^2.
// Day-ahead fleet problems with ~10^4 rows and ~2*10^4 columns solve in
// seconds to a minute; far larger problems are outside the intended range.

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "v2g/lp_problem.hpp"

namespace v2g {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
    case LpStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

struct SimplexOptions {
  double pivot_tolerance = 1e-9;
  double feasibility_tolerance = 1e-8;  // certification of the returned primal
  double primal_tolerance = 1e-9;       // bound slack used while pivoting
  double optimality_tolerance = 1e-9;   // reduced-cost threshold
  long max_iterations = 2'000'000;
  int refactor_interval = 100;
  int degenerate_threshold = 50;
};

struct LpSolution {
  LpStatus status = LpStatus::NumericalFailure;
  double objective = 0.0;
  std::vector<double> primal;        // one value per structural column
  std::vector<double> row_activity;  // A * primal
  std::vector<double> ray;           // improving direction when Unbounded
  double infeasibility = 0.0;        // phase-1 infeasibility sum when Infeasible
  long iterations = 0;
  long phase1_iterations = 0;
};

class SimplexSolver {
 public:
  explicit SimplexSolver(const LpProblem& lp, SimplexOptions opts = {})
      : lp_(lp), opts_(opts), m_(lp.num_rows()), n_(lp.num_cols()) {
    lp_.validate();
    build_columns();
  }

  LpSolution solve() {
    LpSolution sol;
    initial_basis();
    if (!refactor()) {
      slack_basis();
      if (!refactor()) return finish(sol, LpStatus::NumericalFailure);
    }
    compute_basics();

    long small_pivot_retries = 0;
    while (true) {
      if (sol.iterations >= opts_.max_iterations) return finish(sol, LpStatus::IterationLimit);
      if (static_cast<int>(etas_.size()) >= opts_.refactor_interval) {
        if (!recover()) return finish(sol, LpStatus::NumericalFailure);
      }

      const double infeasibility = build_phase_costs();
      const bool phase1 = infeasibility > 0.0;

      btran_costs();
      const auto [entering, dir] = price(phase1);
      if (entering < 0) {
        if (!etas_.empty()) {
          // Confirm on a fresh factorization before declaring termination.
          if (!recover()) return finish(sol, LpStatus::NumericalFailure);
          continue;
        }
        if (phase1) {
          sol.infeasibility = infeasibility;
          return finish(sol, LpStatus::Infeasible);
        }
        return finish(sol, LpStatus::Optimal);
      }

      load_column(entering, alpha_);
      ftran(alpha_);

      const auto step = ratio_test(entering, dir, phase1);
      if (step.unbounded) {
        if (phase1 || !etas_.empty()) {
          if (!recover()) return finish(sol, LpStatus::NumericalFailure);
          if (++small_pivot_retries > 5) return finish(sol, LpStatus::NumericalFailure);
          continue;
        }
        make_ray(sol, entering, dir);
        return finish(sol, LpStatus::Unbounded);
      }
      if (!step.flip && std::abs(alpha_[step.position]) < 1e-7 && !etas_.empty() &&
          small_pivot_retries < 5) {
        ++small_pivot_retries;
        if (!recover()) return finish(sol, LpStatus::NumericalFailure);
        continue;
      }
      small_pivot_retries = 0;

      apply_step(entering, dir, step);
      ++sol.iterations;
      if (phase1) ++sol.phase1_iterations;

      if (step.theta <= 1e-12) {
        if (++degenerate_run_ >= opts_.degenerate_threshold) bland_ = true;
      } else {
        degenerate_run_ = 0;
        bland_ = false;
      }
    }
  }

 private:
  enum class State : std::uint8_t { Basic, AtLower, AtUpper, AtZero };

  struct Eta {
    int position;
    double pivot;
    std::vector<int> index;
    std::vector<double> value;
  };

  struct Step {
    double theta = 0.0;
    int position = -1;
    bool to_upper = false;
    bool flip = false;
    bool unbounded = false;
  };

  void build_columns() {
    std::vector<int> count(n_ + 1, 0);
    for (const auto& e : lp_.entries) ++count[e.col + 1];
    for (int j = 0; j < n_; ++j) count[j + 1] += count[j];
    col_start_ = count;
    row_index_.resize(lp_.entries.size());
    value_.resize(lp_.entries.size());
    std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
    for (const auto& e : lp_.entries) {
      const int at = fill[e.col]++;
      row_index_[at] = e.row;
      value_[at] = e.value;
    }
    // merge duplicate (row, col) pairs
    std::vector<int> new_start(n_ + 1, 0);
    std::vector<int> rows;
    std::vector<double> vals;
    rows.reserve(row_index_.size());
    vals.reserve(value_.size());
    std::vector<std::pair<int, double>> tmp;
    for (int j = 0; j < n_; ++j) {
      tmp.clear();
      for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) tmp.emplace_back(row_index_[p], value_[p]);
      std::sort(tmp.begin(), tmp.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t t = 0; t < tmp.size(); ++t) {
        if (!rows.empty() && static_cast<int>(rows.size()) > new_start[j] &&
            rows.back() == tmp[t].first)
          vals.back() += tmp[t].second;
        else {
          rows.push_back(tmp[t].first);
          vals.push_back(tmp[t].second);
        }
      }
      new_start[j + 1] = static_cast<int>(rows.size());
    }
    col_start_ = std::move(new_start);
    row_index_ = std::move(rows);
    value_ = std::move(vals);

    const int total = n_ + m_;
    lower_.resize(total);
    upper_.resize(total);
    cost_.assign(total, 0.0);
    for (int j = 0; j < n_; ++j) {
      lower_[j] = lp_.col_lower[j];
      upper_[j] = lp_.col_upper[j];
      cost_[j] = lp_.objective[j];
    }
    for (int i = 0; i < m_; ++i) {
      lower_[n_ + i] = lp_.row_lower[i];
      upper_[n_ + i] = lp_.row_upper[i];
    }
    x_.assign(total, 0.0);
    state_.assign(total, State::AtLower);
    position_.assign(total, -1);
    head_.assign(m_, -1);
    phase_cost_.assign(m_, 0.0);
    y_.resize(m_);
    alpha_.resize(m_);
    work_.resize(m_);
  }

  void place_nonbasic(int j) {
    position_[j] = -1;
    if (lower_[j] > -kInf) {
      state_[j] = State::AtLower;
      x_[j] = lower_[j];
    } else if (upper_[j] < kInf) {
      state_[j] = State::AtUpper;
      x_[j] = upper_[j];
    } else {
      state_[j] = State::AtZero;
      x_[j] = 0.0;
    }
  }

  void slack_basis() {
    for (int j = 0; j < n_; ++j) place_nonbasic(j);
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      position_[n_ + i] = i;
      state_[n_ + i] = State::Basic;
    }
  }

  void initial_basis() {
    slack_basis();
    if (lp_.hint_basic.size() != static_cast<std::size_t>(m_)) return;
    std::vector<char> used(n_, 0);
    for (int i = 0; i < m_; ++i) {
      const int j = lp_.hint_basic[i];
      if (j < 0 || j >= n_ || used[j]) continue;
      used[j] = 1;
      const int logical = n_ + i;
      head_[i] = j;
      position_[j] = i;
      state_[j] = State::Basic;
      place_nonbasic(logical);
    }
  }

  bool refactor() {
    etas_.clear();
    if (m_ == 0) return true;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(m_) * 3);
    for (int p = 0; p < m_; ++p) {
      const int j = head_[p];
      if (j < n_) {
        for (int t = col_start_[j]; t < col_start_[j + 1]; ++t)
          trips.emplace_back(row_index_[t], p, value_[t]);
      } else {
        trips.emplace_back(j - n_, p, -1.0);
      }
    }
    Eigen::SparseMatrix<double> basis(m_, m_);
    basis.setFromTriplets(trips.begin(), trips.end());
    basis.makeCompressed();
    lu_.analyzePattern(basis);
    lu_.factorize(basis);
    return lu_.info() == Eigen::Success;
  }

  // Refactorize and recompute basic values; falls back to the slack basis if
  // the current basis has become numerically singular.
  bool recover() {
    if (!refactor()) {
      slack_basis();
      if (!refactor()) return false;
    }
    compute_basics();
    return true;
  }

  void ftran(Eigen::VectorXd& v) const {
    if (m_ == 0) return;
    v = lu_.solve(v);
    for (const auto& eta : etas_) {
      const double w = v[eta.position] / eta.pivot;
      v[eta.position] = w;
      if (w == 0.0) continue;
      for (std::size_t t = 0; t < eta.index.size(); ++t) v[eta.index[t]] -= eta.value[t] * w;
    }
  }

  void btran(Eigen::VectorXd& v) const {
    if (m_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = v[it->position];
      for (std::size_t t = 0; t < it->index.size(); ++t) s -= it->value[t] * v[it->index[t]];
      v[it->position] = s / it->pivot;
    }
    v = lu_.transpose().solve(v);
  }

  void load_column(int j, Eigen::VectorXd& v) const {
    v.setZero();
    if (j < n_) {
      for (int t = col_start_[j]; t < col_start_[j + 1]; ++t) v[row_index_[t]] = value_[t];
    } else {
      v[j - n_] = -1.0;
    }
  }

  void compute_basics() {
    work_.setZero();
    for (int j = 0; j < n_; ++j) {
      if (state_[j] == State::Basic || x_[j] == 0.0) continue;
      for (int t = col_start_[j]; t < col_start_[j + 1]; ++t)
        work_[row_index_[t]] -= value_[t] * x_[j];
    }
    for (int i = 0; i < m_; ++i) {
      const int j = n_ + i;
      if (state_[j] != State::Basic) work_[i] += x_[j];
    }
    ftran(work_);
    for (int p = 0; p < m_; ++p) x_[head_[p]] = work_[p];
  }

  // Fills phase_cost_ for the basic positions; returns the infeasibility sum
  // (zero means phase 2 with the true costs).
  double build_phase_costs() {
    const double tol = opts_.primal_tolerance;
    double sum = 0.0;
    for (int p = 0; p < m_; ++p) {
      const int j = head_[p];
      if (x_[j] < lower_[j] - tol) {
        phase_cost_[p] = -1.0;
        sum += lower_[j] - x_[j];
      } else if (x_[j] > upper_[j] + tol) {
        phase_cost_[p] = 1.0;
        sum += x_[j] - upper_[j];
      } else {
        phase_cost_[p] = 0.0;
      }
    }
    if (sum == 0.0)
      for (int p = 0; p < m_; ++p) phase_cost_[p] = cost_[head_[p]];
    return sum;
  }

  void btran_costs() {
    for (int p = 0; p < m_; ++p) y_[p] = phase_cost_[p];
    btran(y_);
  }

  double reduced_cost(int j, bool phase1) const {
    if (j < n_) {
      double d = phase1 ? 0.0 : cost_[j];
      for (int t = col_start_[j]; t < col_start_[j + 1]; ++t) d -= y_[row_index_[t]] * value_[t];
      return d;
    }
    return y_[j - n_];
  }

  std::pair<int, int> price(bool phase1) const {
    const double tol = opts_.optimality_tolerance;
    int best = -1, best_dir = 0;
    double best_score = 0.0;
    const int total = n_ + m_;
    for (int j = 0; j < total; ++j) {
      const State s = state_[j];
      if (s == State::Basic || lower_[j] == upper_[j]) continue;
      const double d = reduced_cost(j, phase1);
      int dir = 0;
      if (s == State::AtLower && d < -tol)
        dir = 1;
      else if (s == State::AtUpper && d > tol)
        dir = -1;
      else if (s == State::AtZero && std::abs(d) > tol)
        dir = d < 0.0 ? 1 : -1;
      if (dir == 0) continue;
      if (bland_) return {j, dir};
      if (std::abs(d) > best_score) {
        best_score = std::abs(d);
        best = j;
        best_dir = dir;
      }
    }
    return {best, best_dir};
  }

  Step ratio_test(int q, int dir, bool phase1) const {
    const double tol = opts_.primal_tolerance;
    const double piv = opts_.pivot_tolerance;
    Step step;

    // Blocking bound for basic position p moving at `rate` per unit step, or
    // NaN when the variable does not block.
    auto blocking_bound = [&](int p, double rate, bool& to_upper) {
      const int j = head_[p];
      const double xj = x_[j];
      if (rate < 0.0) {
        if (phase1 && xj > upper_[j] + tol) {
          to_upper = true;
          return upper_[j];
        }
        if (xj >= lower_[j] - tol && lower_[j] > -kInf) {
          to_upper = false;
          return lower_[j];
        }
      } else {
        if (phase1 && xj < lower_[j] - tol) {
          to_upper = false;
          return lower_[j];
        }
        if (xj <= upper_[j] + tol && upper_[j] < kInf) {
          to_upper = true;
          return upper_[j];
        }
      }
      return std::numeric_limits<double>::quiet_NaN();
    };

    double flip = kInf;
    if (lower_[q] > -kInf && upper_[q] < kInf) flip = upper_[q] - lower_[q];

    if (bland_) {
      double best = kInf;
      int best_pos = -1, best_var = std::numeric_limits<int>::max();
      bool best_up = false;
      for (int p = 0; p < m_; ++p) {
        if (std::abs(alpha_[p]) <= piv) continue;
        const double rate = -dir * alpha_[p];
        bool up = false;
        const double bound = blocking_bound(p, rate, up);
        if (std::isnan(bound)) continue;
        const double ratio = std::max(0.0, (bound - x_[head_[p]]) / rate);
        const double slack = 1e-12 * (1.0 + best);
        if (ratio < best - slack || (ratio <= best + slack && head_[p] < best_var)) {
          best = std::min(best, ratio);
          best_pos = p;
          best_var = head_[p];
          best_up = up;
        }
      }
      if (best_pos < 0 && flip == kInf) {
        step.unbounded = true;
      } else if (flip <= best) {
        step.flip = true;
        step.theta = flip;
      } else {
        step.theta = best;
        step.position = best_pos;
        step.to_upper = best_up;
      }
      return step;
    }

    // Harris pass 1: largest step keeping every basic within tolerance.
    double relaxed = kInf;
    for (int p = 0; p < m_; ++p) {
      if (std::abs(alpha_[p]) <= piv) continue;
      const double rate = -dir * alpha_[p];
      bool up = false;
      const double bound = blocking_bound(p, rate, up);
      if (std::isnan(bound)) continue;
      const double r = (bound - x_[head_[p]] + (rate > 0 ? tol : -tol)) / rate;
      relaxed = std::min(relaxed, r);
    }
    if (relaxed == kInf && flip == kInf) {
      step.unbounded = true;
      return step;
    }
    if (flip <= relaxed) {
      step.flip = true;
      step.theta = flip;
      return step;
    }
    // Pass 2: among ratios within the relaxed step, the largest pivot.
    double best_pivot = 0.0;
    for (int p = 0; p < m_; ++p) {
      if (std::abs(alpha_[p]) <= piv) continue;
      const double rate = -dir * alpha_[p];
      bool up = false;
      const double bound = blocking_bound(p, rate, up);
      if (std::isnan(bound)) continue;
      const double ratio = (bound - x_[head_[p]]) / rate;
      if (ratio <= relaxed && std::abs(alpha_[p]) > best_pivot) {
        best_pivot = std::abs(alpha_[p]);
        step.position = p;
        step.to_upper = up;
        step.theta = std::max(0.0, ratio);
      }
    }
    return step;
  }

  void apply_step(int q, int dir, const Step& step) {
    const double theta = step.theta;
    if (theta != 0.0) {
      x_[q] += dir * theta;
      for (int p = 0; p < m_; ++p)
        if (alpha_[p] != 0.0) x_[head_[p]] -= dir * alpha_[p] * theta;
    }
    if (step.flip) {
      if (dir > 0) {
        state_[q] = State::AtUpper;
        x_[q] = upper_[q];
      } else {
        state_[q] = State::AtLower;
        x_[q] = lower_[q];
      }
      return;
    }
    const int r = step.position;
    const int leaving = head_[r];
    state_[leaving] = step.to_upper ? State::AtUpper : State::AtLower;
    x_[leaving] = step.to_upper ? upper_[leaving] : lower_[leaving];
    position_[leaving] = -1;

    head_[r] = q;
    position_[q] = r;
    state_[q] = State::Basic;

    Eta eta;
    eta.position = r;
    eta.pivot = alpha_[r];
    for (int p = 0; p < m_; ++p) {
      if (p == r || std::abs(alpha_[p]) < 1e-14) continue;
      eta.index.push_back(p);
      eta.value.push_back(alpha_[p]);
    }
    etas_.push_back(std::move(eta));
  }

  void make_ray(LpSolution& sol, int q, int dir) const {
    sol.ray.assign(n_, 0.0);
    if (q < n_) sol.ray[q] = dir;
    for (int p = 0; p < m_; ++p) {
      const int j = head_[p];
      if (j < n_) sol.ray[j] = -dir * alpha_[p];
    }
  }

  LpSolution& finish(LpSolution& sol, LpStatus status) {
    sol.status = status;
    sol.primal.assign(x_.begin(), x_.begin() + n_);
    if (status == LpStatus::Optimal) {
      // Basic values may sit inside the Harris tolerance outside a bound.
      for (int j = 0; j < n_; ++j) sol.primal[j] = std::clamp(sol.primal[j], lower_[j], upper_[j]);
      if (lp_.max_violation(sol.primal) > opts_.feasibility_tolerance)
        sol.status = LpStatus::NumericalFailure;
    }
    sol.row_activity = lp_.row_activity(sol.primal);
    sol.objective = lp_.objective_value(sol.primal);
    return sol;
  }

  const LpProblem& lp_;
  SimplexOptions opts_;
  int m_;
  int n_;

  std::vector<int> col_start_;
  std::vector<int> row_index_;
  std::vector<double> value_;

  std::vector<double> lower_, upper_, cost_, x_;
  std::vector<State> state_;
  std::vector<int> position_;
  std::vector<int> head_;
  std::vector<double> phase_cost_;

  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  Eigen::VectorXd y_, alpha_, work_;

  int degenerate_run_ = 0;
  bool bland_ = false;
};

inline LpSolution solve(const LpProblem& lp, const SimplexOptions& opts = {}) {
  return SimplexSolver(lp, opts).solve();
}

}  // namespace v2g
