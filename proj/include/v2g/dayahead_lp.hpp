#pragma once

// Day-ahead planning problem as a linear program.
//
// Decisions live only inside each vehicle's robust window [a_hi, d_lo], the
// slots during which the vehicle is connected in every realization. Feasibility
// is enforced for all arrivals, departures, initial energies and service
// signals through two envelope trajectories:
//
//   upper: starts at e0_hi, follows p + s+ (signal +1), must stay <= e_max
//   lower: starts at e0_lo decayed from the earliest arrival, follows p - s-
//          (signal -1), must stay >= e_min and end above the target
//
// The lower envelope needs the exact efficiency-weighted increment of a
// signed power. Each (k, i) gets a split  q - r = p - s-  with q, r >= 0, and
// the increment tau*(eta+ q - r/eta-) is a concave lower bound that is tight
// when q*r = 0. The same q is the positive part used by the vehicle-cost
// epigraph, so no separate auxiliary is needed for that branch.
//
// Column layout per (k, i) in the window: p, s+, s-, q, r, E (lower state at
// k+1), then U (upper state) when the upper envelope needs state rows.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "v2g/fleet_model.hpp"
#include "v2g/lp_problem.hpp"
#include "v2g/simplex.hpp"

namespace v2g {

struct BuildOptions {
  bool allow_services = true;
  // Allow p_dam < 0. Envelopes then use eta+ for the upper and the split for
  // the lower trajectory, which is conservative when p + s+ < 0.
  bool free_sign_dam = false;
  // Tightening of every energy bound, so that solver round-off never shows up
  // as a realized violation.
  double robust_margin = 1e-7;
};

struct RobustWindow {
  int start = 0;  // latest arrival
  int end = 0;    // earliest departure (last guaranteed connected slot)
  double e0_low = 0.0;
  double e0_high = 0.0;

  int length() const { return end - start + 1; }
};

class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, int vehicle, double required, double available)
      : std::runtime_error(what), vehicle(vehicle), required(required), available(available) {}

  int vehicle;  // -1 for fleet-wide certificates
  double required;
  double available;
};

inline std::vector<RobustWindow> robust_windows(const UncertaintyModel& unc) {
  std::vector<RobustWindow> w;
  w.reserve(unc.vehicles.size());
  for (const auto& u : unc.vehicles)
    w.push_back({u.arrival.hi, u.departure.lo, u.e0.lo, u.e0.hi});
  return w;
}

namespace detail {

// Lower-envelope bookkeeping shared by the builder and the feasibility check.
struct LowerEnvelope {
  double start_energy;  // energy at the window start, earliest arrival, e0_lo
  double final_bound;   // required energy after the last window slot
};

inline LowerEnvelope lower_envelope(const VehicleSpec& v, const VehicleUncertainty& u,
                                    double margin) {
  const double decay_in = std::pow(v.alpha, u.arrival.hi - u.arrival.lo);
  const double decay_out = std::pow(v.alpha, u.departure.hi - u.departure.lo);
  return {decay_in * u.e0.lo, std::max(v.e_target, v.e_min) / decay_out + margin};
}

}  // namespace detail

/// Construction-time infeasibility certificates: per vehicle, the energy the
/// lower envelope must gain against the most it can gain; fleet-wide, the
/// energy needed by all vehicles whose windows close by slot t against what
/// the grid limit lets through before t.
inline void check_structural_feasibility(const FleetSpec& fleet, const PriceSeries& prices,
                                         const UncertaintyModel& unc,
                                         const BuildOptions& opts = {}) {
  const double tau = prices.slot_duration_hours;
  const auto windows = robust_windows(unc);
  const std::size_t N = fleet.size();
  std::vector<double> need(N, 0.0);
  double eta_best = 0.0;

  for (std::size_t i = 0; i < N; ++i) {
    const auto& v = fleet.vehicles[i];
    const auto& w = windows[i];
    eta_best = std::max(eta_best, v.eta_plus);
    const auto env = detail::lower_envelope(v, unc.vehicles[i], opts.robust_margin);
    const int L = w.length();
    // Most the lower envelope can reach: full-rate charging, capped by what
    // the upper envelope leaves room for.
    double reach = env.start_energy;
    double upper = w.e0_high;
    for (int k = 0; k < L; ++k) {
      reach = v.alpha * reach + tau * v.eta_plus * v.p_max;
      upper = v.alpha * upper;
    }
    const double headroom = v.e_max - opts.robust_margin - upper;
    reach = std::min(reach, std::pow(v.alpha, L) * env.start_energy + std::max(0.0, headroom));
    if (reach < env.final_bound) {
      std::ostringstream os;
      os << "vehicle " << i << " cannot reach its departure energy inside slots [" << w.start
         << ", " << w.end << "]: requires " << env.final_bound << " kWh, at most " << reach
         << " kWh reachable";
      throw InfeasibleError(os.str(), static_cast<int>(i), env.final_bound, reach);
    }
    need[i] = std::max(0.0, env.final_bound - std::pow(v.alpha, L) * env.start_energy);
  }

  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return windows[a].end < windows[b].end; });
  double cumulative = 0.0;
  int first = std::numeric_limits<int>::max();
  for (std::size_t idx = 0; idx < N; ++idx) {
    const auto i = order[idx];
    cumulative += need[i];
    first = std::min(first, windows[i].start);
    const int t = windows[i].end;
    const double available = tau * eta_best * fleet.p_max_grid * (t - first + 1);
    if (cumulative > available * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "grid limit too tight: vehicles leaving by slot " << t << " need " << cumulative
         << " kWh, the grid delivers at most " << available << " kWh from slot " << first;
      throw InfeasibleError(os.str(), -1, cumulative, available);
    }
  }
}

/// The built program plus the maps from (slot, vehicle) to its columns.
struct DayAheadLp {
  LpProblem lp;
  std::vector<RobustWindow> windows;
  BuildOptions options;
  std::size_t slots = 0;
  std::size_t vehicles = 0;
  bool upper_state_rows = false;

  // T x N, -1 where the variable does not exist.
  std::vector<int> p, s_plus, s_minus, q, r, lower_state, upper_state;
  std::vector<int> veh_plus, veh_zero;  // epigraphs of branch +/0 (free-sign PC only)
  std::vector<int> dam_aux;             // per slot (free-sign only)

  std::size_t at(std::size_t k, std::size_t i) const { return k * vehicles + i; }
};

/// Sets objective coefficients for the expected cost and adds the auxiliaries
/// the positive parts need:
///   DAM       c_e- x + (c_e+ - c_e-) u,  u >= x, u >= 0   (x = tau * sum_i p)
///   services  tau (c_s+ pi+ s+ - c_s- pi- s-)
///   vehicle   per branch y: (c_v- - c_v+) [y]+ - c_v- y, weighted by pi
/// When p_dam >= 0 the DAM and branch +/0 positive parts are the identity
/// and no auxiliary is emitted.
inline void linearize_objective(DayAheadLp& d, const FleetSpec& fleet, const PriceSeries& prices,
                                const UncertaintyModel& unc) {
  auto& lp = d.lp;
  const double tau = prices.slot_duration_hours;
  const bool pc = fleet.business_model == BusinessModel::PaidCharge;
  const bool free_sign = d.options.free_sign_dam;
  d.dam_aux.assign(d.slots, -1);
  d.veh_plus.assign(d.slots * d.vehicles, -1);
  d.veh_zero.assign(d.slots * d.vehicles, -1);

  for (std::size_t k = 0; k < d.slots; ++k) {
    const double ce_p = prices.c_e_plus[k], ce_m = prices.c_e_minus[k];
    const double cs_p = prices.c_s_plus[k], cs_m = prices.c_s_minus[k];
    const double cv_p = prices.c_v_plus[k], cv_m = prices.c_v_minus[k];
    const double pi_p = unc.pi_plus[k], pi_m = unc.pi_minus[k];
    const double pi_0 = std::max(0.0, 1.0 - pi_p - pi_m);

    int dam_row = -1;
    for (std::size_t i = 0; i < d.vehicles; ++i) {
      const auto idx = d.at(k, i);
      const int p = d.p[idx];
      if (p < 0) continue;
      const int sp = d.s_plus[idx], sm = d.s_minus[idx], q = d.q[idx];
      const std::string tag = "[" + std::to_string(k) + "," + std::to_string(i) + "]";

      if (free_sign) {
        if (dam_row < 0) {
          d.dam_aux[k] = lp.add_column("dam_pos[" + std::to_string(k) + "]", ce_p - ce_m, 0.0, kInf);
          dam_row = lp.add_row("dam_pos[" + std::to_string(k) + "]", 0.0, kInf);
          lp.add_entry(dam_row, d.dam_aux[k], 1.0);
        }
        lp.add_entry(dam_row, p, -tau);
        lp.objective[p] += ce_m * tau;
      } else {
        lp.objective[p] += ce_p * tau;
      }

      lp.objective[sp] += tau * cs_p * pi_p;
      lp.objective[sm] -= tau * cs_m * pi_m;

      if (!pc) continue;
      // branch -1: y = tau (p - s-), [y]+ = tau q
      lp.objective[q] += pi_m * (cv_m - cv_p) * tau;
      lp.objective[p] -= pi_m * cv_m * tau;
      lp.objective[sm] += pi_m * cv_m * tau;
      if (!free_sign) {
        lp.objective[p] -= (pi_p + pi_0) * cv_p * tau;
        lp.objective[sp] -= pi_p * cv_p * tau;
        continue;
      }
      // branches +1 and 0 with explicit epigraphs w >= y/tau, w >= 0
      const int wp = lp.add_column("veh_pos_up" + tag, pi_p * (cv_m - cv_p) * tau, 0.0, kInf);
      const int rp = lp.add_row("veh_pos_up" + tag, 0.0, kInf);
      lp.add_entry(rp, wp, 1.0);
      lp.add_entry(rp, p, -1.0);
      lp.add_entry(rp, sp, -1.0);
      const int w0 = lp.add_column("veh_pos_idle" + tag, pi_0 * (cv_m - cv_p) * tau, 0.0, kInf);
      const int r0 = lp.add_row("veh_pos_idle" + tag, 0.0, kInf);
      lp.add_entry(r0, w0, 1.0);
      lp.add_entry(r0, p, -1.0);
      lp.objective[p] -= (pi_p + pi_0) * cv_m * tau;
      lp.objective[sp] -= pi_p * cv_m * tau;
      d.veh_plus[idx] = wp;
      d.veh_zero[idx] = w0;
    }
  }
}

inline DayAheadLp build_lp(const FleetSpec& fleet, const PriceSeries& prices,
                           const UncertaintyModel& unc, const BuildOptions& opts = {}) {
  validate_instance(fleet, prices, unc);
  check_structural_feasibility(fleet, prices, unc, opts);

  DayAheadLp d;
  d.options = opts;
  d.slots = fleet.slots();
  d.vehicles = fleet.size();
  d.windows = robust_windows(unc);
  const std::size_t cells = d.slots * d.vehicles;
  for (auto* v : {&d.p, &d.s_plus, &d.s_minus, &d.q, &d.r, &d.lower_state, &d.upper_state})
    v->assign(cells, -1);

  auto& lp = d.lp;
  const double tau = prices.slot_duration_hours;
  const double margin = opts.robust_margin;
  const double s_cap = opts.allow_services ? kInf : 0.0;
  d.upper_state_rows = opts.free_sign_dam ||
                       std::any_of(fleet.vehicles.begin(), fleet.vehicles.end(),
                                   [](const VehicleSpec& v) { return v.alpha != 1.0; });

  for (std::size_t i = 0; i < d.vehicles; ++i) {
    const auto& v = fleet.vehicles[i];
    const auto& w = d.windows[i];
    const auto env = detail::lower_envelope(v, unc.vehicles[i], margin);
    const double inv_eta_minus = 1.0 / v.eta_minus;
    int prev_lower = -1, prev_upper = -1, upper_sum_row = -1;

    if (!d.upper_state_rows)
      upper_sum_row = lp.add_row("soc_upper[" + std::to_string(i) + "]", -kInf,
                                 std::max(0.0, v.e_max - w.e0_high - margin));

    for (int k = w.start; k <= w.end; ++k) {
      const auto idx = d.at(static_cast<std::size_t>(k), i);
      const std::string tag = "[" + std::to_string(k) + "," + std::to_string(i) + "]";
      const double p_lo = opts.free_sign_dam ? -v.p_max : 0.0;
      const int p = lp.add_column("p_dam" + tag, 0.0, p_lo, v.p_max);
      // A service that is never called earns nothing; pin it to zero instead
      // of leaving the LP indifferent.
      const double sp_cap = unc.pi_plus[k] > 0.0 ? std::min(s_cap, 2.0 * v.p_max) : 0.0;
      const double sm_cap = unc.pi_minus[k] > 0.0 ? std::min(s_cap, 2.0 * v.p_max) : 0.0;
      const int sp = lp.add_column("s_plus" + tag, 0.0, 0.0, sp_cap);
      const int sm = lp.add_column("s_minus" + tag, 0.0, 0.0, sm_cap);
      const int q = lp.add_column("split_pos" + tag, 0.0, 0.0, v.p_max);
      const int r = lp.add_column("split_neg" + tag, 0.0, 0.0, v.p_max);
      const bool last = k == w.end;
      const double e_lo = last ? env.final_bound : v.e_min + margin;
      const int e = lp.add_column("soc_low" + tag, 0.0, e_lo, kInf);
      d.p[idx] = p;
      d.s_plus[idx] = sp;
      d.s_minus[idx] = sm;
      d.q[idx] = q;
      d.r[idx] = r;
      d.lower_state[idx] = e;

      // rate, signal +1 (signal -1 is r <= p_max through the split)
      const int rate = lp.add_row("rate" + tag, -kInf, v.p_max);
      lp.add_entry(rate, p, 1.0);
      lp.add_entry(rate, sp, 1.0);

      const int split = lp.add_row("split" + tag, 0.0, 0.0);
      lp.add_entry(split, q, 1.0);
      lp.add_entry(split, r, -1.0);
      lp.add_entry(split, p, -1.0);
      lp.add_entry(split, sm, 1.0);
      lp.hint_basic[split] = q;

      const double lower_rhs = prev_lower < 0 ? v.alpha * env.start_energy : 0.0;
      const int low = lp.add_row("soc_low" + tag, lower_rhs, lower_rhs);
      lp.add_entry(low, e, 1.0);
      if (prev_lower >= 0) lp.add_entry(low, prev_lower, -v.alpha);
      lp.add_entry(low, q, -tau * v.eta_plus);
      lp.add_entry(low, r, tau * inv_eta_minus);
      lp.hint_basic[low] = e;
      prev_lower = e;

      if (!d.upper_state_rows) {
        lp.add_entry(upper_sum_row, p, tau * v.eta_plus);
        lp.add_entry(upper_sum_row, sp, tau * v.eta_plus);
        continue;
      }
      const int u = lp.add_column("soc_up" + tag, 0.0, -kInf, v.e_max - margin);
      const double upper_rhs = prev_upper < 0 ? v.alpha * w.e0_high : 0.0;
      const int up = lp.add_row("soc_up" + tag, upper_rhs, upper_rhs);
      lp.add_entry(up, u, 1.0);
      if (prev_upper >= 0) lp.add_entry(up, prev_upper, -v.alpha);
      lp.add_entry(up, p, -tau * v.eta_plus);
      lp.add_entry(up, sp, -tau * v.eta_plus);
      lp.hint_basic[up] = u;
      d.upper_state[idx] = u;
      prev_upper = u;
    }
  }

  for (std::size_t k = 0; k < d.slots; ++k) {
    int up = -1, down = -1;
    for (std::size_t i = 0; i < d.vehicles; ++i) {
      const auto idx = d.at(k, i);
      if (d.p[idx] < 0) continue;
      if (up < 0) {
        up = lp.add_row("grid_up[" + std::to_string(k) + "]", -kInf, fleet.p_max_grid);
        down = lp.add_row("grid_down[" + std::to_string(k) + "]", -fleet.p_max_grid, kInf);
      }
      lp.add_entry(up, d.p[idx], 1.0);
      lp.add_entry(up, d.s_plus[idx], 1.0);
      lp.add_entry(down, d.p[idx], 1.0);
      lp.add_entry(down, d.s_minus[idx], -1.0);
    }
  }

  linearize_objective(d, fleet, prices, unc);
  lp.validate();
  return d;
}

/// Reads the plan out of a primal vector. Entries below 1e-10 kW in
/// magnitude are snapped to zero; the energy margin absorbs the change.
inline Plan extract_plan(const DayAheadLp& d, const std::vector<double>& x) {
  Plan plan(d.slots, d.vehicles);
  auto snap = [](double v) { return std::abs(v) < 1e-10 ? 0.0 : v; };
  for (std::size_t k = 0; k < d.slots; ++k)
    for (std::size_t i = 0; i < d.vehicles; ++i) {
      const auto idx = d.at(k, i);
      if (d.p[idx] < 0) continue;
      plan.p_dam(k, i) = snap(x[d.p[idx]]);
      plan.s_plus(k, i) = std::max(0.0, snap(x[d.s_plus[idx]]));
      plan.s_minus(k, i) = std::max(0.0, snap(x[d.s_minus[idx]]));
    }
  return plan;
}

/// Full LP point for a plan, with every auxiliary at the value the plan
/// implies (positive parts, envelope states). Plan entries outside the robust
/// windows are ignored.
inline std::vector<double> point_for_plan(const DayAheadLp& d, const Plan& plan,
                                          const FleetSpec& fleet, const PriceSeries& prices,
                                          const UncertaintyModel& unc) {
  if (plan.slots() != d.slots || plan.vehicles() != d.vehicles)
    detail::fail("plan dimensions do not match the program");
  const double tau = prices.slot_duration_hours;
  std::vector<double> x(static_cast<std::size_t>(d.lp.num_cols()), 0.0);
  for (std::size_t i = 0; i < d.vehicles; ++i) {
    const auto& v = fleet.vehicles[i];
    const auto& w = d.windows[i];
    double lower = detail::lower_envelope(v, unc.vehicles[i], 0.0).start_energy;
    double upper = w.e0_high;
    for (int k = w.start; k <= w.end; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const auto idx = d.at(kk, i);
      const double p = plan.p_dam(kk, i), sp = plan.s_plus(kk, i), sm = plan.s_minus(kk, i);
      const double net = p - sm;
      x[d.p[idx]] = p;
      x[d.s_plus[idx]] = sp;
      x[d.s_minus[idx]] = sm;
      x[d.q[idx]] = positive_part(net);
      x[d.r[idx]] = negative_part(net);
      lower = v.alpha * lower + tau * (v.eta_plus * positive_part(net) -
                                       negative_part(net) / v.eta_minus);
      x[d.lower_state[idx]] = lower;
      upper = v.alpha * upper + tau * v.eta_plus * (p + sp);
      if (d.upper_state[idx] >= 0) x[d.upper_state[idx]] = upper;
      if (d.veh_plus[idx] >= 0) x[d.veh_plus[idx]] = positive_part(p + sp);
      if (d.veh_zero[idx] >= 0) x[d.veh_zero[idx]] = positive_part(p);
    }
  }
  for (std::size_t k = 0; k < d.slots; ++k)
    if (d.dam_aux[k] >= 0) {
      double sum = 0.0;
      for (std::size_t i = 0; i < d.vehicles; ++i)
        if (d.p[d.at(k, i)] >= 0) sum += plan.p_dam(k, i);
      x[d.dam_aux[k]] = positive_part(tau * sum);
    }
  return x;
}

/// LP objective evaluated at the plan with auxiliaries fixed to their implied
/// values; equals the expected cost of the plan.
inline double objective_for_plan(const DayAheadLp& d, const Plan& plan, const FleetSpec& fleet,
                                 const PriceSeries& prices, const UncertaintyModel& unc) {
  return d.lp.objective_value(point_for_plan(d, plan, fleet, prices, unc));
}

struct PlanResult {
  Plan plan;
  double expected_cost = 0.0;
  LpSolution solution;
  int rows = 0;
  int columns = 0;
};

inline PlanResult solve_plan(const FleetSpec& fleet, const PriceSeries& prices,
                             const UncertaintyModel& unc, const BuildOptions& opts = {},
                             const SimplexOptions& solver = {}) {
  const DayAheadLp d = build_lp(fleet, prices, unc, opts);
  PlanResult res;
  res.rows = d.lp.num_rows();
  res.columns = d.lp.num_cols();
  res.solution = solve(d.lp, solver);
  switch (res.solution.status) {
    case LpStatus::Optimal: break;
    case LpStatus::Infeasible: {
      std::ostringstream os;
      os << "robust problem is infeasible: phase-1 infeasibility sum "
         << res.solution.infeasibility;
      throw InfeasibleError(os.str(), -1, res.solution.infeasibility, 0.0);
    }
    default:
      throw std::runtime_error(std::string("LP solve failed: ") + to_string(res.solution.status));
  }
  res.plan = extract_plan(d, res.solution.primal);
  res.expected_cost = objective_for_plan(d, res.plan, fleet, prices, unc);
  return res;
}

/// Services-off reference plan.
inline PlanResult solve_baseline(const FleetSpec& fleet, const PriceSeries& prices,
                                 const UncertaintyModel& unc, BuildOptions opts = {},
                                 const SimplexOptions& solver = {}) {
  opts.allow_services = false;
  return solve_plan(fleet, prices, unc, opts, solver);
}

}  // namespace v2g
