#pragma once

// Single-slot profitability analysis.
//
// A fleet instance is reduced to one vehicle and one time slot whose length
// covers the whole connection, so every quantity becomes an energy:
//
//   e_dam    energy bought day-ahead
//   e_plus   downward capacity offered (energy absorbed when called)
//   e_minus  upward capacity offered (energy withheld when called)
//
// subject to  delta_e_target + e_minus <= e_dam <= delta_e_max - e_plus,
// with all three non-negative. With E+ = E[[w]+] and E- = E[[w]-] the
// optimum is always one of three vertices (no service, full downward, full
// upward), selected by sign conditions on the marginal gains below.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "v2g/fleet_model.hpp"
#include "v2g/lp_problem.hpp"

namespace v2g {

enum class Region { NoService, Downward, Upward };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::NoService: return "no_service";
    case Region::Downward: return "downward";
    case Region::Upward: return "upward";
  }
  return "unknown";
}

struct SingleSlotInstance {
  double delta_e_target = 0.0;  // e_target - e0
  double delta_e_max = 0.0;     // e_max - e0
  double c_e_plus = 0.0;
  double c_e_minus = 0.0;
  double c_s_plus = 0.0;
  double c_s_minus = 0.0;
  double c_v_plus = 0.0;
  double c_v_minus = 0.0;
  double e_plus = 0.0;   // E[[w]+]
  double e_minus = 0.0;  // E[[w]-]
  BusinessModel business_model = BusinessModel::PaidCharge;

  /// Headroom the services can use: delta_e_max - delta_e_target.
  double flexibility() const { return delta_e_max - delta_e_target; }

  void validate() const {
    if (!(delta_e_target >= 0.0 && delta_e_target <= delta_e_max))
      detail::fail("single-slot instance requires 0 <= delta_e_target <= delta_e_max");
    if (!(e_plus >= 0.0 && e_plus <= 1.0 && e_minus >= 0.0 && e_minus <= 1.0))
      detail::fail("single-slot instance requires E+ and E- in [0,1]");
    PriceSeries p = PriceSeries::constant(1, 1.0, c_e_plus, c_e_minus, c_s_plus, c_s_minus,
                                          c_v_plus, c_v_minus);
    if (auto msg = p.check(); !msg.empty()) detail::fail("single-slot instance: ", msg);
  }
};

/// Marginal gains per kWh:
///   g0       buy on the DAM, sell to the vehicle
///   g_plus   buy as downward service, sell to the vehicle
///   g_minus  sell as upward service instead of to the vehicle
///   g0_plus  source from downward service instead of the DAM
struct Gains {
  double g0 = 0.0;
  double g_plus = 0.0;
  double g_minus = 0.0;
  double g0_plus = 0.0;
};

inline Gains compute_gains(const SingleSlotInstance& ss) {
  Gains g;
  g.g0 = ss.c_v_plus - ss.c_e_plus;
  g.g_plus = ss.e_plus * (ss.c_v_plus - ss.c_s_plus);
  g.g_minus = ss.e_minus * (ss.c_s_minus - ss.c_v_plus);
  g.g0_plus = g.g_plus - g.g0;
  return g;
}

/// Partition of the (g0_plus, g_minus) plane. Boundaries go to the region
/// with fewer market legs: NoService, then Downward, then Upward.
inline Region classify_region(const Gains& g) {
  if (g.g0_plus <= 0.0 && g.g_minus <= 0.0) return Region::NoService;
  if (g.g0_plus > 0.0 && g.g_minus <= g.g0_plus) return Region::Downward;
  return Region::Upward;
}

struct SingleSlotSolution {
  double e_dam = 0.0;
  double e_plus = 0.0;
  double e_minus = 0.0;
  double cost = 0.0;
  Region region = Region::NoService;
};

/// Free-charge model: upward service pays off iff c_e_plus < c_s_minus * E-;
/// downward service never does.
inline SingleSlotSolution solve_fc(const SingleSlotInstance& ss) {
  ss.validate();
  if (ss.business_model != BusinessModel::FreeCharge)
    detail::fail("solve_fc requires the free-charge business model");
  const double flex = ss.flexibility();
  SingleSlotSolution s;
  const double base = ss.c_e_plus * ss.delta_e_target;
  const double margin = ss.c_e_plus - ss.c_s_minus * ss.e_minus;
  if (margin < 0.0 && flex > 0.0) {
    s.e_dam = ss.delta_e_max;
    s.e_minus = flex;
    s.cost = base + margin * flex;
    s.region = Region::Upward;
  } else {
    s.e_dam = ss.delta_e_target;
    s.cost = base;
  }
  return s;
}

/// Paid-charge model: the baseline fills the battery from the DAM; the gains
/// decide whether the headroom is sourced downward or sold upward.
inline SingleSlotSolution solve_pc(const SingleSlotInstance& ss) {
  ss.validate();
  if (ss.business_model != BusinessModel::PaidCharge)
    detail::fail("solve_pc requires the paid-charge business model");
  const Gains g = compute_gains(ss);
  const double flex = ss.flexibility();
  const double base = (ss.c_e_plus - ss.c_v_plus) * ss.delta_e_max;
  SingleSlotSolution s;
  s.region = flex > 0.0 ? classify_region(g) : Region::NoService;
  switch (s.region) {
    case Region::NoService:
      s.e_dam = ss.delta_e_max;
      s.cost = base;
      break;
    case Region::Downward:
      s.e_dam = ss.delta_e_target;
      s.e_plus = flex;
      s.cost = base + (g.g0 - g.g_plus) * flex;
      break;
    case Region::Upward:
      s.e_dam = ss.delta_e_max;
      s.e_minus = flex;
      s.cost = base - g.g_minus * flex;
      break;
  }
  return s;
}

inline SingleSlotSolution solve_single_slot(const SingleSlotInstance& ss) {
  return ss.business_model == BusinessModel::FreeCharge ? solve_fc(ss) : solve_pc(ss);
}

/// Expected cost of a single-slot decision, evaluated literally: the signal
/// takes +1 with probability E+, -1 with probability E-, and 0 otherwise, and
/// each branch is settled with the positive/negative-part cost terms.
inline double single_slot_expected_cost(const SingleSlotInstance& ss, double e_dam, double e_plus,
                                        double e_minus) {
  double c = ss.c_e_plus * positive_part(e_dam) - ss.c_e_minus * negative_part(e_dam);
  c += ss.c_s_plus * ss.e_plus * e_plus - ss.c_s_minus * ss.e_minus * e_minus;
  if (ss.business_model == BusinessModel::PaidCharge) {
    const double probs[3] = {ss.e_plus, 1.0 - ss.e_plus - ss.e_minus, ss.e_minus};
    const double delivered[3] = {e_dam + e_plus, e_dam, e_dam - e_minus};
    for (int b = 0; b < 3; ++b)
      c += probs[b] * (ss.c_v_minus * negative_part(delivered[b]) -
                       ss.c_v_plus * positive_part(delivered[b]));
  }
  return c;
}

/// Lipschitz bound of the expected cost per kWh moved on each coordinate,
/// used to bound the grid-search gap: 3 * (largest price).
inline double single_slot_lipschitz(const SingleSlotInstance& ss) {
  return 3.0 * std::max({ss.c_e_plus, ss.c_e_minus, ss.c_s_plus, ss.c_s_minus, ss.c_v_plus,
                         ss.c_v_minus});
}

/// Exhaustive grid search over the feasible (e_dam, e_plus, e_minus) set.
/// Grid points are multiples of `grid_step` measured from the lower end of
/// each coordinate's range, plus the range's upper end.
inline SingleSlotSolution brute_force_single_slot(const SingleSlotInstance& ss,
                                                  double grid_step = 0.01) {
  ss.validate();
  if (!(grid_step > 0.0)) detail::fail("grid_step must be positive");
  const double flex = ss.flexibility();

  auto grid = [grid_step](double hi) {
    std::vector<double> pts;
    if (hi <= 0.0) return std::vector<double>{0.0};
    const auto steps = static_cast<std::size_t>(std::floor(hi / grid_step));
    for (std::size_t s = 0; s <= steps; ++s) pts.push_back(std::min(hi, s * grid_step));
    if (pts.back() < hi) pts.push_back(hi);
    return pts;
  };

  SingleSlotSolution best;
  best.cost = kInf;
  // v = e_dam - delta_e_target in [0, flex]; e_minus <= v; e_plus <= flex - v.
  for (double v : grid(flex)) {
    const double e_dam = ss.delta_e_target + v;
    const auto minus_pts = grid(v);
    const auto plus_pts = grid(flex - v);
    for (double em : minus_pts)
      for (double ep : plus_pts) {
        const double c = single_slot_expected_cost(ss, e_dam, ep, em);
        if (c < best.cost) {
          best.cost = c;
          best.e_dam = e_dam;
          best.e_plus = ep;
          best.e_minus = em;
        }
      }
  }
  best.region = best.e_plus > 0.0 ? Region::Downward
                : best.e_minus > 0.0 ? Region::Upward
                                     : Region::NoService;
  return best;
}

enum class PriceAggregation { ConnectionWindow, FullDay };

/// Builds the single-slot problem for one vehicle: prices and acceptance
/// probabilities averaged arithmetically (over the slots the vehicle can be
/// connected, or the whole horizon), energies measured from the low end of
/// the initial-energy interval.
inline SingleSlotInstance reduce_to_single_slot(
    const FleetSpec& fleet, const PriceSeries& prices, const UncertaintyModel& unc,
    std::size_t vehicle, PriceAggregation aggregation = PriceAggregation::ConnectionWindow) {
  validate_instance(fleet, prices, unc);
  if (vehicle >= fleet.size()) detail::fail("vehicle index ", vehicle, " out of range");
  const auto& v = fleet.vehicles[vehicle];
  const auto& u = unc.vehicles[vehicle];

  std::size_t first = 0, last = fleet.slots() - 1;
  if (aggregation == PriceAggregation::ConnectionWindow) {
    first = static_cast<std::size_t>(u.arrival.lo);
    last = static_cast<std::size_t>(u.departure.hi);
  }
  auto mean = [first, last](const std::vector<double>& s) {
    const double sum = std::accumulate(s.begin() + first, s.begin() + last + 1, 0.0);
    return sum / static_cast<double>(last - first + 1);
  };

  SingleSlotInstance ss;
  ss.delta_e_target = std::max(0.0, v.e_target - u.e0.lo);
  ss.delta_e_max = v.e_max - u.e0.lo;
  ss.c_e_plus = mean(prices.c_e_plus);
  ss.c_e_minus = mean(prices.c_e_minus);
  ss.c_s_plus = mean(prices.c_s_plus);
  ss.c_s_minus = mean(prices.c_s_minus);
  ss.c_v_plus = mean(prices.c_v_plus);
  ss.c_v_minus = mean(prices.c_v_minus);
  ss.e_plus = mean(unc.pi_plus);
  ss.e_minus = mean(unc.pi_minus);
  ss.business_model = fleet.business_model;
  return ss;
}

}  // namespace v2g
