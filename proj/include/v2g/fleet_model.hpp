#pragma once

// Domain types for an EV fleet participating in day-ahead and ancillary
// service markets, plus exact battery simulation, constraint checks and
// cost evaluation on realized trajectories.
//
// Units: energies in kWh, powers in kW, prices in currency/kWh, slot
// duration in hours. Slots are indexed 0..T-1; energy index k refers to the
// beginning of slot k, so a trajectory carries T+1 energy samples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace v2g {

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class BusinessModel { FreeCharge, PaidCharge };

inline const char* to_string(BusinessModel m) {
  return m == BusinessModel::FreeCharge ? "fc" : "pc";
}

inline double positive_part(double v) { return v > 0.0 ? v : 0.0; }
inline double negative_part(double v) { return v < 0.0 ? -v : 0.0; }

namespace detail {

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  throw ValidationError(os.str());
}

}  // namespace detail

/// Dense slot-by-vehicle matrix, row-major over slots.
class SlotMatrix {
 public:
  SlotMatrix() = default;
  SlotMatrix(std::size_t slots, std::size_t vehicles, double fill = 0.0)
      : slots_(slots), vehicles_(vehicles), data_(slots * vehicles, fill) {}

  double& operator()(std::size_t k, std::size_t i) { return data_[k * vehicles_ + i]; }
  double operator()(std::size_t k, std::size_t i) const { return data_[k * vehicles_ + i]; }

  std::size_t slots() const { return slots_; }
  std::size_t vehicles() const { return vehicles_; }
  bool same_shape(const SlotMatrix& o) const {
    return slots_ == o.slots_ && vehicles_ == o.vehicles_;
  }

  double slot_sum(std::size_t k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < vehicles_; ++i) s += (*this)(k, i);
    return s;
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  friend bool operator==(const SlotMatrix&, const SlotMatrix&) = default;

 private:
  std::size_t slots_ = 0;
  std::size_t vehicles_ = 0;
  std::vector<double> data_;
};

/// Per-slot unit prices. Fleet-wide; all sequences share the horizon length.
struct PriceSeries {
  std::vector<double> c_e_plus;   // day-ahead buy
  std::vector<double> c_e_minus;  // day-ahead sell
  std::vector<double> c_s_plus;   // downward service (energy absorbed)
  std::vector<double> c_s_minus;  // upward service (energy delivered)
  std::vector<double> c_v_plus;   // charged to vehicle owner
  std::vector<double> c_v_minus;  // paid to vehicle owner on discharge
  double slot_duration_hours = 0.25;

  std::size_t size() const { return c_e_plus.size(); }

  static PriceSeries constant(std::size_t slots, double tau, double e_plus, double e_minus,
                              double s_plus, double s_minus, double v_plus, double v_minus) {
    PriceSeries p;
    p.c_e_plus.assign(slots, e_plus);
    p.c_e_minus.assign(slots, e_minus);
    p.c_s_plus.assign(slots, s_plus);
    p.c_s_minus.assign(slots, s_minus);
    p.c_v_plus.assign(slots, v_plus);
    p.c_v_minus.assign(slots, v_minus);
    p.slot_duration_hours = tau;
    return p;
  }

  /// Empty string when valid, otherwise a description of the first violation.
  std::string check() const {
    const std::size_t n = size();
    if (n == 0) return "price series is empty";
    if (!(slot_duration_hours > 0.0) || !std::isfinite(slot_duration_hours))
      return "slot_duration_hours must be positive";
    for (const auto* v : {&c_e_minus, &c_s_plus, &c_s_minus, &c_v_plus, &c_v_minus})
      if (v->size() != n) return "price sequences differ in length";
    for (std::size_t k = 0; k < n; ++k) {
      std::ostringstream os;
      os << "slot " << k << ": ";
      for (double c : {c_e_plus[k], c_e_minus[k], c_s_plus[k], c_s_minus[k], c_v_plus[k],
                       c_v_minus[k]}) {
        if (!(c > 0.0) || !std::isfinite(c)) return os.str() + "prices must be strictly positive";
      }
      if (!(c_v_minus[k] > c_v_plus[k] && c_v_plus[k] > c_e_plus[k] &&
            c_e_plus[k] > c_e_minus[k]))
        return os.str() + "requires c_v_minus > c_v_plus > c_e_plus > c_e_minus";
      if (!(c_s_minus[k] > c_e_plus[k] && c_e_plus[k] > c_s_plus[k]))
        return os.str() + "requires c_s_minus > c_e_plus > c_s_plus";
    }
    return {};
  }

  void validate() const {
    if (auto msg = check(); !msg.empty()) throw ValidationError("invalid prices: " + msg);
  }
};

struct VehicleSpec {
  double alpha = 1.0;  // self-discharge factor per slot
  double eta_plus = 1.0;
  double eta_minus = 1.0;
  double p_max = 0.0;
  double e_min = 0.0;
  double e_max = 0.0;
  double e_target = 0.0;

  void validate(std::size_t index) const {
    auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
    if (!in_unit(alpha)) detail::fail("vehicle ", index, ": alpha must lie in (0,1]");
    if (!in_unit(eta_plus) || !in_unit(eta_minus))
      detail::fail("vehicle ", index, ": efficiencies must lie in (0,1]");
    if (!(p_max > 0.0)) detail::fail("vehicle ", index, ": p_max must be positive");
    if (!(e_min >= 0.0 && e_min < e_max))
      detail::fail("vehicle ", index, ": requires 0 <= e_min < e_max");
    if (!(e_target >= e_min && e_target <= e_max))
      detail::fail("vehicle ", index, ": e_target must lie in [e_min, e_max]");
  }
};

struct SlotWindow {
  int lo = 0;
  int hi = 0;
  bool contains(int k) const { return k >= lo && k <= hi; }
};

struct EnergyInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct VehicleUncertainty {
  SlotWindow arrival;    // first connected slot
  SlotWindow departure;  // last connected slot
  EnergyInterval e0;     // energy at arrival
};

struct UncertaintyModel {
  std::vector<VehicleUncertainty> vehicles;
  std::vector<double> pi_plus;   // P(omega_k = +1)
  std::vector<double> pi_minus;  // P(omega_k = -1)
};

struct FleetSpec {
  std::vector<VehicleSpec> vehicles;
  double p_max_grid = 0.0;
  int horizon_slots = 0;
  BusinessModel business_model = BusinessModel::PaidCharge;

  std::size_t size() const { return vehicles.size(); }
  std::size_t slots() const { return static_cast<std::size_t>(horizon_slots); }

  void validate() const {
    if (vehicles.empty()) detail::fail("fleet must contain at least one vehicle");
    if (horizon_slots < 1) detail::fail("horizon_slots must be at least 1");
    if (!(p_max_grid > 0.0)) detail::fail("p_max_grid must be positive");
    for (std::size_t i = 0; i < vehicles.size(); ++i) vehicles[i].validate(i);
  }
};

inline void validate_uncertainty(const UncertaintyModel& unc, const FleetSpec& fleet) {
  const int T = fleet.horizon_slots;
  if (unc.vehicles.size() != fleet.size())
    detail::fail("uncertainty model has ", unc.vehicles.size(), " vehicles, fleet has ",
                 fleet.size());
  if (unc.pi_plus.size() != fleet.slots() || unc.pi_minus.size() != fleet.slots())
    detail::fail("acceptance probabilities must have one entry per slot");
  for (std::size_t k = 0; k < fleet.slots(); ++k) {
    const double a = unc.pi_plus[k], b = unc.pi_minus[k];
    if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0))
      detail::fail("slot ", k, ": acceptance probabilities must lie in [0,1]");
    if (a + b > 1.0 + 1e-12) detail::fail("slot ", k, ": pi_plus + pi_minus exceeds 1");
  }
  for (std::size_t i = 0; i < unc.vehicles.size(); ++i) {
    const auto& u = unc.vehicles[i];
    const auto& v = fleet.vehicles[i];
    if (u.arrival.lo > u.arrival.hi || u.departure.lo > u.departure.hi)
      detail::fail("vehicle ", i, ": window bounds out of order");
    if (u.arrival.lo < 0 || u.departure.hi >= T)
      detail::fail("vehicle ", i, ": connection windows must lie inside the horizon");
    if (u.arrival.hi > u.departure.lo)
      detail::fail("vehicle ", i, ": latest arrival is after earliest departure");
    if (u.e0.lo > u.e0.hi) detail::fail("vehicle ", i, ": e0 interval out of order");
    if (u.e0.lo < v.e_min || u.e0.hi > v.e_max)
      detail::fail("vehicle ", i, ": e0 interval must lie inside [e_min, e_max]");
  }
}

inline void validate_instance(const FleetSpec& fleet, const PriceSeries& prices,
                              const UncertaintyModel& unc) {
  fleet.validate();
  prices.validate();
  if (prices.size() != fleet.slots())
    detail::fail("price series has ", prices.size(), " slots, horizon is ",
                 fleet.horizon_slots);
  validate_uncertainty(unc, fleet);
}

/// Day-ahead decisions: DAM power and offered service capacities per slot and vehicle.
struct Plan {
  SlotMatrix p_dam;
  SlotMatrix s_plus;   // downward capacity
  SlotMatrix s_minus;  // upward capacity

  Plan() = default;
  Plan(std::size_t slots, std::size_t vehicles)
      : p_dam(slots, vehicles), s_plus(slots, vehicles), s_minus(slots, vehicles) {}

  std::size_t slots() const { return p_dam.slots(); }
  std::size_t vehicles() const { return p_dam.vehicles(); }

  /// Power requested from vehicle i in slot k under service signal omega.
  double requested(std::size_t k, std::size_t i, double omega) const {
    return p_dam(k, i) + positive_part(omega) * s_plus(k, i) -
           negative_part(omega) * s_minus(k, i);
  }

  friend bool operator==(const Plan&, const Plan&) = default;
};

/// One realization of the uncertain quantities.
struct Scenario {
  std::vector<int> arrival;
  std::vector<int> departure;
  std::vector<double> e0;
  std::vector<double> omega;  // per slot, in [-1, 1]

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct Trajectory {
  std::vector<int> arrival;
  std::vector<int> departure;
  SlotMatrix energy;    // (T+1) x N, energy at the beginning of each slot
  SlotMatrix power;     // T x N, realized power (zero when disconnected)
  SlotMatrix unserved;  // T x N, power requested while the vehicle was absent
  std::vector<double> aggregate;  // T
};

/// One battery step: alpha*e + tau*eta(p)*p with eta = eta_plus for p >= 0
/// and 1/eta_minus for p < 0.
inline double step_battery(double e, double p, const VehicleSpec& spec, double tau) {
  const double eta = p >= 0.0 ? spec.eta_plus : 1.0 / spec.eta_minus;
  return spec.alpha * e + tau * eta * p;
}

inline void check_dimensions(const Plan& plan, const Scenario& scenario, const FleetSpec& fleet) {
  const std::size_t T = fleet.slots(), N = fleet.size();
  if (plan.slots() != T || plan.vehicles() != N || !plan.p_dam.same_shape(plan.s_plus) ||
      !plan.p_dam.same_shape(plan.s_minus))
    detail::fail("plan dimensions do not match the fleet (", T, " slots x ", N, " vehicles)");
  if (scenario.arrival.size() != N || scenario.departure.size() != N || scenario.e0.size() != N ||
      scenario.omega.size() != T)
    detail::fail("scenario dimensions do not match the fleet");
}

inline Trajectory realize(const Plan& plan, const Scenario& scenario, const FleetSpec& fleet,
                          const PriceSeries& prices) {
  check_dimensions(plan, scenario, fleet);
  const std::size_t T = fleet.slots(), N = fleet.size();
  const double tau = prices.slot_duration_hours;

  Trajectory traj;
  traj.arrival = scenario.arrival;
  traj.departure = scenario.departure;
  traj.energy = SlotMatrix(T + 1, N);
  traj.power = SlotMatrix(T, N);
  traj.unserved = SlotMatrix(T, N);
  traj.aggregate.assign(T, 0.0);

  for (std::size_t i = 0; i < N; ++i) {
    const auto& spec = fleet.vehicles[i];
    const int a = scenario.arrival[i], d = scenario.departure[i];
    double e = scenario.e0[i];
    for (std::size_t k = 0; k < T; ++k) {
      traj.energy(k, i) = e;
      const double req = plan.requested(k, i, scenario.omega[k]);
      const int kk = static_cast<int>(k);
      if (kk >= a && kk <= d) {
        traj.power(k, i) = req;
        e = step_battery(e, req, spec, tau);
      } else {
        traj.unserved(k, i) = req;
      }
    }
    traj.energy(T, i) = e;
  }
  for (std::size_t k = 0; k < T; ++k) traj.aggregate[k] = traj.power.slot_sum(k);
  return traj;
}

enum class ViolationKind { SocUpper, SocLower, Rate, Aggregate, Departure, Disconnected };
inline constexpr std::size_t kViolationKinds = 6;

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::SocUpper: return "soc_upper";
    case ViolationKind::SocLower: return "soc_lower";
    case ViolationKind::Rate: return "rate";
    case ViolationKind::Aggregate: return "aggregate";
    case ViolationKind::Departure: return "departure";
    case ViolationKind::Disconnected: return "disconnected";
  }
  return "unknown";
}

struct Violation {
  ViolationKind kind;
  int vehicle;  // -1 for fleet-wide constraints
  int slot;
  double magnitude;
};

struct Tolerance {
  double energy = 1e-9;  // kWh
  double power = 1e-9;   // kW
};

/// Constraint violations of a realized trajectory; empty when feasible.
/// Energy bounds are checked from arrival through the departure sample d+1.
inline std::vector<Violation> check_feasibility(const Trajectory& traj, const FleetSpec& fleet,
                                                Tolerance tol = {}) {
  std::vector<Violation> out;
  const std::size_t T = traj.power.slots(), N = traj.power.vehicles();
  for (std::size_t i = 0; i < N; ++i) {
    const auto& v = fleet.vehicles[i];
    const int vi = static_cast<int>(i);
    const int a = traj.arrival[i], d = traj.departure[i];
    for (int k = std::max(a, 0); k <= std::min(d + 1, static_cast<int>(T)); ++k) {
      const double e = traj.energy(k, i);
      if (e > v.e_max + tol.energy)
        out.push_back({ViolationKind::SocUpper, vi, k, e - v.e_max});
      if (e < v.e_min - tol.energy)
        out.push_back({ViolationKind::SocLower, vi, k, v.e_min - e});
    }
    for (std::size_t k = 0; k < T; ++k) {
      const double p = std::abs(traj.power(k, i));
      if (p > v.p_max + tol.power)
        out.push_back({ViolationKind::Rate, vi, static_cast<int>(k), p - v.p_max});
      const double u = std::abs(traj.unserved(k, i));
      if (u > tol.power) out.push_back({ViolationKind::Disconnected, vi, static_cast<int>(k), u});
    }
    const int dep = std::min(d + 1, static_cast<int>(T));
    const double e_dep = traj.energy(dep, i);
    if (e_dep < v.e_target - tol.energy)
      out.push_back({ViolationKind::Departure, vi, dep, v.e_target - e_dep});
  }
  for (std::size_t k = 0; k < T; ++k) {
    const double g = std::abs(traj.aggregate[k]);
    if (g > fleet.p_max_grid + tol.power)
      out.push_back({ViolationKind::Aggregate, -1, static_cast<int>(k), g - fleet.p_max_grid});
  }
  return out;
}

/// Day-ahead market cost of the planned DAM exchange (deterministic).
inline double dam_cost(const Plan& plan, const PriceSeries& prices) {
  const double tau = prices.slot_duration_hours;
  double c = 0.0;
  for (std::size_t k = 0; k < plan.slots(); ++k) {
    const double x = tau * plan.p_dam.slot_sum(k);
    c += prices.c_e_plus[k] * positive_part(x) - prices.c_e_minus[k] * negative_part(x);
  }
  return c;
}

/// Ancillary-service cost for a given service signal.
inline double asm_cost(const Plan& plan, const std::vector<double>& omega,
                       const PriceSeries& prices) {
  const double tau = prices.slot_duration_hours;
  double c = 0.0;
  for (std::size_t k = 0; k < plan.slots(); ++k) {
    c += prices.c_s_plus[k] * tau * positive_part(omega[k]) * plan.s_plus.slot_sum(k) -
         prices.c_s_minus[k] * tau * negative_part(omega[k]) * plan.s_minus.slot_sum(k);
  }
  return c;
}

/// Vehicle-owner settlement on realized power (paid-charge model only).
inline double vehicle_cost(const Trajectory& traj, const PriceSeries& prices) {
  const double tau = prices.slot_duration_hours;
  double c = 0.0;
  for (std::size_t k = 0; k < traj.power.slots(); ++k)
    for (std::size_t i = 0; i < traj.power.vehicles(); ++i) {
      const double y = tau * traj.power(k, i);
      c += prices.c_v_minus[k] * negative_part(y) - prices.c_v_plus[k] * positive_part(y);
    }
  return c;
}

inline double realized_cost(const Trajectory& traj, const Plan& plan, const Scenario& scenario,
                            const PriceSeries& prices, BusinessModel model) {
  double c = dam_cost(plan, prices) + asm_cost(plan, scenario.omega, prices);
  if (model == BusinessModel::PaidCharge) c += vehicle_cost(traj, prices);
  return c;
}

}  // namespace v2g
