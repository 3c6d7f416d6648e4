#pragma once

// Reference parking-lot instance: 100 vehicles over one day in 15-minute
// slots, arrivals 6:00-8:00, departures 16:00-20:00, and three synthetic
// price presets, one per profitability regime.
//
// The presets are synthetic (no market data): slot-wise shapes oscillate
// around fixed means with zero average both over the connection window
// (slots 24..79) and over the remaining slots, so day averages and
// connection-window averages coincide exactly:
//
//   c_e+ 0.10 +- 0.01   c_e- = c_e+ - 0.04   c_s+ 0.04 +- 0.004
//   c_s- 0.25 +- 0.01   vehicle prices constant
//
//   no_service  c_v+ 0.28,  c_v- 0.31,  pi+ 0.6, pi- 0.1
//   downward    c_v+ 0.165, c_v- 0.18,  pi+ 0.6, pi- 0.1
//   upward      c_v+ 0.165, c_v- 0.18,  pi+ 0.5, pi- 0.5

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include "v2g/fleet_model.hpp"
#include "v2g/random.hpp"

namespace v2g {

enum class Preset { NoService, Downward, Upward };

inline const char* to_string(Preset p) {
  switch (p) {
    case Preset::NoService: return "no-service";
    case Preset::Downward: return "downward";
    case Preset::Upward: return "upward";
  }
  return "unknown";
}

inline Preset parse_preset(const std::string& s) {
  if (s == "no-service" || s == "no_service" || s == "baseline") return Preset::NoService;
  if (s == "downward") return Preset::Downward;
  if (s == "upward") return Preset::Upward;
  throw ValidationError("unknown preset '" + s + "' (expected no-service, downward, upward)");
}

struct CaseStudy {
  FleetSpec fleet;
  PriceSeries prices;
  UncertaintyModel uncertainty;
};

namespace case_study {

inline constexpr int kSlots = 96;
inline constexpr double kTau = 0.25;
inline constexpr int kWindowFirst = 24;  // 6:00
inline constexpr int kWindowLast = 79;   // last slot before 20:00
inline constexpr std::uint64_t kDefaultSeed = 2018;

// Zero-mean oscillation: two full periods across the connection window and
// one across the remaining slots.
inline double shape(int k) {
  using std::numbers::pi;
  if (k >= kWindowFirst && k <= kWindowLast) {
    const int n = kWindowLast - kWindowFirst + 1;
    return std::sin(2.0 * pi * 2.0 * (k - kWindowFirst + 0.5) / n);
  }
  const int outside = kSlots - (kWindowLast - kWindowFirst + 1);
  const int j = k < kWindowFirst ? k : k - (kWindowLast - kWindowFirst + 1);
  return std::sin(2.0 * pi * (j + 0.5) / outside);
}

}  // namespace case_study

inline PriceSeries case_study_prices(Preset preset) {
  using namespace case_study;
  const bool cheap_vehicle = preset != Preset::NoService;
  PriceSeries p;
  p.slot_duration_hours = kTau;
  for (int k = 0; k < kSlots; ++k) {
    const double s = shape(k);
    const double ce = 0.10 + 0.01 * s;
    p.c_e_plus.push_back(ce);
    p.c_e_minus.push_back(ce - 0.04);
    p.c_s_plus.push_back(0.04 - 0.004 * s);
    p.c_s_minus.push_back(0.25 + 0.01 * s);
    p.c_v_plus.push_back(cheap_vehicle ? 0.165 : 0.28);
    p.c_v_minus.push_back(cheap_vehicle ? 0.18 : 0.31);
  }
  p.validate();
  return p;
}

/// Fleet and uncertainty with vehicle capacities drawn from `seed`.
inline CaseStudy make_case_study(Preset preset, std::uint64_t seed = case_study::kDefaultSeed) {
  using namespace case_study;
  CaseStudy cs;
  cs.fleet.horizon_slots = kSlots;
  cs.fleet.p_max_grid = 600.0;
  cs.fleet.business_model = BusinessModel::PaidCharge;
  cs.prices = case_study_prices(preset);

  Rng rng(seed);
  for (int i = 0; i < 100; ++i) {
    VehicleSpec v;
    v.alpha = 1.0;
    v.eta_plus = v.eta_minus = 0.97;
    v.p_max = 22.0;
    v.e_min = 0.0;
    v.e_max = rng.uniform(40.0, 70.0);
    v.e_target = 0.7 * v.e_max;
    cs.fleet.vehicles.push_back(v);

    VehicleUncertainty u;
    u.arrival = {24, 32};
    u.departure = {63, 79};
    u.e0 = {0.1 * v.e_max, 0.3 * v.e_max};
    cs.uncertainty.vehicles.push_back(u);
  }
  const bool balanced = preset == Preset::Upward;
  cs.uncertainty.pi_plus.assign(kSlots, balanced ? 0.5 : 0.6);
  cs.uncertainty.pi_minus.assign(kSlots, balanced ? 0.5 : 0.1);
  validate_instance(cs.fleet, cs.prices, cs.uncertainty);
  return cs;
}

}  // namespace v2g
