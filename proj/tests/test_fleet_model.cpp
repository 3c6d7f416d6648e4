#include <gtest/gtest.h>

#include <random>

#include "oracles/random_instances.hpp"
#include "v2g/case_study.hpp"
#include "v2g/fleet_model.hpp"
#include "v2g/scenario_sim.hpp"

namespace v2g {
namespace {

VehicleSpec unit_vehicle() {
  VehicleSpec v;
  v.alpha = 1.0;
  v.eta_plus = v.eta_minus = 0.97;
  v.p_max = 22.0;
  v.e_min = 0.0;
  v.e_max = 50.0;
  v.e_target = 30.0;
  return v;
}

struct OneVehicle {
  FleetSpec fleet;
  PriceSeries prices;
  Plan plan;
  Scenario scenario;
};

OneVehicle one_slot(double tau, double p_dam, double omega, BusinessModel model) {
  OneVehicle o;
  o.fleet.vehicles = {unit_vehicle()};
  o.fleet.p_max_grid = 100.0;
  o.fleet.horizon_slots = 1;
  o.fleet.business_model = model;
  o.prices = PriceSeries::constant(1, tau, 0.10, 0.06, 0.04, 0.25, 0.165, 0.18);
  o.plan = Plan(1, 1);
  o.plan.p_dam(0, 0) = p_dam;
  o.scenario = {{0}, {0}, {10.0}, {omega}};
  return o;
}

TEST(StepBattery, ZeroPowerKeepsEnergy) {
  EXPECT_EQ(step_battery(10.0, 0.0, unit_vehicle(), 0.25), 10.0);
}

TEST(StepBattery, ChargingAppliesEtaPlus) {
  EXPECT_NEAR(step_battery(10.0, 4.0, unit_vehicle(), 0.25), 10.0 + 0.25 * 0.97 * 4.0, 1e-12);
  EXPECT_NEAR(step_battery(10.0, 4.0, unit_vehicle(), 0.25), 10.97, 1e-12);
}

TEST(StepBattery, DischargingDividesByEtaMinus) {
  EXPECT_NEAR(step_battery(10.0, -4.0, unit_vehicle(), 0.25), 8.969072, 1e-6);
}

TEST(StepBattery, StrictlyIncreasingAndContinuousAtZero) {
  const auto v = unit_vehicle();
  double prev = step_battery(10.0, -22.0, v, 0.25);
  for (double p = -21.5; p <= 22.0; p += 0.5) {
    const double e = step_battery(10.0, p, v, 0.25);
    EXPECT_GT(e, prev);
    prev = e;
  }
  EXPECT_NEAR(step_battery(10.0, 1e-12, v, 0.25), step_battery(10.0, -1e-12, v, 0.25), 1e-12);
}

TEST(StepBattery, SelfDischarge) {
  auto v = unit_vehicle();
  v.alpha = 0.99;
  EXPECT_NEAR(step_battery(10.0, 0.0, v, 1.0), 9.9, 1e-12);
}

TEST(Realize, ZeroPlanIsFlat) {
  const auto cs = make_case_study(Preset::Downward);
  const Plan plan(cs.fleet.slots(), cs.fleet.size());
  const auto s = sample_scenario(cs.uncertainty, 3);
  const auto traj = realize(plan, s, cs.fleet, cs.prices);
  for (std::size_t i = 0; i < cs.fleet.size(); ++i)
    for (std::size_t k = 0; k <= cs.fleet.slots(); ++k) EXPECT_EQ(traj.energy(k, i), s.e0[i]);
}

TEST(Realize, UpwardCallCancelsPurchase) {
  auto o = one_slot(0.25, 4.0, -1.0, BusinessModel::PaidCharge);
  o.plan.s_minus(0, 0) = 4.0;
  const auto traj = realize(o.plan, o.scenario, o.fleet, o.prices);
  EXPECT_EQ(traj.power(0, 0), 0.0);
  EXPECT_EQ(traj.energy(1, 0), 10.0);
}

TEST(Realize, MatchesScalarRecurrenceUnderFullDownwardCall) {
  const auto cs = make_case_study(Preset::Downward);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Plan plan(cs.fleet.slots(), cs.fleet.size());
  for (std::size_t k = 32; k <= 63; ++k)
    for (std::size_t i = 0; i < cs.fleet.size(); ++i) {
      plan.p_dam(k, i) = 3.0 * u(rng);
      plan.s_plus(k, i) = 2.0 * u(rng);
      plan.s_minus(k, i) = 2.0 * u(rng);
    }
  auto s = sample_scenario(cs.uncertainty, 5);
  std::fill(s.omega.begin(), s.omega.end(), 1.0);
  const auto traj = realize(plan, s, cs.fleet, cs.prices);
  for (std::size_t i = 0; i < cs.fleet.size(); ++i) {
    const auto& v = cs.fleet.vehicles[i];
    double e = s.e0[i];
    for (int k = 0; k < cs.fleet.horizon_slots; ++k) {
      if (k >= s.arrival[i] && k <= s.departure[i]) {
        const double p = plan.p_dam(k, i) + plan.s_plus(k, i);
        e = e + 0.25 * (p >= 0 ? v.eta_plus * p : p / v.eta_minus);
      }
      ASSERT_NEAR(traj.energy(k + 1, i), e, 1e-12);
    }
  }
}

TEST(Realize, RejectsDimensionMismatch) {
  auto o = one_slot(1.0, 0.0, 0.0, BusinessModel::FreeCharge);
  o.plan = Plan(2, 1);
  EXPECT_THROW(realize(o.plan, o.scenario, o.fleet, o.prices), ValidationError);
}

TEST(CheckFeasibility, FeasibleTrajectoryIsClean) {
  const auto o = one_slot(0.25, 4.0, 0.0, BusinessModel::FreeCharge);
  auto fleet = o.fleet;
  fleet.vehicles[0].e_target = 10.0;
  const auto traj = realize(o.plan, o.scenario, fleet, o.prices);
  EXPECT_TRUE(check_feasibility(traj, fleet).empty());
}

TEST(CheckFeasibility, ReportsSocUpper) {
  auto o = one_slot(0.25, 0.0, 0.0, BusinessModel::FreeCharge);
  o.fleet.vehicles[0].e_target = 10.0;
  auto traj = realize(o.plan, o.scenario, o.fleet, o.prices);
  traj.energy(1, 0) = o.fleet.vehicles[0].e_max + 0.5;
  const auto vs = check_feasibility(traj, o.fleet);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].kind, ViolationKind::SocUpper);
  EXPECT_EQ(vs[0].vehicle, 0);
  EXPECT_EQ(vs[0].slot, 1);
  EXPECT_NEAR(vs[0].magnitude, 0.5, 1e-12);
}

TEST(CheckFeasibility, ReportsAggregate) {
  auto o = one_slot(0.25, 0.0, 0.0, BusinessModel::FreeCharge);
  o.fleet.vehicles[0].e_target = 10.0;
  auto traj = realize(o.plan, o.scenario, o.fleet, o.prices);
  traj.aggregate[0] = o.fleet.p_max_grid + 1.0;
  const auto vs = check_feasibility(traj, o.fleet);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].kind, ViolationKind::Aggregate);
  EXPECT_EQ(vs[0].vehicle, -1);
  EXPECT_NEAR(vs[0].magnitude, 1.0, 1e-12);
}

TEST(CheckFeasibility, ReportsRateDepartureAndAbsence) {
  auto o = one_slot(0.25, 30.0, 0.0, BusinessModel::FreeCharge);
  o.fleet.vehicles[0].e_target = 40.0;
  auto traj = realize(o.plan, o.scenario, o.fleet, o.prices);
  auto vs = check_feasibility(traj, o.fleet);
  ASSERT_EQ(vs.size(), 2u);
  EXPECT_EQ(vs[0].kind, ViolationKind::Rate);
  EXPECT_NEAR(vs[0].magnitude, 8.0, 1e-12);
  EXPECT_EQ(vs[1].kind, ViolationKind::Departure);

  o.scenario.arrival = {1};  // never connected
  o.scenario.departure = {1};
  traj = realize(o.plan, o.scenario, o.fleet, o.prices);
  vs = check_feasibility(traj, o.fleet);
  ASSERT_FALSE(vs.empty());
  EXPECT_EQ(vs[0].kind, ViolationKind::Disconnected);
}

TEST(CheckFeasibility, ToleranceIsRespected) {
  auto o = one_slot(0.25, 0.0, 0.0, BusinessModel::FreeCharge);
  o.fleet.vehicles[0].e_target = 10.0;
  auto traj = realize(o.plan, o.scenario, o.fleet, o.prices);
  traj.energy(1, 0) = o.fleet.vehicles[0].e_max + 5e-10;
  EXPECT_TRUE(check_feasibility(traj, o.fleet).empty());
  EXPECT_EQ(check_feasibility(traj, o.fleet, {1e-10, 1e-10}).size(), 1u);
}

TEST(RealizedCost, ZeroPlanCostsNothing) {
  const auto o = one_slot(1.0, 0.0, 1.0, BusinessModel::PaidCharge);
  const auto traj = realize(o.plan, o.scenario, o.fleet, o.prices);
  EXPECT_EQ(realized_cost(traj, o.plan, o.scenario, o.prices, BusinessModel::PaidCharge), 0.0);
}

TEST(RealizedCost, FreeChargeDamOnly) {
  const auto o = one_slot(1.0, 10.0, 0.0, BusinessModel::FreeCharge);
  const auto traj = realize(o.plan, o.scenario, o.fleet, o.prices);
  EXPECT_NEAR(realized_cost(traj, o.plan, o.scenario, o.prices, BusinessModel::FreeCharge), 1.0,
              1e-12);
}

TEST(RealizedCost, PaidChargeAddsVehicleTerm) {
  const auto o = one_slot(1.0, 10.0, 0.0, BusinessModel::PaidCharge);
  const auto traj = realize(o.plan, o.scenario, o.fleet, o.prices);
  EXPECT_NEAR(realized_cost(traj, o.plan, o.scenario, o.prices, BusinessModel::PaidCharge), -0.65,
              1e-12);
}

TEST(RealizedCost, FreeChargeIdleSignalDependsOnlyOnDam) {
  auto o = one_slot(1.0, 10.0, 0.0, BusinessModel::FreeCharge);
  const auto traj = realize(o.plan, o.scenario, o.fleet, o.prices);
  const double base = realized_cost(traj, o.plan, o.scenario, o.prices, BusinessModel::FreeCharge);
  o.plan.s_plus(0, 0) = 5.0;
  o.plan.s_minus(0, 0) = 3.0;
  const auto traj2 = realize(o.plan, o.scenario, o.fleet, o.prices);
  EXPECT_EQ(realized_cost(traj2, o.plan, o.scenario, o.prices, BusinessModel::FreeCharge), base);
}

TEST(RealizedCost, DamSellUsesNegativePrice) {
  auto o = one_slot(1.0, -5.0, 0.0, BusinessModel::FreeCharge);
  EXPECT_NEAR(dam_cost(o.plan, o.prices), -0.06 * 5.0, 1e-12);
}

TEST(Invariants, MonotoneEnvelope) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = oracle::random_fleet(rng, BusinessModel::PaidCharge, trial % 2 == 1);
    const std::size_t T = r.fleet.slots(), N = r.fleet.size();
    Plan plan(T, N);
    for (std::size_t k = 0; k < T; ++k)
      for (std::size_t i = 0; i < N; ++i) {
        const double pm = r.fleet.vehicles[i].p_max;
        plan.p_dam(k, i) = pm * (2.0 * u(rng) - 1.0);
        plan.s_plus(k, i) = pm * u(rng);
        plan.s_minus(k, i) = pm * u(rng);
      }
    Scenario s = sample_scenario(r.unc, 100 + trial);
    for (auto& w : s.omega) w = 2.0 * u(rng) - 1.0;  // continuous signal
    Scenario hi = s, lo = s;
    std::fill(hi.omega.begin(), hi.omega.end(), 1.0);
    std::fill(lo.omega.begin(), lo.omega.end(), -1.0);
    const auto t = realize(plan, s, r.fleet, r.prices);
    const auto th = realize(plan, hi, r.fleet, r.prices);
    const auto tl = realize(plan, lo, r.fleet, r.prices);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k <= T; ++k) {
        EXPECT_LE(t.energy(k, i), th.energy(k, i) + 1e-12);
        EXPECT_GE(t.energy(k, i), tl.energy(k, i) - 1e-12);
      }
  }
}

TEST(PriceValidation, RejectsExactlyOrderingViolations) {
  const auto ok = PriceSeries::constant(2, 0.25, 0.10, 0.06, 0.04, 0.25, 0.165, 0.18);
  EXPECT_TRUE(ok.check().empty());
  auto broken = [&](auto mutate) {
    auto p = ok;
    mutate(p);
    return !p.check().empty();
  };
  EXPECT_TRUE(broken([](PriceSeries& p) { p.c_v_minus[1] = 0.165; }));  // c_v- > c_v+
  EXPECT_TRUE(broken([](PriceSeries& p) { p.c_v_plus[0] = 0.10; }));    // c_v+ > c_e+
  EXPECT_TRUE(broken([](PriceSeries& p) { p.c_e_minus[0] = 0.10; }));   // c_e+ > c_e-
  EXPECT_TRUE(broken([](PriceSeries& p) { p.c_s_minus[1] = 0.10; }));   // c_s- > c_e+
  EXPECT_TRUE(broken([](PriceSeries& p) { p.c_s_plus[0] = 0.10; }));    // c_e+ > c_s+
  EXPECT_TRUE(broken([](PriceSeries& p) { p.c_s_plus[0] = 0.0; }));     // positive
  EXPECT_TRUE(broken([](PriceSeries& p) { p.c_e_minus.pop_back(); }));  // lengths
  EXPECT_FALSE(broken([](PriceSeries& p) { p.c_s_minus[0] = 0.17; }));  // c_s- vs c_v free
}

TEST(Validation, RejectsBadVehiclesAndWindows) {
  auto cs = make_case_study(Preset::NoService);
  auto fleet = cs.fleet;
  fleet.vehicles[3].e_target = fleet.vehicles[3].e_max + 1.0;
  EXPECT_THROW(fleet.validate(), ValidationError);

  auto unc = cs.uncertainty;
  unc.vehicles[0].arrival = {40, 70};
  EXPECT_THROW(validate_uncertainty(unc, cs.fleet), ValidationError);
  unc = cs.uncertainty;
  unc.pi_minus[5] = 0.5;
  EXPECT_THROW(validate_uncertainty(unc, cs.fleet), ValidationError);
  unc = cs.uncertainty;
  unc.vehicles[1].e0.hi = cs.fleet.vehicles[1].e_max + 1.0;
  EXPECT_THROW(validate_uncertainty(unc, cs.fleet), ValidationError);
}

}  // namespace
}  // namespace v2g
