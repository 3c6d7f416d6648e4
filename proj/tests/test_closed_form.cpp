#include <gtest/gtest.h>

#include <random>

#include "oracles/random_instances.hpp"
#include "v2g/case_study.hpp"
#include "v2g/closed_form.hpp"

namespace v2g {
namespace {

SingleSlotInstance base_instance(BusinessModel model) {
  SingleSlotInstance ss;
  ss.delta_e_target = 20.0;
  ss.delta_e_max = 40.0;
  ss.c_e_plus = 0.10;
  ss.c_e_minus = 0.06;
  ss.c_s_plus = 0.04;
  ss.c_s_minus = 0.25;
  ss.c_v_plus = 0.165;
  ss.c_v_minus = 0.18;
  ss.e_plus = 0.6;
  ss.e_minus = 0.1;
  ss.business_model = model;
  return ss;
}

Gains gains(double g0_plus, double g_minus) {
  Gains g;
  g.g0_plus = g0_plus;
  g.g_minus = g_minus;
  return g;
}

TEST(Gains, ReferenceValues) {
  const auto g = compute_gains(base_instance(BusinessModel::PaidCharge));
  EXPECT_NEAR(g.g0, 0.065, 1e-12);
  EXPECT_NEAR(g.g_plus, 0.075, 1e-12);
  EXPECT_NEAR(g.g_minus, 0.0085, 1e-12);
  EXPECT_NEAR(g.g0_plus, 0.010, 1e-12);
}

TEST(Gains, SignsUnderPriceOrdering) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 500; ++t) {
    const auto g = compute_gains(oracle::random_single_slot(rng, BusinessModel::PaidCharge));
    EXPECT_GT(g.g0, 0.0);
    EXPECT_GE(g.g_plus, 0.0);
  }
}

TEST(ClassifyRegion, Quadrants) {
  EXPECT_EQ(classify_region(gains(-1.0, -1.0)), Region::NoService);
  EXPECT_EQ(classify_region(gains(0.010, 0.0085)), Region::Downward);
  EXPECT_EQ(classify_region(gains(0.004, 0.0085)), Region::Upward);
  EXPECT_EQ(classify_region(gains(-0.004, 0.0085)), Region::Upward);
}

TEST(ClassifyRegion, BoundariesFollowPrecedence) {
  EXPECT_EQ(classify_region(gains(0.0, 0.0)), Region::NoService);
  EXPECT_EQ(classify_region(gains(0.0, -1.0)), Region::NoService);
  EXPECT_EQ(classify_region(gains(-1.0, 0.0)), Region::NoService);
  EXPECT_EQ(classify_region(gains(0.5, 0.5)), Region::Downward);
  EXPECT_EQ(classify_region(gains(0.0, 0.5)), Region::Upward);
}

TEST(ClassifyRegion, TilesThePlane) {
  for (double a = -1.0; a <= 1.0; a += 0.05)
    for (double b = -1.0; b <= 1.0; b += 0.05) {
      const bool none = a <= 0 && b <= 0;
      const bool down = a > 0 && b <= a;
      const bool up = b > 0 && b > a;
      ASSERT_EQ(int(none) + int(down) + int(up), 1) << a << "," << b;
      const Region expected = none ? Region::NoService : down ? Region::Downward : Region::Upward;
      EXPECT_EQ(classify_region(gains(a, b)), expected);
    }
}

TEST(ClassifyRegion, ScaleInvariant) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0), lam(0.01, 100.0);
  for (int t = 0; t < 1000; ++t) {
    const double a = u(rng), b = u(rng), l = lam(rng);
    EXPECT_EQ(classify_region(gains(a, b)), classify_region(gains(l * a, l * b)));
  }
}

TEST(SolveFc, UpwardWhenServicePaysMoreThanEnergy) {
  auto ss = base_instance(BusinessModel::FreeCharge);
  ss.e_minus = 0.5;
  ss.e_plus = 0.5;
  const auto s = solve_fc(ss);
  EXPECT_EQ(s.region, Region::Upward);
  EXPECT_DOUBLE_EQ(s.e_dam, 40.0);
  EXPECT_DOUBLE_EQ(s.e_plus, 0.0);
  EXPECT_DOUBLE_EQ(s.e_minus, 20.0);
  EXPECT_NEAR(s.cost, 1.5, 1e-12);
  const auto bf = brute_force_single_slot(ss, 0.05);
  EXPECT_NEAR(bf.cost, s.cost, single_slot_lipschitz(ss) * 0.05);
}

TEST(SolveFc, NoServiceOtherwise) {
  const auto ss = base_instance(BusinessModel::FreeCharge);
  const auto s = solve_fc(ss);
  EXPECT_EQ(s.region, Region::NoService);
  EXPECT_DOUBLE_EQ(s.e_dam, 20.0);
  EXPECT_DOUBLE_EQ(s.e_minus, 0.0);
  EXPECT_NEAR(s.cost, 2.0, 1e-12);
  const auto bf = brute_force_single_slot(ss, 0.05);
  EXPECT_NEAR(bf.cost, s.cost, single_slot_lipschitz(ss) * 0.05);
  EXPECT_NEAR(bf.e_dam, 20.0, 0.05);
}

TEST(SolveFc, TieGoesToNoService) {
  auto ss = base_instance(BusinessModel::FreeCharge);
  ss.e_minus = 0.4;  // 0.25 * 0.4 == 0.10
  ss.c_s_minus = 0.25;
  ASSERT_DOUBLE_EQ(ss.c_s_minus * ss.e_minus, ss.c_e_plus);
  EXPECT_EQ(solve_fc(ss).region, Region::NoService);
}

TEST(SolveFc, NoFlexibilityMeansNoService) {
  auto ss = base_instance(BusinessModel::FreeCharge);
  ss.e_minus = 0.9;
  ss.e_plus = 0.1;
  ss.delta_e_max = ss.delta_e_target;
  const auto s = solve_fc(ss);
  EXPECT_EQ(s.region, Region::NoService);
  EXPECT_EQ(s.e_plus, 0.0);
  EXPECT_EQ(s.e_minus, 0.0);
  const auto bf = brute_force_single_slot(ss, 0.01);
  EXPECT_DOUBLE_EQ(bf.e_dam, ss.delta_e_target);
  EXPECT_EQ(bf.e_plus, 0.0);
  EXPECT_EQ(bf.e_minus, 0.0);
}

TEST(SolveFc, RejectsWrongModel) {
  EXPECT_THROW(solve_fc(base_instance(BusinessModel::PaidCharge)), ValidationError);
  EXPECT_THROW(solve_pc(base_instance(BusinessModel::FreeCharge)), ValidationError);
}

TEST(SolvePc, DownwardAtReferenceGains) {
  const auto ss = base_instance(BusinessModel::PaidCharge);
  const auto s = solve_pc(ss);
  EXPECT_EQ(s.region, Region::Downward);
  EXPECT_DOUBLE_EQ(s.e_dam, 20.0);
  EXPECT_DOUBLE_EQ(s.e_plus, 20.0);
  EXPECT_DOUBLE_EQ(s.e_minus, 0.0);
  const auto bf = brute_force_single_slot(ss, 0.05);
  EXPECT_NEAR(bf.cost, s.cost, single_slot_lipschitz(ss) * 0.05);
  EXPECT_NEAR(bf.e_plus, 20.0, 0.05);
}

TEST(SolvePc, UpwardWhenDownwardLosesToDam) {
  auto ss = base_instance(BusinessModel::PaidCharge);
  // g0_plus = -0.004 while g_minus stays at 0.0085
  ss.c_s_plus = ss.c_v_plus - (0.065 - 0.004) / 0.6;
  const auto g = compute_gains(ss);
  ASSERT_NEAR(g.g0_plus, -0.004, 1e-12);
  ASSERT_NEAR(g.g_minus, 0.0085, 1e-12);
  const auto s = solve_pc(ss);
  EXPECT_EQ(s.region, Region::Upward);
  EXPECT_DOUBLE_EQ(s.e_dam, 40.0);
  EXPECT_DOUBLE_EQ(s.e_plus, 0.0);
  EXPECT_DOUBLE_EQ(s.e_minus, 20.0);
  const auto bf = brute_force_single_slot(ss, 0.05);
  EXPECT_NEAR(bf.cost, s.cost, single_slot_lipschitz(ss) * 0.05);
  EXPECT_NEAR(bf.e_minus, 20.0, 0.05);
}

TEST(SolvePc, NoAcceptanceMeansNoService) {
  auto ss = base_instance(BusinessModel::PaidCharge);
  ss.e_plus = ss.e_minus = 0.0;
  const auto g = compute_gains(ss);
  EXPECT_EQ(g.g_plus, 0.0);
  EXPECT_EQ(g.g_minus, 0.0);
  EXPECT_LT(g.g0_plus, 0.0);
  const auto s = solve_pc(ss);
  EXPECT_EQ(s.region, Region::NoService);
  EXPECT_DOUBLE_EQ(s.e_dam, 40.0);
  EXPECT_NEAR(s.cost, (0.10 - 0.165) * 40.0, 1e-12);
}

TEST(SolvePc, CostsMatchLiteralExpectation) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 500; ++t) {
    const auto model = t % 2 ? BusinessModel::PaidCharge : BusinessModel::FreeCharge;
    const auto ss = oracle::random_single_slot(rng, model);
    const auto s = solve_single_slot(ss);
    EXPECT_NEAR(s.cost, single_slot_expected_cost(ss, s.e_dam, s.e_plus, s.e_minus), 1e-12);
    EXPECT_GE(s.e_dam - s.e_minus, ss.delta_e_target - 1e-12);
    EXPECT_LE(s.e_dam + s.e_plus, ss.delta_e_max + 1e-12);
    if (model == BusinessModel::FreeCharge) EXPECT_EQ(s.e_plus, 0.0);
  }
}

TEST(BruteForce, AgreesWithClosedFormOnCoarseGrid) {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 40; ++t) {
    const auto model = t % 2 ? BusinessModel::PaidCharge : BusinessModel::FreeCharge;
    const auto ss = oracle::random_single_slot(rng, model);
    const auto s = solve_single_slot(ss);
    const double step = 0.05;
    const auto bf = brute_force_single_slot(ss, step);
    EXPECT_LE(s.cost, bf.cost + 1e-12);
    EXPECT_LE(bf.cost, s.cost + single_slot_lipschitz(ss) * step);
  }
}

TEST(BruteForce, RejectsNonPositiveStep) {
  EXPECT_THROW(brute_force_single_slot(base_instance(BusinessModel::PaidCharge), 0.0),
               ValidationError);
}

TEST(Reduce, ConstantPricesAverageToThemselves) {
  auto cs = make_case_study(Preset::Downward);
  cs.prices = PriceSeries::constant(96, 0.25, 0.10, 0.06, 0.04, 0.25, 0.165, 0.18);
  const auto ss = reduce_to_single_slot(cs.fleet, cs.prices, cs.uncertainty, 0);
  EXPECT_NEAR(ss.c_e_plus, 0.10, 1e-12);
  EXPECT_NEAR(ss.c_s_minus, 0.25, 1e-12);
  EXPECT_NEAR(ss.c_v_minus, 0.18, 1e-12);
  EXPECT_NEAR(ss.e_plus, 0.6, 1e-12);
  EXPECT_NEAR(ss.e_minus, 0.1, 1e-12);
  const auto& v = cs.fleet.vehicles[0];
  EXPECT_DOUBLE_EQ(ss.delta_e_max, v.e_max - cs.uncertainty.vehicles[0].e0.lo);
  EXPECT_DOUBLE_EQ(ss.delta_e_target, v.e_target - cs.uncertainty.vehicles[0].e0.lo);
}

TEST(Reduce, CaseStudyGainsAtReferencePoint) {
  const auto cs = make_case_study(Preset::Downward);
  for (auto agg : {PriceAggregation::ConnectionWindow, PriceAggregation::FullDay}) {
    const auto g = compute_gains(reduce_to_single_slot(cs.fleet, cs.prices, cs.uncertainty, 0, agg));
    EXPECT_NEAR(g.g0, 0.065, 1e-12);
    EXPECT_NEAR(g.g_plus, 0.075, 1e-12);
    EXPECT_NEAR(g.g_minus, 0.0085, 1e-12);
    EXPECT_NEAR(g.g0_plus, 0.010, 1e-12);
  }
}

TEST(Reduce, WindowAverageUsesConnectionSlotsOnly) {
  auto cs = make_case_study(Preset::Downward);
  cs.prices.c_v_plus[0] = 1.0;  // outside every window
  cs.prices.c_v_minus[0] = 1.1;
  const auto w = reduce_to_single_slot(cs.fleet, cs.prices, cs.uncertainty, 0,
                                       PriceAggregation::ConnectionWindow);
  const auto d = reduce_to_single_slot(cs.fleet, cs.prices, cs.uncertainty, 0,
                                       PriceAggregation::FullDay);
  EXPECT_DOUBLE_EQ(w.c_v_plus, 0.165);
  EXPECT_NEAR(d.c_v_plus, (95 * 0.165 + 1.0) / 96.0, 1e-12);
}

TEST(Reduce, TargetEqualToInitialEnergyGivesZeroDelta) {
  auto cs = make_case_study(Preset::Downward);
  cs.uncertainty.vehicles[2].e0 = {cs.fleet.vehicles[2].e_target, cs.fleet.vehicles[2].e_target};
  const auto ss = reduce_to_single_slot(cs.fleet, cs.prices, cs.uncertainty, 2);
  EXPECT_EQ(ss.delta_e_target, 0.0);
}

}  // namespace
}  // namespace v2g
