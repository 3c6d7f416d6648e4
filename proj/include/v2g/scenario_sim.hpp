#pragma once

// Monte-Carlo validation of a day-ahead plan: sample arrivals, departures,
// initial energies and service signals, realize the plan exactly, and collect
// constraint violations and cost statistics.
//
// Scenario j is drawn from its own generator, seeded with mix_seed(seed, j),
// so results do not depend on evaluation order or thread count. Sums are
// accumulated in fixed blocks of scenarios and the blocks are combined in
// index order, which keeps reports bit-identical across thread counts.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "v2g/dayahead_lp.hpp"
#include "v2g/fleet_model.hpp"
#include "v2g/random.hpp"

namespace v2g {

/// Arrival/departure uniform on their windows, e0 uniform on its interval,
/// signal per slot: +1 w.p. pi+, -1 w.p. pi-, else 0.
inline Scenario sample_scenario(const UncertaintyModel& unc, Rng& rng) {
  Scenario s;
  const std::size_t N = unc.vehicles.size(), T = unc.pi_plus.size();
  s.arrival.resize(N);
  s.departure.resize(N);
  s.e0.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto& u = unc.vehicles[i];
    s.arrival[i] = static_cast<int>(rng.uniform_int(u.arrival.lo, u.arrival.hi));
    s.departure[i] = static_cast<int>(rng.uniform_int(u.departure.lo, u.departure.hi));
    s.e0[i] = u.e0.lo == u.e0.hi ? u.e0.lo : rng.uniform(u.e0.lo, u.e0.hi);
  }
  s.omega.resize(T);
  for (std::size_t k = 0; k < T; ++k) {
    const double x = rng.uniform();
    s.omega[k] = x < unc.pi_plus[k] ? 1.0 : x < unc.pi_plus[k] + unc.pi_minus[k] ? -1.0 : 0.0;
  }
  return s;
}

inline Scenario sample_scenario(const UncertaintyModel& unc, std::uint64_t seed,
                                std::uint64_t index = 0) {
  Rng rng(seed, index);
  return sample_scenario(unc, rng);
}

/// The two extreme realizations: signal +1 from the highest initial energy
/// and latest arrival, and signal -1 from the lowest initial energy and
/// earliest arrival; both leave as late as possible.
inline std::array<Scenario, 2> envelope_scenarios(const UncertaintyModel& unc) {
  std::array<Scenario, 2> env;
  const std::size_t T = unc.pi_plus.size();
  for (int side = 0; side < 2; ++side) {
    auto& s = env[side];
    for (const auto& u : unc.vehicles) {
      s.arrival.push_back(side == 0 ? u.arrival.hi : u.arrival.lo);
      s.departure.push_back(u.departure.hi);
      s.e0.push_back(side == 0 ? u.e0.hi : u.e0.lo);
    }
    s.omega.assign(T, side == 0 ? 1.0 : -1.0);
  }
  return env;
}

struct ViolationStats {
  long count = 0;
  double worst = 0.0;
};

struct SampledViolation {
  long scenario;  // sample index, or -1 / -2 for the upper / lower envelope
  Violation violation;
};

struct SimulationReport {
  long n_scenarios = 0;
  long envelope_scenarios = 0;
  long violating_scenarios = 0;
  std::array<ViolationStats, kViolationKinds> violations{};
  std::vector<SampledViolation> examples;  // first few, in scenario order
  double cost_mean = 0.0;
  double cost_std = 0.0;  // sample standard deviation
  std::optional<double> expected_cost_analytic;
  // Per-slot mean realized aggregate power by market leg, kW.
  std::vector<double> mean_dam;
  std::vector<double> mean_downward;
  std::vector<double> mean_upward;

  long total_violations() const {
    long n = 0;
    for (const auto& v : violations) n += v.count;
    return n;
  }
};

struct SimulationOptions {
  Tolerance tolerance{};
  unsigned threads = 0;  // 0: hardware concurrency
  std::size_t max_examples = 20;
};

namespace detail {

inline constexpr std::size_t kBlock = 256;

struct BlockResult {
  double cost_sum = 0.0;
  double cost_sq = 0.0;  // sum of squared deviations from the block mean
  long count = 0;
  long violating = 0;
  std::array<ViolationStats, kViolationKinds> violations{};
  std::vector<SampledViolation> examples;
  std::vector<double> dam, down, up;
};

inline void record(BlockResult& b, long scenario, const std::vector<Violation>& vs,
                   std::size_t max_examples) {
  if (vs.empty()) return;
  ++b.violating;
  for (const auto& v : vs) {
    auto& st = b.violations[static_cast<std::size_t>(v.kind)];
    ++st.count;
    st.worst = std::max(st.worst, v.magnitude);
    if (b.examples.size() < max_examples) b.examples.push_back({scenario, v});
  }
}

}  // namespace detail

inline SimulationReport run_monte_carlo(const Plan& plan, const FleetSpec& fleet,
                                        const PriceSeries& prices, const UncertaintyModel& unc,
                                        long n, std::uint64_t seed,
                                        const SimulationOptions& opts = {}) {
  validate_instance(fleet, prices, unc);
  if (n < 1) detail::fail("n_scenarios must be at least 1");
  const std::size_t T = fleet.slots();
  {
    Scenario probe = envelope_scenarios(unc)[0];
    check_dimensions(plan, probe, fleet);
  }

  SimulationReport rep;
  rep.n_scenarios = n;
  rep.envelope_scenarios = 2;
  try {
    const auto lp = build_lp(fleet, prices, unc);
    rep.expected_cost_analytic = objective_for_plan(lp, plan, fleet, prices, unc);
  } catch (const InfeasibleError&) {
    // no robust program to evaluate against; the report still carries samples
  }

  const std::size_t blocks = (static_cast<std::size_t>(n) + detail::kBlock - 1) / detail::kBlock;
  std::vector<detail::BlockResult> results(blocks);

  auto run_block = [&](std::size_t b) {
    auto& r = results[b];
    r.dam.assign(T, 0.0);
    r.down.assign(T, 0.0);
    r.up.assign(T, 0.0);
    const long first = static_cast<long>(b * detail::kBlock);
    const long last = std::min<long>(n, first + static_cast<long>(detail::kBlock));
    std::vector<double> costs;
    costs.reserve(static_cast<std::size_t>(last - first));
    for (long j = first; j < last; ++j) {
      const Scenario s = sample_scenario(unc, seed, static_cast<std::uint64_t>(j));
      const Trajectory traj = realize(plan, s, fleet, prices);
      detail::record(r, j, check_feasibility(traj, fleet, opts.tolerance), opts.max_examples);
      costs.push_back(realized_cost(traj, plan, s, prices, fleet.business_model));
      for (std::size_t k = 0; k < T; ++k) {
        const double w = s.omega[k];
        for (std::size_t i = 0; i < fleet.size(); ++i) {
          const int kk = static_cast<int>(k);
          if (kk < s.arrival[i] || kk > s.departure[i]) continue;
          r.dam[k] += plan.p_dam(k, i);
          r.down[k] += positive_part(w) * plan.s_plus(k, i);
          r.up[k] += negative_part(w) * plan.s_minus(k, i);
        }
      }
    }
    r.count = last - first;
    for (double c : costs) r.cost_sum += c;
    const double mean = r.cost_sum / static_cast<double>(r.count);
    for (double c : costs) r.cost_sq += (c - mean) * (c - mean);
  };

  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, blocks));
  if (threads <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t b = t; b < blocks; b += threads) run_block(b);
      });
    for (auto& th : pool) th.join();
  }

  // Envelopes come first in the example list: they are the binding cases.
  detail::BlockResult env_result;
  const auto env = envelope_scenarios(unc);
  for (int side = 0; side < 2; ++side) {
    const Trajectory traj = realize(plan, env[side], fleet, prices);
    detail::record(env_result, -1 - side, check_feasibility(traj, fleet, opts.tolerance),
                   opts.max_examples);
  }

  // Pairwise (Chan) combination of block means and squared deviations.
  double mean = 0.0, m2 = 0.0;
  long count = 0;
  rep.mean_dam.assign(T, 0.0);
  rep.mean_downward.assign(T, 0.0);
  rep.mean_upward.assign(T, 0.0);
  auto merge_violations = [&rep, &opts](const detail::BlockResult& r) {
    rep.violating_scenarios += r.violating;
    for (std::size_t v = 0; v < kViolationKinds; ++v) {
      rep.violations[v].count += r.violations[v].count;
      rep.violations[v].worst = std::max(rep.violations[v].worst, r.violations[v].worst);
    }
    for (const auto& e : r.examples)
      if (rep.examples.size() < opts.max_examples) rep.examples.push_back(e);
  };
  merge_violations(env_result);
  for (const auto& r : results) {
    merge_violations(r);
    const double bmean = r.cost_sum / static_cast<double>(r.count);
    const long total = count + r.count;
    const double delta = bmean - mean;
    mean += delta * static_cast<double>(r.count) / static_cast<double>(total);
    m2 += r.cost_sq + delta * delta * static_cast<double>(count) * static_cast<double>(r.count) /
                          static_cast<double>(total);
    count = total;
    for (std::size_t k = 0; k < T; ++k) {
      rep.mean_dam[k] += r.dam[k];
      rep.mean_downward[k] += r.down[k];
      rep.mean_upward[k] += r.up[k];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < T; ++k) {
    rep.mean_dam[k] *= inv_n;
    rep.mean_downward[k] *= inv_n;
    rep.mean_upward[k] *= inv_n;
  }
  rep.cost_mean = mean;
  rep.cost_std = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
  return rep;
}

}  // namespace v2g
