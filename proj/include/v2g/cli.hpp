#pragma once

// Command-line front end.
//
//   v2g plan      --fleet F --prices P --uncertainty U [--out DIR]
//   v2g analyze   --fleet F --prices P --uncertainty U [--vehicle I]
//   v2g simulate  --fleet F --prices P --uncertainty U --seed S [--plan FILE]
//   v2g sweep     --fleet F --prices P --uncertainty U --param NAME
//                 --from A --to B --steps N
//   v2g preset    --preset {no-service,downward,upward} [--out DIR]
//
// Exit codes: 0 success, 1 unexpected error, 2 parse or usage error
// (including invalid instance data), 3 infeasible robust problem,
// 4 violations found by simulate.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "v2g/case_study.hpp"
#include "v2g/closed_form.hpp"
#include "v2g/dayahead_lp.hpp"
#include "v2g/io.hpp"
#include "v2g/scenario_sim.hpp"

namespace v2g::cli {

enum ExitCode : int {
  kSuccess = 0,
  kError = 1,
  kUsage = 2,
  kInfeasible = 3,
  kViolations = 4,
};

struct RunConfig {
  std::string fleet_path;
  std::string prices_path;
  std::string uncertainty_path;
  std::string model;  // empty: as in the fleet file
  std::string out_dir = ".";
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  long n_scenarios = 10000;
  unsigned threads = 0;
  std::string plan_path;
  std::string mps_path;
  bool baseline = false;
  bool free_sign_dam = false;
  int vehicle = 0;
  std::string aggregation = "window";
  std::string param;
  double from = 0.0;
  double to = 0.0;
  int steps = 0;
  bool with_plan = false;
  std::string preset;
  bool csv_prices = false;
};

struct Instance {
  FleetSpec fleet;
  PriceSeries prices;
  UncertaintyModel uncertainty;
};

inline Instance load_instance(const RunConfig& cfg) {
  Instance in;
  const auto ff = load_fleet(cfg.fleet_path);
  in.fleet = ff.fleet;
  in.prices = load_prices(cfg.prices_path, ff.slot_duration_hours);
  in.uncertainty = load_uncertainty(cfg.uncertainty_path, in.fleet.horizon_slots);
  if (!cfg.model.empty()) in.fleet.business_model = parse_model(cfg.model);
  validate_instance(in.fleet, in.prices, in.uncertainty);
  return in;
}

inline PriceAggregation parse_aggregation(const std::string& s) {
  if (s == "window") return PriceAggregation::ConnectionWindow;
  if (s == "day") return PriceAggregation::FullDay;
  throw ValidationError("unknown aggregation '" + s + "' (expected window or day)");
}

inline std::string out_file(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

struct LegEnergy {
  double dam = 0.0, downward = 0.0, upward = 0.0;
};

inline LegEnergy leg_energy(const Plan& plan, double tau) {
  LegEnergy e;
  for (std::size_t k = 0; k < plan.slots(); ++k) {
    e.dam += tau * plan.p_dam.slot_sum(k);
    e.downward += tau * plan.s_plus.slot_sum(k);
    e.upward += tau * plan.s_minus.slot_sum(k);
  }
  return e;
}

inline int cmd_plan(const RunConfig& cfg, std::ostream& out) {
  const auto in = load_instance(cfg);
  BuildOptions opts;
  opts.allow_services = !cfg.baseline;
  opts.free_sign_dam = cfg.free_sign_dam;
  if (!cfg.mps_path.empty()) {
    const auto d = build_lp(in.fleet, in.prices, in.uncertainty, opts);
    std::ofstream mps(cfg.mps_path);
    if (!mps) throw std::runtime_error("cannot write " + cfg.mps_path);
    write_mps(d.lp, mps);
  }
  const auto res = solve_plan(in.fleet, in.prices, in.uncertainty, opts);
  const auto legs = leg_energy(res.plan, in.prices.slot_duration_hours);

  json j = to_json(res.plan);
  j["business_model"] = to_string(in.fleet.business_model);
  j["expected_cost"] = res.expected_cost;
  j["energy_kwh"] = {{"dam", legs.dam}, {"downward_offer", legs.downward},
                     {"upward_offer", legs.upward}};
  j["lp"] = {{"rows", res.rows}, {"columns", res.columns},
             {"iterations", res.solution.iterations}};
  const auto plan_file = out_file(cfg, "plan.json");
  io_detail::write_file(plan_file, j.dump(2) + "\n");
  const auto profile_file = out_file(cfg, "profile.csv");
  io_detail::write_file(profile_file, profile_csv(res.plan, in.uncertainty));

  out << "expected_cost " << res.expected_cost << "\n"
      << "dam_kwh " << legs.dam << "\n"
      << "downward_kwh " << legs.downward << "\n"
      << "upward_kwh " << legs.upward << "\n"
      << "wrote " << plan_file << ", " << profile_file << "\n";
  return kSuccess;
}

inline json analysis_json(const Instance& in, int vehicle, PriceAggregation agg) {
  if (vehicle < 0 || static_cast<std::size_t>(vehicle) >= in.fleet.size())
    throw ValidationError("--vehicle " + std::to_string(vehicle) + " out of range");
  const auto ss = reduce_to_single_slot(in.fleet, in.prices, in.uncertainty,
                                        static_cast<std::size_t>(vehicle), agg);
  const auto g = compute_gains(ss);
  const auto sol = solve_single_slot(ss);

  json counts = {{"no_service", 0}, {"downward", 0}, {"upward", 0}};
  for (std::size_t i = 0; i < in.fleet.size(); ++i) {
    const auto r = classify_region(
        compute_gains(reduce_to_single_slot(in.fleet, in.prices, in.uncertainty, i, agg)));
    counts[to_string(r)] = counts[to_string(r)].get<int>() + 1;
  }
  return {{"aggregation", agg == PriceAggregation::FullDay ? "day" : "window"},
          {"vehicle", vehicle},
          {"instance", to_json(ss)},
          {"gains", to_json(g)},
          {"region", to_string(classify_region(g))},
          {"closed_form", to_json(sol)},
          {"fleet_regions", counts}};
}

inline int cmd_analyze(const RunConfig& cfg, std::ostream& out) {
  const auto in = load_instance(cfg);
  const json j = analysis_json(in, cfg.vehicle, parse_aggregation(cfg.aggregation));
  const auto file = out_file(cfg, "analysis.json");
  io_detail::write_file(file, j.dump(2) + "\n");
  const auto& g = j["gains"];
  out << "g0 " << g["g0"].get<double>() << "\n"
      << "g_plus " << g["g_plus"].get<double>() << "\n"
      << "g_minus " << g["g_minus"].get<double>() << "\n"
      << "g0_plus " << g["g0_plus"].get<double>() << "\n"
      << "region " << j["region"].get<std::string>() << "\n"
      << "wrote " << file << "\n";
  return kSuccess;
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const auto in = load_instance(cfg);
  Plan plan;
  if (!cfg.plan_path.empty()) {
    plan = load_plan(cfg.plan_path);
  } else {
    BuildOptions opts;
    opts.free_sign_dam = cfg.free_sign_dam;
    plan = solve_plan(in.fleet, in.prices, in.uncertainty, opts).plan;
  }
  if (plan.slots() != in.fleet.slots() || plan.vehicles() != in.fleet.size())
    throw ParseError(cfg.plan_path, 0, "", "plan dimensions do not match the fleet");
  SimulationOptions so;
  so.threads = cfg.threads;
  if (cfg.tol) so.tolerance = {*cfg.tol, *cfg.tol};
  const auto rep = run_monte_carlo(plan, in.fleet, in.prices, in.uncertainty, cfg.n_scenarios,
                                   *cfg.seed, so);
  const auto file = out_file(cfg, "report.json");
  io_detail::write_file(file, to_json(rep).dump(2) + "\n");
  out << "scenarios " << rep.n_scenarios << " (+" << rep.envelope_scenarios << " envelope)\n"
      << "violations " << rep.total_violations() << "\n"
      << "cost_mean " << rep.cost_mean << "\n"
      << "cost_std " << rep.cost_std << "\n";
  if (rep.expected_cost_analytic) out << "expected_cost " << *rep.expected_cost_analytic << "\n";
  out << "wrote " << file << "\n";
  return rep.total_violations() > 0 ? kViolations : kSuccess;
}

inline const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> names = {"pi_plus",  "pi_minus",  "c_e_plus", "c_e_minus",
                                                 "c_s_plus", "c_s_minus", "c_v_plus", "c_v_minus"};
  return names;
}

/// The instance with one parameter set to `value` in every slot.
inline Instance with_parameter(Instance in, const std::string& param, double value) {
  auto set = [value](std::vector<double>& v) { std::fill(v.begin(), v.end(), value); };
  if (param == "pi_plus") set(in.uncertainty.pi_plus);
  else if (param == "pi_minus") set(in.uncertainty.pi_minus);
  else if (param == "c_e_plus") set(in.prices.c_e_plus);
  else if (param == "c_e_minus") set(in.prices.c_e_minus);
  else if (param == "c_s_plus") set(in.prices.c_s_plus);
  else if (param == "c_s_minus") set(in.prices.c_s_minus);
  else if (param == "c_v_plus") set(in.prices.c_v_plus);
  else if (param == "c_v_minus") set(in.prices.c_v_minus);
  else throw ValidationError("unknown sweep parameter '" + param + "'");
  return in;
}

inline std::vector<double> sweep_points(double from, double to, int steps) {
  std::vector<double> pts;
  if (steps < 0) throw ValidationError("--steps must be non-negative");
  for (int s = 0; s < steps; ++s)
    pts.push_back(steps == 1 ? from : from + (to - from) * s / (steps - 1));
  return pts;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const auto base = load_instance(cfg);
  const auto agg = parse_aggregation(cfg.aggregation);
  const auto pts = sweep_points(cfg.from, cfg.to, cfg.steps);
  if (cfg.vehicle < 0 || static_cast<std::size_t>(cfg.vehicle) >= base.fleet.size())
    throw ValidationError("--vehicle " + std::to_string(cfg.vehicle) + " out of range");

  // Every point is validated before anything is computed.
  std::vector<Instance> instances;
  for (double v : pts) {
    auto in = with_parameter(base, cfg.param, v);
    try {
      validate_instance(in.fleet, in.prices, in.uncertainty);
    } catch (const ValidationError& e) {
      std::ostringstream os;
      os << "sweep point " << cfg.param << "=" << v << " is invalid: " << e.what();
      throw ValidationError(os.str());
    }
    instances.push_back(std::move(in));
  }

  std::ostringstream csv;
  csv << std::setprecision(12);
  csv << "param,value,g0,g_plus,g_minus,g0_plus,region,e_dam_kwh,e_plus_kwh,e_minus_kwh";
  if (cfg.with_plan) csv << ",lp_downward_kwh,lp_upward_kwh";
  csv << "\n";
  for (std::size_t p = 0; p < pts.size(); ++p) {
    const auto& in = instances[p];
    const auto ss = reduce_to_single_slot(in.fleet, in.prices, in.uncertainty,
                                          static_cast<std::size_t>(cfg.vehicle), agg);
    const auto g = compute_gains(ss);
    const auto sol = solve_single_slot(ss);
    csv << cfg.param << "," << pts[p] << "," << g.g0 << "," << g.g_plus << "," << g.g_minus
        << "," << g.g0_plus << "," << to_string(classify_region(g)) << "," << sol.e_dam << ","
        << sol.e_plus << "," << sol.e_minus;
    if (cfg.with_plan) {
      const auto res = solve_plan(in.fleet, in.prices, in.uncertainty);
      const auto legs = leg_energy(res.plan, in.prices.slot_duration_hours);
      csv << "," << legs.downward << "," << legs.upward;
    }
    csv << "\n";
  }
  const auto file = out_file(cfg, "sweep.csv");
  io_detail::write_file(file, csv.str());
  out << "points " << pts.size() << "\n" << "wrote " << file << "\n";
  return kSuccess;
}

inline int cmd_preset(const RunConfig& cfg, std::ostream& out) {
  const auto cs = make_case_study(parse_preset(cfg.preset),
                                  cfg.seed.value_or(case_study::kDefaultSeed));
  std::vector<std::string> files = {out_file(cfg, "fleet.json"), out_file(cfg, "prices.json"),
                                    out_file(cfg, "uncertainty.json")};
  io_detail::write_file(files[0], to_json(cs.fleet, cs.prices.slot_duration_hours).dump(2) + "\n");
  io_detail::write_file(files[1], to_json(cs.prices).dump(2) + "\n");
  io_detail::write_file(files[2], to_json(cs.uncertainty).dump(2) + "\n");
  if (cfg.csv_prices) {
    files.push_back(out_file(cfg, "prices.csv"));
    io_detail::write_file(files.back(), prices_to_csv(cs.prices));
  }
  for (const auto& f : files) out << "wrote " << f << "\n";
  return kSuccess;
}

/// Runs one command line (arguments without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Day-ahead planning and profitability analysis for an EV aggregator", "v2g"};
  app.require_subcommand(1);

  auto add_instance = [&cfg](CLI::App* sub) {
    sub->add_option("--fleet", cfg.fleet_path, "fleet JSON file")->required();
    sub->add_option("--prices", cfg.prices_path, "price JSON or CSV file")->required();
    sub->add_option("--uncertainty", cfg.uncertainty_path, "uncertainty JSON file")->required();
    sub->add_option("--model", cfg.model, "override the business model")
        ->check(CLI::IsMember({"fc", "pc"}));
    sub->add_option("--out", cfg.out_dir, "output directory");
  };

  auto* plan = app.add_subcommand("plan", "solve the robust day-ahead program");
  add_instance(plan);
  plan->add_flag("--baseline", cfg.baseline, "do not offer services");
  plan->add_flag("--free-sign-dam", cfg.free_sign_dam, "allow selling on the day-ahead market");
  plan->add_option("--mps", cfg.mps_path, "also write the LP in fixed MPS format");

  auto* analyze = app.add_subcommand("analyze", "marginal gains and profitability region");
  add_instance(analyze);
  analyze->add_option("--vehicle", cfg.vehicle, "representative vehicle index");
  analyze->add_option("--aggregation", cfg.aggregation, "price averaging: window or day")
      ->check(CLI::IsMember({"window", "day"}));

  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo check of a plan");
  add_instance(simulate);
  simulate->add_option("--plan", cfg.plan_path, "plan JSON (solved in-run when omitted)");
  auto* seed_opt = simulate->add_option("--seed", seed, "random seed")->required();
  simulate->add_option("--n-scenarios", cfg.n_scenarios, "number of sampled scenarios")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--tol", cfg.tol, "feasibility tolerance (kWh and kW)")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--threads", cfg.threads, "worker threads (0: all cores)");
  simulate->add_flag("--free-sign-dam", cfg.free_sign_dam, "when solving in-run");

  auto* sweep = app.add_subcommand("sweep", "region map over one parameter");
  add_instance(sweep);
  sweep->add_option("--param", cfg.param, "parameter set uniformly in every slot")
      ->required()
      ->check(CLI::IsMember(sweep_parameters()));
  sweep->add_option("--from", cfg.from, "first value")->required();
  sweep->add_option("--to", cfg.to, "last value")->required();
  sweep->add_option("--steps", cfg.steps, "number of points (0: empty table)")->required();
  sweep->add_option("--vehicle", cfg.vehicle, "representative vehicle index");
  sweep->add_option("--aggregation", cfg.aggregation, "price averaging: window or day")
      ->check(CLI::IsMember({"window", "day"}));
  sweep->add_flag("--with-plan", cfg.with_plan, "also solve the fleet LP at every point");

  auto* preset = app.add_subcommand("preset", "write the reference case-study files");
  preset->add_option("--preset", cfg.preset, "no-service, downward or upward")
      ->required()
      ->check(CLI::IsMember({"no-service", "downward", "upward"}));
  preset->add_option("--out", cfg.out_dir, "output directory");
  auto* preset_seed = preset->add_option("--seed", seed, "seed for vehicle capacities");
  preset->add_flag("--csv-prices", cfg.csv_prices, "also write prices.csv");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  if (seed_opt->count() > 0 || preset_seed->count() > 0) cfg.seed = seed;

  try {
    if (*plan) return cmd_plan(cfg, out);
    if (*analyze) return cmd_analyze(cfg, out);
    if (*simulate) return cmd_simulate(cfg, out);
    if (*sweep) return cmd_sweep(cfg, out);
    if (*preset) return cmd_preset(cfg, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
  return kUsage;
}

inline int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace v2g::cli
