#pragma once

// JSON and CSV serialization of instances, plans and reports.
//
// fleet.json
//   { "horizon_slots": 96, "p_max_grid": 600, "business_model": "pc",
//     "slot_duration_hours": 0.25,            // optional, used by CSV prices
//     "vehicles": [ { "alpha": 1, "eta_plus": 0.97, "eta_minus": 0.97,
//                     "p_max": 22, "e_min": 0, "e_max": 50, "e_target": 35 } ] }
//
// prices.json
//   { "slot_duration_hours": 0.25, "c_e_plus": [...], "c_e_minus": [...],
//     "c_s_plus": [...], "c_s_minus": [...], "c_v_plus": [...], "c_v_minus": [...] }
//
// prices.csv (slot duration taken from the fleet file)
//   slot,c_e_plus,c_e_minus,c_s_plus,c_s_minus,c_v_plus,c_v_minus
//
// uncertainty.json (pi_plus / pi_minus: array per slot, or one number for all)
//   { "pi_plus": [...], "pi_minus": [...],
//     "vehicles": [ { "arrival": [24, 32], "departure": [63, 79], "e0": [5, 15] } ] }
//
// plan.json: "p_dam", "s_plus", "s_minus" are slot-major arrays of arrays
// (one inner array of N vehicle values per slot), in kW.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2g/closed_form.hpp"
#include "v2g/fleet_model.hpp"
#include "v2g/scenario_sim.hpp"

namespace v2g {

using json = nlohmann::json;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, int line, const std::string& field, const std::string& msg)
      : std::runtime_error(format(file, line, field, msg)), file(file), line(line), field(field) {}

  std::string file;
  int line;  // 0 when unknown
  std::string field;

 private:
  static std::string format(const std::string& file, int line, const std::string& field,
                            const std::string& msg) {
    std::string s = file;
    if (line > 0) s += ":" + std::to_string(line);
    if (!field.empty()) s += ": field '" + field + "'";
    return s + ": " + msg;
  }
};

namespace io_detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "", "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline json parse_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ParseError(path, line, "", "malformed JSON");
  }
}

// Typed field access with path-qualified error messages.
class Reader {
 public:
  explicit Reader(std::string file) : file_(std::move(file)) {}

  const json& field(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(join(path, key), "missing");
    return *it;
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }

  int integer(const json& v, const std::string& path) const {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
  }

  double number(const json& obj, const std::string& key, const std::string& path) const {
    return number(field(obj, key, path), join(path, key));
  }

  std::vector<double> numbers(const json& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::pair<double, double> pair(const json& v, const std::string& path) const {
    if (!v.is_array() || v.size() != 2) fail(path, "expected a two-element array");
    return {number(v[0], path + "[0]"), number(v[1], path + "[1]")};
  }

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    throw ParseError(file_, 0, path, msg);
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::string file_;
};

inline BusinessModel parse_model(const std::string& s) {
  if (s == "fc" || s == "free_charge") return BusinessModel::FreeCharge;
  if (s == "pc" || s == "paid_charge") return BusinessModel::PaidCharge;
  throw ValidationError("unknown business model '" + s + "' (expected fc or pc)");
}

}  // namespace io_detail

using io_detail::parse_model;

// ---- fleet ----

inline json to_json(const FleetSpec& f, double slot_duration_hours) {
  json vs = json::array();
  for (const auto& v : f.vehicles)
    vs.push_back({{"alpha", v.alpha},
                  {"eta_plus", v.eta_plus},
                  {"eta_minus", v.eta_minus},
                  {"p_max", v.p_max},
                  {"e_min", v.e_min},
                  {"e_max", v.e_max},
                  {"e_target", v.e_target}});
  return {{"horizon_slots", f.horizon_slots},
          {"p_max_grid", f.p_max_grid},
          {"business_model", to_string(f.business_model)},
          {"slot_duration_hours", slot_duration_hours},
          {"vehicles", vs}};
}

struct FleetFile {
  FleetSpec fleet;
  double slot_duration_hours = 0.0;  // 0 when absent
};

inline FleetFile load_fleet(const std::string& path) {
  const json j = io_detail::parse_json(path);
  io_detail::Reader rd(path);
  FleetFile out;
  auto& f = out.fleet;
  f.horizon_slots = rd.integer(rd.field(j, "horizon_slots", ""), "horizon_slots");
  f.p_max_grid = rd.number(j, "p_max_grid", "");
  const auto& bm = rd.field(j, "business_model", "");
  if (!bm.is_string()) rd.fail("business_model", "expected \"fc\" or \"pc\"");
  try {
    f.business_model = parse_model(bm.get<std::string>());
  } catch (const ValidationError& e) {
    rd.fail("business_model", e.what());
  }
  if (j.contains("slot_duration_hours"))
    out.slot_duration_hours = rd.number(j, "slot_duration_hours", "");
  const auto& vs = rd.field(j, "vehicles", "");
  if (!vs.is_array()) rd.fail("vehicles", "expected an array");
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const std::string p = "vehicles[" + std::to_string(i) + "]";
    VehicleSpec v;
    v.alpha = vs[i].contains("alpha") ? rd.number(vs[i], "alpha", p) : 1.0;
    v.eta_plus = rd.number(vs[i], "eta_plus", p);
    v.eta_minus = rd.number(vs[i], "eta_minus", p);
    v.p_max = rd.number(vs[i], "p_max", p);
    v.e_min = rd.number(vs[i], "e_min", p);
    v.e_max = rd.number(vs[i], "e_max", p);
    v.e_target = rd.number(vs[i], "e_target", p);
    f.vehicles.push_back(v);
  }
  return out;
}

// ---- prices ----

inline json to_json(const PriceSeries& p) {
  return {{"slot_duration_hours", p.slot_duration_hours},
          {"c_e_plus", p.c_e_plus},
          {"c_e_minus", p.c_e_minus},
          {"c_s_plus", p.c_s_plus},
          {"c_s_minus", p.c_s_minus},
          {"c_v_plus", p.c_v_plus},
          {"c_v_minus", p.c_v_minus}};
}

inline constexpr const char* kPriceCsvHeader =
    "slot,c_e_plus,c_e_minus,c_s_plus,c_s_minus,c_v_plus,c_v_minus";

inline std::string prices_to_csv(const PriceSeries& p) {
  std::ostringstream os;
  os << kPriceCsvHeader << "\n" << std::setprecision(17);
  for (std::size_t k = 0; k < p.size(); ++k)
    os << k << "," << p.c_e_plus[k] << "," << p.c_e_minus[k] << "," << p.c_s_plus[k] << ","
       << p.c_s_minus[k] << "," << p.c_v_plus[k] << "," << p.c_v_minus[k] << "\n";
  return os.str();
}

inline PriceSeries parse_prices_csv(const std::string& text, const std::string& path,
                                    double slot_duration_hours) {
  static const char* names[] = {"slot",     "c_e_plus", "c_e_minus", "c_s_plus",
                                "c_s_minus", "c_v_plus", "c_v_minus"};
  PriceSeries p;
  p.slot_duration_hours = slot_duration_hours;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kPriceCsvHeader)
        throw ParseError(path, lineno, "", std::string("expected header '") + kPriceCsvHeader + "'");
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7)
      throw ParseError(path, lineno, "", "expected 7 columns, found " + std::to_string(cells.size()));
    double vals[7];
    for (int c = 0; c < 7; ++c) {
      const auto& s = cells[c];
      const auto first = s.find_first_not_of(" \t"), last = s.find_last_not_of(" \t");
      const char* b = s.data() + (first == std::string::npos ? s.size() : first);
      const char* e = s.data() + (last == std::string::npos ? s.size() : last + 1);
      auto [ptr, ec] = std::from_chars(b, e, vals[c]);
      if (ec != std::errc() || ptr != e || b == e)
        throw ParseError(path, lineno, names[c], "not a number: '" + s + "'");
    }
    if (vals[0] != static_cast<double>(p.size()))
      throw ParseError(path, lineno, "slot",
                       "slots must be listed in order starting at 0 (expected " +
                           std::to_string(p.size()) + ")");
    p.c_e_plus.push_back(vals[1]);
    p.c_e_minus.push_back(vals[2]);
    p.c_s_plus.push_back(vals[3]);
    p.c_s_minus.push_back(vals[4]);
    p.c_v_plus.push_back(vals[5]);
    p.c_v_minus.push_back(vals[6]);
  }
  if (!header) throw ParseError(path, 0, "", "empty price table");
  return p;
}

/// JSON or CSV by extension; CSV needs the slot duration from elsewhere.
inline PriceSeries load_prices(const std::string& path, double slot_duration_hours = 0.0) {
  const bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  if (csv) {
    if (!(slot_duration_hours > 0.0))
      throw ParseError(path, 0, "slot_duration_hours",
                       "CSV prices need slot_duration_hours in the fleet file");
    return parse_prices_csv(io_detail::read_file(path), path, slot_duration_hours);
  }
  const json j = io_detail::parse_json(path);
  io_detail::Reader rd(path);
  PriceSeries p;
  p.slot_duration_hours = rd.number(j, "slot_duration_hours", "");
  p.c_e_plus = rd.numbers(rd.field(j, "c_e_plus", ""), "c_e_plus");
  p.c_e_minus = rd.numbers(rd.field(j, "c_e_minus", ""), "c_e_minus");
  p.c_s_plus = rd.numbers(rd.field(j, "c_s_plus", ""), "c_s_plus");
  p.c_s_minus = rd.numbers(rd.field(j, "c_s_minus", ""), "c_s_minus");
  p.c_v_plus = rd.numbers(rd.field(j, "c_v_plus", ""), "c_v_plus");
  p.c_v_minus = rd.numbers(rd.field(j, "c_v_minus", ""), "c_v_minus");
  return p;
}

// ---- uncertainty ----

inline json to_json(const UncertaintyModel& u) {
  json vs = json::array();
  for (const auto& v : u.vehicles)
    vs.push_back({{"arrival", {v.arrival.lo, v.arrival.hi}},
                  {"departure", {v.departure.lo, v.departure.hi}},
                  {"e0", {v.e0.lo, v.e0.hi}}});
  return {{"pi_plus", u.pi_plus}, {"pi_minus", u.pi_minus}, {"vehicles", vs}};
}

inline UncertaintyModel load_uncertainty(const std::string& path, int horizon_slots) {
  const json j = io_detail::parse_json(path);
  io_detail::Reader rd(path);
  UncertaintyModel u;
  auto probs = [&](const char* key) {
    const auto& v = rd.field(j, key, "");
    if (v.is_number()) return std::vector<double>(static_cast<std::size_t>(horizon_slots), v.get<double>());
    return rd.numbers(v, key);
  };
  u.pi_plus = probs("pi_plus");
  u.pi_minus = probs("pi_minus");
  const auto& vs = rd.field(j, "vehicles", "");
  if (!vs.is_array()) rd.fail("vehicles", "expected an array");
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const std::string p = "vehicles[" + std::to_string(i) + "]";
    auto window = [&](const char* key) {
      const auto& w = rd.field(vs[i], key, p);
      const std::string wp = p + "." + key;
      if (!w.is_array() || w.size() != 2) rd.fail(wp, "expected [first, last] slot indices");
      return SlotWindow{rd.integer(w[0], wp + "[0]"), rd.integer(w[1], wp + "[1]")};
    };
    VehicleUncertainty v;
    v.arrival = window("arrival");
    v.departure = window("departure");
    const auto [lo, hi] = rd.pair(rd.field(vs[i], "e0", p), p + ".e0");
    v.e0 = {lo, hi};
    u.vehicles.push_back(v);
  }
  return u;
}

// ---- plan ----

inline json to_json(const SlotMatrix& m) {
  json rows = json::array();
  for (std::size_t k = 0; k < m.slots(); ++k) {
    json row = json::array();
    for (std::size_t i = 0; i < m.vehicles(); ++i) row.push_back(m(k, i));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const Plan& p) {
  return {{"slots", p.slots()},
          {"vehicles", p.vehicles()},
          {"p_dam", to_json(p.p_dam)},
          {"s_plus", to_json(p.s_plus)},
          {"s_minus", to_json(p.s_minus)}};
}

inline Plan plan_from_json(const json& j, const std::string& path) {
  io_detail::Reader rd(path);
  const int T = rd.integer(rd.field(j, "slots", ""), "slots");
  const int N = rd.integer(rd.field(j, "vehicles", ""), "vehicles");
  if (T < 1 || N < 1) rd.fail("slots", "plan dimensions must be positive");
  Plan plan(static_cast<std::size_t>(T), static_cast<std::size_t>(N));
  auto fill = [&](const char* key, SlotMatrix& m) {
    const auto& rows = rd.field(j, key, "");
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(T))
      rd.fail(key, "expected " + std::to_string(T) + " rows");
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const std::string p = std::string(key) + "[" + std::to_string(k) + "]";
      const auto vals = rd.numbers(rows[k], p);
      if (vals.size() != static_cast<std::size_t>(N))
        rd.fail(p, "expected " + std::to_string(N) + " values");
      for (std::size_t i = 0; i < vals.size(); ++i) m(k, i) = vals[i];
    }
  };
  fill("p_dam", plan.p_dam);
  fill("s_plus", plan.s_plus);
  fill("s_minus", plan.s_minus);
  return plan;
}

inline Plan load_plan(const std::string& path) {
  return plan_from_json(io_detail::parse_json(path), path);
}

// ---- results ----

inline json to_json(const Gains& g) {
  return {{"g0", g.g0}, {"g_plus", g.g_plus}, {"g_minus", g.g_minus}, {"g0_plus", g.g0_plus}};
}

inline json to_json(const SingleSlotInstance& s) {
  return {{"delta_e_target", s.delta_e_target},
          {"delta_e_max", s.delta_e_max},
          {"c_e_plus", s.c_e_plus},
          {"c_e_minus", s.c_e_minus},
          {"c_s_plus", s.c_s_plus},
          {"c_s_minus", s.c_s_minus},
          {"c_v_plus", s.c_v_plus},
          {"c_v_minus", s.c_v_minus},
          {"E_plus", s.e_plus},
          {"E_minus", s.e_minus},
          {"business_model", to_string(s.business_model)}};
}

inline json to_json(const SingleSlotSolution& s) {
  return {{"e_dam", s.e_dam},
          {"e_plus", s.e_plus},
          {"e_minus", s.e_minus},
          {"cost", s.cost},
          {"region", to_string(s.region)}};
}

inline json to_json(const SimulationReport& r) {
  json viol = json::object();
  for (std::size_t v = 0; v < kViolationKinds; ++v)
    viol[to_string(static_cast<ViolationKind>(v))] = {{"count", r.violations[v].count},
                                                      {"worst", r.violations[v].worst}};
  json examples = json::array();
  for (const auto& e : r.examples) {
    const std::string where = e.scenario == -1   ? "upper_envelope"
                              : e.scenario == -2 ? "lower_envelope"
                                                 : "sample";
    examples.push_back({{"scenario", e.scenario},
                        {"source", where},
                        {"kind", to_string(e.violation.kind)},
                        {"vehicle", e.violation.vehicle},
                        {"slot", e.violation.slot},
                        {"magnitude", e.violation.magnitude}});
  }
  return {{"n_scenarios", r.n_scenarios},
          {"envelope_scenarios", r.envelope_scenarios},
          {"violating_scenarios", r.violating_scenarios},
          {"total_violations", r.total_violations()},
          {"violations", viol},
          {"violation_examples", examples},
          {"cost_mean", r.cost_mean},
          {"cost_std", r.cost_std},
          {"expected_cost_analytic",
           r.expected_cost_analytic ? json(*r.expected_cost_analytic) : json(nullptr)},
          {"mean_power_dam_kw", r.mean_dam},
          {"mean_power_downward_kw", r.mean_downward},
          {"mean_power_upward_kw", r.mean_upward}};
}

/// Per-slot aggregate planned power by market leg: DAM purchase, offered
/// downward / upward capacity, and the capacities weighted by acceptance.
inline std::string profile_csv(const Plan& plan, const UncertaintyModel& unc) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "slot,dam_kw,downward_offer_kw,upward_offer_kw,downward_expected_kw,upward_expected_kw\n";
  for (std::size_t k = 0; k < plan.slots(); ++k) {
    const double d = plan.p_dam.slot_sum(k), sp = plan.s_plus.slot_sum(k),
                 sm = plan.s_minus.slot_sum(k);
    os << k << "," << d << "," << sp << "," << sm << "," << unc.pi_plus[k] * sp << ","
       << unc.pi_minus[k] * sm << "\n";
  }
  return os.str();
}

}  // namespace v2g
