#include "mgsched/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mgsched {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

Problem Scenario::problem() const {
  return validate_problem(grid, day_ahead, load, tariff, battery, inverter);
}

std::vector<double> Scenario::truth() const {
  return s_true ? *s_true : draw_true_solar(day_ahead, seed);
}

BlendedForecastModel Scenario::forecast_model() const {
  return BlendedForecastModel(day_ahead, truth(), forecast_lead);
}

namespace {

/// Scenario path of each field reported by validate_problem.
const std::map<std::string, std::string>& field_paths() {
  static const std::map<std::string, std::string> paths{
      {"T", "grid.intervals"},          {"delta_t", "grid.interval_hours"},
      {"tau", "grid.intervals"},        {"d", "load.d_kwh"},
      {"v", "tariff.v_per_kwh"},        {"k", "tariff.k_per_kwh"},
      {"alpha", "tariff.alpha_per_kwh2"}, {"battery", "battery"},
      {"c_min", "battery.c_min_kwh"},   {"c_max", "battery.c_max_kwh"},
      {"c_0", "battery.c_0_kwh"},       {"p_min", "inverter.p_min_kw"},
      {"s_bar", "solar.s_bar_kwh"},     {"s_up", "solar.s_up_kwh"},
      {"s_lo", "solar.s_lo_kwh"},       {"issued_at", "solar"},
      {"s_true", "solar.s_true_kwh"},
  };
  return paths;
}

class Reader {
public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw ScenarioError(path, source_ + ": field '" + path + "': " + what);
  }

  /// Rejects keys outside `allowed` and returns the object at `path`.
  const json& object(const json& j, const std::string& path,
                     std::initializer_list<const char*> allowed) const {
    if (!j.is_object()) fail(path, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!ok.count(it.key())) {
        fail(join(path, it.key()), "unknown field");
      }
    }
    return j;
  }

  const json& member(const json& j, const std::string& path, const char* key) const {
    auto it = j.find(key);
    if (it == j.end()) fail(join(path, key), "missing");
    return *it;
  }

  double number(const json& j, const std::string& path, const char* key) const {
    const json& v = member(j, path, key);
    if (!v.is_number()) fail(join(path, key), "expected a number");
    return v.get<double>();
  }

  double number_or(const json& j, const std::string& path, const char* key, double fallback) const {
    return j.contains(key) ? number(j, path, key) : fallback;
  }

  std::optional<double> optional_number(const json& j, const std::string& path,
                                        const char* key) const {
    if (!j.contains(key)) return std::nullopt;
    return number(j, path, key);
  }

  long long integer(const json& j, const std::string& path, const char* key) const {
    const json& v = member(j, path, key);
    if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
    return v.get<long long>();
  }

  bool boolean_or(const json& j, const std::string& path, const char* key, bool fallback) const {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean()) fail(join(path, key), "expected true or false");
    return v.get<bool>();
  }

  std::string string_or(const json& j, const std::string& path, const char* key,
                        const std::string& fallback) const {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string()) fail(join(path, key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> series(const json& j, const std::string& path, const char* key) const {
    const json& v = member(j, path, key);
    if (!v.is_array()) fail(join(path, key), "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        fail(join(path, key), "entry " + std::to_string(i + 1) + " is not a number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  const std::string& source() const { return source_; }

private:
  std::string source_;
};

int line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

} // namespace

Scenario parse_scenario(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const int line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ScenarioError("", source + ":" + std::to_string(line) + ": parse error: " + e.what(),
                        line);
  }

  const Reader rd(source);
  rd.object(root, "",
            {"name", "grid", "battery", "inverter", "tariff", "load", "solar", "eta_search",
             "build", "simulation", "calibration"});
  Scenario sc;
  sc.name = rd.string_or(root, "", "name", "");

  const json& grid = rd.object(rd.member(root, "", "grid"), "grid", {"intervals", "interval_hours"});
  const long long T = rd.integer(grid, "grid", "intervals");
  if (T < 1 || T > 100000) rd.fail("grid.intervals", "must lie within 1..100000");
  sc.grid.intervals = static_cast<int>(T);
  sc.grid.interval_hours = rd.number(grid, "grid", "interval_hours");
  sc.grid.tau = 1;

  const json& bat = rd.object(rd.member(root, "", "battery"), "battery",
                              {"capacity_kwh", "c_min_kwh", "c_max_kwh", "c_0_kwh"});
  sc.battery.capacity = rd.number(bat, "battery", "capacity_kwh");
  sc.battery.c_min = rd.number(bat, "battery", "c_min_kwh");
  sc.battery.c_max = rd.number(bat, "battery", "c_max_kwh");
  sc.battery.c_0 = rd.number(bat, "battery", "c_0_kwh");

  const json& inv = rd.object(rd.member(root, "", "inverter"), "inverter", {"p_min_kw", "p_max_kw"});
  sc.inverter.p_min = rd.number(inv, "inverter", "p_min_kw");
  sc.inverter.p_max = rd.number(inv, "inverter", "p_max_kw");

  const json& tar = rd.object(rd.member(root, "", "tariff"), "tariff",
                              {"v_per_kwh", "k_per_kwh", "alpha_per_kwh2"});
  sc.tariff.v = rd.series(tar, "tariff", "v_per_kwh");
  sc.tariff.k = rd.number(tar, "tariff", "k_per_kwh");
  sc.tariff.alpha = rd.number(tar, "tariff", "alpha_per_kwh2");

  const json& load = rd.object(rd.member(root, "", "load"), "load", {"d_kwh"});
  sc.load.d = rd.series(load, "load", "d_kwh");

  const json& sol = rd.object(rd.member(root, "", "solar"), "solar",
                              {"s_bar_kwh", "s_up_kwh", "s_lo_kwh", "s_true_kwh"});
  sc.day_ahead.issued_at = 1;
  sc.day_ahead.s_bar = rd.series(sol, "solar", "s_bar_kwh");
  sc.day_ahead.s_up = rd.series(sol, "solar", "s_up_kwh");
  sc.day_ahead.s_lo = rd.series(sol, "solar", "s_lo_kwh");
  if (sol.contains("s_true_kwh")) sc.s_true = rd.series(sol, "solar", "s_true_kwh");

  if (root.contains("eta_search")) {
    const json& es = rd.object(root.at("eta_search"), "eta_search",
                               {"eta_0_kwh", "epsilon_kwh", "eta_cap_kwh", "max_expansions"});
    sc.search.eta_0 = rd.number_or(es, "eta_search", "eta_0_kwh", sc.search.eta_0);
    sc.search.epsilon = rd.number_or(es, "eta_search", "epsilon_kwh", sc.search.epsilon);
    sc.search.eta_cap = rd.optional_number(es, "eta_search", "eta_cap_kwh");
    if (es.contains("max_expansions")) {
      const long long m = rd.integer(es, "eta_search", "max_expansions");
      if (m < 0 || m > 1000) rd.fail("eta_search.max_expansions", "must lie within 0..1000");
      sc.search.max_expansions = static_cast<int>(m);
    }
  }

  if (root.contains("build")) {
    const json& b = rd.object(root.at("build"), "build",
                              {"robust_guard", "terminal_on_scenarios", "enforce_hard_on_expected",
                               "penalty_weight_per_kwh"});
    try {
      sc.build.robust_guard =
          parse_robust_guard(rd.string_or(b, "build", "robust_guard", to_string(sc.build.robust_guard)));
    } catch (const std::invalid_argument& e) {
      rd.fail("build.robust_guard", e.what());
    }
    sc.build.terminal_on_scenarios =
        rd.boolean_or(b, "build", "terminal_on_scenarios", sc.build.terminal_on_scenarios);
    sc.build.enforce_hard_on_expected =
        rd.boolean_or(b, "build", "enforce_hard_on_expected", sc.build.enforce_hard_on_expected);
    sc.penalty_weight = rd.optional_number(b, "build", "penalty_weight_per_kwh");
    if (sc.penalty_weight && !(*sc.penalty_weight >= 0.0)) {
      rd.fail("build.penalty_weight_per_kwh", "must be >= 0");
    }
  }

  if (root.contains("simulation")) {
    const json& s = rd.object(root.at("simulation"), "simulation", {"seed", "forecast_lead_intervals"});
    if (s.contains("seed")) {
      const json& v = s.at("seed");
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        rd.fail("simulation.seed", "expected a non-negative integer");
      }
      sc.seed = v.get<std::uint64_t>();
    }
    if (s.contains("forecast_lead_intervals")) {
      const long long lead = rd.integer(s, "simulation", "forecast_lead_intervals");
      if (lead < 1 || lead > 100000) rd.fail("simulation.forecast_lead_intervals", "must be >= 1");
      sc.forecast_lead = static_cast<int>(lead);
    }
  }

  if (root.contains("calibration")) {
    const json& c = rd.object(root.at("calibration"), "calibration",
                              {"peak_reduction_target", "sweep_sizes_kwh", "note"});
    sc.calibration.peak_reduction_target =
        rd.optional_number(c, "calibration", "peak_reduction_target");
    if (c.contains("sweep_sizes_kwh")) {
      sc.calibration.sweep_sizes_kwh = rd.series(c, "calibration", "sweep_sizes_kwh");
    }
    sc.calibration.note = rd.string_or(c, "calibration", "note", "");
  }

  try {
    sc.problem();
    if (sc.s_true) {
      if (sc.s_true->size() != static_cast<std::size_t>(sc.grid.intervals)) {
        throw ValidationError("s_true", "s_true: length does not match grid.intervals");
      }
      for (int t = 1; t <= sc.grid.intervals; ++t) {
        const double s = (*sc.s_true)[t - 1];
        if (!(s >= sc.day_ahead.lower(t) && s <= sc.day_ahead.upper(t))) {
          throw ValidationError("s_true", "s_true: outside [s_lo, s_up] at interval " +
                                              std::to_string(t), t);
        }
      }
    }
  } catch (const ValidationError& e) {
    const auto& paths = field_paths();
    const auto it = paths.find(e.field());
    rd.fail(it == paths.end() ? e.field() : it->second, e.what());
  }
  try {
    validate(sc.search, sc.search.eta_cap.value_or(default_eta_cap(sc.battery)));
  } catch (const std::invalid_argument& e) {
    rd.fail("eta_search", e.what());
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

std::string dump_scenario(const Scenario& sc) {
  ordered_json root;
  root["name"] = sc.name;
  root["grid"] = {{"intervals", sc.grid.intervals}, {"interval_hours", sc.grid.interval_hours}};
  root["battery"] = {{"capacity_kwh", sc.battery.capacity},
                     {"c_min_kwh", sc.battery.c_min},
                     {"c_max_kwh", sc.battery.c_max},
                     {"c_0_kwh", sc.battery.c_0}};
  root["inverter"] = {{"p_min_kw", sc.inverter.p_min}, {"p_max_kw", sc.inverter.p_max}};
  root["tariff"] = {{"v_per_kwh", sc.tariff.v},
                    {"k_per_kwh", sc.tariff.k},
                    {"alpha_per_kwh2", sc.tariff.alpha}};
  root["load"] = {{"d_kwh", sc.load.d}};
  ordered_json solar = {{"s_bar_kwh", sc.day_ahead.s_bar},
                        {"s_up_kwh", sc.day_ahead.s_up},
                        {"s_lo_kwh", sc.day_ahead.s_lo}};
  if (sc.s_true) solar["s_true_kwh"] = *sc.s_true;
  root["solar"] = solar;

  ordered_json es = {{"eta_0_kwh", sc.search.eta_0}, {"epsilon_kwh", sc.search.epsilon}};
  if (sc.search.eta_cap) es["eta_cap_kwh"] = *sc.search.eta_cap;
  es["max_expansions"] = sc.search.max_expansions;
  root["eta_search"] = es;

  ordered_json build = {{"robust_guard", to_string(sc.build.robust_guard)},
                        {"terminal_on_scenarios", sc.build.terminal_on_scenarios},
                        {"enforce_hard_on_expected", sc.build.enforce_hard_on_expected}};
  if (sc.penalty_weight) build["penalty_weight_per_kwh"] = *sc.penalty_weight;
  root["build"] = build;
  root["simulation"] = {{"seed", sc.seed}, {"forecast_lead_intervals", sc.forecast_lead}};

  const auto& cal = sc.calibration;
  if (cal.peak_reduction_target || !cal.sweep_sizes_kwh.empty() || !cal.note.empty()) {
    ordered_json c = ordered_json::object();
    if (cal.peak_reduction_target) c["peak_reduction_target"] = *cal.peak_reduction_target;
    if (!cal.sweep_sizes_kwh.empty()) c["sweep_sizes_kwh"] = cal.sweep_sizes_kwh;
    if (!cal.note.empty()) c["note"] = cal.note;
    root["calibration"] = c;
  }
  return root.dump(2) + "\n";
}

void save_scenario(const std::string& path, const Scenario& scenario) {
  const std::string text = dump_scenario(scenario);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + path + "'");
  }
  out << text;
  if (!out) {
    throw IoError("write failed for '" + path + "'");
  }
}

} // namespace mgsched
