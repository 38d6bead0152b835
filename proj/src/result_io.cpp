#include "mgsched/result_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mgsched {

using Json = nlohmann::ordered_json;

std::string format_number(double x) {
  if (x == 0.0) return "0";
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  const int magnitude = static_cast<int>(std::floor(std::log10(std::abs(x))));
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(std::max(9, 8 - magnitude));
  os << x;
  return os.str();
}

namespace {

class Csv {
public:
  explicit Csv(const std::string& header) { out_ << header << '\n'; }

  Csv& num(double x) { return cell(format_number(x)); }
  Csv& integer(long long x) { return cell(std::to_string(x)); }
  Csv& blank() { return cell(""); }
  Csv& cell(const std::string& text) {
    if (!first_) out_ << ',';
    out_ << text;
    first_ = false;
    return *this;
  }
  void end() {
    out_ << '\n';
    first_ = true;
  }
  std::string str() const { return out_.str(); }

private:
  std::ostringstream out_;
  bool first_ = true;
};

Json inputs_json(const Problem& p) {
  Json j;
  j["intervals"] = p.horizon();
  j["interval_hours"] = p.grid.interval_hours;
  j["d_kwh"] = p.load.d;
  j["v_per_kwh"] = p.tariff.v;
  j["k_per_kwh"] = p.tariff.k;
  j["alpha_per_kwh2"] = p.tariff.alpha;
  j["c_0_kwh"] = p.battery.c_0;
  j["c_min_kwh"] = p.battery.c_min;
  j["c_max_kwh"] = p.battery.c_max;
  return j;
}

Json solution_json(const ScheduleSolution& s) {
  Json j;
  j["tau"] = s.tau;
  j["eta"] = s.eta_used;
  j["objective"] = s.objective;
  j["r_max_kwh"] = s.r_max;
  j["e_kwh"] = s.e;
  j["r_kwh"] = s.r;
  j["c_bar_kwh"] = s.c_bar;
  j["c_up_kwh"] = s.c_up;
  j["c_lo_kwh"] = s.c_lo;
  return j;
}

Json probes_json(const std::vector<EtaProbe>& probes) {
  Json out = Json::array();
  for (const auto& p : probes) {
    out.push_back({{"eta", p.eta}, {"verdict", to_string(p.verdict)}, {"seconds", p.seconds}});
  }
  return out;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

const Json& need(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw std::invalid_argument(std::string("bundle lacks \"") + key + "\"");
  }
  return j.at(key);
}

double relative(double recorded, double recomputed) {
  return std::abs(recorded - recomputed) / std::max(1.0, std::abs(recomputed));
}

} // namespace

std::string schedule_table(const Problem& p, const ScheduleSolution& s,
                           std::optional<UncertaintyWindow> window) {
  Csv csv("t,d,v,s_bar,s_up,s_lo,e,r,c_bar,c_up,c_lo,env_lo,env_up");
  const ForecastSet& f = p.forecast;
  for (int t = 1; t <= p.horizon(); ++t) {
    csv.integer(t).num(p.load.at(t)).num(p.tariff.price(t));
    if (t >= f.first()) {
      csv.num(f.expected(t)).num(f.upper(t)).num(f.lower(t));
    } else {
      csv.blank().blank().blank();
    }
    if (t >= s.tau) {
      const std::size_t k = t - s.tau;
      const ChargeBounds env = envelope_bounds(p.battery, s.eta_used, window, s.tau, t + 1);
      csv.num(s.e[k]).num(s.r[k]).num(s.c_bar[k + 1]).num(s.c_up[k + 1]).num(s.c_lo[k + 1]);
      csv.num(env.lower).num(env.upper);
    } else {
      for (int i = 0; i < 7; ++i) csv.blank();
    }
    csv.end();
  }
  return csv.str();
}

std::string mpc_table(const Problem& p, const MpcTrace& trace) {
  Csv csv("t,d,v,s_bar,s_up,s_lo,s_true,e,r,c,eta_star,fallback");
  const ForecastSet& f = p.forecast;
  for (int t = 1; t <= p.horizon(); ++t) {
    const MpcStep& step = trace.steps.at(t - 1);
    csv.integer(t).num(p.load.at(t)).num(p.tariff.price(t));
    csv.num(f.expected(t)).num(f.upper(t)).num(f.lower(t)).num(step.s);
    csv.num(trace.e[t - 1]).num(trace.r[t - 1]).num(trace.charge[t]).num(step.eta_star);
    csv.integer(step.fallback ? 1 : 0);
    csv.end();
  }
  return csv.str();
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
  Csv csv("size_kwh,status,eta_star,probes");
  for (const SweepRow& row : rows) {
    csv.num(row.size).cell(to_string(row.status)).num(row.eta_star).integer(row.probes);
    csv.end();
  }
  return csv.str();
}

std::string baseline_table(const ScheduleSolution& envelope, const ScheduleSolution& penalty) {
  if (envelope.tau != penalty.tau || envelope.e.size() != penalty.e.size()) {
    throw std::invalid_argument("baseline schedules cover different intervals");
  }
  Csv csv("t,e_envelope,c_up_envelope,c_lo_envelope,e_penalty,c_up_penalty,c_lo_penalty");
  for (std::size_t k = 0; k < envelope.e.size(); ++k) {
    csv.integer(envelope.tau + static_cast<long long>(k));
    csv.num(envelope.e[k]).num(envelope.c_up[k + 1]).num(envelope.c_lo[k + 1]);
    csv.num(penalty.e[k]).num(penalty.c_up[k + 1]).num(penalty.c_lo[k + 1]);
    csv.end();
  }
  return csv.str();
}

std::string schedule_bundle(const ScheduleReport& report) {
  const EtaSearchResult& r = report.result;
  Json j;
  j["kind"] = "schedule";
  j["scenario"] = report.scenario;
  j["inputs"] = inputs_json(report.problem);
  j["status"] = to_string(r.status);
  j["eta_star"] = r.eta_star;
  j["probes"] = probes_json(r.probes);
  if (report.window) {
    j["window"] = {{"t_a", report.window->t_a}, {"t_b", report.window->t_b}};
  } else {
    j["window"] = nullptr;
  }
  j["idle_peak_kwh"] = report.idle_peak;
  if (r.solution) {
    j["peak_ratio"] = report.idle_peak > 0.0 ? r.solution->r_max / report.idle_peak : 0.0;
    j["solution"] = solution_json(*r.solution);
  } else {
    j["peak_ratio"] = nullptr;
    j["solution"] = nullptr;
  }
  return dump(j);
}

std::string mpc_bundle(const std::string& scenario, const Problem& problem,
                       const MpcTrace& trace) {
  Json j;
  j["kind"] = "mpc";
  j["scenario"] = scenario;
  j["inputs"] = inputs_json(problem);
  const MpcSummary& s = trace.summary;
  j["summary"] = {{"realized_cost", s.realized_cost}, {"peak_kwh", s.peak},
                  {"terminal_error_kwh", s.terminal_error}, {"max_violation_kwh", s.max_violation},
                  {"fallbacks", s.fallbacks}, {"seconds", s.seconds}};
  j["e_kwh"] = trace.e;
  j["r_kwh"] = trace.r;
  j["charge_kwh"] = trace.charge;
  Json steps = Json::array();
  for (const MpcStep& step : trace.steps) {
    steps.push_back({{"tau", step.tau},
                     {"status", to_string(step.status)},
                     {"eta_star", step.eta_star},
                     {"probes", step.probes},
                     {"fallback", step.fallback},
                     {"e_kwh", step.e},
                     {"s_kwh", step.s},
                     {"c_next_kwh", step.c_next},
                     {"objective", step.objective},
                     {"seconds", step.seconds},
                     {"plan_kwh", step.plan}});
  }
  j["steps"] = std::move(steps);
  return dump(j);
}

std::string sweep_bundle(const std::string& scenario, const std::vector<SweepRow>& rows) {
  Json j;
  j["kind"] = "sweep";
  j["scenario"] = scenario;
  Json out = Json::array();
  for (const SweepRow& row : rows) {
    out.push_back({{"size_kwh", row.size},
                   {"status", to_string(row.status)},
                   {"eta_star", row.eta_star},
                   {"probes", row.probes},
                   {"seconds", row.seconds}});
  }
  j["rows"] = std::move(out);
  return dump(j);
}

std::string baseline_bundle(const BaselineReport& report) {
  Json j;
  j["kind"] = "baseline";
  j["scenario"] = report.scenario;
  j["inputs"] = inputs_json(report.problem);
  j["weight_per_kwh"] = report.weight;
  j["slack_kwh"] = {{"upper", report.slacks.upper},
                    {"lower", report.slacks.lower},
                    {"total", report.slacks.total()}};
  j["envelope"] = solution_json(report.envelope);
  j["penalty"] = solution_json(report.penalty);
  return dump(j);
}

BundleCheck check_bundle(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("bundle is not JSON: ") + e.what());
  }
  BundleCheck check;
  if (need(j, "kind") == "sweep") return check;

  Json in;
  std::vector<double> d;
  Tariff tariff;
  try {
    in = need(j, "inputs");
    d = need(in, "d_kwh").get<std::vector<double>>();
    tariff.v = need(in, "v_per_kwh").get<std::vector<double>>();
    tariff.k = need(in, "k_per_kwh").get<double>();
    tariff.alpha = need(in, "alpha_per_kwh2").get<double>();
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("bad bundle inputs: ") + e.what());
  }
  if (d.size() != tariff.v.size()) throw std::invalid_argument("bundle series lengths differ");
  const int T = static_cast<int>(d.size());

  auto cost = [&](int tau, const std::vector<double>& e) {
    if (tau < 1 || tau + static_cast<int>(e.size()) - 1 != T) {
      throw std::invalid_argument("bundle decisions do not end at the horizon");
    }
    std::vector<double> r(e.size());
    for (std::size_t k = 0; k < e.size(); ++k) r[k] = grid_flow(d[tau - 1 + k], e[k]);
    return evaluate_cost(tau, e, r, tariff);
  };
  auto verify = [&](double recorded, double recomputed) {
    ++check.checked;
    check.max_error = std::max(check.max_error, relative(recorded, recomputed));
  };
  auto verify_solution = [&](const Json& s) {
    if (s.is_null()) return;
    verify(need(s, "objective").get<double>(),
           cost(need(s, "tau").get<int>(), need(s, "e_kwh").get<std::vector<double>>()));
  };

  try {
    for (const char* key : {"solution", "envelope", "penalty"}) {
      if (j.contains(key)) verify_solution(j.at(key));
    }
    if (j.contains("steps")) {
      for (const Json& step : j.at("steps")) {
        if (need(step, "fallback").get<bool>()) continue;
        verify(need(step, "objective").get<double>(),
               cost(need(step, "tau").get<int>(), need(step, "plan_kwh").get<std::vector<double>>()));
      }
      verify(need(need(j, "summary"), "realized_cost").get<double>(),
             cost(1, need(j, "e_kwh").get<std::vector<double>>()));
    }
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed bundle: ") + e.what());
  }
  return check;
}

} // namespace mgsched
