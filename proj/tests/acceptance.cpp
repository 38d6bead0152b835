// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: acceptance [criterion numbers...]

#include "mgsched/mpc.hpp"
#include "mgsched/scenario.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace mgsched;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[" << what << "] ";
    }
  }
};

/// Every schedule solved by criteria 1-3, with the forecast it was built on.
struct SolvedSchedule {
  ForecastSet forecast;
  ScheduleSolution solution;
};
std::vector<SolvedSchedule> solved;

const std::string fixture_dir = MGSCHED_FIXTURE_DIR;

Scenario defaults_fixture() { return load_scenario(fixture_dir + "/paper_defaults.json"); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void c1_envelope_needed(Verdict& v) {
  const Scenario sc = defaults_fixture();
  const Problem p = sc.problem();
  const double c0 = p.battery.c_0;

  const auto hard = qp::check_feasible(build_qp(p, p.forecast, c0, 0.0, sc.build).program);
  v.require(hard.infeasible(), "eta = 0 not reported infeasible");

  const auto found = find_eta_star(p, p.forecast, c0, sc.build, sc.search);
  v.require(found.status == EtaSearchStatus::found && found.eta_star > 0.0, "no eta* > 0");
  v.require(found.solution.has_value(), "no schedule at eta*");
  if (found.solution) solved.push_back({p.forecast, *found.solution});

  const double below = std::max(0.0, found.eta_star - sc.search.epsilon);
  const auto verdict = probe_feasibility(p, p.forecast, c0, below, sc.build);
  v.require(verdict == ProbeVerdict::infeasible, "eta* - epsilon not infeasible");
  v.detail << "eta*=" << found.eta_star << " probes=" << found.probes.size()
           << " eta*-eps=" << to_string(verdict);
}

void c2_size_sweep(Verdict& v) {
  const Scenario sc = defaults_fixture();
  const Problem p = sc.problem();
  MpcOptions opt;
  opt.build = sc.build;
  opt.search = sc.search;
  const std::vector<double> sizes{800, 1000, 1200, 1400, 1600};
  const auto rows = sweep_storage_sizes(p, sizes, p.forecast, opt);
  v.require(rows.size() == sizes.size(), "row count");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    v.detail << rows[i].size << ":" << rows[i].eta_star << " ";
    if (i > 0) v.require(rows[i].eta_star <= rows[i - 1].eta_star, "not non-increasing");
    if (i + 1 < rows.size()) {
      v.require(rows[i].status == EtaSearchStatus::found && rows[i].eta_star > 0.0,
                "eta* not positive below the largest size");
    }
  }
  v.require(rows.back().status == EtaSearchStatus::exact_zero && rows.back().eta_star == 0.0,
            "largest size not exact-zero");

  // schedules at each size for the offset identity
  for (double size : sizes) {
    Problem q = p;
    q.battery = scale_battery(p.battery, size);
    EtaSearchConfig cfg = sc.search;
    cfg.eta_cap = default_eta_cap(q.battery);
    const auto found = find_eta_star(q, q.forecast, q.battery.c_0, sc.build, cfg);
    if (found.solution) solved.push_back({q.forecast, *found.solution});
  }
}

void c3_no_realized_violation(Verdict& v) {
  const Scenario sc = defaults_fixture();
  const Problem p = sc.problem();
  MpcOptions opt;
  opt.build = sc.build;
  opt.search = sc.search;
  opt.on_search = [](const ForecastSet& f, const EtaSearchResult& r) {
    if (r.solution) solved.push_back({f, *r.solution});
  };
  double worst_violation = 0.0, worst_terminal = 0.0;
  int fallbacks = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const BlendedForecastModel model(sc.day_ahead, draw_true_solar(sc.day_ahead, seed),
                                     sc.forecast_lead);
    try {
      const MpcTrace trace = run_mpc(p, model, opt);
      worst_violation = std::max(worst_violation, trace.summary.max_violation);
      worst_terminal = std::max(worst_terminal, trace.summary.terminal_error);
      fallbacks += trace.summary.fallbacks;
      v.require(static_cast<int>(trace.steps.size()) == 96, "incomplete run");
    } catch (const std::exception& e) {
      v.require(false, "seed " + std::to_string(seed) + ": " + e.what());
    }
  }
  v.require(worst_violation <= 1e-6, "hard limit violated");
  v.require(worst_terminal <= 1.0, "terminal charge error");
  v.detail << "runs=20 max_violation=" << worst_violation << " max_terminal_error="
           << worst_terminal << " fallbacks=" << fallbacks;
}

void c4_solver_oracle(Verdict& v) {
  std::mt19937_64 rng(20240612);
  double worst = 0.0;
  int infeasible = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 8;
    const auto inst = testing::random_box_qp(rng, n, trial % 3);
    const auto oracle = testing::enumerate_active_sets(inst.qp);
    const auto out = qp::solve(inst.qp);
    const bool solver_feasible = out.status == qp::SolveStatus::optimal;
    v.require(out.status != qp::SolveStatus::max_iterations, "solver verdict unknown");
    v.require(solver_feasible == oracle.feasible, "feasibility verdicts differ");
    if (!oracle.feasible) {
      ++infeasible;
      continue;
    }
    if (!solver_feasible) continue;
    const double rel = std::abs(out.objective - oracle.objective) / std::abs(oracle.objective);
    worst = std::max(worst, rel);
  }
  v.require(worst <= 1e-4, "box QP objective mismatch");

  const Problem tiny = testing::make_problem(testing::tiny_t6_inputs());
  const auto direct = testing::direct_encoding(tiny);
  const auto oracle = testing::enumerate_active_sets(direct.qp);
  const auto out = qp::solve(direct.qp);
  v.require(oracle.feasible == (out.status == qp::SolveStatus::optimal), "tiny_t6 verdicts differ");
  double tiny_rel = 0.0;
  if (oracle.feasible && out.status == qp::SolveStatus::optimal) {
    tiny_rel = std::abs(out.objective - oracle.objective) / std::abs(oracle.objective);
    v.require(tiny_rel <= 1e-4, "tiny_t6 objective mismatch");
  }
  v.detail << "box max_rel=" << worst << " (" << infeasible << " infeasible) tiny_t6 rel="
           << tiny_rel << " oracle=" << oracle.objective;
}

void c5_offset_identity(Verdict& v) {
  v.require(!solved.empty(), "no schedules from criteria 1-3");
  double worst = 0.0;
  for (const SolvedSchedule& s : solved) {
    const ForecastSet& f = s.forecast;
    const ScheduleSolution& sol = s.solution;
    double up = 0.0, lo = 0.0;
    for (std::size_t k = 0; k < sol.c_bar.size(); ++k) {
      worst = std::max(worst, std::abs((sol.c_up[k] - sol.c_bar[k]) - up));
      worst = std::max(worst, std::abs((sol.c_lo[k] - sol.c_bar[k]) - lo));
      if (k < sol.e.size()) {
        const int t = sol.tau + static_cast<int>(k);
        up += f.upper(t) - f.expected(t);
        lo += f.lower(t) - f.expected(t);
      }
    }
  }
  v.require(worst <= 1e-9, "offset identity broken");
  v.detail << "schedules=" << solved.size() << " max_dev=" << worst;
}

void c6_monotone_feasibility(Verdict& v) {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int transitions = 0, probes = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Problem p = testing::random_problem(rng, 16, 0.2 + 0.8 * U(rng));
    const double cap = default_eta_cap(p.battery);
    std::vector<double> etas{0.0};
    for (int i = 0; i < 7; ++i) etas.push_back(cap * std::pow(U(rng), 3));
    std::sort(etas.begin(), etas.end());
    bool seen_feasible = false, seen_infeasible = false;
    for (double eta : etas) {
      const auto verdict = probe_feasibility(p, p.forecast, p.battery.c_0, eta, {});
      ++probes;
      v.require(verdict != ProbeVerdict::unknown, "unknown verdict");
      if (verdict == ProbeVerdict::infeasible) {
        v.require(!seen_feasible, "feasible eta followed by an infeasible larger eta");
        seen_infeasible = true;
      }
      if (verdict == ProbeVerdict::feasible) {
        if (seen_infeasible && !seen_feasible) ++transitions;
        seen_feasible = true;
      }
    }
  }
  v.detail << "problems=100 probes=" << probes << " with a transition=" << transitions;
}

void c7_guard_soundness(Verdict& v) {
  // all quantities are multiples of 1/64 well inside the mantissa, so every
  // sum below is exact
  std::mt19937_64 rng(707);
  auto grid = [&](long lo, long hi) {
    return static_cast<double>(std::uniform_int_distribution<long>(lo, hi)(rng)) / 64.0;
  };
  int tuples = 0;
  while (tuples < 100) {
    BatteryParams b;
    b.c_min = grid(0, 20000);
    b.c_max = b.c_min + grid(640, 64000);
    b.capacity = b.c_max + 1.0;
    const double c_now = b.c_min + grid(0, static_cast<long>((b.c_max - b.c_min) * 64));
    b.c_0 = c_now;
    const double s_lo = grid(0, 6400);
    const double s_up = s_lo + grid(0, 6400);
    const ChargeBounds g = next_step_bounds(b, c_now, s_lo, s_up);
    if (g.lower > g.upper) continue;
    double e;
    if (tuples % 10 == 0) {
      e = g.lower;
    } else if (tuples % 10 == 1) {
      e = g.upper;
    } else {
      e = g.lower + grid(0, static_cast<long>((g.upper - g.lower) * 64));
    }
    for (double s : {s_lo, s_up}) {
      const double next = step_charge(c_now, s, e);
      v.require(next >= b.c_min && next <= b.c_max, "next charge outside the hard limits");
    }
    ++tuples;
  }
  v.detail << "tuples=" << tuples;
}

void c8_peak_shaving(Verdict& v) {
  const Scenario sc = defaults_fixture();
  const Problem p = sc.problem();
  v.require(p.tariff.k > 0.0, "no demand charge");
  const double target = sc.calibration.peak_reduction_target.value_or(0.8);
  const auto found = find_eta_star(p, p.forecast, p.battery.c_0, sc.build, sc.search);
  v.require(found.solution.has_value(), "no schedule");
  if (!found.solution) return;
  const double idle = *std::max_element(p.load.d.begin(), p.load.d.end());
  const double ratio = found.solution->r_max / idle;
  v.require(ratio <= target, "peak not reduced enough");
  v.detail << "r_max=" << found.solution->r_max << " idle=" << idle << " ratio=" << ratio
           << " target=" << target;
}

void c9_deterministic_limit(Verdict& v) {
  Scenario sc = defaults_fixture();
  sc.day_ahead.s_up = sc.day_ahead.s_bar;
  sc.day_ahead.s_lo = sc.day_ahead.s_bar;
  const Problem p = sc.problem();
  MpcOptions opt;
  opt.build = sc.build;
  opt.search = sc.search;
  const auto first = find_eta_star(p, p.forecast, p.battery.c_0, sc.build, sc.search);
  v.require(first.solution.has_value(), "no step-1 plan");
  if (!first.solution) return;
  const MpcTrace trace =
      run_mpc(p, BlendedForecastModel(sc.day_ahead, sc.day_ahead.s_bar, sc.forecast_lead), opt);
  double worst = 0.0;
  for (const MpcStep& step : trace.steps) {
    for (std::size_t k = 0; k < step.plan.size(); ++k) {
      worst = std::max(worst, std::abs(step.plan[k] - first.solution->e[step.tau - 1 + k]));
    }
  }
  v.require(trace.steps.size() == 96, "incomplete run");
  v.require(worst <= 1e-5, "re-solves leave the first plan");
  v.detail << "steps=" << trace.steps.size() << " max_dev=" << worst;
}

void c10_penalty_baseline(Verdict& v) {
  const Scenario sc = defaults_fixture();
  const Problem p = sc.problem();

  // 1600 kWh makes the scenario limits hard-feasible
  Problem big = p;
  big.battery = scale_battery(p.battery, 1600.0);
  BuildOptions hard_opt = sc.build;
  hard_opt.robust_guard = RobustGuard::none;
  const auto hard = qp::solve(build_qp(big, big.forecast, big.battery.c_0, 0.0, hard_opt).program);
  v.require(hard.status == qp::SolveStatus::optimal, "hard instance not solved");
  const auto large = build_penalty_baseline_qp(big, big.forecast, big.battery.c_0, 1e3);
  const auto out = qp::solve(large.program);
  v.require(out.status == qp::SolveStatus::optimal, "large-w baseline not solved");
  double rel = 0.0;
  if (hard.status == qp::SolveStatus::optimal && out.status == qp::SolveStatus::optimal) {
    rel = std::abs(out.objective - hard.objective) / std::abs(hard.objective);
    v.require(rel <= 1e-3, "large-w baseline differs from the hard optimum");
  }

  const double w = sc.penalty_weight.value_or(default_penalty_weight(p.tariff));
  const auto base = build_penalty_baseline_qp(p, p.forecast, p.battery.c_0, w);
  const auto soft = qp::solve(base.program);
  v.require(soft.status == qp::SolveStatus::optimal, "baseline not solved");
  double slack = 0.0;
  if (soft.status == qp::SolveStatus::optimal) {
    const SlackTotals s = baseline_slacks(soft, base.layout);
    slack = s.total();
    v.detail << "w=" << w << " slack_up=" << s.upper << " slack_lo=" << s.lower << " ";
  }
  v.require(slack > 0.0, "no slack on paper_defaults");
  v.detail << "large-w rel=" << rel << " total_slack=" << slack;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds; ///< 0 for none
  std::function<void(Verdict&)> run;
};

} // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "soft envelope needed", 10.0, c1_envelope_needed},
      {2, "eta* falls with storage size", 60.0, c2_size_sweep},
      {3, "no realized limit violation", 300.0, c3_no_realized_violation},
      {4, "solver matches enumeration", 0.0, c4_solver_oracle},
      {5, "scenario offset identity", 0.0, c5_offset_identity},
      {6, "feasibility monotone in eta", 0.0, c6_monotone_feasibility},
      {7, "next-step guard soundness", 0.0, c7_guard_soundness},
      {8, "peak shaving", 0.0, c8_peak_shaving},
      {9, "deterministic re-solves", 0.0, c9_deterministic_limit},
      {10, "penalty baseline", 0.0, c10_penalty_baseline},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
  if (only.count(5)) only.insert({1, 2, 3});

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = seconds_since(t0);
    if (c.budget_seconds > 0.0) v.require(seconds < c.budget_seconds, "over the time budget");
    if (!v.pass) ++failed;
    char head[128];
    std::snprintf(head, sizeof head, "%s criterion %2d: %-30s %8.2fs  ", v.pass ? "PASS" : "FAIL",
                  c.id, c.name, seconds);
    std::cout << head << v.detail.str() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
