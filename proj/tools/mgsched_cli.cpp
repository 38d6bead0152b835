// mgsched: command-line front end for the envelope scheduler.

#include "CLI11.hpp"
#include "mgsched/mpc.hpp"
#include "mgsched/result_io.hpp"
#include "mgsched/scenario.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

using namespace mgsched;
namespace fs = std::filesystem;

namespace {

enum Exit {
  ok = 0,
  usage = 1,
  validation = 2,
  infeasible_at_cap = 3,
  solver_unknown = 4,
  io = 5,
  soc_violation = 6,
  non_monotone = 7,
  internal = 8,
};

/// Failure carrying its exit code and machine-readable class.
struct CliFailure {
  Exit code;
  std::string cls;
  std::string message;
};

struct Common {
  std::string scenario;
  std::optional<double> eta0;
  std::optional<double> epsilon;
  std::optional<std::string> guard;
  std::optional<std::uint64_t> seed;
};

struct Settings {
  std::string out_dir = "out";
  bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("scenario", c.scenario, "scenario file, or the name of a shipped fixture")
      ->required();
  cmd->add_option("--eta0", c.eta0, "first eta probe, kWh per interval");
  cmd->add_option("--epsilon", c.epsilon, "bisection bracket width at termination");
  cmd->add_option("--guard", c.guard, "robust guard on e(tau): next-step, shift-by-one or none");
  cmd->add_option("--seed", c.seed, "seed for the realized solar draw (replaces stored s_true)");
}

std::string resolve(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  if (arg.find('/') == std::string::npos) {
    const char* env = std::getenv("MGSCHED_FIXTURE_DIR");
    const fs::path dir = env && *env ? env : MGSCHED_FIXTURE_DIR;
    for (const fs::path candidate : {dir / arg, dir / (arg + ".json")}) {
      if (fs::exists(candidate)) return candidate.string();
    }
  }
  return arg; // load_scenario reports the missing file
}

Scenario load(const Common& c) {
  Scenario sc = load_scenario(resolve(c.scenario));
  if (c.eta0) sc.search.eta_0 = *c.eta0;
  if (c.epsilon) sc.search.epsilon = *c.epsilon;
  if (c.guard) sc.build.robust_guard = parse_robust_guard(*c.guard);
  if (c.seed) {
    sc.seed = *c.seed;
    sc.s_true.reset();
  }
  validate(sc.search, sc.search.eta_cap.value_or(default_eta_cap(sc.battery)));
  return sc;
}

void write_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream os(path, std::ios::binary);
  os << text;
  os.close();
  if (!os) throw IoError("cannot write " + path.string());
}

void emit(const Settings& s, const std::string& stem, const std::string& bundle,
          const std::string& table) {
  const fs::path dir = s.out_dir;
  write_file(dir / (stem + ".json"), bundle);
  write_file(dir / (stem + ".csv"), table);
  std::cout << "wrote " << (dir / (stem + ".json")).string() << " "
            << (dir / (stem + ".csv")).string() << "\n";
}

void line(const std::string& key, double value) {
  std::cout << key << " " << format_number(value) << "\n";
}

void print_probes(const std::vector<EtaProbe>& probes) {
  for (const EtaProbe& p : probes) {
    std::cerr << "probe eta=" << format_number(p.eta) << " " << to_string(p.verdict) << " "
              << format_number(p.seconds) << "s\n";
  }
}

double idle_peak(const Problem& p) {
  double peak = 0.0;
  for (double d : p.load.d) peak = std::max(peak, d);
  return peak;
}

MpcOptions options_of(const Scenario& sc) {
  MpcOptions opt;
  opt.build = sc.build;
  opt.search = sc.search;
  return opt;
}

[[noreturn]] void search_failed(const EtaSearchError& e) {
  if (e.kind() == EtaSearchError::Kind::non_monotone) {
    throw CliFailure{non_monotone, "non-monotone", e.what()};
  }
  throw CliFailure{solver_unknown, "solver-unknown", e.what()};
}

EtaSearchResult search(const Scenario& sc, const Problem& p) {
  try {
    return find_eta_star(p, p.forecast, p.battery.c_0, sc.build, sc.search);
  } catch (const EtaSearchError& e) {
    search_failed(e);
  }
}

int run_schedule(const Settings& s, const Common& c) {
  const Scenario sc = load(c);
  const Problem p = sc.problem();
  ScheduleReport report{sc.name, p, search(sc, p), detect_uncertainty_window(p.forecast),
                        idle_peak(p)};
  if (s.verbose) print_probes(report.result.probes);

  std::cout << "scenario " << sc.name << "\n";
  std::cout << "status " << to_string(report.result.status) << "\n";
  std::cout << "probes " << report.result.probes.size() << "\n";
  if (!report.result.solution) {
    write_file(fs::path(s.out_dir) / "schedule.json", schedule_bundle(report));
    throw CliFailure{infeasible_at_cap, "infeasible-at-cap",
                     "no feasible schedule at the eta cap"};
  }
  const ScheduleSolution& sol = *report.result.solution;
  line("eta_star", report.result.eta_star);
  line("objective", sol.objective);
  line("r_max", sol.r_max);
  line("idle_r_max", report.idle_peak);
  if (report.idle_peak > 0.0) line("peak_ratio", sol.r_max / report.idle_peak);
  emit(s, "schedule", schedule_bundle(report), schedule_table(p, sol, report.window));
  return ok;
}

int run_mpc_cmd(const Settings& s, const Common& c) {
  const Scenario sc = load(c);
  const Problem p = sc.problem();
  MpcTrace trace;
  try {
    trace = run_mpc(p, sc.forecast_model(), options_of(sc));
  } catch (const MpcError& e) {
    switch (e.kind()) {
    case MpcError::Kind::infeasible_at_cap:
      throw CliFailure{infeasible_at_cap, "infeasible-at-cap", e.what()};
    case MpcError::Kind::solver_unknown:
      throw CliFailure{solver_unknown, "solver-unknown", e.what()};
    case MpcError::Kind::non_monotone:
      throw CliFailure{non_monotone, "non-monotone", e.what()};
    case MpcError::Kind::soc_violation:
      throw CliFailure{soc_violation, "soc-violation", e.what()};
    }
    throw;
  }
  if (s.verbose) {
    for (const MpcStep& step : trace.steps) {
      std::cerr << "tau " << step.tau << " eta*=" << format_number(step.eta_star)
                << " e=" << format_number(step.e) << " c=" << format_number(step.c_next)
                << (step.fallback ? " fallback" : "") << "\n";
    }
  }
  const MpcSummary& sum = trace.summary;
  std::cout << "scenario " << sc.name << "\n";
  line("realized_cost", sum.realized_cost);
  line("peak", sum.peak);
  line("terminal_error", sum.terminal_error);
  line("max_violation", sum.max_violation);
  std::cout << "fallbacks " << sum.fallbacks << "\n";
  emit(s, "mpc", mpc_bundle(sc.name, p, trace), mpc_table(p, trace));
  return ok;
}

int run_sweep(const Settings& s, const Common& c, std::vector<double> sizes, int threads) {
  const Scenario sc = load(c);
  if (sizes.empty()) sizes = sc.calibration.sweep_sizes_kwh;
  if (sizes.empty()) {
    throw CliFailure{usage, "usage", "no --sizes given and the scenario has no sweep sizes"};
  }
  const Problem p = sc.problem();
  std::vector<SweepRow> rows;
  try {
    rows = sweep_storage_sizes(p, sizes, p.forecast, options_of(sc), threads);
  } catch (const SweepError& e) {
    if (!e.cause()) throw CliFailure{validation, "validation", e.what()};
    if (*e.cause() == EtaSearchError::Kind::non_monotone) {
      throw CliFailure{non_monotone, "non-monotone", e.what()};
    }
    throw CliFailure{solver_unknown, "solver-unknown", e.what()};
  }
  for (const SweepRow& row : rows) {
    std::cout << "size " << format_number(row.size) << " " << to_string(row.status)
              << " eta_star " << format_number(row.eta_star) << "\n";
  }
  emit(s, "sweep", sweep_bundle(sc.name, rows), sweep_table(rows));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].eta_star > rows[i - 1].eta_star) {
      throw CliFailure{non_monotone, "non-monotone",
                       "eta* grows from size " + format_number(rows[i - 1].size) + " to " +
                           format_number(rows[i].size)};
    }
  }
  return ok;
}

int run_baseline(const Settings& s, const Common& c, std::optional<double> weight) {
  const Scenario sc = load(c);
  const Problem p = sc.problem();
  const EtaSearchResult found = search(sc, p);
  if (!found.solution) {
    throw CliFailure{infeasible_at_cap, "infeasible-at-cap", "no envelope schedule to compare"};
  }
  BaselineReport report;
  report.scenario = sc.name;
  report.problem = p;
  report.weight = weight.value_or(sc.penalty_weight.value_or(default_penalty_weight(p.tariff)));
  report.envelope = *found.solution;

  const BuiltQp built = build_penalty_baseline_qp(p, p.forecast, p.battery.c_0, report.weight);
  const qp::SolveOutcome out = qp::solve(built.program);
  if (out.status == qp::SolveStatus::infeasible) {
    throw CliFailure{infeasible_at_cap, "infeasible-at-cap",
                     "penalty baseline infeasible on the expected trajectory"};
  }
  if (out.status != qp::SolveStatus::optimal) {
    throw CliFailure{solver_unknown, "solver-unknown", "penalty baseline did not converge"};
  }
  report.penalty = extract_solution(out, built.layout, p, p.forecast, p.battery.c_0, 0.0);
  report.slacks = baseline_slacks(out, built.layout);

  std::cout << "scenario " << sc.name << "\n";
  line("weight", report.weight);
  line("eta_star", found.eta_star);
  line("envelope_objective", report.envelope.objective);
  line("penalty_objective", report.penalty.objective);
  line("slack_upper", report.slacks.upper);
  line("slack_lower", report.slacks.lower);
  line("slack_total", report.slacks.total());
  emit(s, "baseline", baseline_bundle(report), baseline_table(report.envelope, report.penalty));
  return ok;
}

// Shipped fixtures are regenerated from these.

Scenario paper_defaults() {
  SyntheticSpec spec;
  spec.name = "paper_defaults";
  Scenario sc = generate_synthetic(spec);
  sc.calibration.peak_reduction_target = 0.8;
  sc.calibration.sweep_sizes_kwh = {800, 1000, 1200, 1400, 1600};
  sc.calibration.note =
      "evening peak width and solar half-width tuned so that r_max falls below 0.8 of the "
      "idle peak and eta* reaches zero at 1600 kWh";
  return sc;
}

Scenario tiny_t6() {
  Scenario sc;
  sc.name = "tiny_t6";
  sc.grid.intervals = 6;
  sc.grid.interval_hours = 0.25;
  sc.battery = {100, 20, 90, 50};
  sc.inverter = {-80, 80};
  sc.tariff = {{0.10, 0.10, 0.25, 0.25, 0.25, 0.10}, 2.0, 1e-3};
  sc.load.d = {40, 60, 50, 30, 70, 45};
  sc.day_ahead = {{0, 10, 30, 25, 5, 0}, {0, 20, 50, 45, 10, 0}, {0, 0, 10, 5, 0, 0}, 1};
  sc.s_true = sc.day_ahead.s_bar;
  sc.forecast_lead = 2;
  sc.seed = 1;
  return sc;
}

// More expected solar than the battery can hold and the inverter can pass
// on, so no envelope growth makes the expected trajectory feasible.
Scenario infeasible_cap() {
  Scenario sc = tiny_t6();
  sc.name = "infeasible_cap";
  sc.inverter = {-4, 4};
  sc.day_ahead = {{0, 60, 60, 60, 0, 0}, {0, 80, 80, 80, 0, 0}, {0, 40, 40, 40, 0, 0}, 1};
  sc.s_true = sc.day_ahead.s_bar;
  return sc;
}

int run_gen(const std::string& preset, const SyntheticSpec& spec, const std::string& output) {
  Scenario sc;
  if (preset.empty()) {
    sc = generate_synthetic(spec);
  } else {
    static const std::map<std::string, Scenario (*)()> presets{
        {"paper_defaults", paper_defaults}, {"tiny_t6", tiny_t6}, {"infeasible_cap", infeasible_cap}};
    const auto it = presets.find(preset);
    if (it == presets.end()) throw CliFailure{usage, "usage", "unknown preset " + preset};
    sc = it->second();
  }
  sc.problem(); // the document must load back
  const std::string text = dump_scenario(sc);
  if (output.empty() || output == "-") {
    std::cout << text;
  } else {
    write_file(output, text);
    std::cerr << "wrote " << output << "\n";
  }
  return ok;
}

int run_validate(const Common& c) {
  const Scenario sc = load(c);
  const Problem p = sc.problem();
  double load = 0.0, solar = 0.0;
  for (int t = 1; t <= p.horizon(); ++t) {
    load += p.load.at(t);
    solar += p.forecast.expected(t);
  }
  std::cout << "scenario " << sc.name << "\n";
  std::cout << "intervals " << p.horizon() << "\n";
  line("interval_hours", p.grid.interval_hours);
  line("capacity_kwh", p.battery.capacity);
  line("load_kwh", load);
  line("expected_solar_kwh", solar);
  if (const auto w = detect_uncertainty_window(p.forecast)) {
    std::cout << "window " << w->t_a << " " << w->t_b << "\n";
  } else {
    std::cout << "window none\n";
  }
  std::cout << "valid\n";
  return ok;
}

int fail(Exit code, const std::string& cls, const std::string& message) {
  std::cerr << "error: " << cls << ": " << message << "\n";
  return code;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Battery scheduling with a soft state-of-charge envelope"};
  app.require_subcommand(1);
  Settings settings;
  app.add_option("--out", settings.out_dir, "output directory")
      ->envname("MGSCHED_OUT_DIR")
      ->capture_default_str();
  app.add_flag("-v,--verbose", settings.verbose, "probe and step traces on stderr");

  Common common;
  auto* schedule = app.add_subcommand("schedule", "single step-1 solve with the eta search");
  add_common(schedule, common);
  auto* mpc = app.add_subcommand("mpc", "full receding-horizon run");
  add_common(mpc, common);

  auto* sweep = app.add_subcommand("sweep", "eta* for a list of storage sizes");
  add_common(sweep, common);
  std::vector<double> sizes;
  int threads = 1;
  sweep->add_option("--sizes", sizes, "storage sizes in kWh, ascending")->delimiter(',');
  sweep->add_option("--threads", threads, "concurrent searches")->check(CLI::PositiveNumber);

  auto* baseline = app.add_subcommand("baseline", "penalty formulation against the envelope");
  add_common(baseline, common);
  std::optional<double> weight;
  baseline->add_option("--weight", weight, "penalty per kWh of limit violation");

  auto* gen = app.add_subcommand("gen", "write a synthetic or preset scenario");
  std::string preset, output;
  SyntheticSpec spec;
  gen->add_option("--preset", preset, "paper_defaults, tiny_t6 or infeasible_cap");
  gen->add_option("-o,--output", output, "destination file, stdout if omitted");
  auto* name = gen->add_option("--name", spec.name, "scenario name");
  auto* intervals = gen->add_option("--intervals", spec.intervals, "T");
  auto* hours = gen->add_option("--interval-hours", spec.interval_hours, "interval length");
  auto* peak = gen->add_option("--peak-solar", spec.peak_solar_kwh, "kWh per interval at noon");
  auto* unc = gen->add_option("--uncertainty", spec.uncertainty, "solar half-width fraction");
  auto* seed = gen->add_option("--seed", spec.seed, "seed for load noise and realized solar");
  for (auto* opt : {name, intervals, hours, peak, unc, seed}) {
    opt->excludes(gen->get_option("--preset"));
  }

  auto* check = app.add_subcommand("validate", "load a scenario and report it");
  add_common(check, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail(usage, "usage", e.what());
  }

  try {
    if (schedule->parsed()) return run_schedule(settings, common);
    if (mpc->parsed()) return run_mpc_cmd(settings, common);
    if (sweep->parsed()) return run_sweep(settings, common, sizes, threads);
    if (baseline->parsed()) return run_baseline(settings, common, weight);
    if (gen->parsed()) return run_gen(preset, spec, output);
    if (check->parsed()) return run_validate(common);
  } catch (const CliFailure& f) {
    return fail(f.code, f.cls, f.message);
  } catch (const ScenarioError& e) {
    return fail(validation, "validation", e.what());
  } catch (const ValidationError& e) {
    return fail(validation, "validation", e.what());
  } catch (const IoError& e) {
    return fail(io, "io", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(validation, "validation", e.what());
  } catch (const std::exception& e) {
    return fail(internal, "internal", e.what());
  }
  return usage;
}
