#pragma once

#include "mgsched/domain.hpp"
#include "mgsched/eta_search.hpp"
#include "mgsched/mpc.hpp"
#include "mgsched/schedule_builder.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mgsched {

/// Fixed decimal with at least 9 significant digits. Zero prints as "0".
std::string format_number(double x);

// Tabular exports: header plus one row per interval t = 1..T. Charge columns
// hold the value at the end of interval t, i.e. c(t + 1).

/// t,d,v,s_bar,s_up,s_lo,e,r,c_bar,c_up,c_lo,env_lo,env_up
/// Rows before the schedule's first step are left empty in the decision and
/// charge columns.
std::string schedule_table(const Problem& problem, const ScheduleSolution& solution,
                           std::optional<UncertaintyWindow> window);

/// t,d,v,s_bar,s_up,s_lo,s_true,e,r,c,eta_star,fallback
/// Forecast columns are the day-ahead forecast.
std::string mpc_table(const Problem& problem, const MpcTrace& trace);

/// size_kwh,status,eta_star,probes
std::string sweep_table(const std::vector<SweepRow>& rows);

/// t,e_envelope,c_up_envelope,c_lo_envelope,e_penalty,c_up_penalty,c_lo_penalty
std::string baseline_table(const ScheduleSolution& envelope, const ScheduleSolution& penalty);

// JSON bundles. Doubles are written with round-trip precision. Timings sit
// under "seconds" keys and are the only run-dependent values.

struct ScheduleReport {
  std::string scenario;
  Problem problem;
  EtaSearchResult result;
  std::optional<UncertaintyWindow> window;
  double idle_peak = 0.0; ///< max(0, max d) with the battery idle
};

std::string schedule_bundle(const ScheduleReport& report);

std::string mpc_bundle(const std::string& scenario, const Problem& problem, const MpcTrace& trace);

std::string sweep_bundle(const std::string& scenario, const std::vector<SweepRow>& rows);

struct BaselineReport {
  std::string scenario;
  Problem problem;
  double weight = 0.0;
  ScheduleSolution envelope; ///< at eta*
  ScheduleSolution penalty;  ///< hard limits on s_bar, priced scenario slacks
  SlackTotals slacks;
};

std::string baseline_bundle(const BaselineReport& report);

struct BundleCheck {
  int checked = 0;        ///< objectives re-evaluated
  double max_error = 0.0; ///< largest relative mismatch
};

/// Re-evaluates every recorded cost in a bundle from its decisions and the
/// embedded tariff. Throws std::invalid_argument on malformed input.
BundleCheck check_bundle(const std::string& text);

} // namespace mgsched
