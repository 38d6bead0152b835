#pragma once

#include "mgsched/domain.hpp"
#include "mgsched/qp.hpp"

#include <optional>
#include <string>

namespace mgsched {

/// Protection applied to the impending decision e(tau).
enum class RobustGuard {
  next_step,    ///< c(tau) + s_up(tau) - c_max <= e(tau) <= c(tau) + s_lo(tau) - c_min
  shift_by_one, ///< envelope clock starts at tau + 1, so c(tau + 1) obeys the hard limits
  none,
};

std::string to_string(RobustGuard guard);
RobustGuard parse_robust_guard(const std::string& text); ///< throws std::invalid_argument

struct BuildOptions {
  RobustGuard robust_guard = RobustGuard::next_step;
  bool terminal_on_scenarios = false;
  bool enforce_hard_on_expected = true;
};

/// Span of intervals with separated solar bounds.
struct UncertaintyWindow {
  int t_a = 0;
  int t_b = 0;
};

/// First and last interval whose bound width exceeds `width_tol`;
/// std::nullopt when the forecast is certain everywhere.
std::optional<UncertaintyWindow> detect_uncertainty_window(const ForecastSet& forecast,
                                                           double width_tol = 1e-9);

struct ChargeBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/**
 * Soft state-of-charge envelope at interval t for a plan made at step tau.
 *
 *   t <= t_a        : hard limits
 *   t_a < t <= t_b  : limits widened by (t - tau) * eta
 *   t > t_b         : frozen at the t_b widening
 *
 * Without a window the envelope is the hard limits.
 */
ChargeBounds envelope_bounds(const BatteryParams& battery, double eta,
                             std::optional<UncertaintyWindow> window, int tau, int t);

/// Raw interval allowed for e(tau) by the next-step robustness bound.
ChargeBounds next_step_bounds(const BatteryParams& battery, double c_now, double s_lo, double s_up);

/// Where each semantic variable lives in a built QP.
struct VariableLayout {
  int tau = 1;
  int count_e = 0;
  Eigen::Index r_max = 0;
  Eigen::Index slack_up = -1; ///< first upper-violation slack (penalty baseline only)
  Eigen::Index slack_lo = -1;
  int slack_count = 0;

  Eigen::Index e(int t) const { return t - tau; }
  Eigen::Index variables() const { return count_e + 1 + 2 * slack_count; }
};

struct BuiltQp {
  qp::QuadraticProgram program;
  VariableLayout layout;
};

/// Scheduling QP over t = tau..T with the soft envelope on the upper and
/// lower solar scenarios. tau is taken from forecast.issued_at.
BuiltQp build_qp(const Problem& problem, const ForecastSet& forecast, double c_now, double eta,
                 const BuildOptions& options = {});

/// Penalty alternative: hard limits on the expected trajectory only, with
/// scenario limit violations priced at `weight` per kWh through slacks.
BuiltQp build_penalty_baseline_qp(const Problem& problem, const ForecastSet& forecast,
                                  double c_now, std::optional<double> weight = std::nullopt);

/// 10 * max(v)
double default_penalty_weight(const Tariff& tariff);

/// Rebuilds r and the three charge trajectories from the solved e.
/// Throws std::invalid_argument for non-optimal outcomes.
ScheduleSolution extract_solution(const qp::SolveOutcome& outcome, const VariableLayout& layout,
                                  const Problem& problem, const ForecastSet& forecast,
                                  double c_now, double eta);

struct SlackTotals {
  double upper = 0.0;
  double lower = 0.0;
  double total() const { return upper + lower; }
};

/// Sum of scenario violation slacks in a solved penalty baseline.
SlackTotals baseline_slacks(const qp::SolveOutcome& outcome, const VariableLayout& layout);

} // namespace mgsched
