#include "mgsched/schedule_builder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mgsched {

using Eigen::Index;

std::string to_string(RobustGuard guard) {
  switch (guard) {
  case RobustGuard::next_step:
    return "next-step";
  case RobustGuard::shift_by_one:
    return "shift-by-one";
  case RobustGuard::none:
    return "none";
  }
  return "none";
}

RobustGuard parse_robust_guard(const std::string& text) {
  if (text == "next-step") return RobustGuard::next_step;
  if (text == "shift-by-one") return RobustGuard::shift_by_one;
  if (text == "none") return RobustGuard::none;
  throw std::invalid_argument("unknown robust guard '" + text + "' (expected next-step, shift-by-one or none)");
}

std::optional<UncertaintyWindow> detect_uncertainty_window(const ForecastSet& f, double width_tol) {
  std::optional<UncertaintyWindow> window;
  for (int t = f.first(); t <= f.last(); ++t) {
    if (f.upper(t) - f.lower(t) > width_tol) {
      if (!window) {
        window = UncertaintyWindow{t, t};
      }
      window->t_b = t;
    }
  }
  return window;
}

ChargeBounds envelope_bounds(const BatteryParams& battery, double eta,
                             std::optional<UncertaintyWindow> window, int tau, int t) {
  if (!window || t <= window->t_a) {
    return {battery.c_min, battery.c_max};
  }
  const int clock = std::min(t, window->t_b) - tau;
  const double widen = std::max(0, clock) * eta;
  return {battery.c_min - widen, battery.c_max + widen};
}

ChargeBounds next_step_bounds(const BatteryParams& battery, double c_now, double s_lo, double s_up) {
  return {c_now + s_up - battery.c_max, c_now + s_lo - battery.c_min};
}

double default_penalty_weight(const Tariff& tariff) {
  double vmax = 0.0;
  for (double v : tariff.v) {
    vmax = std::max(vmax, v);
  }
  return 10.0 * vmax;
}

namespace {

/// Sparse constraint rows collected during building, assembled once.
class RowSet {
public:
  explicit RowSet(Index n) : n_(n) {}

  struct Row {
    std::vector<std::pair<Index, double>> terms;
    double rhs = 0.0;
  };

  Row& add(double rhs) {
    rows_.push_back(Row{{}, rhs});
    return rows_.back();
  }

  Eigen::MatrixXd matrix() const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Index>(rows_.size()), n_);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      for (const auto& [j, v] : rows_[i].terms) {
        M(static_cast<Index>(i), j) += v;
      }
    }
    return M;
  }

  Eigen::VectorXd rhs() const {
    Eigen::VectorXd b(static_cast<Index>(rows_.size()));
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      b(static_cast<Index>(i)) = rows_[i].rhs;
    }
    return b;
  }

private:
  Index n_;
  std::vector<Row> rows_;
};

/// Shared state for both builders: remaining horizon, cumulative solar.
struct Horizon {
  int tau;
  int T;
  int count;                 ///< T - tau + 1
  std::vector<double> cum_bar; ///< cum[k] = sum of s over tau..tau+k-1
  std::vector<double> cum_up;
  std::vector<double> cum_lo;

  Horizon(const Problem& problem, const ForecastSet& f) : tau(f.issued_at), T(problem.horizon()) {
    if (f.last() != T) {
      throw std::invalid_argument("forecast does not cover the remaining horizon");
    }
    count = T - tau + 1;
    cum_bar.assign(count + 1, 0.0);
    cum_up.assign(count + 1, 0.0);
    cum_lo.assign(count + 1, 0.0);
    for (int k = 0; k < count; ++k) {
      cum_bar[k + 1] = cum_bar[k] + f.s_bar[k];
      cum_up[k + 1] = cum_up[k] + f.s_up[k];
      cum_lo[k + 1] = cum_lo[k] + f.s_lo[k];
    }
  }
};

/// Adds sign * sum_{k=tau}^{t-1} e(k) to a row.
void add_cumulative(RowSet::Row& row, const VariableLayout& layout, int t, double sign) {
  for (int k = layout.tau; k < t; ++k) {
    row.terms.emplace_back(layout.e(k), sign);
  }
}

/// lower <= c_now + cum_s(t) - E(t) <= upper, for the charge at the start of t.
void add_charge_bounds(RowSet& rows, const VariableLayout& layout, int t, double c_now,
                       double cum_s, double lower, double upper) {
  auto& up = rows.add(upper - c_now - cum_s); // -E <= upper - c_now - cum
  add_cumulative(up, layout, t, -1.0);
  auto& lo = rows.add(c_now + cum_s - lower); //  E <= c_now + cum - lower
  add_cumulative(lo, layout, t, 1.0);
}

void check_c_now(const BatteryParams& battery, double c_now) {
  constexpr double slack = 1e-6;
  if (!std::isfinite(c_now) || c_now < battery.c_min - slack || c_now > battery.c_max + slack) {
    throw std::invalid_argument("current charge outside [c_min, c_max]");
  }
}

/// Rows and costs common to the scheduling QP and the penalty baseline:
/// inverter limits, hard limits on the expected trajectory, terminal charge,
/// peak epigraph and the energy/cycling cost.
void add_common(const Problem& problem, const Horizon& hz, const VariableLayout& layout,
                double c_now, bool hard_on_expected, qp::QuadraticProgram& qp, RowSet& rows,
                RowSet& eqs) {
  const double e_lo = problem.e_min();
  const double e_hi = problem.e_max();
  const auto& battery = problem.battery;

  double peak_cap = 0.0;
  for (int t = hz.tau; t <= hz.T; ++t) {
    const Index i = layout.e(t);
    const double price = problem.tariff.price(t);
    const double d = problem.load.at(t);
    qp.P(i, i) = 2.0 * problem.tariff.alpha;
    qp.q(i) = -price;
    qp.constant += price * d;

    rows.add(e_hi).terms.emplace_back(i, 1.0);
    rows.add(-e_lo).terms.emplace_back(i, -1.0);

    auto& peak = rows.add(-d); // d - e <= r_max
    peak.terms.emplace_back(i, -1.0);
    peak.terms.emplace_back(layout.r_max, -1.0);
    peak_cap = std::max(peak_cap, d - e_lo);
  }
  qp.q(layout.r_max) = problem.tariff.k;
  rows.add(0.0).terms.emplace_back(layout.r_max, -1.0);
  // Valid upper bound on the peak; keeps every variable bounded.
  rows.add(peak_cap).terms.emplace_back(layout.r_max, 1.0);

  if (hard_on_expected) {
    for (int t = hz.tau + 1; t <= hz.T + 1; ++t) {
      add_charge_bounds(rows, layout, t, c_now, hz.cum_bar[t - hz.tau], battery.c_min,
                        battery.c_max);
    }
  }

  auto& terminal = eqs.add(c_now + hz.cum_bar[hz.count] - battery.c_0);
  add_cumulative(terminal, layout, hz.T + 1, 1.0);
}

void assemble(qp::QuadraticProgram& qp, const RowSet& rows, const RowSet& eqs) {
  qp.G = rows.matrix();
  qp.h = rows.rhs();
  qp.A = eqs.matrix();
  qp.b = eqs.rhs();
}

} // namespace

BuiltQp build_qp(const Problem& problem, const ForecastSet& forecast, double c_now, double eta,
                 const BuildOptions& options) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("eta must be finite and >= 0");
  }
  check_c_now(problem.battery, c_now);
  const Horizon hz(problem, forecast);

  BuiltQp out;
  auto& layout = out.layout;
  layout.tau = hz.tau;
  layout.count_e = hz.count;
  layout.r_max = hz.count;
  out.program = qp::QuadraticProgram(layout.variables());

  RowSet rows(layout.variables());
  RowSet eqs(layout.variables());
  add_common(problem, hz, layout, c_now, options.enforce_hard_on_expected, out.program, rows, eqs);

  const auto window = detect_uncertainty_window(forecast);
  const int clock_start = options.robust_guard == RobustGuard::shift_by_one ? hz.tau + 1 : hz.tau;
  for (int t = hz.tau + 1; t <= hz.T + 1; ++t) {
    const ChargeBounds env = envelope_bounds(problem.battery, eta, window, clock_start, t);
    const int k = t - hz.tau;
    add_charge_bounds(rows, layout, t, c_now, hz.cum_up[k], env.lower, env.upper);
    add_charge_bounds(rows, layout, t, c_now, hz.cum_lo[k], env.lower, env.upper);
  }

  if (options.robust_guard == RobustGuard::next_step) {
    const ChargeBounds g = next_step_bounds(problem.battery, c_now, forecast.lower(hz.tau),
                                       forecast.upper(hz.tau));
    rows.add(-g.lower).terms.emplace_back(layout.e(hz.tau), -1.0);
    rows.add(g.upper).terms.emplace_back(layout.e(hz.tau), 1.0);
  }

  if (options.terminal_on_scenarios) {
    auto& up = eqs.add(c_now + hz.cum_up[hz.count] - problem.battery.c_0);
    add_cumulative(up, layout, hz.T + 1, 1.0);
    auto& lo = eqs.add(c_now + hz.cum_lo[hz.count] - problem.battery.c_0);
    add_cumulative(lo, layout, hz.T + 1, 1.0);
  }

  assemble(out.program, rows, eqs);
  return out;
}

BuiltQp build_penalty_baseline_qp(const Problem& problem, const ForecastSet& forecast,
                                  double c_now, std::optional<double> weight) {
  check_c_now(problem.battery, c_now);
  const double w = weight.value_or(default_penalty_weight(problem.tariff));
  if (!(w >= 0.0)) {
    throw std::invalid_argument("penalty weight must be >= 0");
  }
  const Horizon hz(problem, forecast);

  BuiltQp out;
  auto& layout = out.layout;
  layout.tau = hz.tau;
  layout.count_e = hz.count;
  layout.r_max = hz.count;
  layout.slack_count = hz.count; // one per charge point t = tau+1..T+1
  layout.slack_up = hz.count + 1;
  layout.slack_lo = layout.slack_up + layout.slack_count;
  out.program = qp::QuadraticProgram(layout.variables());

  RowSet rows(layout.variables());
  RowSet eqs(layout.variables());
  add_common(problem, hz, layout, c_now, true, out.program, rows, eqs);

  const auto& battery = problem.battery;
  const double e_lo = problem.e_min();
  const double e_hi = problem.e_max();
  for (int t = hz.tau + 1; t <= hz.T + 1; ++t) {
    const int k = t - hz.tau;
    const Index su = layout.slack_up + (k - 1);
    const Index sl = layout.slack_lo + (k - 1);
    out.program.q(su) = w;
    out.program.q(sl) = w;

    // slack_up >= c_up(t) - c_max
    auto& up = rows.add(battery.c_max - c_now - hz.cum_up[k]);
    add_cumulative(up, layout, t, -1.0);
    up.terms.emplace_back(su, -1.0);
    rows.add(0.0).terms.emplace_back(su, -1.0);
    rows.add(std::max(0.0, c_now + hz.cum_up[k] - k * e_lo - battery.c_max))
        .terms.emplace_back(su, 1.0);

    // slack_lo >= c_min - c_lo(t)
    auto& lo = rows.add(c_now + hz.cum_lo[k] - battery.c_min);
    add_cumulative(lo, layout, t, 1.0);
    lo.terms.emplace_back(sl, -1.0);
    rows.add(0.0).terms.emplace_back(sl, -1.0);
    rows.add(std::max(0.0, battery.c_min - c_now - hz.cum_lo[k] + k * e_hi))
        .terms.emplace_back(sl, 1.0);
  }

  assemble(out.program, rows, eqs);
  return out;
}

ScheduleSolution extract_solution(const qp::SolveOutcome& outcome, const VariableLayout& layout,
                                  const Problem& problem, const ForecastSet& forecast,
                                  double c_now, double eta) {
  if (outcome.status != qp::SolveStatus::optimal) {
    throw std::invalid_argument("cannot extract a schedule from a " + qp::to_string(outcome.status) +
                                " outcome");
  }
  if (outcome.x.size() != layout.variables() || forecast.issued_at != layout.tau) {
    throw std::invalid_argument("outcome does not match the variable layout");
  }
  ScheduleSolution sol;
  sol.tau = layout.tau;
  sol.eta_used = eta;
  sol.e.resize(layout.count_e);
  sol.r.resize(layout.count_e);
  sol.r_max = 0.0;
  for (int k = 0; k < layout.count_e; ++k) {
    const int t = layout.tau + k;
    sol.e[k] = outcome.x(layout.e(t));
    sol.r[k] = grid_flow(problem.load.at(t), sol.e[k]);
    sol.r_max = std::max(sol.r_max, sol.r[k]);
  }
  sol.c_bar = charge_trajectory(c_now, forecast.s_bar, sol.e);
  sol.c_up = charge_trajectory(c_now, forecast.s_up, sol.e);
  sol.c_lo = charge_trajectory(c_now, forecast.s_lo, sol.e);
  sol.objective = evaluate_cost(sol, problem.tariff);
  return sol;
}

SlackTotals baseline_slacks(const qp::SolveOutcome& outcome, const VariableLayout& layout) {
  if (outcome.status != qp::SolveStatus::optimal || layout.slack_count == 0) {
    throw std::invalid_argument("no baseline slacks in this outcome");
  }
  SlackTotals totals;
  for (int k = 0; k < layout.slack_count; ++k) {
    totals.upper += std::max(0.0, outcome.x(layout.slack_up + k));
    totals.lower += std::max(0.0, outcome.x(layout.slack_lo + k));
  }
  return totals;
}

} // namespace mgsched
