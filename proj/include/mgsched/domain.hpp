#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgsched {

// All interval quantities (solar, load, inverter decision, grid flow, charge)
// are energies in kWh over one interval. Intervals are numbered 1..T.
//
// Sign convention: e > 0 discharges the battery into the microgrid, e < 0
// charges it. r > 0 imports from the main grid, r < 0 exports.

/// Horizon discretization and the current receding-horizon step.
struct TimeGrid {
  int intervals = 96;           ///< T
  double interval_hours = 0.25; ///< length of one interval in hours
  int tau = 1;                  ///< current step, 1-based

  double horizon_hours() const { return intervals * interval_hours; }
};

/// Solar forecast issued at step `issued_at`, covering t = issued_at..T.
/// Element k of each series refers to interval issued_at + k.
struct ForecastSet {
  std::vector<double> s_bar;
  std::vector<double> s_up;
  std::vector<double> s_lo;
  int issued_at = 1;

  int first() const { return issued_at; }
  int last() const { return issued_at + static_cast<int>(s_bar.size()) - 1; }
  double expected(int t) const { return s_bar[t - issued_at]; }
  double upper(int t) const { return s_up[t - issued_at]; }
  double lower(int t) const { return s_lo[t - issued_at]; }
};

/// Demanded energy per interval, t = 1..T.
struct LoadProfile {
  std::vector<double> d;
  double at(int t) const { return d[t - 1]; }
};

struct Tariff {
  std::vector<double> v; ///< $/kWh per interval, t = 1..T
  double k = 0.0;        ///< demand charge, $ per kWh of peak-interval import
  double alpha = 0.0;    ///< cycling penalty, $/kWh^2

  double price(int t) const { return v[t - 1]; }
};

struct BatteryParams {
  double capacity = 1000.0;
  double c_min = 200.0;
  double c_max = 900.0;
  double c_0 = 500.0; ///< initial charge, also the required terminal charge
};

struct InverterParams {
  double p_min = -250.0; ///< kW, negative charges the battery
  double p_max = 250.0;  ///< kW

  double e_min(double interval_hours) const { return p_min * interval_hours; }
  double e_max(double interval_hours) const { return p_max * interval_hours; }
};

/// Validated scheduling problem. Construct through validate_problem().
struct Problem {
  TimeGrid grid;
  ForecastSet forecast; ///< forecast as seen at grid.tau
  LoadProfile load;
  Tariff tariff;
  BatteryParams battery;
  InverterParams inverter;

  int horizon() const { return grid.intervals; }
  double e_min() const { return inverter.e_min(grid.interval_hours); }
  double e_max() const { return inverter.e_max(grid.interval_hours); }
};

/// Schedule over t = tau..T. Series e and r hold T - tau + 1 entries;
/// charge trajectories hold T - tau + 2 entries (start of tau through T+1).
struct ScheduleSolution {
  int tau = 1;
  std::vector<double> e;
  std::vector<double> r;
  double r_max = 0.0;
  std::vector<double> c_bar;
  std::vector<double> c_up;
  std::vector<double> c_lo;
  double objective = 0.0;
  double eta_used = 0.0;

  int last() const { return tau + static_cast<int>(e.size()) - 1; }
};

/// A violated invariant. `field` names the offending input and `interval`
/// the 1-based interval index when the violation is local to one interval.
class ValidationError : public std::runtime_error {
public:
  ValidationError(std::string field, const std::string& what,
                  std::optional<int> interval = std::nullopt)
      : std::runtime_error(what), field_(std::move(field)), interval_(interval) {}

  const std::string& field() const { return field_; }
  std::optional<int> interval() const { return interval_; }

private:
  std::string field_;
  std::optional<int> interval_;
};

Problem validate_problem(const TimeGrid& grid, const ForecastSet& forecast,
                         const LoadProfile& load, const Tariff& tariff,
                         const BatteryParams& battery, const InverterParams& inverter);

/// Checks a forecast against the grid: coverage tau..T, ordering
/// s_lo <= s_bar <= s_up and non-negativity.
void validate_forecast(const TimeGrid& grid, const ForecastSet& forecast);

void validate_battery(const BatteryParams& battery);

/// c(t+1) = c(t) + s(t) - e(t)
constexpr double step_charge(double c, double s, double e) { return c + s - e; }

/// r(t) = d(t) - e(t)
constexpr double grid_flow(double d, double e) { return d - e; }

/// Energy charge, demand charge and cycling penalty of a schedule.
double evaluate_cost(const ScheduleSolution& solution, const Tariff& tariff);

/// Cost of an arbitrary decision sequence starting at interval `tau`; the
/// peak is max(0, max_t r(t)).
double evaluate_cost(int tau, const std::vector<double>& e, const std::vector<double>& r,
                     const Tariff& tariff);

/// Charge trajectory c(tau..T+1) under solar `s` (indexed from tau) and decisions `e`.
std::vector<double> charge_trajectory(double c_start, const std::vector<double>& s,
                                      const std::vector<double>& e);

} // namespace mgsched
