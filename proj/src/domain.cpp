#include "mgsched/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mgsched {

namespace {

std::string describe(const std::string& field, const std::string& detail) {
  return field + ": " + detail;
}

void require_length(const std::string& field, std::size_t actual, std::size_t expected) {
  if (actual != expected) {
    std::ostringstream os;
    os << "length " << actual << " does not match expected " << expected;
    throw ValidationError(field, describe(field, os.str()));
  }
}

void require_finite(const std::string& field, const std::vector<double>& xs, int first_index) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i])) {
      const int t = first_index + static_cast<int>(i);
      throw ValidationError(field, describe(field, "non-finite value at interval " + std::to_string(t)), t);
    }
  }
}

} // namespace

void validate_battery(const BatteryParams& b) {
  if (!(std::isfinite(b.capacity) && std::isfinite(b.c_min) && std::isfinite(b.c_max) &&
        std::isfinite(b.c_0))) {
    throw ValidationError("battery", "battery: non-finite parameter");
  }
  if (b.c_min < 0.0) {
    throw ValidationError("c_min", "c_min: must be >= 0");
  }
  if (!(b.c_min < b.c_max)) {
    throw ValidationError("c_min", "bound ordering: c_min must be < c_max");
  }
  if (b.c_max > b.capacity) {
    throw ValidationError("c_max", "bound ordering: c_max must be <= capacity");
  }
  if (b.c_0 < b.c_min || b.c_0 > b.c_max) {
    throw ValidationError("c_0", "c_0: must lie within [c_min, c_max]");
  }
}

void validate_forecast(const TimeGrid& grid, const ForecastSet& f) {
  if (f.issued_at < 1 || f.issued_at > grid.intervals) {
    throw ValidationError("issued_at", "issued_at: must lie within 1..T");
  }
  const auto expected = static_cast<std::size_t>(grid.intervals - f.issued_at + 1);
  require_length("s_bar", f.s_bar.size(), expected);
  require_length("s_up", f.s_up.size(), expected);
  require_length("s_lo", f.s_lo.size(), expected);
  require_finite("s_bar", f.s_bar, f.issued_at);
  require_finite("s_up", f.s_up, f.issued_at);
  require_finite("s_lo", f.s_lo, f.issued_at);
  for (int t = f.first(); t <= f.last(); ++t) {
    const std::string at = " at interval " + std::to_string(t);
    if (f.lower(t) < 0.0) {
      throw ValidationError("s_lo", "s_lo: negative solar energy" + at, t);
    }
    if (f.lower(t) > f.upper(t)) {
      throw ValidationError("s_lo", "bound ordering: s_lo > s_up" + at, t);
    }
    if (f.expected(t) < f.lower(t)) {
      throw ValidationError("s_bar", "bound ordering: s_bar < s_lo" + at, t);
    }
    if (f.expected(t) > f.upper(t)) {
      throw ValidationError("s_bar", "bound ordering: s_bar > s_up" + at, t);
    }
  }
}

Problem validate_problem(const TimeGrid& grid, const ForecastSet& forecast,
                         const LoadProfile& load, const Tariff& tariff,
                         const BatteryParams& battery, const InverterParams& inverter) {
  if (grid.intervals < 1) {
    throw ValidationError("T", "T: must be >= 1");
  }
  if (!(grid.interval_hours > 0.0) || !std::isfinite(grid.interval_hours)) {
    throw ValidationError("delta_t", "delta_t: must be > 0");
  }
  if (grid.tau < 1 || grid.tau > grid.intervals) {
    throw ValidationError("tau", "tau: must lie within 1..T");
  }
  const auto T = static_cast<std::size_t>(grid.intervals);

  require_length("d", load.d.size(), T);
  require_finite("d", load.d, 1);
  for (int t = 1; t <= grid.intervals; ++t) {
    if (load.at(t) < 0.0) {
      throw ValidationError("d", "d: negative demand at interval " + std::to_string(t), t);
    }
  }

  require_length("v", tariff.v.size(), T);
  require_finite("v", tariff.v, 1);
  if (!(tariff.k >= 0.0)) {
    throw ValidationError("k", "k: must be >= 0");
  }
  if (!(tariff.alpha >= 0.0)) {
    throw ValidationError("alpha", "alpha: must be >= 0");
  }

  validate_battery(battery);

  if (!(inverter.p_min < inverter.p_max)) {
    throw ValidationError("p_min", "bound ordering: p_min must be < p_max");
  }

  if (forecast.issued_at != grid.tau) {
    throw ValidationError("issued_at", "issued_at: forecast step differs from grid tau");
  }
  validate_forecast(grid, forecast);

  return Problem{grid, forecast, load, tariff, battery, inverter};
}

double evaluate_cost(int tau, const std::vector<double>& e, const std::vector<double>& r,
                     const Tariff& tariff) {
  double energy = 0.0;
  double cycling = 0.0;
  double peak = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const int t = tau + static_cast<int>(i);
    energy += tariff.price(t) * r[i];
    cycling += e[i] * e[i];
    peak = std::max(peak, r[i]);
  }
  return energy + tariff.k * peak + tariff.alpha * cycling;
}

double evaluate_cost(const ScheduleSolution& s, const Tariff& tariff) {
  double energy = 0.0;
  double cycling = 0.0;
  for (std::size_t i = 0; i < s.e.size(); ++i) {
    energy += tariff.price(s.tau + static_cast<int>(i)) * s.r[i];
    cycling += s.e[i] * s.e[i];
  }
  return energy + tariff.k * s.r_max + tariff.alpha * cycling;
}

std::vector<double> charge_trajectory(double c_start, const std::vector<double>& s,
                                      const std::vector<double>& e) {
  std::vector<double> c(e.size() + 1);
  c[0] = c_start;
  for (std::size_t i = 0; i < e.size(); ++i) {
    c[i + 1] = step_charge(c[i], s[i], e[i]);
  }
  return c;
}

} // namespace mgsched
