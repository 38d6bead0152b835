#include "mgsched/forecast_model.hpp"
#include "mgsched/scenario.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace mgsched {

namespace {

double bump(double hour, double center, double width) {
  const double z = (hour - center) / width;
  return std::exp(-0.5 * z * z);
}

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::invalid_argument(std::string(what) + " must be > 0");
  }
}

void require_nonnegative(double x, const char* what) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw std::invalid_argument(std::string(what) + " must be >= 0");
  }
}

} // namespace

Scenario generate_synthetic(const SyntheticSpec& spec) {
  if (spec.intervals < 1) throw std::invalid_argument("intervals must be >= 1");
  require_positive(spec.interval_hours, "interval_hours");
  require_nonnegative(spec.peak_solar_kwh, "peak_solar_kwh");
  require_nonnegative(spec.uncertainty, "uncertainty");
  if (spec.uncertainty > 1.0) throw std::invalid_argument("uncertainty must be <= 1");
  require_nonnegative(spec.base_load_kwh, "base_load_kwh");
  require_nonnegative(spec.morning_peak_kwh, "morning_peak_kwh");
  require_nonnegative(spec.evening_peak_kwh, "evening_peak_kwh");
  require_nonnegative(spec.load_noise, "load_noise");
  require_positive(spec.morning_peak_width_hours, "morning_peak_width_hours");
  require_positive(spec.evening_peak_width_hours, "evening_peak_width_hours");
  if (!(spec.sunrise_hour < spec.sunset_hour)) {
    throw std::invalid_argument("sunrise must precede sunset");
  }

  Scenario sc;
  sc.name = spec.name;
  sc.grid.intervals = spec.intervals;
  sc.grid.interval_hours = spec.interval_hours;
  sc.grid.tau = 1;
  sc.battery = spec.battery;
  sc.inverter = spec.inverter;
  sc.tariff.k = spec.k;
  sc.tariff.alpha = spec.alpha;
  sc.seed = spec.seed;
  sc.day_ahead.issued_at = 1;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double day = spec.sunset_hour - spec.sunrise_hour;

  for (int t = 1; t <= spec.intervals; ++t) {
    const double hour = (t - 0.5) * spec.interval_hours; // interval midpoint

    double solar = 0.0;
    if (hour > spec.sunrise_hour && hour < spec.sunset_hour) {
      const double x = std::sin(M_PI * (hour - spec.sunrise_hour) / day);
      solar = spec.peak_solar_kwh * x * x;
    }
    sc.day_ahead.s_bar.push_back(solar);
    sc.day_ahead.s_up.push_back(solar * (1.0 + spec.uncertainty));
    sc.day_ahead.s_lo.push_back(solar * (1.0 - spec.uncertainty));

    double load =
        spec.base_load_kwh +
        spec.morning_peak_kwh * bump(hour, spec.morning_peak_hour, spec.morning_peak_width_hours) +
        spec.evening_peak_kwh * bump(hour, spec.evening_peak_hour, spec.evening_peak_width_hours);
    load *= 1.0 + spec.load_noise * noise(rng);
    sc.load.d.push_back(std::max(0.0, load));

    const bool onpeak = hour >= spec.onpeak_start_hour && hour < spec.onpeak_end_hour;
    sc.tariff.v.push_back(onpeak ? spec.onpeak_price : spec.offpeak_price);
  }
  sc.s_true = draw_true_solar(sc.day_ahead, spec.seed);
  sc.problem(); // validates
  return sc;
}

} // namespace mgsched
