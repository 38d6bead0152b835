#pragma once

#include "mgsched/domain.hpp"
#include "mgsched/eta_search.hpp"
#include "mgsched/forecast_model.hpp"
#include "mgsched/schedule_builder.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgsched {

/// Targets a fixture was tuned for, kept alongside the data.
struct Calibration {
  std::optional<double> peak_reduction_target; ///< optimized r_max / idle r_max
  std::vector<double> sweep_sizes_kwh;
  std::string note;
};

/// Everything needed to run one experiment.
struct Scenario {
  std::string name;
  TimeGrid grid;
  BatteryParams battery;
  InverterParams inverter;
  Tariff tariff;
  LoadProfile load;
  ForecastSet day_ahead;                  ///< issued at interval 1
  std::optional<std::vector<double>> s_true; ///< realized solar, drawn from `seed` if absent
  EtaSearchConfig search;
  BuildOptions build;
  std::optional<double> penalty_weight;
  int forecast_lead = 16; ///< intervals over which forecast bounds close on the truth
  std::uint64_t seed = 0;
  Calibration calibration;

  /// Validated step-1 problem.
  Problem problem() const;

  /// s_true if given, otherwise a draw inside the day-ahead bounds from `seed`.
  std::vector<double> truth() const;

  BlendedForecastModel forecast_model() const;
};

/// Malformed or invalid scenario input. `field` is a JSON path such as
/// "load.d_kwh"; `line` is set for syntax errors.
class ScenarioError : public std::runtime_error {
public:
  ScenarioError(std::string field, const std::string& what, std::optional<int> line = std::nullopt)
      : std::runtime_error(what), field_(std::move(field)), line_(line) {}

  const std::string& field() const { return field_; }
  std::optional<int> line() const { return line_; }

private:
  std::string field_;
  std::optional<int> line_;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Strict parse: unknown keys, missing keys and invariant violations throw
/// ScenarioError. `source` prefixes diagnostics.
Scenario parse_scenario(const std::string& text, const std::string& source = "<input>");
Scenario load_scenario(const std::string& path);

std::string dump_scenario(const Scenario& scenario);
void save_scenario(const std::string& path, const Scenario& scenario);

/// Shapes for a synthetic day.
struct SyntheticSpec {
  std::string name = "synthetic";
  int intervals = 96;
  double interval_hours = 0.25;

  double peak_solar_kwh = 60.0; ///< per interval at solar noon
  double sunrise_hour = 6.0;
  double sunset_hour = 18.0;
  double uncertainty = 0.3125; ///< half-width of the solar bounds as a fraction of s_bar

  double base_load_kwh = 45.0;
  double morning_peak_kwh = 25.0; ///< extra load at morning_peak_hour
  double morning_peak_hour = 8.0;
  double morning_peak_width_hours = 1.2;
  double evening_peak_kwh = 50.0;
  double evening_peak_hour = 19.0;
  double evening_peak_width_hours = 0.75;
  double load_noise = 0.03;       ///< relative, seeded

  double offpeak_price = 0.10;
  double onpeak_price = 0.25;
  double onpeak_start_hour = 16.0;
  double onpeak_end_hour = 21.0;
  double k = 20.0;
  double alpha = 5e-4;

  BatteryParams battery;
  InverterParams inverter;
  std::uint64_t seed = 1;
};

/// Deterministic in spec.seed. The realized solar is stored in the scenario.
Scenario generate_synthetic(const SyntheticSpec& spec);

} // namespace mgsched
