#pragma once

#include "mgsched/domain.hpp"
#include "mgsched/eta_search.hpp"
#include "mgsched/forecast_model.hpp"
#include "mgsched/qp.hpp"
#include "mgsched/schedule_builder.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgsched {

struct MpcOptions {
  BuildOptions build;
  EtaSearchConfig search;
  qp::Tolerances tol;
  /// Called with every completed step search and the forecast it used.
  std::function<void(const ForecastSet&, const EtaSearchResult&)> on_search;
};

struct MpcStep {
  int tau = 1;
  double eta_star = 0.0;
  EtaSearchStatus status = EtaSearchStatus::found;
  std::vector<double> plan; ///< planned e(tau..T)
  double e = 0.0;           ///< implemented e(tau)
  double s = 0.0;           ///< realized solar in tau
  double c_next = 0.0;      ///< realized c(tau + 1)
  double objective = 0.0;   ///< planned cost of the remaining horizon
  double seconds = 0.0;
  int probes = 0;
  bool fallback = false; ///< solver verdict unknown, previous plan reused
};

struct MpcSummary {
  double realized_cost = 0.0;  ///< cost of the implemented decisions
  double peak = 0.0;           ///< max(0, max r) over the day
  double terminal_error = 0.0; ///< |c(T+1) - c_0|
  double max_violation = 0.0;  ///< worst excursion of realized charge past the hard limits
  int fallbacks = 0;
  double seconds = 0.0;
};

struct MpcTrace {
  std::vector<MpcStep> steps;
  std::vector<double> charge; ///< realized c(1..T+1)
  std::vector<double> e;      ///< implemented decisions, t = 1..T
  std::vector<double> r;
  MpcSummary summary;
};

class MpcError : public std::runtime_error {
public:
  enum class Kind { infeasible_at_cap, solver_unknown, non_monotone, soc_violation };

  MpcError(Kind kind, int tau, const std::string& what)
      : std::runtime_error(what), kind_(kind), tau_(tau) {}

  Kind kind() const { return kind_; }
  int tau() const { return tau_; }

private:
  Kind kind_;
  int tau_;
};

/// Receding-horizon loop: at every step re-forecast, search eta*, implement
/// e(tau) and advance the charge with the realized solar. A realized charge
/// outside the hard limits (beyond tol.feas_tol) throws soc_violation.
MpcTrace run_mpc(const Problem& problem, const ForecastModel& model, const MpcOptions& options);

/// Battery of `size` kWh with the template's limits kept as fractions of capacity.
BatteryParams scale_battery(const BatteryParams& battery, double size);

struct SweepRow {
  double size = 0.0;
  EtaSearchStatus status = EtaSearchStatus::found;
  double eta_star = 0.0;
  int probes = 0;
  double seconds = 0.0;
};

class SweepError : public std::runtime_error {
public:
  SweepError(double size, const std::string& what,
             std::optional<EtaSearchError::Kind> cause = std::nullopt)
      : std::runtime_error(what), size_(size), cause_(cause) {}
  double size() const { return size_; }
  /// Set when the search itself failed rather than the input.
  std::optional<EtaSearchError::Kind> cause() const { return cause_; }

private:
  double size_;
  std::optional<EtaSearchError::Kind> cause_;
};

/// eta* of the step-1 problem for each storage size. Sizes must be positive
/// and ascending. With threads > 1 sizes are searched concurrently; rows come
/// back in input order either way.
std::vector<SweepRow> sweep_storage_sizes(const Problem& problem, const std::vector<double>& sizes,
                                          const ForecastSet& forecast, const MpcOptions& options,
                                          int threads = 1);

} // namespace mgsched
