#pragma once

#include "mgsched/domain.hpp"
#include "mgsched/qp.hpp"
#include "mgsched/schedule_builder.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgsched {

struct EtaSearchConfig {
  double eta_0 = 1.0;            ///< first relaxation tried, kWh per interval
  double epsilon = 0.01;         ///< bracket width at termination
  std::optional<double> eta_cap; ///< defaults to c_max - c_min
  int max_expansions = 20;       ///< doublings of eta_0 before giving up
  /// Re-probe max(0, eta_star - epsilon) after bisection. It must come back
  /// infeasible; costs one probe beyond the usual bound.
  bool verify_below = false;
};

/// Throws std::invalid_argument unless eta_0 > 0, epsilon > 0 and cap >= eta_0.
void validate(const EtaSearchConfig& config, double eta_cap);

enum class ProbeVerdict { feasible, infeasible, unknown };

std::string to_string(ProbeVerdict verdict);

struct EtaProbe {
  double eta = 0.0;
  ProbeVerdict verdict = ProbeVerdict::unknown;
  double seconds = 0.0;
};

enum class EtaSearchStatus { found, infeasible_at_cap, exact_zero };

std::string to_string(EtaSearchStatus status);

class EtaSearchError : public std::runtime_error {
public:
  enum class Kind { solver_unknown, non_monotone };

  EtaSearchError(Kind kind, double eta, const std::string& what)
      : std::runtime_error(what), kind_(kind), eta_(eta) {}

  Kind kind() const { return kind_; }
  double eta() const { return eta_; }

private:
  Kind kind_;
  double eta_;
};

struct EtaBracket {
  EtaSearchStatus status = EtaSearchStatus::found;
  double eta_star = 0.0;       ///< lowest feasible probe
  double eta_infeasible = 0.0; ///< highest infeasible probe
  std::vector<EtaProbe> probes;
};

/// Bracketed bisection over a monotone feasibility predicate:
/// probe 0, then eta_0 doubling up to the cap, then bisect until the bracket
/// is narrower than epsilon. Unknown verdicts and non-monotone observations
/// throw EtaSearchError.
///
/// Probe count <= max_expansions + ceil(log2(bracket / epsilon)) + 2, plus
/// one with verify_below.
EtaBracket bracket_eta(const std::function<ProbeVerdict(double)>& probe,
                       const EtaSearchConfig& config, double eta_cap);

/// Throws EtaSearchError(non_monotone) if a feasible probe lies below an
/// infeasible one.
void check_monotone(const std::vector<EtaProbe>& probes);

struct EtaSearchResult {
  EtaSearchStatus status = EtaSearchStatus::found;
  double eta_star = 0.0;
  std::optional<ScheduleSolution> solution; ///< absent when infeasible at cap
  std::vector<EtaProbe> probes;
  qp::SolveOutcome outcome;
};

/// Smallest envelope growth rate for which the step-tau scheduling QP is
/// feasible, together with the optimal schedule at that rate.
EtaSearchResult find_eta_star(const Problem& problem, const ForecastSet& forecast, double c_now,
                              const BuildOptions& options, const EtaSearchConfig& config,
                              const qp::Tolerances& tol = {});

/// Phase-1 verdict for the QP built at `eta`.
ProbeVerdict probe_feasibility(const Problem& problem, const ForecastSet& forecast, double c_now,
                               double eta, const BuildOptions& options,
                               const qp::Tolerances& tol = {});

double default_eta_cap(const BatteryParams& battery);

} // namespace mgsched
