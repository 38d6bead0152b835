#include "mgsched/eta_search.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace mgsched {

std::string to_string(ProbeVerdict verdict) {
  switch (verdict) {
  case ProbeVerdict::feasible:
    return "feasible";
  case ProbeVerdict::infeasible:
    return "infeasible";
  case ProbeVerdict::unknown:
    return "unknown";
  }
  return "unknown";
}

std::string to_string(EtaSearchStatus status) {
  switch (status) {
  case EtaSearchStatus::found:
    return "found";
  case EtaSearchStatus::infeasible_at_cap:
    return "infeasible-at-cap";
  case EtaSearchStatus::exact_zero:
    return "exact-zero";
  }
  return "found";
}

double default_eta_cap(const BatteryParams& battery) { return battery.c_max - battery.c_min; }

void validate(const EtaSearchConfig& config, double eta_cap) {
  if (!(config.eta_0 > 0.0)) {
    throw std::invalid_argument("eta_0 must be > 0");
  }
  if (!(config.epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be > 0");
  }
  if (!(eta_cap >= config.eta_0)) {
    throw std::invalid_argument("eta_cap must be >= eta_0");
  }
  if (config.max_expansions < 0) {
    throw std::invalid_argument("max_expansions must be >= 0");
  }
}

void check_monotone(const std::vector<EtaProbe>& probes) {
  for (const auto& ok : probes) {
    if (ok.verdict != ProbeVerdict::feasible) continue;
    for (const auto& bad : probes) {
      if (bad.verdict == ProbeVerdict::infeasible && bad.eta >= ok.eta) {
        std::ostringstream os;
        os << "non-monotone feasibility: eta=" << ok.eta << " feasible but eta=" << bad.eta
           << " infeasible";
        throw EtaSearchError(EtaSearchError::Kind::non_monotone, ok.eta, os.str());
      }
    }
  }
}

EtaBracket bracket_eta(const std::function<ProbeVerdict(double)>& probe,
                       const EtaSearchConfig& config, double eta_cap) {
  validate(config, eta_cap);
  EtaBracket out;

  auto run = [&](double eta) {
    const auto t0 = std::chrono::steady_clock::now();
    const ProbeVerdict v = probe(eta);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    out.probes.push_back({eta, v, dt.count()});
    if (v == ProbeVerdict::unknown) {
      std::ostringstream os;
      os << "solver verdict unknown at eta=" << eta;
      throw EtaSearchError(EtaSearchError::Kind::solver_unknown, eta, os.str());
    }
    check_monotone(out.probes);
    return v;
  };

  if (run(0.0) == ProbeVerdict::feasible) {
    out.status = EtaSearchStatus::exact_zero;
    out.eta_star = 0.0;
    return out;
  }

  double lo = 0.0;
  double eta = config.eta_0;
  int expansions = 0;
  while (run(eta) == ProbeVerdict::infeasible) {
    lo = eta;
    if (eta >= eta_cap || expansions >= config.max_expansions) {
      out.status = EtaSearchStatus::infeasible_at_cap;
      out.eta_infeasible = lo;
      out.eta_star = eta;
      return out;
    }
    eta = std::min(2.0 * eta, eta_cap);
    ++expansions;
  }
  double hi = eta;

  while (hi - lo >= config.epsilon) {
    const double mid = 0.5 * (lo + hi);
    if (run(mid) == ProbeVerdict::feasible) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  out.status = EtaSearchStatus::found;
  out.eta_star = hi;
  out.eta_infeasible = lo;
  if (config.verify_below) {
    run(std::max(0.0, hi - config.epsilon));
  }
  return out;
}

ProbeVerdict probe_feasibility(const Problem& problem, const ForecastSet& forecast, double c_now,
                               double eta, const BuildOptions& options,
                               const qp::Tolerances& tol) {
  const BuiltQp built = build_qp(problem, forecast, c_now, eta, options);
  const auto verdict = qp::check_feasible(built.program, tol);
  switch (verdict.status) {
  case qp::SolveStatus::optimal:
    return ProbeVerdict::feasible;
  case qp::SolveStatus::infeasible:
    return ProbeVerdict::infeasible;
  case qp::SolveStatus::max_iterations:
    break;
  }
  return ProbeVerdict::unknown;
}

EtaSearchResult find_eta_star(const Problem& problem, const ForecastSet& forecast, double c_now,
                              const BuildOptions& options, const EtaSearchConfig& config,
                              const qp::Tolerances& tol) {
  const double cap = config.eta_cap.value_or(default_eta_cap(problem.battery));
  auto probe = [&](double eta) {
    return probe_feasibility(problem, forecast, c_now, eta, options, tol);
  };
  EtaBracket bracket = bracket_eta(probe, config, cap);

  EtaSearchResult result;
  result.status = bracket.status;
  result.eta_star = bracket.eta_star;
  result.probes = std::move(bracket.probes);
  if (result.status == EtaSearchStatus::infeasible_at_cap) {
    return result;
  }

  const BuiltQp built = build_qp(problem, forecast, c_now, result.eta_star, options);
  result.outcome = qp::solve(built.program, tol);
  switch (result.outcome.status) {
  case qp::SolveStatus::optimal:
    break;
  case qp::SolveStatus::infeasible: {
    std::ostringstream os;
    os << "eta=" << result.eta_star << " probed feasible but the solve reports infeasible";
    throw EtaSearchError(EtaSearchError::Kind::non_monotone, result.eta_star, os.str());
  }
  case qp::SolveStatus::max_iterations: {
    std::ostringstream os;
    os << "solver did not converge at eta=" << result.eta_star;
    throw EtaSearchError(EtaSearchError::Kind::solver_unknown, result.eta_star, os.str());
  }
  }
  result.solution =
      extract_solution(result.outcome, built.layout, problem, forecast, c_now, result.eta_star);
  return result;
}

} // namespace mgsched
