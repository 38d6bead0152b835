#include "mgsched/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <sstream>

namespace mgsched {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

MpcTrace run_mpc(const Problem& problem, const ForecastModel& model, const MpcOptions& options) {
  const int T = problem.horizon();
  if (model.intervals() != T) {
    throw std::invalid_argument("forecast model horizon does not match the problem");
  }
  const auto& battery = problem.battery;
  const double tol = options.tol.feas_tol;
  const auto start = std::chrono::steady_clock::now();

  MpcTrace trace;
  trace.charge.reserve(T + 1);
  trace.charge.push_back(battery.c_0);
  std::vector<double> previous_plan;
  int previous_tau = 0;

  for (int tau = 1; tau <= T; ++tau) {
    const auto t0 = std::chrono::steady_clock::now();
    const double c_now = trace.charge.back();
    const ForecastSet forecast = model.forecast_at(tau);

    MpcStep step;
    step.tau = tau;
    try {
      const EtaSearchResult found =
          find_eta_star(problem, forecast, c_now, options.build, options.search, options.tol);
      if (options.on_search) options.on_search(forecast, found);
      step.probes = static_cast<int>(found.probes.size());
      step.status = found.status;
      if (found.status == EtaSearchStatus::infeasible_at_cap) {
        std::ostringstream os;
        os << "step " << tau << ": infeasible even at the eta cap";
        throw MpcError(MpcError::Kind::infeasible_at_cap, tau, os.str());
      }
      step.eta_star = found.eta_star;
      step.plan = found.solution->e;
      step.objective = found.solution->objective;
    } catch (const EtaSearchError& err) {
      const std::string what = "step " + std::to_string(tau) + ": " + err.what();
      if (err.kind() == EtaSearchError::Kind::non_monotone) {
        throw MpcError(MpcError::Kind::non_monotone, tau, what);
      }
      if (previous_tau == 0) {
        throw MpcError(MpcError::Kind::solver_unknown, tau, what);
      }
      step.fallback = true;
      step.eta_star = trace.steps.back().eta_star;
      step.plan.assign(previous_plan.begin() + (tau - previous_tau), previous_plan.end());
      ++trace.summary.fallbacks;
    }

    step.e = step.plan.front();
    step.s = model.realized(tau);
    step.c_next = step_charge(c_now, step.s, step.e);
    step.seconds = seconds_since(t0);

    const double excess =
        std::max({0.0, step.c_next - battery.c_max, battery.c_min - step.c_next});
    trace.summary.max_violation = std::max(trace.summary.max_violation, excess);
    if (excess > tol) {
      std::ostringstream os;
      os.precision(12);
      os << "step " << tau << ": realized charge " << step.c_next << " outside [" << battery.c_min
         << ", " << battery.c_max << "]";
      throw MpcError(MpcError::Kind::soc_violation, tau, os.str());
    }

    trace.charge.push_back(step.c_next);
    trace.e.push_back(step.e);
    trace.r.push_back(grid_flow(problem.load.at(tau), step.e));
    if (!step.fallback) {
      previous_plan = step.plan;
      previous_tau = tau;
    }
    trace.steps.push_back(std::move(step));
  }

  auto& sum = trace.summary;
  sum.realized_cost = evaluate_cost(1, trace.e, trace.r, problem.tariff);
  sum.peak = 0.0;
  for (double r : trace.r) sum.peak = std::max(sum.peak, r);
  sum.terminal_error = std::abs(trace.charge.back() - battery.c_0);
  sum.seconds = seconds_since(start);
  return trace;
}

BatteryParams scale_battery(const BatteryParams& b, double size) {
  if (!(size > 0.0) || !std::isfinite(size)) {
    throw std::invalid_argument("storage size must be > 0");
  }
  const double f = size / b.capacity;
  return {size, b.c_min * f, b.c_max * f, b.c_0 * f};
}

std::vector<SweepRow> sweep_storage_sizes(const Problem& problem, const std::vector<double>& sizes,
                                          const ForecastSet& forecast, const MpcOptions& options,
                                          int threads) {
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (!(sizes[i] > 0.0)) {
      throw std::invalid_argument("storage sizes must be > 0");
    }
    if (i > 0 && !(sizes[i] >= sizes[i - 1])) {
      throw std::invalid_argument("storage sizes must be ascending");
    }
  }

  auto one = [&](double size) {
    const auto t0 = std::chrono::steady_clock::now();
    Problem p = problem;
    p.battery = scale_battery(problem.battery, size);
    SweepRow row;
    row.size = size;
    try {
      EtaSearchConfig cfg = options.search;
      if (!cfg.eta_cap) cfg.eta_cap = default_eta_cap(p.battery);
      const auto found = find_eta_star(p, forecast, p.battery.c_0, options.build, cfg, options.tol);
      row.status = found.status;
      row.eta_star = found.eta_star;
      row.probes = static_cast<int>(found.probes.size());
    } catch (const EtaSearchError& err) {
      std::ostringstream os;
      os << "size " << size << ": " << err.what();
      throw SweepError(size, os.str(), err.kind());
    } catch (const std::exception& err) {
      std::ostringstream os;
      os << "size " << size << ": " << err.what();
      throw SweepError(size, os.str());
    }
    row.seconds = seconds_since(t0);
    return row;
  };

  std::vector<SweepRow> rows(sizes.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < sizes.size(); ++i) rows[i] = one(sizes[i]);
    return rows;
  }
  for (std::size_t begin = 0; begin < sizes.size(); begin += threads) {
    const std::size_t end = std::min(sizes.size(), begin + static_cast<std::size_t>(threads));
    std::vector<std::future<SweepRow>> jobs;
    for (std::size_t i = begin; i < end; ++i) {
      jobs.push_back(std::async(std::launch::async, one, sizes[i]));
    }
    for (std::size_t i = begin; i < end; ++i) rows[i] = jobs[i - begin].get();
  }
  return rows;
}

} // namespace mgsched
