#pragma once

#include "mgsched/domain.hpp"

#include <cstdint>
#include <vector>

namespace mgsched {

/// Source of rolling solar forecasts and of the realized solar they bracket.
class ForecastModel {
public:
  virtual ~ForecastModel() = default;

  virtual int intervals() const = 0;

  /// Forecast for t = tau..T as seen at step tau.
  virtual ForecastSet forecast_at(int tau) const = 0;

  /// Realized solar energy in interval t.
  virtual double realized(int t) const = 0;
};

/**
 * Day-ahead bounds that close in on the truth as the interval approaches:
 *
 *   s_x(t, tau) = s_true(t) + rho * (s_x_day(t) - s_true(t)),
 *   rho = min(1, (t - tau) / lead)
 *
 * for each of s_bar, s_up and s_lo. The width shrinks linearly over the last
 * `lead` intervals and vanishes at tau = t. Requires the day-ahead bounds to
 * bracket s_true.
 */
class BlendedForecastModel : public ForecastModel {
public:
  BlendedForecastModel(ForecastSet day_ahead, std::vector<double> s_true, int lead = 16);

  int intervals() const override { return static_cast<int>(s_true_.size()); }
  ForecastSet forecast_at(int tau) const override;
  double realized(int t) const override { return s_true_[t - 1]; }

  const ForecastSet& day_ahead() const { return day_ahead_; }
  const std::vector<double>& truth() const { return s_true_; }
  int lead() const { return lead_; }

private:
  ForecastSet day_ahead_;
  std::vector<double> s_true_;
  int lead_;
};

/// Smooth random realization inside the day-ahead bounds: an AR(1) path
/// u(t) in [-1, 1] mapped to s_bar + u * (s_up - s_bar) above the mean and
/// s_bar + u * (s_bar - s_lo) below it. Deterministic in `seed`.
std::vector<double> draw_true_solar(const ForecastSet& day_ahead, std::uint64_t seed);

} // namespace mgsched
