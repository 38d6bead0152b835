#include "mgsched/forecast_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mgsched {

BlendedForecastModel::BlendedForecastModel(ForecastSet day_ahead, std::vector<double> s_true,
                                           int lead)
    : day_ahead_(std::move(day_ahead)), s_true_(std::move(s_true)), lead_(lead) {
  if (day_ahead_.issued_at != 1) {
    throw std::invalid_argument("day-ahead forecast must start at interval 1");
  }
  if (s_true_.size() != day_ahead_.s_bar.size()) {
    throw std::invalid_argument("s_true length does not match the forecast");
  }
  if (lead_ < 1) {
    throw std::invalid_argument("lead must be >= 1");
  }
  constexpr double tol = 1e-9;
  for (int t = 1; t <= intervals(); ++t) {
    const double s = realized(t);
    if (!(s >= day_ahead_.lower(t) - tol && s <= day_ahead_.upper(t) + tol)) {
      throw ValidationError("s_true", "s_true: outside the day-ahead bounds at interval " +
                                          std::to_string(t), t);
    }
  }
}

ForecastSet BlendedForecastModel::forecast_at(int tau) const {
  if (tau < 1 || tau > intervals()) {
    throw std::out_of_range("forecast step outside 1..T");
  }
  ForecastSet f;
  f.issued_at = tau;
  const int n = intervals() - tau + 1;
  f.s_bar.resize(n);
  f.s_up.resize(n);
  f.s_lo.resize(n);
  for (int t = tau; t <= intervals(); ++t) {
    const double rho = std::min(1.0, static_cast<double>(t - tau) / lead_);
    const double s = realized(t);
    const int k = t - tau;
    f.s_bar[k] = s + rho * (day_ahead_.expected(t) - s);
    // clamp away rounding so the ordering invariants hold exactly
    f.s_up[k] = std::max(f.s_bar[k], s + rho * (day_ahead_.upper(t) - s));
    f.s_lo[k] = std::max(0.0, std::min(f.s_bar[k], s + rho * (day_ahead_.lower(t) - s)));
  }
  return f;
}

std::vector<double> draw_true_solar(const ForecastSet& day_ahead, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.25);
  constexpr double phi = 0.92;
  double u = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  std::vector<double> s(day_ahead.s_bar.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    u = std::clamp(phi * u + noise(rng), -1.0, 1.0);
    const double mean = day_ahead.s_bar[k];
    const double span = u >= 0.0 ? day_ahead.s_up[k] - mean : mean - day_ahead.s_lo[k];
    s[k] = std::clamp(mean + u * span, day_ahead.s_lo[k], day_ahead.s_up[k]);
  }
  return s;
}

} // namespace mgsched
