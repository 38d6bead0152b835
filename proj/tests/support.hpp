#pragma once

// Problem factories and an independent full-variable encoding used as an
// oracle for the substituted builder.

#include "mgsched/domain.hpp"
#include "mgsched/qp.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace mgsched::testing {

struct ToyInputs {
  std::vector<double> d;
  std::vector<double> v;
  std::vector<double> s_bar;
  std::vector<double> s_up;
  std::vector<double> s_lo;
  BatteryParams battery{};
  InverterParams inverter{};
  double k = 0.0;
  double alpha = 0.0;
  double interval_hours = 0.25;
};

inline Problem make_problem(const ToyInputs& in) {
  TimeGrid grid;
  grid.intervals = static_cast<int>(in.d.size());
  grid.interval_hours = in.interval_hours;
  grid.tau = 1;
  ForecastSet f{in.s_bar, in.s_up, in.s_lo, 1};
  return validate_problem(grid, f, LoadProfile{in.d}, Tariff{in.v, in.k, in.alpha}, in.battery,
                          in.inverter);
}

/// Random small problem: daylight solar bump with relative half-width
/// `uncertainty`, random load and prices, battery sized from 200 to 600 kWh.
inline Problem random_problem(std::mt19937_64& rng, int T, double uncertainty) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  ToyInputs in;
  const double size = 200.0 + 400.0 * U(rng);
  in.battery = {size, 0.2 * size, 0.9 * size, 0.5 * size};
  const double p = 50.0 + 150.0 * U(rng);
  in.inverter = {-p, p};
  in.k = 20.0 * U(rng);
  in.alpha = 1e-4 + 1e-2 * U(rng);
  const double peak = 80.0 * U(rng);
  for (int t = 1; t <= T; ++t) {
    in.d.push_back(20.0 + 60.0 * U(rng));
    in.v.push_back(0.05 + 0.25 * U(rng));
    const double x = (t - 0.5) / T;
    const double bell = x > 0.25 && x < 0.75 ? peak * std::pow(std::sin(M_PI * (x - 0.25) / 0.5), 2) : 0.0;
    in.s_bar.push_back(bell);
    in.s_up.push_back(bell * (1.0 + uncertainty));
    in.s_lo.push_back(bell * (1.0 - uncertainty));
  }
  return make_problem(in);
}

/// Deterministic problem on the expected forecast with every quantity as its
/// own variable: x = [e(1..T), r(1..T), c(1..T+1), r_max].
struct DirectEncoding {
  qp::QuadraticProgram qp;
  int T = 0;
  Eigen::Index e(int t) const { return t - 1; }
  Eigen::Index r(int t) const { return T + t - 1; }
  Eigen::Index c(int t) const { return 2 * T + t - 1; }
  Eigen::Index r_max() const { return 3 * T + 1; }
};

inline DirectEncoding direct_encoding(const Problem& p) {
  DirectEncoding out{qp::QuadraticProgram(3 * p.horizon() + 2), p.horizon()};
  const int T = out.T;
  auto& qp = out.qp;
  const Eigen::Index n = qp.variables();
  auto unit = [&](Eigen::Index i, double a) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
    row(i) = a;
    return row;
  };
  for (int t = 1; t <= T; ++t) {
    qp.P(out.e(t), out.e(t)) = 2.0 * p.tariff.alpha;
    qp.q(out.r(t)) = p.tariff.price(t);
    // balance d = e + r
    Eigen::RowVectorXd bal = unit(out.e(t), 1.0);
    bal(out.r(t)) = 1.0;
    qp.add_equality(bal, p.load.at(t));
    // dynamics c(t+1) = c(t) + s(t) - e(t)
    Eigen::RowVectorXd dyn = unit(out.c(t + 1), 1.0);
    dyn(out.c(t)) = -1.0;
    dyn(out.e(t)) = 1.0;
    qp.add_equality(dyn, p.forecast.expected(t));
    qp.add_inequality(unit(out.e(t), 1.0), p.e_max());
    qp.add_inequality(unit(out.e(t), -1.0), -p.e_min());
    qp.add_inequality(unit(out.c(t + 1), 1.0), p.battery.c_max);
    qp.add_inequality(unit(out.c(t + 1), -1.0), -p.battery.c_min);
    Eigen::RowVectorXd peak = unit(out.r(t), 1.0);
    peak(out.r_max()) = -1.0;
    qp.add_inequality(peak, 0.0);
  }
  qp.q(out.r_max()) = p.tariff.k;
  qp.add_inequality(unit(out.r_max(), -1.0), 0.0);
  qp.add_equality(unit(out.c(1), 1.0), p.battery.c_0);
  qp.add_equality(unit(out.c(T + 1), 1.0), p.battery.c_0);
  return out;
}

/// The T = 6 hand-checkable instance shipped as the tiny_t6 fixture.
inline ToyInputs tiny_t6_inputs() {
  ToyInputs in;
  in.d = {40, 60, 50, 30, 70, 45};
  in.v = {0.10, 0.10, 0.25, 0.25, 0.25, 0.10};
  in.s_bar = {0, 10, 30, 25, 5, 0};
  in.s_up = {0, 20, 50, 45, 10, 0};
  in.s_lo = {0, 0, 10, 5, 0, 0};
  in.battery = {100, 20, 90, 50};
  in.inverter = {-80, 80};
  in.k = 2.0;
  in.alpha = 1e-3;
  return in;
}

} // namespace mgsched::testing
