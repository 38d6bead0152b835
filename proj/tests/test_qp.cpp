#include "doctest.h"

#include "mgsched/qp.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace mgsched;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace {

RowVectorXd row(std::initializer_list<double> v) {
  RowVectorXd r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) {
    r(i++) = x;
  }
  return r;
}

} // namespace

TEST_CASE("single active constraint") {
  qp::QuadraticProgram p(1);
  p.P(0, 0) = 2.0;
  p.add_inequality(row({-1.0}), -1.0); // x >= 1
  const auto out = qp::solve(p);
  REQUIRE(out.status == qp::SolveStatus::optimal);
  CHECK(out.x(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(out.objective == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(out.primal_residual <= 1e-6);
}

TEST_CASE("symmetric equality constrained") {
  qp::QuadraticProgram p(2);
  p.P = 2.0 * MatrixXd::Identity(2, 2);
  p.add_equality(row({1.0, 1.0}), 2.0);
  const auto out = qp::solve(p);
  REQUIRE(out.status == qp::SolveStatus::optimal);
  CHECK(out.x(0) == doctest::Approx(1.0));
  CHECK(out.x(1) == doctest::Approx(1.0));
  CHECK(out.objective == doctest::Approx(2.0));
}

TEST_CASE("empty feasible set is reported infeasible") {
  qp::QuadraticProgram p(1);
  p.P(0, 0) = 2.0;
  p.add_inequality(row({1.0}), 0.0);   // x <= 0
  p.add_inequality(row({-1.0}), -1.0); // x >= 1
  const auto out = qp::solve(p);
  CHECK(out.status == qp::SolveStatus::infeasible);
  CHECK(out.violation_floor > 0.4);
  CHECK(qp::check_feasible(p).infeasible());
}

TEST_CASE("phase-1 verdicts") {
  SUBCASE("interval") {
    qp::QuadraticProgram p(1);
    p.add_inequality(row({1.0}), 5.0);
    p.add_inequality(row({-1.0}), -1.0);
    const auto v = qp::check_feasible(p);
    REQUIRE(v.feasible());
    CHECK(v.witness(0) >= 1.0 - 1e-6);
    CHECK(v.witness(0) <= 5.0 + 1e-6);
  }
  SUBCASE("touching bounds") {
    qp::QuadraticProgram p(1);
    p.add_inequality(row({1.0}), 1.0);
    p.add_inequality(row({-1.0}), -1.0);
    const auto v = qp::check_feasible(p);
    REQUIRE(v.feasible());
    CHECK(v.witness(0) == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("sum too large for the caps") {
    qp::QuadraticProgram p(2);
    p.add_equality(row({1.0, 1.0}), 10.0);
    p.add_inequality(row({1.0, 0.0}), 2.0);
    p.add_inequality(row({0.0, 1.0}), 2.0);
    const auto v = qp::check_feasible(p);
    CHECK(v.infeasible());
    CHECK(v.min_violation == doctest::Approx(2.0).epsilon(1e-4)); // x = y = 4 spreads the excess
  }
}

TEST_CASE("zero rows are handled without the interior iteration") {
  qp::QuadraticProgram p(1);
  p.P(0, 0) = 2.0;
  p.add_inequality(row({0.0}), -1.0); // 0 <= -1
  CHECK(qp::solve(p).status == qp::SolveStatus::infeasible);
  CHECK(qp::check_feasible(p).infeasible());
}

TEST_CASE("random box QPs agree with active-set enumeration") {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 5;
    const auto inst = testing::random_box_qp(rng, n, trial % 3);
    const auto oracle = testing::enumerate_active_sets(inst.qp);
    REQUIRE(oracle.feasible == inst.feasible);
    const auto out = qp::solve(inst.qp);
    if (!inst.feasible) {
      CHECK(out.status == qp::SolveStatus::infeasible);
      continue;
    }
    REQUIRE(out.status == qp::SolveStatus::optimal);
    const double scale = std::max(1.0, std::abs(oracle.objective));
    CHECK(std::abs(out.objective - oracle.objective) <= 1e-4 * scale);
  }
}

TEST_CASE("KKT stationarity at the reported optimum") {
  std::mt19937_64 rng(7);
  const qp::Tolerances tol;
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = testing::random_box_qp(rng, 5, 1);
    const auto out = qp::solve(inst.qp, tol);
    REQUIRE(out.status == qp::SolveStatus::optimal);
    const VectorXd grad = inst.qp.P * out.x + inst.qp.q + inst.qp.G.transpose() * out.z;
    CHECK(grad.cwiseAbs().maxCoeff() <= 10.0 * tol.opt_tol);
    CHECK(out.z.minCoeff() >= -1e-9);
    // complementary slackness
    const VectorXd slack = inst.qp.h - inst.qp.G * out.x;
    CHECK(slack.cwiseProduct(out.z).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("relaxing inequalities keeps feasibility and never raises the optimum") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> U(0.0, 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = testing::random_box_qp(rng, 4, trial % 3);
    auto relaxed = inst.qp;
    for (Eigen::Index i = 0; i < relaxed.h.size(); ++i) relaxed.h(i) += U(rng);
    const auto a = qp::check_feasible(inst.qp);
    const auto b = qp::check_feasible(relaxed);
    if (a.feasible()) {
      CHECK(b.feasible());
      const auto sa = qp::solve(inst.qp);
      const auto sb = qp::solve(relaxed);
      REQUIRE(sa.status == qp::SolveStatus::optimal);
      REQUIRE(sb.status == qp::SolveStatus::optimal);
      CHECK(sb.objective <= sa.objective + 1e-7 * std::max(1.0, std::abs(sa.objective)));
    }
  }
}

TEST_CASE("solves are deterministic") {
  std::mt19937_64 rng(3);
  const auto inst = testing::random_box_qp(rng, 6, 1);
  const auto a = qp::solve(inst.qp);
  const auto b = qp::solve(inst.qp);
  REQUIRE(a.status == qp::SolveStatus::optimal);
  CHECK(a.x == b.x);
  CHECK(a.objective == b.objective);
}

TEST_CASE("text dump round-trips exactly") {
  std::mt19937_64 rng(11);
  auto inst = testing::random_box_qp(rng, 3, 1);
  inst.qp.add_equality(row({1.0, -2.0, 0.5}), 0.125);
  inst.qp.constant = 1.0 / 3.0;
  std::stringstream ss;
  qp::write_text(ss, inst.qp);
  const auto back = qp::read_text(ss);
  CHECK(back.P == inst.qp.P);
  CHECK(back.q == inst.qp.q);
  CHECK(back.G == inst.qp.G);
  CHECK(back.h == inst.qp.h);
  CHECK(back.A == inst.qp.A);
  CHECK(back.b == inst.qp.b);
  CHECK(back.constant == inst.qp.constant);
}

TEST_CASE("structure checks") {
  qp::QuadraticProgram p(2);
  p.P(0, 1) = 1.0;
  CHECK_THROWS_AS(qp::check_structure(p), std::invalid_argument);
  p.P(1, 0) = 1.0;
  CHECK_NOTHROW(qp::check_structure(p));
  CHECK(qp::sampled_min_rayleigh(p.P) < 0.0); // [[0,1],[1,0]] is indefinite
  CHECK_THROWS_AS(p.add_inequality(row({1.0}), 0.0), std::invalid_argument);
}
