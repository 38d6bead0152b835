#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>

namespace mgsched::qp {

/**
 * @brief Convex quadratic program
 *
 *   minimize    1/2 x' P x + q' x + constant
 *   subject to  G x <= h
 *               A x  = b
 *
 * P must be symmetric positive semidefinite. Constraint rows are stored
 * densely; the solver exploits row sparsity when forming normal equations.
 */
struct QuadraticProgram {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  double constant = 0.0;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  QuadraticProgram() = default;
  explicit QuadraticProgram(Eigen::Index n);

  Eigen::Index variables() const { return q.size(); }
  Eigen::Index inequalities() const { return h.size(); }
  Eigen::Index equalities() const { return b.size(); }

  /// Appends a . x <= rhs and returns its row index.
  Eigen::Index add_inequality(const Eigen::RowVectorXd& a, double rhs);
  /// Appends a . x = rhs and returns its row index.
  Eigen::Index add_equality(const Eigen::RowVectorXd& a, double rhs);

  double objective(const Eigen::VectorXd& x) const;

  /// Worst violation over all constraints: max(G x - h, |A x - b|, 0).
  double max_violation(const Eigen::VectorXd& x) const;
};

/// Structural checks: dimensions agree and P is symmetric within 1e-10.
/// Throws std::invalid_argument.
void check_structure(const QuadraticProgram& qp);

/// Advisory PSD test using Rayleigh quotients on a fixed set of probe
/// vectors plus the diagonal. Returns the smallest quotient observed.
double sampled_min_rayleigh(const Eigen::MatrixXd& P, int probes = 32);

struct Tolerances {
  double feas_tol = 1e-6; ///< absolute, in constraint units
  double opt_tol = 1e-6;  ///< relative
  int max_iter = 20000;
};

enum class SolveStatus { optimal, infeasible, max_iterations };

std::string to_string(SolveStatus status);

struct SolveOutcome {
  SolveStatus status = SolveStatus::max_iterations;
  Eigen::VectorXd x;          ///< empty unless optimal
  double objective = 0.0;
  double primal_residual = 0.0;
  int iterations = 0;
  Eigen::VectorXd z;          ///< inequality multipliers (optimal only)
  Eigen::VectorXd y;          ///< equality multipliers (optimal only)
  double violation_floor = 0.0; ///< phase-1 minimum violation (infeasible only)
  bool polished = false;
};

struct FeasibilityVerdict {
  SolveStatus status = SolveStatus::max_iterations; ///< optimal means feasible
  Eigen::VectorXd witness;  ///< minimizer of the maximum violation
  double min_violation = 0.0;
  double lower_bound = 0.0; ///< dual bound on the minimum violation
  int iterations = 0;

  bool feasible() const { return status == SolveStatus::optimal; }
  bool infeasible() const { return status == SolveStatus::infeasible; }
};

/// Primal-dual interior point method with active-set polishing. When the
/// interior iteration fails to converge, feasibility is decided by the
/// phase-1 problem; a max_iterations outcome means the verdict is unknown.
SolveOutcome solve(const QuadraticProgram& qp, const Tolerances& tol = {});

/// Phase-1: minimize the largest constraint violation over x. Feasible iff
/// that minimum is at most tol.feas_tol. The search is restricted to the box
/// |x_i| <= 1e4 * (1 + max |rhs|).
FeasibilityVerdict check_feasible(const QuadraticProgram& qp, const Tolerances& tol = {});

/// Plain-text dump: a header line "qp n m_ineq m_eq", then the rows of P,
/// the q vector, the constant, one "ineq a_1 .. a_n rhs" line per inequality
/// and one "eq a_1 .. a_n rhs" line per equality. Numbers use %.17g.
void write_text(std::ostream& os, const QuadraticProgram& qp);
QuadraticProgram read_text(std::istream& is);

} // namespace mgsched::qp
