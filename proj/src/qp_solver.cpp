#include "mgsched/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mgsched::qp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// QuadraticProgram

QuadraticProgram::QuadraticProgram(Index n)
    : P(MatrixXd::Zero(n, n)), q(VectorXd::Zero(n)), G(0, n), h(0), A(0, n), b(0) {}

Index QuadraticProgram::add_inequality(const Eigen::RowVectorXd& a, double rhs) {
  if (a.size() != q.size()) {
    throw std::invalid_argument("inequality row has wrong length");
  }
  G.conservativeResize(G.rows() + 1, q.size());
  h.conservativeResize(h.size() + 1);
  G.row(G.rows() - 1) = a;
  h(h.size() - 1) = rhs;
  return G.rows() - 1;
}

Index QuadraticProgram::add_equality(const Eigen::RowVectorXd& a, double rhs) {
  if (a.size() != q.size()) {
    throw std::invalid_argument("equality row has wrong length");
  }
  A.conservativeResize(A.rows() + 1, q.size());
  b.conservativeResize(b.size() + 1);
  A.row(A.rows() - 1) = a;
  b(b.size() - 1) = rhs;
  return A.rows() - 1;
}

double QuadraticProgram::objective(const VectorXd& x) const {
  return 0.5 * x.dot(P * x) + q.dot(x) + constant;
}

double QuadraticProgram::max_violation(const VectorXd& x) const {
  double worst = 0.0;
  if (G.rows() > 0) {
    worst = std::max(worst, (G * x - h).maxCoeff());
  }
  if (A.rows() > 0) {
    worst = std::max(worst, (A * x - b).cwiseAbs().maxCoeff());
  }
  return worst;
}

void check_structure(const QuadraticProgram& qp) {
  const Index n = qp.q.size();
  if (qp.P.rows() != n || qp.P.cols() != n) {
    throw std::invalid_argument("P must be n x n");
  }
  if (qp.G.cols() != n || qp.G.rows() != qp.h.size()) {
    throw std::invalid_argument("inequality block has inconsistent dimensions");
  }
  if (qp.A.cols() != n || qp.A.rows() != qp.b.size()) {
    throw std::invalid_argument("equality block has inconsistent dimensions");
  }
  if (n > 0 && (qp.P - qp.P.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("P is not symmetric");
  }
}

double sampled_min_rayleigh(const MatrixXd& P, int probes) {
  const Index n = P.rows();
  if (n == 0) {
    return 0.0;
  }
  double lowest = P.diagonal().minCoeff();
  // Deterministic probes from a linear congruential sequence.
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  VectorXd v(n);
  for (int k = 0; k < probes; ++k) {
    for (Index i = 0; i < n; ++i) {
      state = state * 6364136223846793005ull + 1442695040888963407ull;
      v(i) = static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
    }
    const double nv = v.squaredNorm();
    if (nv > 0.0) {
      lowest = std::min(lowest, v.dot(P * v) / nv);
    }
  }
  return lowest;
}

std::string to_string(SolveStatus status) {
  switch (status) {
  case SolveStatus::optimal:
    return "optimal";
  case SolveStatus::infeasible:
    return "infeasible";
  case SolveStatus::max_iterations:
    return "max-iterations";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Interior point method

namespace {

/// Inequality rows in compressed form. Rows are normalized to unit 2-norm.
struct SparseRows {
  std::vector<std::vector<Index>> cols;
  std::vector<std::vector<double>> vals;
  VectorXd scale; ///< original row = scale * normalized row

  std::vector<Index> pattern; ///< rows equal up to sign share a pattern
  std::vector<Index> pattern_row; ///< representative row of each pattern

  void build(const MatrixXd& M) {
    const Index m = M.rows();
    cols.assign(m, {});
    vals.assign(m, {});
    scale.resize(m);
    pattern.assign(m, 0);
    pattern_row.clear();
    std::map<std::pair<std::vector<Index>, std::vector<double>>, Index> seen;
    for (Index i = 0; i < m; ++i) {
      const double norm = M.row(i).norm();
      scale(i) = norm;
      for (Index j = 0; j < M.cols(); ++j) {
        if (M(i, j) != 0.0) {
          cols[i].push_back(j);
          vals[i].push_back(M(i, j) / norm);
        }
      }
      std::vector<double> key = vals[i];
      if (!key.empty() && key.front() < 0.0) {
        for (double& v : key) v = -v;
      }
      const auto [it, fresh] =
          seen.emplace(std::make_pair(cols[i], std::move(key)), pattern_row.size());
      if (fresh) pattern_row.push_back(i);
      pattern[i] = it->second;
    }
  }

  Index rows() const { return static_cast<Index>(cols.size()); }

  double row_dot(Index i, const VectorXd& x) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < cols[i].size(); ++k) {
      acc += vals[i][k] * x(cols[i][k]);
    }
    return acc;
  }

  VectorXd times(const VectorXd& x) const {
    VectorXd out(rows());
    for (Index i = 0; i < rows(); ++i) {
      out(i) = row_dot(i, x);
    }
    return out;
  }

  /// out += M' w
  void add_transpose_times(const VectorXd& w, VectorXd& out) const {
    for (Index i = 0; i < rows(); ++i) {
      const double wi = w(i);
      if (wi == 0.0) {
        continue;
      }
      for (std::size_t k = 0; k < cols[i].size(); ++k) {
        out(cols[i][k]) += vals[i][k] * wi;
      }
    }
  }

  /// Merged rows scaled by the square root of their summed weight, heaviest
  /// first, so that M'M = G' diag(w) G.
  MatrixXd weighted_rows(const VectorXd& w, Index n) const {
    VectorXd merged = VectorXd::Zero(static_cast<Index>(pattern_row.size()));
    for (Index i = 0; i < rows(); ++i) merged(pattern[i]) += w(i);
    std::vector<Index> order(pattern_row.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return merged(a) > merged(b); });
    MatrixXd M = MatrixXd::Zero(merged.size(), n);
    for (Index k = 0; k < merged.size(); ++k) {
      const Index g = order[k];
      const Index i = pattern_row[g];
      const double root = std::sqrt(merged(g));
      for (std::size_t a = 0; a < cols[i].size(); ++a) M(k, cols[i][a]) = root * vals[i][a];
    }
    return M;
  }

  /// H += M' diag(w) M, upper triangle only.
  void add_weighted_gram(const VectorXd& w, MatrixXd& H) const {
    VectorXd merged = VectorXd::Zero(static_cast<Index>(pattern_row.size()));
    for (Index i = 0; i < rows(); ++i) merged(pattern[i]) += w(i);
    for (Index g = 0; g < merged.size(); ++g) {
      const Index i = pattern_row[g];
      const double wi = merged(g);
      const auto& c = cols[i];
      const auto& v = vals[i];
      for (std::size_t a = 0; a < c.size(); ++a) {
        const double wa = wi * v[a];
        for (std::size_t b = a; b < c.size(); ++b) {
          const Index r = std::min(c[a], c[b]);
          const Index s = std::max(c[a], c[b]);
          H(r, s) += wa * v[b];
        }
      }
    }
  }
};

/// Internal problem in normalized form.
struct Normalized {
  const MatrixXd* P = nullptr;
  VectorXd q;
  SparseRows G;
  VectorXd h;
  MatrixXd A;
  VectorXd b;
  VectorXd a_scale;
};

struct IpmSettings {
  double eps_strict = 1e-10;
  double feas_abs = 1e-7;  ///< acceptable primal residual (absolute, normalized rows)
  double opt_rel = 1e-6;   ///< acceptable relative gap
  int max_iter = 200;
};

struct IpmState {
  VectorXd x, s, z, y;
  int iterations = 0;
  bool converged = false;
  double primal_res = 0.0;
  double dual_res = 0.0;
  double gap = 0.0;
  double dual_objective = -std::numeric_limits<double>::infinity();
};

class KktFactor {
public:
  bool factor(const MatrixXd& P, const SparseRows& G, const VectorXd& w, const MatrixXd& A,
              double reg) {
    const Index n = P.rows();
    mode_ = Mode::cholesky;
    H_ = P;
    H_.diagonal().array() += reg;
    G.add_weighted_gram(w, H_);
    // P contributes its lower part already; mirror the accumulated upper part.
    for (Index j = 0; j < n; ++j) {
      for (Index i = j + 1; i < n; ++i) {
        H_(i, j) = H_(j, i);
      }
    }
    llt_.compute(H_);
    if (llt_.info() != Eigen::Success) {
      return false;
    }
    return factor_equalities(A, reg);
  }

  /// Same system from a QR of [sqrt(W) G; sqrt(P); sqrt(reg) I]. Slower, but
  /// never forms G'WG, whose cancellation ruins the Cholesky path when the
  /// weights spread over many orders of magnitude.
  bool factor_orthogonal(const MatrixXd& P_root, const SparseRows& G, const VectorXd& w,
                         const MatrixXd& A, double reg) {
    const Index n = P_root.cols();
    mode_ = Mode::orthogonal;
    const MatrixXd rows = G.weighted_rows(w, n);
    MatrixXd M(rows.rows() + P_root.rows() + n, n);
    M << rows, P_root, std::sqrt(reg) * MatrixXd::Identity(n, n);
    Eigen::HouseholderQR<MatrixXd> qr(M);
    R_ = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    if (!R_.allFinite() || R_.diagonal().cwiseAbs().minCoeff() == 0.0) {
      return false;
    }
    return factor_equalities(A, reg);
  }

  bool orthogonal() const { return mode_ == Mode::orthogonal; }

  /// Solves [H A'; A 0] [dx; dy] = [g; f].
  void solve(const VectorXd& g, const VectorXd& f, VectorXd& dx, VectorXd& dy) const {
    VectorXd Hg = h_solve(g);
    if (A_->rows() > 0) {
      dy = schur_.solve(*A_ * Hg - f);
      dx = Hg - HinvAt_ * dy;
    } else {
      dy.resize(0);
      dx = Hg;
    }
  }

private:
  enum class Mode { cholesky, orthogonal };

  bool factor_equalities(const MatrixXd& A, double reg) {
    A_ = &A;
    if (A.rows() > 0) {
      HinvAt_ = h_solve(A.transpose());
      MatrixXd S = A * HinvAt_;
      S.diagonal().array() += reg;
      schur_.compute(S);
    }
    return true;
  }

  MatrixXd h_solve(const MatrixXd& rhs) const {
    if (mode_ == Mode::cholesky) {
      return llt_.solve(rhs);
    }
    const auto U = R_.triangularView<Eigen::Upper>();
    return U.solve(U.transpose().solve(rhs));
  }

  Mode mode_ = Mode::cholesky;
  MatrixXd H_;
  Eigen::LLT<MatrixXd> llt_;
  MatrixXd R_;
  const MatrixXd* A_ = nullptr;
  MatrixXd HinvAt_;
  Eigen::LDLT<MatrixXd> schur_;
};

/// Row square root of a PSD matrix: B with B'B = P.
MatrixXd psd_root(const MatrixXd& P) {
  if (P.rows() == 0) {
    return P;
  }
  if (P.isDiagonal()) {
    return P.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(P);
  return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

double max_step(const VectorXd& v, const VectorXd& dv) {
  double alpha = 1.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) {
      alpha = std::min(alpha, -v(i) / dv(i));
    }
  }
  return alpha;
}

double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

IpmState interior_point(const Normalized& pb, const IpmSettings& cfg) {
  const MatrixXd& P = *pb.P;
  const Index n = pb.q.size();
  const Index m = pb.G.rows();
  const Index p = pb.A.rows();

  IpmState st;
  st.x = VectorXd::Zero(n);
  st.y = VectorXd::Zero(p);
  st.s = VectorXd::Ones(m);
  st.z = VectorXd::Ones(m);

  const double scale_p = 1.0 + std::max(inf_norm(pb.h), inf_norm(pb.b));
  const double scale_d = 1.0 + inf_norm(pb.q);
  const double reg = 1e-11 * (1.0 + (n ? P.diagonal().cwiseAbs().maxCoeff() : 0.0));

  KktFactor kkt;

  // Starting point: least-squares fit of the slack system, then shifted into
  // the interior.
  {
    if (!kkt.factor(P, pb.G, VectorXd::Ones(m), pb.A, std::max(reg, 1e-8))) {
      return st;
    }
    VectorXd g = -pb.q;
    pb.G.add_transpose_times(pb.h, g);
    VectorXd dy;
    kkt.solve(g, pb.b, st.x, dy);
    if (m > 0) {
      VectorXd s = pb.h - pb.G.times(st.x);
      VectorXd z = -s; // dual estimate from the same least-squares system
      const double ds = std::max(0.0, -1.5 * s.minCoeff());
      const double dz = std::max(0.0, -1.5 * z.minCoeff());
      s.array() += ds;
      z.array() += dz;
      const double sz = s.dot(z);
      const double shift_s = 0.5 * sz / std::max(z.sum(), 1e-12);
      const double shift_z = 0.5 * sz / std::max(s.sum(), 1e-12);
      s.array() += shift_s;
      z.array() += shift_z;
      // Degenerate starts (e.g. all-zero residuals) get unit slacks.
      for (Index i = 0; i < m; ++i) {
        s(i) = std::max(s(i), 1e-2);
        z(i) = std::max(z(i), 1e-2);
      }
      st.s = s;
      st.z = z;
    }
  }

  int stalls = 0;
  std::optional<MatrixXd> P_root;
  std::optional<IpmState> acceptable;
  std::optional<IpmState> closest; // smallest scaled residual seen
  double closest_merit = std::numeric_limits<double>::infinity();
  VectorXd rd(n), req(p), rin(m);
  VectorXd dx, dy, ds, dz, dx_a, dy_a, ds_a, dz_a;

  for (st.iterations = 0; st.iterations < cfg.max_iter; ++st.iterations) {
    rd = P * st.x + pb.q;
    pb.G.add_transpose_times(st.z, rd);
    if (p > 0) {
      rd.noalias() += pb.A.transpose() * st.y;
      req = pb.A * st.x - pb.b;
    }
    rin = pb.G.times(st.x) + st.s - pb.h;

    const double mu = m > 0 ? st.s.dot(st.z) / static_cast<double>(m) : 0.0;
    const double pobj = 0.5 * st.x.dot(P * st.x) + pb.q.dot(st.x);
    st.primal_res = std::max(inf_norm(rin), inf_norm(req));
    st.dual_res = inf_norm(rd);
    st.gap = m > 0 ? st.s.dot(st.z) : 0.0;
    st.dual_objective = pobj - st.gap + st.z.dot(rin) + (p ? st.y.dot(req) : 0.0);

    const double merit = std::max({st.primal_res / scale_p, st.dual_res / scale_d,
                                   st.gap / std::max(1.0, std::abs(pobj))});
    if (st.x.allFinite() && merit < closest_merit) {
      closest_merit = merit;
      closest = st;
    }
    if (st.x.allFinite() && st.primal_res <= cfg.feas_abs && st.dual_res <= 1e-7 * scale_d &&
        st.gap <= cfg.opt_rel * std::max(1.0, std::abs(pobj))) {
      acceptable = st; // pushing on to strict accuracy can degrade the iterate
      acceptable->converged = true;
    }

    const bool strict = st.primal_res <= cfg.eps_strict * scale_p &&
                        st.dual_res <= cfg.eps_strict * scale_d &&
                        st.gap <= cfg.eps_strict * std::max(1.0, std::abs(pobj));
    if (strict) {
      st.converged = true;
      return st;
    }

    const VectorXd w = st.z.cwiseQuotient(st.s);
    const bool spread = m > 0 && w.maxCoeff() > 1e8 * w.minCoeff();
    auto orthogonal = [&] {
      if (!P_root) P_root = psd_root(P);
      return kkt.factor_orthogonal(*P_root, pb.G, w, pb.A, reg);
    };
    if (!kkt.factor(P, pb.G, w, pb.A, reg) && !orthogonal()) {
      break;
    }

    // Solves the linearized system for right-hand sides (rd, req, rin, rc):
    //   P dx + G'dz + A'dy = -rd,  A dx = -req,  G dx + ds = -rin,  Z ds + S dz = -rc
    auto eliminate = [&](const VectorXd& r_d, const VectorXd& r_eq, const VectorXd& r_in,
                         const VectorXd& r_c, VectorXd& ddx, VectorXd& ddy, VectorXd& dds,
                         VectorXd& ddz) {
      const VectorXd t = (st.z.cwiseProduct(r_in) - r_c).cwiseQuotient(st.s);
      VectorXd g = -r_d;
      pb.G.add_transpose_times(-t, g);
      kkt.solve(g, -r_eq, ddx, ddy);
      const VectorXd Gdx = pb.G.times(ddx);
      dds = -r_in - Gdx;
      ddz = t + w.cwiseProduct(Gdx);
    };
    auto newton = [&](const VectorXd& rc, VectorXd& ddx, VectorXd& ddy, VectorXd& dds,
                      VectorXd& ddz) -> double {
      eliminate(rd, req, rin, rc, ddx, ddy, dds, ddz);
      if (!spread) {
        return 0.0;
      }
      // The condensed matrix loses accuracy as w spreads; refine on the full system.
      VectorXd e_d(n), e_eq(p), e_in(m), e_c(m), cx, cy, cs, cz;
      auto residual = [&](const VectorXd& vx, const VectorXd& vy, const VectorXd& vs,
                          const VectorXd& vz) {
        e_d = P * vx + rd;
        pb.G.add_transpose_times(vz, e_d);
        if (p > 0) {
          e_d.noalias() += pb.A.transpose() * vy;
          e_eq = pb.A * vx + req;
        }
        e_in = pb.G.times(vx) + vs + rin;
        e_c = st.z.cwiseProduct(vs) + st.s.cwiseProduct(vz) + rc;
        return std::max({inf_norm(e_d) / scale_d, inf_norm(e_eq), inf_norm(e_in),
                         inf_norm(e_c) / std::max(mu, 1e-300)});
      };
      double err = residual(ddx, ddy, dds, ddz);
      for (int pass = 0; pass < 3 && err > 1e-10; ++pass) {
        eliminate(e_d, e_eq, e_in, e_c, cx, cy, cs, cz);
        cx += ddx;
        cy += ddy;
        cs += dds;
        cz += ddz;
        const double next = residual(cx, cy, cs, cz);
        if (!(next < err)) {
          break; // factor too inaccurate to refine
        }
        err = next;
        ddx.swap(cx);
        ddy.swap(cy);
        dds.swap(cs);
        ddz.swap(cz);
      }
      return err;
    };

    // Predictor.
    VectorXd rc = st.s.cwiseProduct(st.z);
    if (newton(rc, dx_a, dy_a, ds_a, dz_a) > 1e-4 && !kkt.orthogonal()) {
      if (!orthogonal()) {
        break;
      }
      newton(rc, dx_a, dy_a, ds_a, dz_a);
    }
    const double a_aff = std::min(max_step(st.s, ds_a), max_step(st.z, dz_a));
    const double mu_aff =
        m > 0 ? (st.s + a_aff * ds_a).dot(st.z + a_aff * dz_a) / static_cast<double>(m) : 0.0;
    const double sigma = m > 0 && mu > 0 ? std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3) : 0.0;

    // Corrector.
    rc.array() += (ds_a.cwiseProduct(dz_a)).array() - sigma * mu;
    newton(rc, dx, dy, ds, dz);
    const double a_max = std::min(max_step(st.s, ds), max_step(st.z, dz));
    const double alpha = std::min(1.0, 0.99 * a_max);

    st.x += alpha * dx;
    st.s += alpha * ds;
    st.z += alpha * dz;
    if (p > 0) {
      st.y += alpha * dy;
    }
    // Keep strictly interior.
    for (Index i = 0; i < m; ++i) {
      st.s(i) = std::max(st.s(i), 1e-300);
      st.z(i) = std::max(st.z(i), 1e-300);
    }

    stalls = alpha < 1e-8 ? stalls + 1 : 0;
    if (stalls >= 5) {
      break;
    }
    if (m > 0 && inf_norm(st.z) > 1e14 * scale_d) {
      break; // dual ray: primal infeasibility
    }
    if (!st.x.allFinite()) {
      break;
    }
  }

  // Final residual evaluation for the returned iterate.
  rd = P * st.x + pb.q;
  pb.G.add_transpose_times(st.z, rd);
  if (p > 0) {
    rd.noalias() += pb.A.transpose() * st.y;
    req = pb.A * st.x - pb.b;
  }
  rin = pb.G.times(st.x) + st.s - pb.h;
  st.primal_res = std::max(inf_norm(rin), inf_norm(req));
  st.dual_res = inf_norm(rd);
  st.gap = m > 0 ? st.s.dot(st.z) : 0.0;
  const double pobj = 0.5 * st.x.dot(P * st.x) + pb.q.dot(st.x);
  st.dual_objective = pobj - st.gap + st.z.dot(rin) + (p ? st.y.dot(req) : 0.0);
  st.converged = st.x.allFinite() && st.primal_res <= cfg.feas_abs &&
                 st.dual_res <= 1e-7 * scale_d &&
                 st.gap <= cfg.opt_rel * std::max(1.0, std::abs(pobj));
  if (!st.converged && acceptable) {
    acceptable->iterations = st.iterations;
    return *acceptable;
  }
  const double merit = std::max({st.primal_res / scale_p, st.dual_res / scale_d,
                                 st.gap / std::max(1.0, std::abs(pobj))});
  if (!st.converged && closest && !(merit <= closest_merit)) {
    closest->iterations = st.iterations;
    return *closest;
  }
  return st;
}

Normalized normalize(const MatrixXd& P, const VectorXd& q, const MatrixXd& G, const VectorXd& h,
                     const MatrixXd& A, const VectorXd& b, std::vector<Index>& kept_rows) {
  Normalized out;
  out.P = &P;
  out.q = q;

  kept_rows.clear();
  for (Index i = 0; i < G.rows(); ++i) {
    if (G.row(i).squaredNorm() > 0.0) {
      kept_rows.push_back(i);
    }
  }
  MatrixXd Gk(static_cast<Index>(kept_rows.size()), G.cols());
  VectorXd hk(Gk.rows());
  for (Index k = 0; k < Gk.rows(); ++k) {
    Gk.row(k) = G.row(kept_rows[k]);
    hk(k) = h(kept_rows[k]);
  }
  out.G.build(Gk);
  out.h = hk.cwiseQuotient(out.G.scale);

  std::vector<Index> eq_rows;
  for (Index i = 0; i < A.rows(); ++i) {
    if (A.row(i).squaredNorm() > 0.0) {
      eq_rows.push_back(i);
    }
  }
  out.A.resize(static_cast<Index>(eq_rows.size()), A.cols());
  out.b.resize(out.A.rows());
  out.a_scale.resize(out.A.rows());
  for (Index k = 0; k < out.A.rows(); ++k) {
    const double norm = A.row(eq_rows[k]).norm();
    out.a_scale(k) = norm;
    out.A.row(k) = A.row(eq_rows[k]) / norm;
    out.b(k) = b(eq_rows[k]) / norm;
  }
  return out;
}

/// Violation of constraints with all-zero rows, which the IPM drops.
double trivial_row_violation(const QuadraticProgram& qp) {
  double worst = 0.0;
  for (Index i = 0; i < qp.G.rows(); ++i) {
    if (qp.G.row(i).squaredNorm() == 0.0) {
      worst = std::max(worst, -qp.h(i));
    }
  }
  for (Index i = 0; i < qp.A.rows(); ++i) {
    if (qp.A.row(i).squaredNorm() == 0.0) {
      worst = std::max(worst, std::abs(qp.b(i)));
    }
  }
  return worst;
}

/// Re-solves the equality-constrained problem on the active set guessed from
/// the interior iterate. Returns true and overwrites x/z/y when the polished
/// point is primal feasible and no worse than the interior iterate.
bool polish(const QuadraticProgram& qp, const Tolerances& tol, VectorXd& x, VectorXd& z,
            VectorXd& y, const std::vector<Index>& kept_rows, const IpmState& st,
            bool require_kkt = false) {
  const Index n = qp.variables();
  std::vector<Index> active;
  for (Index k = 0; k < static_cast<Index>(kept_rows.size()); ++k) {
    if (st.s(k) < st.z(k)) {
      active.push_back(kept_rows[k]);
    }
  }
  const Index na = static_cast<Index>(active.size());
  const Index p = qp.equalities();
  const Index dim = n + na + p;

  MatrixXd K = MatrixXd::Zero(dim, dim);
  K.topLeftCorner(n, n) = qp.P;
  VectorXd rhs(dim);
  rhs.head(n) = -qp.q;
  for (Index k = 0; k < na; ++k) {
    K.block(n + k, 0, 1, n) = qp.G.row(active[k]);
    K.block(0, n + k, n, 1) = qp.G.row(active[k]).transpose();
    rhs(n + k) = qp.h(active[k]);
  }
  for (Index k = 0; k < p; ++k) {
    K.block(n + na + k, 0, 1, n) = qp.A.row(k);
    K.block(0, n + na + k, n, 1) = qp.A.row(k).transpose();
    rhs(n + na + k) = qp.b(k);
  }
  const double delta = 1e-9;
  MatrixXd Kreg = K;
  Kreg.diagonal().head(n).array() += delta;
  Kreg.diagonal().tail(na + p).array() -= delta;
  Eigen::PartialPivLU<MatrixXd> lu(Kreg);
  VectorXd sol = VectorXd::Zero(dim);
  for (int it = 0; it < 25; ++it) {
    const VectorXd res = rhs - K * sol;
    if (res.cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + rhs.cwiseAbs().maxCoeff())) {
      break;
    }
    sol += lu.solve(res);
  }
  if (!sol.allFinite()) {
    return false;
  }
  const VectorXd xp = sol.head(n);
  const double scale_p = 1.0 + std::max(inf_norm(qp.h), inf_norm(qp.b));
  const double viol = qp.max_violation(xp);
  if (viol > std::min(tol.feas_tol, 1e-9 * scale_p)) {
    return false;
  }
  const VectorXd za = sol.segment(n, na);
  const double scale_d = 1.0 + inf_norm(qp.q);
  const bool dual_ok = na == 0 || za.minCoeff() >= -1e-8 * scale_d;
  const double f_pol = qp.objective(xp);
  const double f_ipm = qp.objective(x);
  const bool no_worse = f_pol <= f_ipm + 1e-12 * std::max(1.0, std::abs(f_ipm));
  if (require_kkt ? !dual_ok : (!dual_ok && !no_worse)) {
    return false;
  }
  x = xp;
  z = VectorXd::Zero(qp.inequalities());
  for (Index k = 0; k < na; ++k) {
    z(active[k]) = std::max(0.0, za(k));
  }
  y = sol.tail(p);
  return true;
}

IpmSettings settings_for(const Tolerances& tol, double scale_p) {
  IpmSettings s;
  (void)scale_p;
  s.feas_abs = 0.01 * tol.feas_tol;
  s.opt_rel = tol.opt_tol;
  s.max_iter = std::max(1, std::min(tol.max_iter, 500));
  return s;
}

FeasibilityVerdict phase_one(const QuadraticProgram& qp, const Tolerances& tol) {
  const Index n = qp.variables();
  const Index m = qp.inequalities();
  const Index p = qp.equalities();
  const double radius =
      1e4 * (1.0 + std::max(inf_norm(qp.h), inf_norm(qp.b)));

  // Variables (x, t). Rows: G x - t <= h; +-(A x - b) <= t; -t <= 0; |x_i| <= radius.
  const Index rows = m + 2 * p + 1 + 2 * n;
  MatrixXd G1 = MatrixXd::Zero(rows, n + 1);
  VectorXd h1(rows);
  Index r = 0;
  for (Index i = 0; i < m; ++i, ++r) {
    G1.block(r, 0, 1, n) = qp.G.row(i);
    G1(r, n) = -1.0;
    h1(r) = qp.h(i);
  }
  for (Index i = 0; i < p; ++i) {
    G1.block(r, 0, 1, n) = qp.A.row(i);
    G1(r, n) = -1.0;
    h1(r++) = qp.b(i);
    G1.block(r, 0, 1, n) = -qp.A.row(i);
    G1(r, n) = -1.0;
    h1(r++) = -qp.b(i);
  }
  G1(r, n) = -1.0;
  h1(r++) = 0.0;
  for (Index j = 0; j < n; ++j) {
    G1(r, j) = 1.0;
    h1(r++) = radius;
    G1(r, j) = -1.0;
    h1(r++) = radius;
  }

  const MatrixXd P1 = MatrixXd::Zero(n + 1, n + 1);
  VectorXd q1 = VectorXd::Zero(n + 1);
  q1(n) = 1.0;
  const MatrixXd A1(0, n + 1);
  const VectorXd b1(0);

  std::vector<Index> kept;
  const Normalized pb = normalize(P1, q1, G1, h1, A1, b1, kept);
  IpmSettings cfg;
  cfg.feas_abs = 1e-9 * (1.0 + inf_norm(pb.h));
  cfg.opt_rel = 1e-9;
  cfg.max_iter = std::max(1, std::min(tol.max_iter, 500));
  const IpmState st = interior_point(pb, cfg);

  FeasibilityVerdict v;
  v.iterations = st.iterations;
  v.witness = st.x.head(n);
  v.min_violation = std::max(qp.max_violation(v.witness), trivial_row_violation(qp));
  v.lower_bound = std::max(st.dual_objective, trivial_row_violation(qp));
  if (!v.witness.allFinite()) {
    v.status = SolveStatus::max_iterations;
    return v;
  }
  if (v.min_violation <= tol.feas_tol) {
    v.status = SolveStatus::optimal;
  } else if (st.converged || v.lower_bound > tol.feas_tol) {
    v.status = SolveStatus::infeasible;
  } else {
    v.status = SolveStatus::max_iterations;
  }
  return v;
}

struct Attempt {
  bool ok = false;
  IpmState state;
  VectorXd x, z, y;
  bool polished = false;
};

Attempt attempt(const QuadraticProgram& qp, const VectorXd& h, const Tolerances& tol) {
  std::vector<Index> kept;
  const Normalized pb = normalize(qp.P, qp.q, qp.G, h, qp.A, qp.b, kept);
  const double scale_p = 1.0 + std::max(inf_norm(pb.h), inf_norm(pb.b));
  Attempt a;
  a.state = interior_point(pb, settings_for(tol, scale_p));
  if (!a.state.x.allFinite()) {
    return a;
  }
  a.x = a.state.x;
  // Map multipliers back to the original row scaling.
  a.z = VectorXd::Zero(qp.inequalities());
  for (Index k = 0; k < static_cast<Index>(kept.size()); ++k) {
    a.z(kept[k]) = a.state.z(k) / pb.G.scale(k);
  }
  a.y = VectorXd::Zero(qp.equalities());
  {
    Index k = 0;
    for (Index i = 0; i < qp.A.rows(); ++i) {
      if (qp.A.row(i).squaredNorm() > 0.0) {
        a.y(i) = a.state.y(k) / pb.a_scale(k);
        ++k;
      }
    }
  }
  QuadraticProgram view = qp;
  view.h = h;
  // An unconverged iterate is accepted only through an exact KKT point on
  // its active set.
  a.polished = polish(view, tol, a.x, a.z, a.y, kept, a.state, !a.state.converged);
  a.ok = a.state.converged || a.polished;
  return a;
}

} // namespace

FeasibilityVerdict check_feasible(const QuadraticProgram& qp, const Tolerances& tol) {
  check_structure(qp);
  if (!(tol.feas_tol > 0.0) || !(tol.opt_tol > 0.0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
  return phase_one(qp, tol);
}

SolveOutcome solve(const QuadraticProgram& qp, const Tolerances& tol) {
  check_structure(qp);
  if (!(tol.feas_tol > 0.0) || !(tol.opt_tol > 0.0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
  SolveOutcome out;

  auto finish = [&](const Attempt& a) {
    out.status = SolveStatus::optimal;
    out.x = a.x;
    out.z = a.z;
    out.y = a.y;
    out.objective = qp.objective(a.x);
    out.primal_residual = qp.max_violation(a.x);
    out.polished = a.polished;
  };

  if (trivial_row_violation(qp) <= tol.feas_tol) {
    Attempt a = attempt(qp, qp.h, tol);
    out.iterations = a.state.iterations;
    if (a.ok && qp.max_violation(a.x) <= tol.feas_tol) {
      finish(a);
      return out;
    }
  }

  // The interior iteration did not settle: decide feasibility explicitly.
  const FeasibilityVerdict v = phase_one(qp, tol);
  out.iterations += v.iterations;
  if (v.infeasible()) {
    out.status = SolveStatus::infeasible;
    out.violation_floor = v.lower_bound > 0.0 ? v.lower_bound : v.min_violation;
    out.primal_residual = v.min_violation;
    return out;
  }
  if (v.feasible() && v.min_violation > 0.0) {
    // Feasible only within tolerance: solve the minimally relaxed problem.
    const VectorXd relaxed = qp.h.array() + v.min_violation;
    Attempt a = attempt(qp, relaxed, tol);
    out.iterations += a.state.iterations;
    if (a.ok && qp.max_violation(a.x) <= tol.feas_tol) {
      finish(a);
      return out;
    }
  }
  out.status = SolveStatus::max_iterations;
  return out;
}

} // namespace mgsched::qp
