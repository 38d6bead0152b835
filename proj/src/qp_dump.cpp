#include "mgsched/qp.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mgsched::qp {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

void write_text(std::ostream& os, const QuadraticProgram& qp) {
  const auto n = qp.variables();
  os << "qp " << n << ' ' << qp.inequalities() << ' ' << qp.equalities() << '\n';
  for (Eigen::Index i = 0; i < n; ++i) {
    os << "P";
    for (Eigen::Index j = 0; j < n; ++j) {
      os << ' ' << num(qp.P(i, j));
    }
    os << '\n';
  }
  os << "q";
  for (Eigen::Index j = 0; j < n; ++j) {
    os << ' ' << num(qp.q(j));
  }
  os << "\nconstant " << num(qp.constant) << '\n';
  for (Eigen::Index i = 0; i < qp.inequalities(); ++i) {
    os << "ineq";
    for (Eigen::Index j = 0; j < n; ++j) {
      os << ' ' << num(qp.G(i, j));
    }
    os << ' ' << num(qp.h(i)) << '\n';
  }
  for (Eigen::Index i = 0; i < qp.equalities(); ++i) {
    os << "eq";
    for (Eigen::Index j = 0; j < n; ++j) {
      os << ' ' << num(qp.A(i, j));
    }
    os << ' ' << num(qp.b(i)) << '\n';
  }
}

QuadraticProgram read_text(std::istream& is) {
  std::string line;
  int line_no = 0;
  auto next = [&](const std::string& tag) {
    if (!std::getline(is, line)) {
      throw std::runtime_error("qp dump: unexpected end of input, expected '" + tag + "'");
    }
    ++line_no;
    std::istringstream ls(line);
    std::string got;
    ls >> got;
    if (got != tag) {
      throw std::runtime_error("qp dump line " + std::to_string(line_no) + ": expected '" + tag +
                               "', found '" + got + "'");
    }
    return ls;
  };
  auto read_values = [&](std::istringstream& ls, Eigen::Index count) {
    Eigen::VectorXd v(count);
    for (Eigen::Index j = 0; j < count; ++j) {
      if (!(ls >> v(j))) {
        throw std::runtime_error("qp dump line " + std::to_string(line_no) + ": too few values");
      }
    }
    return v;
  };

  auto header = next("qp");
  Eigen::Index n = 0, m = 0, p = 0;
  if (!(header >> n >> m >> p) || n < 0 || m < 0 || p < 0) {
    throw std::runtime_error("qp dump: malformed header");
  }
  QuadraticProgram qp(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto ls = next("P");
    qp.P.row(i) = read_values(ls, n).transpose();
  }
  {
    auto ls = next("q");
    qp.q = read_values(ls, n);
  }
  {
    auto ls = next("constant");
    qp.constant = read_values(ls, 1)(0);
  }
  qp.G.resize(m, n);
  qp.h.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    auto ls = next("ineq");
    const Eigen::VectorXd v = read_values(ls, n + 1);
    qp.G.row(i) = v.head(n).transpose();
    qp.h(i) = v(n);
  }
  qp.A.resize(p, n);
  qp.b.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    auto ls = next("eq");
    const Eigen::VectorXd v = read_values(ls, n + 1);
    qp.A.row(i) = v.head(n).transpose();
    qp.b(i) = v(n);
  }
  return qp;
}

} // namespace mgsched::qp
