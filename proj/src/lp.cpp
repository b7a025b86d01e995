#include "alp/lp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace alp {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

Matrix LinearProgram::stacked_a() const {
  Matrix a(num_rows(), num_vars());
  if (num_eq() > 0) a.topRows(num_eq()) = a_eq;
  if (num_ineq() > 0) a.bottomRows(num_ineq()) = a_ineq;
  return a;
}

Vector LinearProgram::stacked_b() const {
  Vector b(num_rows());
  if (num_eq() > 0) b.head(num_eq()) = b_eq;
  if (num_ineq() > 0) b.tail(num_ineq()) = b_ineq;
  return b;
}

void LinearProgram::validate() const {
  const int n = num_vars();
  if (n == 0) throw std::invalid_argument("lp: no variables");
  if (num_rows() == 0) throw std::invalid_argument("lp: no constraints");
  if (a_eq.rows() != b_eq.size())
    throw std::invalid_argument("lp: a_eq/b_eq row mismatch");
  if (a_ineq.rows() != b_ineq.size())
    throw std::invalid_argument("lp: a_ineq/b_ineq row mismatch");
  if (num_eq() > 0 && a_eq.cols() != n)
    throw std::invalid_argument("lp: a_eq column mismatch");
  if (num_ineq() > 0 && a_ineq.cols() != n)
    throw std::invalid_argument("lp: a_ineq column mismatch");
  if (!c.allFinite() || !all_finite(a_eq) || !b_eq.allFinite() ||
      !all_finite(a_ineq) || !b_ineq.allFinite())
    throw std::invalid_argument("lp: non-finite entry");
}

LinearProgram make_lp(Vector c, Matrix a_eq, Vector b_eq, Matrix a_ineq,
                      Vector b_ineq) {
  const int n = static_cast<int>(c.size());
  if (a_eq.size() == 0) a_eq.resize(0, n);
  if (a_ineq.size() == 0) a_ineq.resize(0, n);
  LinearProgram lp{std::move(c), std::move(a_eq), std::move(b_eq),
                   std::move(a_ineq), std::move(b_ineq)};
  lp.validate();
  return lp;
}

Vector CanonicalLP::recover(const Vector& split) const {
  Vector x(origin_dim);
  for (int i = 0; i < origin_dim; ++i) x[i] = split[pairing[i].first];
  return x;
}

int CanonicalLP::pairing_row_offset() const {
  return inner.num_eq() - origin_dim;
}

CanonicalLP canonicalize(const LinearProgram& lp) {
  lp.validate();
  const int n = lp.num_vars();
  const int p = lp.num_eq();
  const int q = lp.num_ineq();

  for (int j = 0; j < n; ++j) {
    double col = std::abs(lp.c[j]);
    if (p > 0) col += lp.a_eq.col(j).cwiseAbs().sum();
    if (q > 0) col += lp.a_ineq.col(j).cwiseAbs().sum();
    if (col == 0.0)
      throw std::invalid_argument(
          "canonicalize: variable " + std::to_string(j) +
          " appears in no row and has zero cost (zero stacked column)");
  }

  auto split_row = [n](const Eigen::RowVectorXd& row) {
    Eigen::RowVectorXd out(2 * n);
    out.head(n) = row.cwiseMax(0.0);
    out.tail(n) = (-row).cwiseMax(0.0);
    return out;
  };

  CanonicalLP out;
  out.origin_dim = n;
  out.pairing.reserve(n);
  for (int i = 0; i < n; ++i) out.pairing.emplace_back(i, n + i);

  LinearProgram& in = out.inner;
  in.c.resize(2 * n);
  in.c.head(n) = lp.c.cwiseMax(0.0);
  in.c.tail(n) = (-lp.c).cwiseMax(0.0);

  in.a_eq.setZero(p + n, 2 * n);
  in.b_eq.setZero(p + n);
  for (int i = 0; i < p; ++i) {
    in.a_eq.row(i) = split_row(lp.a_eq.row(i));
    in.b_eq[i] = lp.b_eq[i];
  }
  for (int i = 0; i < n; ++i) {
    in.a_eq(p + i, i) = 1.0;
    in.a_eq(p + i, n + i) = 1.0;
  }

  in.a_ineq.setZero(q, 2 * n);
  in.b_ineq.resize(q);
  for (int i = 0; i < q; ++i) {
    in.a_ineq.row(i) = split_row(lp.a_ineq.row(i));
    in.b_ineq[i] = lp.b_ineq[i];
  }
  return out;
}

LinearProgram DualLP::to_min_lp() const {
  const int m = num_vars();
  int n_sign = 0;
  for (int s : sign) n_sign += (s != 0);
  Matrix a_ineq(n_sign, m);
  a_ineq.setZero();
  Vector b_ineq = Vector::Zero(n_sign);
  int r = 0;
  for (int i = 0; i < m; ++i)
    if (sign[i] != 0) a_ineq(r++, i) = 1.0;  // y_i <= 0
  return make_lp(-objective, constraint, rhs, std::move(a_ineq),
                 std::move(b_ineq));
}

DualLP build_dual(const LinearProgram& lp) {
  lp.validate();
  DualLP dual;
  dual.objective = lp.stacked_b();
  dual.constraint = lp.stacked_a().transpose();
  dual.rhs = lp.c;
  dual.sign.assign(lp.num_rows(), 0);
  for (int i = lp.num_eq(); i < lp.num_rows(); ++i) dual.sign[i] = -1;
  return dual;
}

PrimalDualSystem build_primal_dual(const LinearProgram& lp) {
  lp.validate();
  const int n = lp.num_vars();
  const int p = lp.num_eq();
  const int q = lp.num_ineq();
  const int m = p + q;

  PrimalDualSystem sys;
  sys.primal_dim = n;
  sys.dual_dim = m;
  const Vector b = lp.stacked_b();
  sys.b_plus = b.cwiseMax(0.0);
  sys.b_minus = (-b).cwiseMax(0.0);
  sys.degenerate_gap = (lp.c.lpNorm<Eigen::Infinity>() == 0.0 &&
                        b.lpNorm<Eigen::Infinity>() == 0.0);

  const int nv = n + 2 * m;  // [V, lambda, lambda_minus]
  const int lam = n;
  const int lam_minus = n + m;

  // Equality rows: primal equalities, dual stationarity, gap, pairings.
  const int n_eq = p + n + 1 + m;
  Matrix a_eq = Matrix::Zero(n_eq, nv);
  Vector b_eq = Vector::Zero(n_eq);
  int r = 0;
  for (int i = 0; i < p; ++i, ++r) {
    a_eq.block(r, 0, 1, n) = lp.a_eq.row(i);
    b_eq[r] = lp.b_eq[i];
  }
  const Matrix at = lp.stacked_a().transpose();  // n x m
  for (int j = 0; j < n; ++j, ++r) {
    a_eq.block(r, lam, 1, m) = at.row(j);
    b_eq[r] = lp.c[j];
  }
  sys.gap_row = r;
  a_eq.block(r, 0, 1, n) = lp.c.transpose();
  a_eq.block(r, lam, 1, m) = sys.b_minus.transpose();
  a_eq.block(r, lam_minus, 1, m) = sys.b_plus.transpose();
  ++r;
  for (int i = 0; i < m; ++i, ++r) {
    a_eq(r, lam + i) = 1.0;
    a_eq(r, lam_minus + i) = 1.0;
  }

  // Inequality rows: primal inequalities, then lambda_i <= 0 for the
  // multipliers of primal inequality rows.
  Matrix a_ineq = Matrix::Zero(q + q, nv);
  Vector b_ineq = Vector::Zero(q + q);
  for (int i = 0; i < q; ++i) {
    a_ineq.block(i, 0, 1, n) = lp.a_ineq.row(i);
    b_ineq[i] = lp.b_ineq[i];
  }
  for (int i = 0; i < q; ++i) a_ineq(q + i, lam + p + i) = 1.0;

  sys.combined = make_lp(Vector::Zero(nv), std::move(a_eq), std::move(b_eq),
                         std::move(a_ineq), std::move(b_ineq));
  return sys;
}

double KktResidual::max() const {
  return std::max(std::max(stationarity, primal_feasibility),
                  std::max(dual_nonneg, complementarity));
}

KktResidual kkt_residual(const LinearProgram& lp, const Vector& v,
                         const Vector& lambda, const Vector& mu) {
  if (v.size() != lp.num_vars() || lambda.size() != lp.num_ineq() ||
      mu.size() != lp.num_eq())
    throw std::invalid_argument("kkt_residual: dimension mismatch");

  KktResidual res;
  Vector grad = lp.c;
  if (lp.num_eq() > 0) grad += lp.a_eq.transpose() * mu;
  if (lp.num_ineq() > 0) grad += lp.a_ineq.transpose() * lambda;
  res.stationarity = grad.lpNorm<Eigen::Infinity>();

  if (lp.num_eq() > 0)
    res.primal_feasibility =
        (lp.a_eq * v - lp.b_eq).lpNorm<Eigen::Infinity>();
  if (lp.num_ineq() > 0) {
    const Vector slack = lp.b_ineq - lp.a_ineq * v;
    res.primal_feasibility =
        std::max(res.primal_feasibility, std::max(0.0, -slack.minCoeff()));
    res.dual_nonneg = std::max(0.0, -lambda.minCoeff());
    res.complementarity =
        (lambda.array() * slack.array()).abs().maxCoeff();
  }
  return res;
}

namespace {

using nlohmann::json;

Vector vector_from_json(const json& j) {
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

Matrix matrix_from_json(const json& j, int cols_hint) {
  const int rows = static_cast<int>(j.size());
  int cols = cols_hint;
  if (rows > 0) cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      throw std::invalid_argument("lp json: ragged matrix");
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json j = json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

json matrix_to_json(const Matrix& m) {
  json j = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    j.push_back(row);
  }
  return j;
}

}  // namespace

LinearProgram lp_from_json(const std::string& text) {
  json j = json::parse(text);
  const Vector c = vector_from_json(j.at("c"));
  const int n = static_cast<int>(c.size());
  Matrix a_eq(0, n), a_ineq(0, n);
  Vector b_eq(0), b_ineq(0);
  if (j.contains("a_eq")) a_eq = matrix_from_json(j["a_eq"], n);
  if (j.contains("b_eq")) b_eq = vector_from_json(j["b_eq"]);
  if (j.contains("a_ineq")) a_ineq = matrix_from_json(j["a_ineq"], n);
  if (j.contains("b_ineq")) b_ineq = vector_from_json(j["b_ineq"]);
  return make_lp(c, a_eq, b_eq, a_ineq, b_ineq);
}

std::string lp_to_json(const LinearProgram& lp) {
  json j;
  j["c"] = vector_to_json(lp.c);
  j["a_eq"] = matrix_to_json(lp.a_eq);
  j["b_eq"] = vector_to_json(lp.b_eq);
  j["a_ineq"] = matrix_to_json(lp.a_ineq);
  j["b_ineq"] = vector_to_json(lp.b_ineq);
  return j.dump(2);
}

LinearProgram load_lp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return lp_from_json(ss.str());
}

}  // namespace alp
