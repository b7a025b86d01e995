// Linear program representation, non-negative canonical form, dual and
// primal-dual feasibility constructions, KKT residual evaluation.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace alp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// min c'x  s.t.  a_eq x = b_eq,  a_ineq x <= b_ineq, x free.
// Either constraint block may be empty (0 x n).
struct LinearProgram {
  Vector c;
  Matrix a_eq;
  Vector b_eq;
  Matrix a_ineq;
  Vector b_ineq;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_eq() const { return static_cast<int>(a_eq.rows()); }
  int num_ineq() const { return static_cast<int>(a_ineq.rows()); }
  int num_rows() const { return num_eq() + num_ineq(); }

  // Stacked constraint matrix [a_eq; a_ineq] and rhs [b_eq; b_ineq].
  Matrix stacked_a() const;
  Vector stacked_b() const;

  // Throws std::invalid_argument on inconsistent dimensions, non-finite
  // entries, or an empty constraint set.
  void validate() const;
};

LinearProgram make_lp(Vector c, Matrix a_eq, Vector b_eq, Matrix a_ineq,
                      Vector b_ineq);

// Result of the variable-splitting transform. `inner` has 2*origin_dim
// variables laid out as [x_plus(0..n-1), x_minus(n..2n-1)], entrywise
// non-negative coefficient matrices, and one pairing equality row
// x_plus_i + x_minus_i = 0 per original variable appended after the
// original equality rows.
struct CanonicalLP {
  LinearProgram inner;
  std::vector<std::pair<int, int>> pairing;
  int origin_dim = 0;

  // Maps a canonical point back to original variables (x_i = x_plus_i).
  Vector recover(const Vector& split) const;
  // Index of the first pairing row inside inner.a_eq.
  int pairing_row_offset() const;
};

// Three-step non-negativity transform. Rejects LPs containing a variable
// absent from the cost and every constraint row (zero stacked column).
CanonicalLP canonicalize(const LinearProgram& lp);

// Dual of LinearProgram in max form:
//   max b'y  s.t.  [a_eq' a_ineq'] y = c,  y_i <= 0 for inequality rows.
// The nonpositive orientation follows from the primal "<=" rows; a feasible
// pair satisfies b'y = c'x at optimality.
struct DualLP {
  Vector objective;          // stacked [b_eq; b_ineq]
  Matrix constraint;         // n x (p+q)
  Vector rhs;                // = c
  std::vector<int> sign;     // 0 = free, -1 = nonpositive
  int num_vars() const { return static_cast<int>(objective.size()); }

  // Min-form encoding for the oracle: min -b'y with the same constraints.
  LinearProgram to_min_lp() const;
};

DualLP build_dual(const LinearProgram& lp);

// Feasibility problem whose feasible points are exactly the primal/dual
// optimizer pairs: primal constraints, dual constraints, the zero-gap row
// c'V + b_minus'lambda + b_plus'lambda_minus = 0 and the rows
// lambda + lambda_minus = 0, over variables [V, lambda, lambda_minus].
struct PrimalDualSystem {
  LinearProgram combined;
  int primal_dim = 0;     // n
  int dual_dim = 0;       // p + q
  int gap_row = 0;        // index into combined.a_eq
  Vector b_plus;
  Vector b_minus;
  bool degenerate_gap = false;  // c == 0 and b == 0

  int lambda_offset() const { return primal_dim; }
  int lambda_minus_offset() const { return primal_dim + dual_dim; }
};

PrimalDualSystem build_primal_dual(const LinearProgram& lp);

// Max-norm residuals of the KKT system for LinearProgram at (v, lambda, mu),
// convention c + a_eq' mu + a_ineq' lambda = 0 with lambda >= 0.
struct KktResidual {
  double stationarity = 0;
  double primal_feasibility = 0;
  double dual_nonneg = 0;
  double complementarity = 0;
  double max() const;
};

KktResidual kkt_residual(const LinearProgram& lp, const Vector& v,
                         const Vector& lambda, const Vector& mu);

// JSON problem format:
// {"c":[...], "a_eq":[[...]], "b_eq":[...], "a_ineq":[[...]], "b_ineq":[...]}
LinearProgram lp_from_json(const std::string& text);
std::string lp_to_json(const LinearProgram& lp);
LinearProgram load_lp_file(const std::string& path);

}  // namespace alp
