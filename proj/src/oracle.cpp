#include "alp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace alp {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
  }
  return "?";
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr int kStallLimit = 60;

// Dense tableau over standard-form variables [x+, x-, slack, artificial].
// Rows are sign-normalized so rhs >= 0; artificial columns exist for every
// row (used for the starting basis where no slack qualifies, and for dual
// recovery on equality rows).
struct Tableau {
  Matrix t;                 // m x (n_total + 1), last column = rhs
  std::vector<int> basis;   // basic variable per row
  std::vector<double> row_sign;  // +1 / -1 vs. the original row
  int n_struct;             // 2n structural columns
  int n_slack;
  int art0;                 // first artificial column
  int n_total;

  double& rhs(int i) { return t(i, n_total); }
};

enum class PivotResult { improved, optimal, unbounded };

// One simplex phase on the given cost vector; `allow` masks enterable
// columns. Returns final status; reduced costs are kept in `redcost`.
PivotResult run_phase(Tableau& tab, const Vector& cost,
                      const std::vector<bool>& allow, Vector& redcost,
                      double& objective, int max_iter) {
  const int m = static_cast<int>(tab.t.rows());
  const int n = tab.n_total;

  // Fresh reduced-cost row: c' - c_B' B^-1 A.
  redcost = cost;
  objective = 0;
  for (int i = 0; i < m; ++i) {
    const double cb = cost[tab.basis[i]];
    if (cb != 0.0) {
      redcost -= cb * tab.t.row(i).head(n).transpose();
      objective += cb * tab.t(i, n);
    }
  }

  auto exact_objective = [&]() {
    double obj = 0;
    for (int i = 0; i < m; ++i) obj += cost[tab.basis[i]] * tab.t(i, n);
    return obj;
  };

  int stall = 0;
  double last_obj = objective;
  bool bland = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    // Entering column.
    int enter = -1;
    if (bland) {
      for (int j = 0; j < n; ++j)
        if (allow[j] && redcost[j] < -kPivotTol) { enter = j; break; }
    } else {
      double best = -kPivotTol;
      for (int j = 0; j < n; ++j)
        if (allow[j] && redcost[j] < best) { best = redcost[j]; enter = j; }
    }
    if (enter < 0) {
      objective = exact_objective();
      return PivotResult::optimal;
    }

    // Ratio test, lowest basis index on ties (Bland-compatible).
    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double a = tab.t(i, enter);
      if (a > kPivotTol) {
        const double ratio = tab.t(i, n) / a;
        if (ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 &&
             (leave < 0 || tab.basis[i] < tab.basis[leave]))) {
          best_ratio = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) return PivotResult::unbounded;

    // Pivot.
    const double piv = tab.t(leave, enter);
    tab.t.row(leave) /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == leave) continue;
      const double f = tab.t(i, enter);
      if (f != 0.0) tab.t.row(i) -= f * tab.t.row(leave);
    }
    const double f = redcost[enter];
    redcost -= f * tab.t.row(leave).head(n).transpose();
    objective += f * tab.t(leave, n);
    tab.basis[leave] = enter;

    if (objective < last_obj - 1e-12) {
      stall = 0;
      last_obj = objective;
      bland = false;
    } else if (++stall > kStallLimit) {
      bland = true;
    }
  }
  throw std::runtime_error("simplex: iteration limit exceeded");
}

}  // namespace

OracleSolution solve_lp(const LinearProgram& lp) {
  lp.validate();
  const int n = lp.num_vars();
  const int p = lp.num_eq();
  const int q = lp.num_ineq();
  const int m = p + q;

  Tableau tab;
  tab.n_struct = 2 * n;
  tab.n_slack = q;
  tab.art0 = tab.n_struct + tab.n_slack;
  tab.n_total = tab.art0 + m;
  tab.t.setZero(m, tab.n_total + 1);
  tab.basis.assign(m, -1);
  tab.row_sign.assign(m, 1.0);

  const Matrix a = lp.stacked_a();
  const Vector b = lp.stacked_b();
  for (int i = 0; i < m; ++i) {
    const double s = (b[i] < 0) ? -1.0 : 1.0;
    tab.row_sign[i] = s;
    tab.t.block(i, 0, 1, n) = s * a.row(i);
    tab.t.block(i, n, 1, n) = -s * a.row(i);
    if (i >= p) tab.t(i, tab.n_struct + (i - p)) = s;  // slack
    tab.t(i, tab.art0 + i) = 1.0;
    tab.rhs(i) = s * b[i];
    // Unflipped inequality rows start on their slack, everything else on
    // the artificial.
    tab.basis[i] = (i >= p && s > 0) ? tab.n_struct + (i - p) : tab.art0 + i;
  }

  const int max_iter = 2000 + 200 * (m + tab.n_total);
  Vector redcost;
  double objective = 0;

  // Phase 1: minimize the artificial sum.
  {
    Vector cost1 = Vector::Zero(tab.n_total);
    cost1.tail(m).setOnes();
    std::vector<bool> allow(tab.n_total, true);
    for (int j = tab.art0; j < tab.n_total; ++j) allow[j] = false;
    // Artificials may leave but never re-enter; entering is what `allow`
    // controls, so disallowing them is enough.
    const PivotResult r =
        run_phase(tab, cost1, allow, redcost, objective, max_iter);
    if (r == PivotResult::unbounded)
      throw std::runtime_error("simplex: phase 1 unbounded");
    if (objective > kFeasTol) {
      OracleSolution sol;
      sol.status = SolveStatus::infeasible;
      return sol;
    }
    // Drive leftover basic artificials out where possible; a row with no
    // eligible pivot is redundant and its artificial stays basic at zero.
    for (int i = 0; i < m; ++i) {
      if (tab.basis[i] < tab.art0) continue;
      int enter = -1;
      for (int j = 0; j < tab.art0; ++j)
        if (std::abs(tab.t(i, j)) > 1e-7) { enter = j; break; }
      if (enter < 0) continue;
      const double piv = tab.t(i, enter);
      tab.t.row(i) /= piv;
      for (int k = 0; k < m; ++k) {
        if (k == i) continue;
        const double f = tab.t(k, enter);
        if (f != 0.0) tab.t.row(k) -= f * tab.t.row(i);
      }
      tab.basis[i] = enter;
    }
  }

  // Phase 2.
  Vector cost2 = Vector::Zero(tab.n_total);
  cost2.head(n) = lp.c;
  cost2.segment(n, n) = -lp.c;
  std::vector<bool> allow(tab.n_total, true);
  for (int j = tab.art0; j < tab.n_total; ++j) allow[j] = false;
  const PivotResult r =
      run_phase(tab, cost2, allow, redcost, objective, max_iter);

  OracleSolution sol;
  if (r == PivotResult::unbounded) {
    sol.status = SolveStatus::unbounded;
    return sol;
  }
  sol.status = SolveStatus::optimal;

  Vector z = Vector::Zero(tab.n_total);
  for (int i = 0; i < m; ++i) z[tab.basis[i]] = tab.rhs(i);
  sol.v_star = z.head(n) - z.segment(n, n);
  sol.cost = lp.c.dot(sol.v_star);

  // Simplex multipliers from artificial reduced costs: y_i = -redcost(art_i)
  // in the row-flipped system, un-flipped by row_sign. y solves a'y = c with
  // y <= 0 on inequality rows; standard-convention multipliers negate it.
  sol.mu_star.resize(p);
  sol.lambda_star.resize(q);
  for (int i = 0; i < m; ++i) {
    const double y = -redcost[tab.art0 + i] * tab.row_sign[i];
    if (i < p)
      sol.mu_star[i] = -y;
    else
      sol.lambda_star[i - p] = std::max(0.0, -y);
  }
  return sol;
}

std::vector<Vector> enumerate_vertices(const LinearProgram& lp) {
  lp.validate();
  const int n = lp.num_vars();
  const int p = lp.num_eq();
  const int q = lp.num_ineq();
  if (n > 12 || p + q > 25)
    throw std::invalid_argument("enumerate_vertices: instance over size guard");

  std::vector<Vector> verts;
  const int k = std::max(0, n - p);
  if (k > q) return verts;

  std::vector<int> pick(k);
  for (int i = 0; i < k; ++i) pick[i] = i;

  auto try_subset = [&](const std::vector<int>& sel) {
    Matrix msys(p + static_cast<int>(sel.size()), n);
    Vector rhs(msys.rows());
    if (p > 0) {
      msys.topRows(p) = lp.a_eq;
      rhs.head(p) = lp.b_eq;
    }
    for (size_t i = 0; i < sel.size(); ++i) {
      msys.row(p + static_cast<int>(i)) = lp.a_ineq.row(sel[i]);
      rhs[p + static_cast<int>(i)] = lp.b_ineq[sel[i]];
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(msys);
    if (cod.rank() < n) return;  // not a point
    const Vector x = cod.solve(rhs);
    if ((msys * x - rhs).lpNorm<Eigen::Infinity>() > 1e-8) return;
    if (p > 0 &&
        (lp.a_eq * x - lp.b_eq).lpNorm<Eigen::Infinity>() > kFeasTol)
      return;
    if (q > 0 && (lp.a_ineq * x - lp.b_ineq).maxCoeff() > kFeasTol) return;
    for (const Vector& v : verts)
      if ((v - x).lpNorm<Eigen::Infinity>() <= 1e-9) return;
    verts.push_back(x);
  };

  if (k == 0) {
    try_subset({});
    return verts;
  }
  while (true) {
    try_subset(pick);
    int i = k - 1;
    while (i >= 0 && pick[i] == q - k + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  return verts;
}

double best_vertex_cost(const LinearProgram& lp) {
  const auto verts = enumerate_vertices(lp);
  if (verts.empty())
    throw std::runtime_error("best_vertex_cost: no feasible vertex");
  double best = std::numeric_limits<double>::infinity();
  for (const Vector& v : verts) best = std::min(best, lp.c.dot(v));
  return best;
}

}  // namespace alp
