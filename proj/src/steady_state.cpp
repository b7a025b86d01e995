#include "alp/steady_state.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <Eigen/SparseQR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

namespace alp {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kLinearResidualTol = 1e-7;
constexpr int kDenseCutoff = 160;

struct LinearSolve {
  Vector x;
  double rel_residual = std::numeric_limits<double>::infinity();
  bool least_squares = false;  // rank-deficient path was taken
};

// Square solve tolerating rank deficiency: LU fast path, least-squares
// fallback (orthogonal decompositions) for singular-but-consistent systems.
LinearSolve solve_square(const std::vector<Triplet>& trips, int dim,
                         const Vector& rhs) {
  LinearSolve out;
  const double rhs_scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  if (dim <= kDenseCutoff) {
    Matrix m = Matrix::Zero(dim, dim);
    for (const auto& t : trips) m(t.row(), t.col()) += t.value();
    Vector x = m.partialPivLu().solve(rhs);
    double res = x.allFinite()
                     ? (m * x - rhs).lpNorm<Eigen::Infinity>() / rhs_scale
                     : std::numeric_limits<double>::infinity();
    if (res > kLinearResidualTol) {
      x = m.completeOrthogonalDecomposition().solve(rhs);
      res = (m * x - rhs).lpNorm<Eigen::Infinity>() / rhs_scale;
      out.least_squares = true;
    }
    out.x = std::move(x);
    out.rel_residual = res;
    return out;
  }

  SpMat m(dim, dim);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  {
    Eigen::SparseLU<SpMat> lu;
    lu.analyzePattern(m);
    lu.factorize(m);
    if (lu.info() == Eigen::Success) {
      Vector x = lu.solve(rhs);
      if (x.allFinite()) {
        const double res =
            (m * x - rhs).lpNorm<Eigen::Infinity>() / rhs_scale;
        if (res <= kLinearResidualTol) {
          out.x = std::move(x);
          out.rel_residual = res;
          return out;
        }
      }
    }
  }
  Eigen::SparseQR<SpMat, Eigen::COLAMDOrdering<int>> qr;
  qr.setPivotThreshold(1e-10);
  qr.compute(m);
  if (qr.info() != Eigen::Success)
    throw NoConvergenceError("linear solve: sparse QR factorization failed");
  Vector x = qr.solve(rhs);
  out.rel_residual = x.allFinite()
                         ? (m * x - rhs).lpNorm<Eigen::Infinity>() / rhs_scale
                         : std::numeric_limits<double>::infinity();
  out.x = std::move(x);
  out.least_squares = true;
  return out;
}

// Static data shared by all partition solves of one circuit.
struct NetworkView {
  const Circuit* c;
  int n, m, p;                  // vars, constraint rows, equality rows
  Matrix a;                     // m x n constraint conductances
  Vector b;
  Vector cost;
  Vector row_sum;
  Vector col_sum;               // constraint-only column sums
  std::vector<int> ineq;        // inequality row ids
  std::vector<std::vector<int>> row_nz;  // nonzero columns per row

  explicit NetworkView(const Circuit& circuit) : c(&circuit) {
    n = circuit.num_vars();
    m = circuit.num_rows();
    a = circuit.constraints();
    b = circuit.b;
    cost = circuit.has_cost ? circuit.cost() : Vector::Zero(n);
    row_sum.resize(m);
    for (int i = 0; i < m; ++i) row_sum[i] = a.row(i).sum();
    col_sum = a.colwise().sum();
    ineq = circuit.inequality_rows();
    p = m - static_cast<int>(ineq.size());
    row_nz.resize(m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        if (a(i, j) != 0.0) row_nz[i].push_back(j);
  }

  bool forced(int j, double& val) const {
    auto it = c->forced_nodes.find(j);
    if (it == c->forced_nodes.end()) return false;
    val = it->second;
    return true;
  }
};

struct PartitionState {
  Vector v, u, i;
  double lin_residual;
  bool least_squares = false;
  std::vector<Triplet> system;  // kept for sign restoration
  int dim = 0;
};

// Nodal system for a fixed diode partition: variable-node KCL (or the
// forced-value row), tight rows pinned to their targets, blocking rows with
// zero branch current.
PartitionState solve_partition(const NetworkView& net,
                               const std::vector<char>& conducting,
                               double u_cost) {
  const int n = net.n;
  const int m = net.m;
  const int dim = n + m;
  std::vector<Triplet> trips;
  trips.reserve(4 * n + 4 * m + 8 * static_cast<int>(net.a.size() ? 1 : 0) +
                2 * static_cast<int>(net.row_nz.size()));
  Vector rhs = Vector::Zero(dim);

  for (int j = 0; j < n; ++j) {
    double val;
    if (net.forced(j, val)) {
      trips.emplace_back(j, j, 1.0);
      rhs[j] = val;
    } else {
      trips.emplace_back(j, j, net.cost[j] + net.col_sum[j]);
      rhs[j] = net.cost[j] * u_cost;
    }
  }
  for (int i = 0; i < m; ++i) {
    for (int j : net.row_nz[i]) {
      double val;
      if (!net.forced(j, val)) trips.emplace_back(j, n + i, -net.a(i, j));
    }
  }
  for (int i = 0; i < m; ++i) {
    const bool tight =
        net.c->kind[i] == RowKind::equality || conducting[i] != 0;
    for (int j : net.row_nz[i]) trips.emplace_back(n + i, j, net.a(i, j));
    if (tight) {
      rhs[n + i] = net.b[i];
    } else {
      trips.emplace_back(n + i, n + i, -net.row_sum[i]);
    }
  }

  LinearSolve sol = solve_square(trips, dim, rhs);
  PartitionState st;
  st.lin_residual = sol.rel_residual;
  st.least_squares = sol.least_squares;
  st.system = std::move(trips);
  st.dim = dim;
  st.v = sol.x.head(n);
  st.u = sol.x.tail(m);
  st.i.resize(m);
  for (int i = 0; i < m; ++i) {
    const bool tight =
        net.c->kind[i] == RowKind::equality || conducting[i] != 0;
    st.i[i] = tight ? net.b[i] - net.row_sum[i] * st.u[i] : 0.0;
  }
  return st;
}

// On a rank-deficient partition system the computed point is one member of
// an affine family; diode conditions may fail on it while holding on
// another member. Search the kernel for a member meeting every blocking
// feasibility and conducting current-sign condition.
bool restore_diode_signs(const NetworkView& net,
                         const std::vector<char>& conducting,
                         PartitionState& st) {
  const int n = net.n;
  const int dim = st.dim;
  Matrix m = Matrix::Zero(dim, dim);
  for (const auto& t : st.system) m(t.row(), t.col()) += t.value();
  Eigen::FullPivLU<Matrix> lu(m);
  const int rank = static_cast<int>(lu.rank());
  if (rank == dim) return false;
  const Matrix kernel = lu.kernel();  // dim x d
  const int d = static_cast<int>(kernel.cols());

  Vector x0(dim);
  x0.head(n) = st.v;
  x0.tail(net.m) = st.u;

  // One row per inequality wire: conducting rows need
  // row_sum * U_i <= b_i (current sign), blocking rows a_i V <= b_i.
  const int q = static_cast<int>(net.ineq.size());
  if (q == 0) return false;
  Matrix a(q, d);
  Vector b(q);
  for (int k = 0; k < q; ++k) {
    const int row = net.ineq[k];
    if (conducting[row]) {
      a.row(k) = net.row_sum[row] * kernel.row(n + row);
      b[k] = net.b[row] - net.row_sum[row] * x0[n + row];
    } else {
      Eigen::RowVectorXd av = net.a.row(row) * kernel.topRows(n);
      a.row(k) = av;
      b[k] = net.b[row] - net.a.row(row).dot(st.v);
    }
  }
  const LinearProgram feas =
      make_lp(Vector::Zero(d), Matrix(0, d), Vector(0), a, b);
  const OracleSolution sol = solve_lp(feas);
  if (sol.status != SolveStatus::optimal) return false;

  const Vector x = x0 + kernel * sol.v_star;
  st.v = x.head(n);
  st.u = x.tail(net.m);
  for (int i = 0; i < net.m; ++i) {
    const bool tight =
        net.c->kind[i] == RowKind::equality || conducting[i] != 0;
    st.i[i] = tight ? net.b[i] - net.row_sum[i] * st.u[i] : 0.0;
  }
  return true;
}

// Signed violation of the diode conditions; positive means the row wants
// to change state.
double row_violation(const NetworkView& net, const PartitionState& st,
                     int row, bool is_conducting) {
  const double scale = std::max(1.0, std::abs(net.b[row]));
  if (is_conducting) return -st.i[row] / scale;
  return (net.a.row(row).dot(st.v) - net.b[row]) / scale;
}

// Standard Lemke complementary pivoting on w = q + N z, after symmetric
// Jacobi scaling (a congruence, so definiteness is preserved).
bool lemke_lcp(const Matrix& nmat_in, const Vector& qvec_in, Vector& z,
               double tol = 1e-10) {
  const int m = static_cast<int>(qvec_in.size());
  z = Vector::Zero(m);
  if (m == 0 || qvec_in.minCoeff() >= -tol) return true;

  const double max_diag =
      std::max(1e-12, nmat_in.diagonal().cwiseAbs().maxCoeff());
  Vector scale(m);
  for (int i = 0; i < m; ++i)
    scale[i] = 1.0 / std::sqrt(std::max(nmat_in(i, i), 1e-8 * max_diag));
  const Matrix nmat = scale.asDiagonal() * nmat_in * scale.asDiagonal();
  const Vector qvec = scale.asDiagonal() * qvec_in;
  if (qvec.minCoeff() >= -tol) return true;

  // Columns: w (0..m-1), z (m..2m-1), z0 (2m), rhs (2m+1).
  Matrix t(m, 2 * m + 2);
  t.leftCols(m) = Matrix::Identity(m, m);
  t.middleCols(m, m) = -nmat;
  t.col(2 * m) = -Vector::Ones(m);
  t.col(2 * m + 1) = qvec;
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = i;

  int row;
  qvec.minCoeff(&row);
  int entering = 2 * m;
  auto pivot = [&](int r, int col) {
    t.row(r) /= t(r, col);
    for (int i = 0; i < m; ++i)
      if (i != r && t(i, col) != 0.0) t.row(i) -= t(i, col) * t.row(r);
    basis[r] = col;
  };
  pivot(row, entering);
  int driving = row + m;  // complement of the leaver enters next

  // Lexicographic comparison over [rhs, w-block] keeps degenerate ratio
  // ties from cycling.
  auto lex_less = [&](int i, int j, int col) {
    const double ai = t(i, col);
    const double aj = t(j, col);
    double vi = t(i, 2 * m + 1) / ai, vj = t(j, 2 * m + 1) / aj;
    if (vi < vj - 1e-12) return true;
    if (vi > vj + 1e-12) return false;
    for (int k = 0; k < m; ++k) {
      vi = t(i, k) / ai;
      vj = t(j, k) / aj;
      if (vi < vj - 1e-12) return true;
      if (vi > vj + 1e-12) return false;
    }
    return false;
  };

  for (int iter = 0; iter < 500 * (m + 1); ++iter) {
    entering = driving;
    // Ratio test with lexicographic ties; the auxiliary column leaves as
    // soon as it attains the minimum ratio.
    int lr = -1;
    for (int i = 0; i < m; ++i) {
      if (t(i, entering) <= tol) continue;
      if (lr < 0) {
        lr = i;
        continue;
      }
      const double ri = t(i, 2 * m + 1) / t(i, entering);
      const double rl = t(lr, 2 * m + 1) / t(lr, entering);
      if (std::abs(ri - rl) <= 1e-10 * std::max(1.0, std::abs(rl))) {
        if (basis[i] == 2 * m)
          lr = i;
        else if (basis[lr] != 2 * m && lex_less(i, lr, entering))
          lr = i;
      } else if (ri < rl) {
        lr = i;
      }
    }
    if (lr < 0) return false;  // ray termination
    const int left_var = basis[lr];
    pivot(lr, entering);
    if (left_var == 2 * m) {
      for (int i = 0; i < m; ++i)
        if (basis[i] >= m && basis[i] < 2 * m)
          z[basis[i] - m] = t(i, 2 * m + 1);
      z = (scale.asDiagonal() * z).eval();  // undo the Jacobi scaling
      return true;
    }
    driving = (left_var < m) ? left_var + m : left_var - m;
  }
  return false;
}

// Lawson-Hanson style active-set solve of the monotone LCP
// w = q + N z, w,z >= 0, w'z = 0 with N positive semidefinite: the KKT
// system of min 1/2 z'Nz + q'z over z >= 0. Robust against the degenerate
// pivoting that can strand tableau methods.
bool monotone_lcp_solve(const Matrix& nmat, const Vector& qvec, Vector& z,
                        double tol = 1e-9) {
  const int m = static_cast<int>(qvec.size());
  z = Vector::Zero(m);
  if (m == 0) return true;
  const double scale = std::max(1.0, qvec.lpNorm<Eigen::Infinity>());
  std::vector<char> in_p(m, 0);

  auto solve_free = [&](const std::vector<int>& p) {
    const int k = static_cast<int>(p.size());
    Matrix npp(k, k);
    Vector qp(k);
    for (int a = 0; a < k; ++a) {
      qp[a] = -qvec[p[a]];
      for (int b = 0; b < k; ++b) npp(a, b) = nmat(p[a], p[b]);
    }
    Eigen::LDLT<Matrix> ldlt(npp);
    Vector d = ldlt.solve(qp);
    if (!d.allFinite() ||
        (npp * d - qp).lpNorm<Eigen::Infinity>() > 1e-9 * scale) {
      d = npp.completeOrthogonalDecomposition().solve(qp);
    }
    return d;
  };

  for (int outer = 0; outer < 4 * m + 20; ++outer) {
    const Vector w = qvec + nmat * z;
    int enter = -1;
    double worst = -tol * scale;
    for (int i = 0; i < m; ++i)
      if (!in_p[i] && w[i] < worst) {
        worst = w[i];
        enter = i;
      }
    if (enter < 0) return true;
    in_p[enter] = 1;

    for (int inner = 0; inner < 2 * m + 10; ++inner) {
      std::vector<int> p;
      for (int i = 0; i < m; ++i)
        if (in_p[i]) p.push_back(i);
      const Vector d = solve_free(p);
      double alpha = 1.0;
      int drop = -1;
      for (size_t a = 0; a < p.size(); ++a) {
        if (d[a] < tol * scale * 1e-3) {
          const double cur = z[p[a]];
          const double step = cur / std::max(cur - d[a], 1e-300);
          if (step < alpha) {
            alpha = step;
            drop = p[a];
          }
        }
      }
      if (drop < 0) {
        for (size_t a = 0; a < p.size(); ++a) z[p[a]] = std::max(0.0, d[a]);
        break;
      }
      for (size_t a = 0; a < p.size(); ++a)
        z[p[a]] = std::max(0.0, z[p[a]] + alpha * (d[a] - z[p[a]]));
      z[drop] = 0;
      in_p[drop] = 0;
      if (p.size() == 1) break;  // nothing left to adjust
    }
  }
  const Vector w = qvec + nmat * z;
  return w.minCoeff() >= -1e-6 * scale &&
         (w.array() * z.array()).abs().maxCoeff() <= 1e-6 * scale * scale;
}

// The steady state is the KKT system of the convex program
//   min 1/2 V'(Q + diag cost)V - u_cost cost'V
//   s.t. equality rows (and forced pins), inequality rows,
// where Q = diag(colsum) - sum_i a_i a_i'/row_sum_i is positive
// semidefinite row by row (Cauchy-Schwarz on the non-negative
// conductances). Null-space reduction over the equality block turns the
// inequality multipliers into a monotone LCP that Lemke pivoting
// processes reliably.
std::optional<SteadyState> convex_route(
    const NetworkView& net, double u_cost,
    const std::function<SteadyState(const Vector&, const Vector&,
                                    const Vector&, const std::vector<char>&)>&
        assemble) {
  const int n = net.n;
  const int q = static_cast<int>(net.ineq.size());
  std::vector<int> eq_rows;
  for (int i = 0; i < net.m; ++i)
    if (net.c->kind[i] == RowKind::equality) eq_rows.push_back(i);
  const int p = static_cast<int>(eq_rows.size());

  Matrix hess = Matrix::Zero(n, n);
  for (int i = 0; i < net.m; ++i)
    hess -= net.a.row(i).transpose() * net.a.row(i) / net.row_sum[i];
  hess += Vector(net.col_sum + net.cost).asDiagonal();
  const Vector lin = -u_cost * net.cost;

  // Equality block: circuit equality rows plus forced-node pins.
  std::vector<std::pair<int, double>> pins;
  for (auto [j, val] : net.c->forced_nodes) pins.emplace_back(j, val);
  const int pe = p + static_cast<int>(pins.size());
  Matrix e_block = Matrix::Zero(pe, n);
  Vector e_rhs = Vector::Zero(pe);
  for (int k = 0; k < p; ++k) {
    e_block.row(k) = net.a.row(eq_rows[k]);
    e_rhs[k] = net.b[eq_rows[k]];
  }
  for (size_t k = 0; k < pins.size(); ++k) {
    e_block(p + static_cast<int>(k), pins[k].first) = 1.0;
    e_rhs[p + static_cast<int>(k)] = pins[k].second;
  }

  Matrix kernel(n, n);
  Vector v_part(n);
  if (pe > 0) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(e_block);
    v_part = cod.solve(e_rhs);
    v_part += cod.solve(e_rhs - e_block * v_part);
    if ((e_block * v_part - e_rhs).lpNorm<Eigen::Infinity>() >
        kLinearResidualTol * std::max(1.0, e_rhs.lpNorm<Eigen::Infinity>()))
      return std::nullopt;  // equality block infeasible
    Eigen::FullPivLU<Matrix> lu(e_block);
    kernel = lu.kernel();
    if (lu.rank() == n) kernel.resize(n, 0);
  } else {
    v_part.setZero();
    kernel = Matrix::Identity(n, n);
  }
  const int d = static_cast<int>(kernel.cols());

  Matrix a_in(q, n);
  Vector b_in(q), din(q);
  for (int k = 0; k < q; ++k) {
    a_in.row(k) = net.a.row(net.ineq[k]);
    b_in[k] = net.b[net.ineq[k]];
    din[k] = net.row_sum[net.ineq[k]];
  }

  Vector v;
  Vector lambda = Vector::Zero(q);
  if (d == 0) {
    v = v_part;
  } else {
    const Matrix g = kernel.transpose() * hess * kernel;
    const Vector gl = kernel.transpose() * (hess * v_part + lin);
    Eigen::LDLT<Matrix> ldlt(g);
    auto solve_g = [&](const Matrix& rhs) -> Matrix {
      Matrix x = ldlt.solve(rhs);
      if ((g * x - rhs).lpNorm<Eigen::Infinity>() >
          1e-8 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>())) {
        // semidefinite reduced Hessian: tiny ridge keeps the route usable
        Eigen::LDLT<Matrix> ridged(
            g + 1e-10 * g.trace() / d * Matrix::Identity(d, d));
        x = ridged.solve(rhs);
      }
      return x;
    };
    const Vector y0 = solve_g(-gl);
    Vector y = y0;
    if (q > 0) {
      const Matrix a_red = a_in * kernel;
      const Matrix k_mat = solve_g(a_red.transpose());
      const Matrix n_mat = a_red * k_mat;
      const Vector q_vec = b_in - a_in * v_part - a_red * y0;
      Vector z;
      if (!lemke_lcp(n_mat, q_vec, z) &&
          !monotone_lcp_solve(n_mat, q_vec, z))
        return std::nullopt;
      z = z.cwiseMax(0.0);
      // Polish away pivoting drift: exact KKT solve on the discovered
      // active set.
      std::vector<int> act;
      const double z_gate = std::max(1e-9, 1e-7 * z.maxCoeff());
      for (int k = 0; k < q; ++k)
        if (z[k] > z_gate) act.push_back(k);
      const int na = static_cast<int>(act.size());
      Matrix kkt = Matrix::Zero(d + na, d + na);
      kkt.topLeftCorner(d, d) = g;
      Vector rhs(d + na);
      rhs.head(d) = -gl;
      for (int t = 0; t < na; ++t) {
        kkt.block(0, d + t, d, 1) = a_red.row(act[t]).transpose();
        kkt.block(d + t, 0, 1, d) = a_red.row(act[t]);
        rhs[d + t] = b_in[act[t]] - a_in.row(act[t]).dot(v_part);
      }
      Eigen::CompleteOrthogonalDecomposition<Matrix> kcod(kkt);
      Vector sol = kcod.solve(rhs);
      sol += kcod.solve(rhs - kkt * sol);
      sol += kcod.solve(rhs - kkt * sol);
      bool polished = (kkt * sol - rhs).lpNorm<Eigen::Infinity>() <=
                      1e-9 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
      if (polished) {
        Vector lam_p = Vector::Zero(q);
        for (int t = 0; t < na; ++t) lam_p[act[t]] = sol[d + t];
        const Vector y_p = sol.head(d);
        const Vector w_p =
            b_in - a_in * v_part - a_red * y_p;
        if (lam_p.minCoeff() >= -1e-9 && w_p.minCoeff() >= -1e-9) {
          lambda = lam_p;
          y = y_p;
        } else {
          polished = false;
        }
      }
      if (!polished) {
        lambda = z;
        y = y0 - k_mat * z;
      }
    }
    v = v_part + kernel * y;
  }

  if (d == 0 && q > 0) {
    // Fully pinned variables: currents follow from feasibility only.
    const Vector w = b_in - a_in * v;
    if (w.minCoeff() < -1e-9) return std::nullopt;
  }

  // Equality multipliers from stationarity, least squares on the
  // consistent system e_block' mu = -(H v + lin + a_in' lambda).
  Vector stat = hess * v + lin;
  if (q > 0) stat += a_in.transpose() * lambda;
  Vector mu_e(pe);
  if (pe > 0) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(
        Matrix(e_block.transpose()));
    mu_e = cod.solve(-stat);
    if ((e_block.transpose() * mu_e + stat).lpNorm<Eigen::Infinity>() >
        1e-6 * std::max(1.0, stat.lpNorm<Eigen::Infinity>()))
      return std::nullopt;
  }

  Vector u(net.m), cur(net.m);
  for (int k = 0; k < p; ++k) {
    const int row = eq_rows[k];
    u[row] = net.a.row(row).dot(v) / net.row_sum[row] - mu_e[k];
    cur[row] = net.row_sum[row] * mu_e[k];
  }
  std::vector<char> cond(net.m, 0);
  for (int k = 0; k < q; ++k) {
    const int row = net.ineq[k];
    u[row] = net.a.row(row).dot(v) / net.row_sum[row] - lambda[k];
    cur[row] = net.row_sum[row] * lambda[k];
    cond[row] = lambda[k] > 1e-9;
  }
  return assemble(v, u, cur, cond);
}

}  // namespace

double Eq22Residuals::max() const {
  double r = kcl_constraint;
  r = std::max(r, kcl_variable);
  r = std::max(r, eq_feasibility);
  r = std::max(r, ineq_feasibility);
  r = std::max(r, current_sign);
  r = std::max(r, complementarity);
  r = std::max(r, cost_balance);
  return r;
}

Eq22Residuals eq22_residuals(const Circuit& circuit, const Vector& v,
                             const Vector& u, const Vector& i, double i_cost,
                             double u_cost) {
  const NetworkView net(circuit);
  const double denom =
      std::max({1.0, net.b.lpNorm<Eigen::Infinity>(),
                std::abs(u_cost) * net.cost.lpNorm<Eigen::Infinity>()});
  Eq22Residuals r;
  for (int k = 0; k < net.m; ++k) {
    const double flow = net.a.row(k).dot(v) - net.row_sum[k] * u[k] - i[k];
    r.kcl_constraint = std::max(r.kcl_constraint, std::abs(flow) / denom);
    const double gap = net.a.row(k).dot(v) - net.b[k];
    if (net.c->kind[k] == RowKind::equality) {
      r.eq_feasibility = std::max(r.eq_feasibility, std::abs(gap) / denom);
    } else {
      r.ineq_feasibility = std::max(r.ineq_feasibility, gap / denom);
      r.current_sign = std::max(r.current_sign, -i[k] / denom);
      r.complementarity =
          std::max(r.complementarity, std::abs(gap * i[k]) / (denom * denom));
    }
  }
  r.ineq_feasibility = std::max(r.ineq_feasibility, 0.0);
  r.current_sign = std::max(r.current_sign, 0.0);
  for (int j = 0; j < net.n; ++j) {
    double val;
    if (net.forced(j, val)) continue;  // source current closes the balance
    const double res = net.cost[j] * u_cost + net.a.col(j).dot(u) -
                       (net.cost[j] + net.col_sum[j]) * v[j];
    r.kcl_variable = std::max(r.kcl_variable, std::abs(res) / denom);
  }
  if (circuit.has_cost) {
    const double res =
        net.cost.dot(v) - net.cost.sum() * u_cost - i_cost;
    r.cost_balance = std::abs(res) / denom;
  }
  return r;
}

SteadyState solve_steady_state(const Circuit& circuit, double u_cost,
                               const SteadyStateOptions& opt) {
  circuit.validate();
  if (!std::isfinite(u_cost))
    throw std::invalid_argument("solve_steady_state: non-finite u_cost");
  const NetworkView net(circuit);
  const int q = static_cast<int>(net.ineq.size());
  const double tol = opt.flip_tolerance;

  std::vector<char> conducting(net.m, 0);
  if (opt.initial_active)
    for (int row : *opt.initial_active) conducting[row] = 1;

  auto finish = [&](const PartitionState& st,
                    const std::vector<char>& cond) {
    SteadyState ss;
    ss.v = st.v;
    ss.u = st.u;
    ss.i = st.i;
    ss.u_cost = u_cost;
    ss.i_cost = circuit.has_cost
                    ? net.cost.dot(st.v) - net.cost.sum() * u_cost
                    : 0.0;
    for (int row : net.ineq)
      if (cond[row]) ss.active_set.push_back(row);
    ss.residuals = eq22_residuals(circuit, ss.v, ss.u, ss.i, ss.i_cost,
                                  u_cost);
    return ss;
  };

  auto check = [&](const PartitionState& st, const std::vector<char>& cond,
                   double& worst, int& worst_row) {
    worst = 0;
    worst_row = -1;
    for (int row : net.ineq) {
      const double viol = row_violation(net, st, row, cond[row] != 0);
      if (viol > worst) {
        worst = viol;
        worst_row = row;
      }
    }
  };

  const int dim = net.n + net.m;
  int max_iter = opt.max_iterations > 0 ? opt.max_iterations
                                        : std::max(150, 3 * q + 60);
  if (opt.max_iterations == 0 && dim > 800) max_iter = 60;

  double last_residual = 0;
  std::optional<SteadyState> found;

  // Flip search. `least_index` false ranks flips by violation size, true
  // follows Murty's least-index rule.
  auto flip_search = [&](std::vector<char> cond, bool least_index,
                         bool check_structural) -> bool {
    std::set<std::vector<char>> visited;
    bool multi_flip = !least_index;
    for (int iter = 0; iter < max_iter; ++iter) {
      visited.insert(cond);
      PartitionState st = solve_partition(net, cond, u_cost);
      last_residual = st.lin_residual;
      const bool lin_ok = st.lin_residual <= kLinearResidualTol;

      if (iter == 0 && !lin_ok && check_structural) {
        // All-blocking start leaves only the equality block tight; an
        // inconsistent solve there means the equalities themselves
        // conflict.
        bool any_flip_helps = false;
        for (int row : net.ineq)
          if (row_violation(net, st, row, cond[row] != 0) > tol)
            any_flip_helps = true;
        if (!any_flip_helps)
          throw StructuralError(
              "solve_steady_state: infeasible equality block (residual " +
              std::to_string(st.lin_residual) + ")");
      }

      double worst;
      int worst_row;
      check(st, cond, worst, worst_row);
      if (worst <= tol && lin_ok) {
        found = finish(st, cond);
        return true;
      }
      if (worst > tol && lin_ok && st.least_squares && dim <= 400 &&
          restore_diode_signs(net, cond, st)) {
        check(st, cond, worst, worst_row);
        if (worst <= tol) {
          found = finish(st, cond);
          return true;
        }
      }

      std::vector<char> next = cond;
      if (multi_flip) {
        for (int row : net.ineq)
          if (row_violation(net, st, row, cond[row] != 0) > tol)
            next[row] = !next[row];
        if (next == cond || visited.count(next)) {
          multi_flip = false;
          next = cond;
        }
      }
      if (!multi_flip) {
        std::vector<std::pair<double, int>> ranked;
        for (int row : net.ineq) {
          const double viol = row_violation(net, st, row, cond[row] != 0);
          if (viol > tol)
            ranked.emplace_back(least_index ? row : -viol, row);
        }
        std::sort(ranked.begin(), ranked.end());
        bool flipped = false;
        for (const auto& [key, row] : ranked) {
          std::vector<char> cand = cond;
          cand[row] = !cand[row];
          if (!visited.count(cand)) {
            next = std::move(cand);
            flipped = true;
            break;
          }
        }
        if (!flipped) return false;  // every neighbour seen
      }
      cond = std::move(next);
    }
    return false;
  };

  auto try_convex = [&]() -> std::optional<SteadyState> {
    std::optional<SteadyState> ss = convex_route(
        net, u_cost,
        [&](const Vector& v, const Vector& u, const Vector& cur,
            const std::vector<char>& cond) {
          PartitionState st;
          st.v = v;
          st.u = u;
          st.i = cur;
          st.lin_residual = 0;
          return finish(st, cond);
        });
    if (ss && ss->residuals.max() <= 1e-7) return ss;
    return std::nullopt;
  };

  // Cost-free circuits (the primal-dual feasibility wiring in particular)
  // carry structurally redundant tight rows that make the partition solves
  // rank-deficient at the solution; the convex reduction handles those
  // directly, so it goes first there.
  const bool no_cost =
      !circuit.has_cost || net.cost.lpNorm<Eigen::Infinity>() == 0.0;
  if (no_cost) {
    if (auto ss = try_convex()) return *ss;
  }

  if (flip_search(conducting, false, !opt.initial_active)) return *found;
  if (flip_search(std::vector<char>(net.m, 0), true, false)) return *found;

  // Convex-program route with Lemke pivoting on the reduced monotone LCP.
  if (!no_cost) {
    if (auto ss = try_convex()) return *ss;
  }

  // Exhaustive partition search for small diode counts.
  if (q <= 12) {
    for (unsigned mask = 0; mask < (1u << q); ++mask) {
      std::vector<char> cand(net.m, 0);
      for (int k = 0; k < q; ++k)
        if (mask & (1u << k)) cand[net.ineq[k]] = 1;
      PartitionState st = solve_partition(net, cand, u_cost);
      if (st.lin_residual > kLinearResidualTol) continue;
      double worst;
      int worst_row;
      check(st, cand, worst, worst_row);
      if (worst > tol && st.least_squares &&
          restore_diode_signs(net, cand, st))
        check(st, cand, worst, worst_row);
      if (worst <= tol) return finish(st, cand);
    }
    throw NoConvergenceError(
        "solve_steady_state: no consistent diode partition exists "
        "(exhausted 2^q partitions)");
  }

  std::ostringstream msg;
  msg << "solve_steady_state: no convergence (last linear residual "
      << last_residual << ")";
  throw NoConvergenceError(msg.str());
}

double Eq26Residuals::max() const {
  double r = stationarity;
  r = std::max(r, eq_feasibility);
  r = std::max(r, ineq_feasibility);
  r = std::max(r, multiplier_sign);
  r = std::max(r, complementarity);
  return r;
}

QpConstruction solve_nocost_qp(const Circuit& circuit) {
  if (circuit.has_cost && circuit.cost().lpNorm<Eigen::Infinity>() > 0)
    throw std::invalid_argument("solve_nocost_qp: circuit has a cost row");
  const NetworkView net(circuit);
  const int n = net.n;
  const int m = net.m;
  const int q = static_cast<int>(net.ineq.size());
  const int p = net.p;

  std::vector<int> eq_rows;
  for (int i = 0; i < m; ++i)
    if (circuit.kind[i] == RowKind::equality) eq_rows.push_back(i);
  Matrix a_eq(p, n), a_in(q, n);
  Vector b_eq(p), b_in(q), deq(p), din(q);
  for (int k = 0; k < p; ++k) {
    a_eq.row(k) = net.a.row(eq_rows[k]);
    b_eq[k] = net.b[eq_rows[k]];
    deq[k] = net.row_sum[eq_rows[k]];
  }
  for (int k = 0; k < q; ++k) {
    a_in.row(k) = net.a.row(net.ineq[k]);
    b_in[k] = net.b[net.ineq[k]];
    din[k] = net.row_sum[net.ineq[k]];
  }

  // Oracle-certified feasibility (Lemma 1 needs a nonempty bounded set).
  {
    LinearProgram feas =
        make_lp(Vector::Zero(n), a_eq, b_eq, a_in, b_in);
    const OracleSolution sol = solve_lp(feas);
    if (sol.status == SolveStatus::infeasible)
      throw StructuralError("solve_nocost_qp: constraint set infeasible");
  }

  QpConstruction out;
  out.q_matrix = net.col_sum.asDiagonal();
  if (p > 0)
    out.q_matrix -= a_eq.transpose() * deq.cwiseInverse().asDiagonal() * a_eq;
  if (q > 0)
    out.q_matrix -= a_in.transpose() * din.cwiseInverse().asDiagonal() * a_in;

  // KKT active-set search on the QP.
  auto kkt_solve = [&](const std::vector<char>& active, Vector& v, Vector& mu,
                       Vector& lam_full, double& rel_res) {
    std::vector<int> act;
    for (int k = 0; k < q; ++k)
      if (active[k]) act.push_back(k);
    const int na = static_cast<int>(act.size());
    const int dim = n + p + na;
    Matrix sys = Matrix::Zero(dim, dim);
    Vector rhs = Vector::Zero(dim);
    sys.topLeftCorner(n, n) = out.q_matrix;
    if (p > 0) {
      sys.block(0, n, n, p) = a_eq.transpose();
      sys.block(n, 0, p, n) = a_eq;
      rhs.segment(n, p) = b_eq;
    }
    for (int t = 0; t < na; ++t) {
      sys.block(0, n + p + t, n, 1) = a_in.row(act[t]).transpose();
      sys.block(n + p + t, 0, 1, n) = a_in.row(act[t]);
      rhs[n + p + t] = b_in[act[t]];
    }
    Vector x = sys.partialPivLu().solve(rhs);
    double res = x.allFinite()
                     ? (sys * x - rhs).lpNorm<Eigen::Infinity>() /
                           std::max(1.0, rhs.lpNorm<Eigen::Infinity>())
                     : std::numeric_limits<double>::infinity();
    if (res > kLinearResidualTol) {
      x = sys.completeOrthogonalDecomposition().solve(rhs);
      res = (sys * x - rhs).lpNorm<Eigen::Infinity>() /
            std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
    }
    rel_res = res;
    v = x.head(n);
    mu = x.segment(n, p);
    lam_full = Vector::Zero(q);
    for (int t = 0; t < na; ++t) lam_full[act[t]] = x[n + p + t];
  };

  const double tol = 1e-9;
  std::vector<char> active(q, 0);
  std::set<std::vector<char>> visited;
  Vector v, mu, lam;
  double rel_res = 0;
  bool multi = true;
  bool solved = false;
  const int max_iter = std::max(100, 3 * q + 50);

  // Convex route first: the KKT point of the positive-semidefinite QP via
  // null-space reduction and monotone-LCP pivoting.
  {
    std::optional<SteadyState> ss = convex_route(
        net, 0.0,
        [&](const Vector& vv, const Vector& uu, const Vector& cc,
            const std::vector<char>& cond) {
          SteadyState s;
          s.v = vv;
          s.u = uu;
          s.i = cc;
          s.residuals = eq22_residuals(*net.c, vv, uu, cc, 0.0, 0.0);
          for (int row : net.ineq)
            if (cond[row]) s.active_set.push_back(row);
          return s;
        });
    if (ss && ss->residuals.max() <= 1e-7) {
      v = ss->v;
      mu.resize(p);
      lam.resize(q);
      for (int k = 0; k < p; ++k)
        mu[k] = ss->i[eq_rows[k]] / net.row_sum[eq_rows[k]];
      for (int k = 0; k < q; ++k)
        lam[k] = ss->i[net.ineq[k]] / net.row_sum[net.ineq[k]];
      solved = true;
    }
  }

  auto violation = [&](int k) {
    const double scale = std::max(1.0, std::abs(b_in[k]));
    if (active[k]) return -lam[k] / scale;
    return (a_in.row(k).dot(v) - b_in[k]) / scale;
  };

  for (int iter = 0; iter < max_iter && !solved; ++iter) {
    visited.insert(active);
    kkt_solve(active, v, mu, lam, rel_res);
    double worst = 0;
    for (int k = 0; k < q; ++k) worst = std::max(worst, violation(k));
    if (worst <= tol && rel_res <= kLinearResidualTol) {
      solved = true;
      break;
    }
    std::vector<char> next = active;
    if (multi) {
      for (int k = 0; k < q; ++k)
        if (violation(k) > tol) next[k] = !next[k];
      if (next == active || visited.count(next)) {
        multi = false;
        next = active;
      }
    }
    if (!multi) {
      std::vector<std::pair<double, int>> ranked;
      for (int k = 0; k < q; ++k)
        if (violation(k) > tol) ranked.emplace_back(-violation(k), k);
      std::sort(ranked.begin(), ranked.end());
      bool flipped = false;
      for (const auto& [nv, k] : ranked) {
        std::vector<char> cand = active;
        cand[k] = !cand[k];
        if (!visited.count(cand)) {
          next = std::move(cand);
          flipped = true;
          break;
        }
      }
      if (!flipped) break;
    }
    active = std::move(next);
  }

  if (!solved && q <= 12) {
    for (unsigned mask = 0; mask < (1u << q) && !solved; ++mask) {
      for (int k = 0; k < q; ++k) active[k] = (mask >> k) & 1u;
      kkt_solve(active, v, mu, lam, rel_res);
      if (rel_res > kLinearResidualTol) continue;
      double worst = 0;
      for (int k = 0; k < q; ++k) worst = std::max(worst, violation(k));
      if (worst <= tol) solved = true;
    }
  }
  if (!solved && q > 0) {
    // Lemke on the KKT complementarity system.
    Matrix base = Matrix::Zero(n + p, n + p);
    base.topLeftCorner(n, n) = out.q_matrix;
    if (p > 0) {
      base.block(0, n, n, p) = a_eq.transpose();
      base.block(n, 0, p, n) = a_eq;
    }
    Vector r0 = Vector::Zero(n + p);
    if (p > 0) r0.segment(n, p) = b_eq;
    Matrix rz = Matrix::Zero(n + p, q);
    rz.topRows(n) = -a_in.transpose();
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(base);
    const Vector x0 = cod.solve(r0);
    const Matrix xz = cod.solve(rz);
    if ((base * x0 - r0).lpNorm<Eigen::Infinity>() <=
            kLinearResidualTol *
                std::max(1.0, r0.lpNorm<Eigen::Infinity>()) &&
        (base * xz - rz).lpNorm<Eigen::Infinity>() <= 1e-6) {
      const Vector qv = b_in - a_in * x0.head(n);
      const Matrix nm = -a_in * xz.topRows(n);
      Vector z;
      if (lemke_lcp(nm, qv, z)) {
        const Vector x = x0 + xz * z;
        v = x.head(n);
        mu = x.tail(p);
        lam = z;
        solved = true;
      }
    }
  }
  if (!solved)
    throw NoConvergenceError("solve_nocost_qp: KKT search failed (visited " +
                             std::to_string(visited.size()) + " active sets)");

  out.v_star = v;
  out.mu_star = mu;
  out.lambda_star = lam;
  for (int k = 0; k < q; ++k)
    if (lam[k] > 1e-9) out.active_set.push_back(net.ineq[k]);

  // Mapped circuit quantities.
  out.i_eq = deq.asDiagonal() * mu;
  out.u_eq = p > 0 ? Vector(deq.cwiseInverse().asDiagonal() * (a_eq * v) - mu)
                   : Vector(0);
  out.i_ineq = din.asDiagonal() * lam;
  out.u_ineq =
      q > 0 ? Vector(din.cwiseInverse().asDiagonal() * (a_in * v) - lam)
            : Vector(0);

  const double denom = std::max(1.0, net.b.lpNorm<Eigen::Infinity>());
  Eq26Residuals& r = out.residuals;
  Vector stat = out.q_matrix * v;
  if (p > 0) stat += a_eq.transpose() * mu;
  if (q > 0) stat += a_in.transpose() * lam;
  r.stationarity = stat.lpNorm<Eigen::Infinity>() / denom;
  if (p > 0)
    r.eq_feasibility =
        (a_eq * v - b_eq).lpNorm<Eigen::Infinity>() / denom;
  if (q > 0) {
    const Vector gap = a_in * v - b_in;
    r.ineq_feasibility = std::max(0.0, gap.maxCoeff()) / denom;
    r.multiplier_sign = std::max(0.0, -lam.minCoeff()) / denom;
    r.complementarity =
        (gap.array() * lam.array()).abs().maxCoeff() / (denom * denom);
  }
  return out;
}

double compute_ucrit(const PrimalDualCircuit& pdc,
                     const SteadyStateOptions& opt) {
  const SteadyState ss = solve_steady_state(pdc.circuit, 0.0, opt);
  return ss.u[pdc.gap_row];
}

double compute_ucrit(const LinearProgram& lp) {
  const OracleSolution sol = solve_lp(lp);
  if (sol.status == SolveStatus::infeasible)
    throw StructuralError(
        "compute_ucrit: LP infeasible (violates Assumption 1)");
  if (sol.status == SolveStatus::unbounded)
    throw StructuralError(
        "compute_ucrit: LP unbounded, dual infeasible (violates Assumption "
        "2)");
  const PrimalDualCircuit pdc = compile_primal_dual(lp);
  return compute_ucrit(pdc);
}

double cost_sensitivity(const Circuit& circuit, double u_cost, double delta,
                        const SteadyStateOptions& opt) {
  if (!circuit.has_cost)
    throw std::invalid_argument("cost_sensitivity: circuit has no cost wire");
  if (delta == 0)
    throw std::invalid_argument("cost_sensitivity: zero delta");
  const SteadyState s1 = solve_steady_state(circuit, u_cost, opt);
  const SteadyState s2 = solve_steady_state(circuit, u_cost + delta, opt);
  const Vector c = circuit.cost();
  return c.dot(s2.v - s1.v) / delta;
}

std::string EquivalenceReport::to_json() const {
  std::ostringstream os;
  os.precision(15);
  os << "{\n  \"status\": \"" << status << "\",\n";
  os << "  \"cost_gap\": " << cost_gap << ",\n";
  os << "  \"max_violation\": " << max_violation << ",\n";
  os << "  \"kkt_residual\": {\"stationarity\": " << kkt.stationarity
     << ", \"primal_feasibility\": " << kkt.primal_feasibility
     << ", \"dual_nonneg\": " << kkt.dual_nonneg
     << ", \"complementarity\": " << kkt.complementarity << "},\n";
  os << "  \"u_crit\": " << u_crit << ",\n";
  os << "  \"u_cost\": " << u_cost << ",\n";
  os << "  \"active_set\": [";
  for (size_t k = 0; k < active_set.size(); ++k)
    os << (k ? ", " : "") << active_set[k];
  os << "]\n}";
  return os.str();
}

EquivalenceReport verify_equivalence(const LinearProgram& lp,
                                     std::optional<double> u_cost) {
  EquivalenceReport rep;
  const OracleSolution sol = solve_lp(lp);
  rep.oracle_cost = sol.cost;
  rep.oracle_v = sol.v_star;
  if (sol.status != SolveStatus::optimal) {
    rep.status = to_string(sol.status);
    // The circuit route is still attempted so structural failures surface
    // consistently.
    try {
      const CanonicalLP clp = canonicalize(lp);
      const Circuit circuit = compile(clp);
      solve_steady_state(circuit, u_cost.value_or(0.0));
      rep.status = "solver_failed";  // found a state for a bad LP
    } catch (const std::exception&) {
    }
    return rep;
  }

  try {
    const CanonicalLP clp = canonicalize(lp);
    const Circuit circuit = compile(clp);
    rep.u_crit = compute_ucrit(lp);
    rep.u_cost = u_cost.value_or(rep.u_crit - 1.0);
    const SteadyState ss = solve_steady_state(circuit, rep.u_cost);
    rep.residuals = ss.residuals;
    rep.circuit_v = clp.recover(ss.v);
    rep.circuit_cost = lp.c.dot(rep.circuit_v);
    rep.cost_gap = std::abs(rep.circuit_cost - sol.cost) /
                   std::max(1.0, std::abs(sol.cost));

    double viol = 0;
    if (lp.num_eq() > 0)
      viol = (lp.a_eq * rep.circuit_v - lp.b_eq).lpNorm<Eigen::Infinity>();
    if (lp.num_ineq() > 0)
      viol = std::max(
          viol, std::max(0.0, (lp.a_ineq * rep.circuit_v - lp.b_ineq)
                                  .maxCoeff()));
    rep.max_violation = viol;

    // Multipliers read off the constraint wires (current / row sum); their
    // feasibility, sign and complementarity blocks are meaningful.
    const int p = lp.num_eq();
    const int n = lp.num_vars();
    const int qn = lp.num_ineq();
    Vector mu_rec(p), lam_rec(qn);
    for (int k = 0; k < p; ++k)
      mu_rec[k] = ss.i[k] / circuit.row_sum(k);
    for (int k = 0; k < qn; ++k) {
      const int row = p + n + k;
      lam_rec[k] = ss.i[row] / circuit.row_sum(row);
      if (std::find(ss.active_set.begin(), ss.active_set.end(), row) !=
          ss.active_set.end())
        rep.active_set.push_back(k);
    }
    rep.kkt = kkt_residual(lp, rep.circuit_v, lam_rec, mu_rec);
    rep.status = "optimal";
  } catch (const StructuralError&) {
    rep.status = "infeasible";
  } catch (const std::exception&) {
    rep.status = "solver_failed";
  }
  return rep;
}

}  // namespace alp
