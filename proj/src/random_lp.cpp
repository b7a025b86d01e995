#include "alp/random_lp.hpp"

#include <cmath>
#include <random>

#include "alp/oracle.hpp"

namespace alp {

namespace {

struct Draw {
  std::mt19937_64 rng;
  explicit Draw(std::uint64_t seed) : rng(seed) {}
  double uniform(double lo, double hi) {
    const double u =
        static_cast<double>(rng()) / (static_cast<double>(rng.max()) + 1.0);
    return lo + (hi - lo) * u;
  }
  bool coin(double prob) { return uniform(0, 1) < prob; }
  int pick(int bound) { return static_cast<int>(rng() % bound); }
};

}  // namespace

LinearProgram generate_random_lp(const RandomLpSpec& spec) {
  if (spec.n_eq >= spec.n_vars)
    throw std::invalid_argument("randlp: need n_eq < n_vars");
  const int n = spec.n_vars;
  const int p = spec.n_eq;
  const int n_dirs = n - p;
  if (spec.n_ineq < 2 * n_dirs)
    throw std::invalid_argument(
        "randlp: need n_ineq >= 2*(n_vars - n_eq) bounding rows");

  for (int attempt = 0; attempt < 20; ++attempt) {
    Draw d(spec.seed + 0x51ull * attempt);

    Vector v0(n);
    for (int j = 0; j < n; ++j) v0[j] = d.uniform(-2, 2);

    Matrix a_eq = Matrix::Zero(p, n);
    for (int i = 0; i < p; ++i) {
      int nnz = 0;
      for (int j = 0; j < n; ++j)
        if (d.coin(spec.density)) {
          a_eq(i, j) = d.uniform(0.2, 1.5);
          ++nnz;
        }
      while (nnz < 2) {
        const int j = d.pick(n);
        if (a_eq(i, j) == 0) {
          a_eq(i, j) = d.uniform(0.2, 1.5);
          ++nnz;
        }
      }
    }
    const Vector b_eq = a_eq * v0;

    const int n_free = spec.n_ineq - 2 * n_dirs;
    Matrix a_in = Matrix::Zero(spec.n_ineq, n);
    Vector b_in(spec.n_ineq);
    int r = 0;
    for (int i = 0; i < n_free; ++i, ++r) {
      int nnz = 0;
      for (int j = 0; j < n; ++j)
        if (d.coin(spec.density)) {
          a_in(r, j) = d.uniform(0.2, 1.5);
          ++nnz;
        }
      if (nnz == 0) a_in(r, d.pick(n)) = d.uniform(0.2, 1.5);
      b_in[r] = a_in.row(r).dot(v0) + d.uniform(0.2, 2.0);
    }
    // Paired dense rows closing all remaining recession directions.
    for (int k = 0; k < n_dirs; ++k) {
      Eigen::RowVectorXd row(n);
      for (int j = 0; j < n; ++j) row[j] = d.uniform(0.2, 1.2);
      a_in.row(r) = row;
      b_in[r] = row.dot(v0) + d.uniform(1.0, 3.0);
      ++r;
      a_in.row(r) = -row;
      b_in[r] = -row.dot(v0) + d.uniform(1.0, 3.0);
      ++r;
    }

    Vector c = Vector::Zero(n);
    bool any = false;
    for (int j = 0; j < n; ++j)
      if (d.coin(std::max(spec.density, 0.3))) {
        c[j] = d.uniform(0.1, 1.0);
        any = true;
      }
    if (!any) c[d.pick(n)] = d.uniform(0.5, 1.0);

    LinearProgram lp = make_lp(c, a_eq, b_eq, a_in, b_in);
    const OracleSolution sol = solve_lp(lp);
    if (sol.status == SolveStatus::optimal) return lp;
  }
  throw std::runtime_error("randlp: resampling cap exceeded");
}

}  // namespace alp
