// Ground-truth LP solving: dense two-phase simplex with Bland anti-cycling
// and brute-force vertex enumeration for small instances.
#pragma once

#include "alp/lp.hpp"

namespace alp {

enum class SolveStatus { optimal, infeasible, unbounded };

const char* to_string(SolveStatus s);

struct OracleSolution {
  SolveStatus status = SolveStatus::infeasible;
  Vector v_star;       // primal optimizer (when optimal)
  Vector mu_star;      // equality multipliers, c + a_eq'mu + a_ineq'lambda = 0
  Vector lambda_star;  // inequality multipliers, >= 0
  double cost = 0;
};

// Deterministic for a fixed instance: Dantzig pricing with lowest-index tie
// breaks, switching to Bland's rule after a degenerate stall.
OracleSolution solve_lp(const LinearProgram& lp);

// All feasible basic points, deduplicated at 1e-9. Guarded to
// num_vars <= 12 and num_rows <= 25; throws std::invalid_argument beyond.
std::vector<Vector> enumerate_vertices(const LinearProgram& lp);

// Convenience: best vertex cost from enumerate_vertices.
double best_vertex_cost(const LinearProgram& lp);

}  // namespace alp
