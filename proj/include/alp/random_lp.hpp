// Seeded random LP generator producing feasible instances with bounded
// primal and dual optimal sets, oracle-certified before return.
#pragma once

#include <cstdint>

#include "alp/lp.hpp"

namespace alp {

struct RandomLpSpec {
  int n_vars = 8;
  int n_eq = 3;
  int n_ineq = 10;
  double density = 0.35;
  std::uint64_t seed = 1;
};

// Construction: non-negative sparse a_eq and free inequality rows anchored
// at an interior point, plus paired +-dense bounding rows that close every
// recession direction (the generalized box). Requires
// n_ineq >= 2 * (n_vars - n_eq) and n_eq < n_vars.
LinearProgram generate_random_lp(const RandomLpSpec& spec);

}  // namespace alp
