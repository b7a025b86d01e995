#include <doctest.h>

#include "alp/oracle.hpp"
#include "alp/random_lp.hpp"
#include "test_util.hpp"

using namespace alp;
using namespace alp::test;

TEST_CASE("trivial equality lp") {
  const OracleSolution sol = solve_lp(tiny_equality_lp());
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.v_star[0] == doctest::Approx(1.0));
  CHECK(sol.cost == doctest::Approx(1.0));
}

TEST_CASE("hardware lp, maximize (1,0) lands on (7, 0)") {
  const OracleSolution sol = solve_lp(hardware_lp(1, 0));
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.v_star[0] == doctest::Approx(7.0).epsilon(1e-10));
  CHECK(std::abs(sol.v_star[1]) <= 1e-9);
}

TEST_CASE("hardware lp, maximize (1,1) lands on (5, 5)") {
  const OracleSolution sol = solve_lp(hardware_lp(1, 1));
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.v_star[0] == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(sol.v_star[1] == doctest::Approx(5.0).epsilon(1e-10));
}

TEST_CASE("hardware lp published corner points for mixed directions") {
  // The remaining two published solution points, (7, 5) and (-7, -5), do
  // not satisfy this constraint set: both violate a row, and the actual
  // optimizers differ. Checked here so the discrepancy stays visible.
  const LinearProgram lp = hardware_lp(-1, 1);
  const Vector claimed = vec({7.0, 5.0});
  CHECK((lp.a_ineq * claimed - lp.b_ineq).maxCoeff() > 1.0);  // infeasible
  const OracleSolution sol = solve_lp(lp);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.v_star[0] == doctest::Approx(-5.0).epsilon(1e-9));
  CHECK(sol.v_star[1] == doctest::Approx(5.0).epsilon(1e-9));

  const LinearProgram lp2 = hardware_lp(-1, -1);
  const Vector claimed2 = vec({-7.0, -5.0});
  CHECK((lp2.a_ineq * claimed2 - lp2.b_ineq).maxCoeff() > 1.0);
  const OracleSolution sol2 = solve_lp(lp2);
  REQUIRE(sol2.status == SolveStatus::optimal);
  CHECK(lp2.c.dot(sol2.v_star) == doctest::Approx(-10.0).epsilon(1e-9));
}

TEST_CASE("random 5-var LPs agree with vertex enumeration") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    RandomLpSpec spec;
    spec.n_vars = 5;
    spec.n_eq = 2;
    spec.n_ineq = 8;
    spec.seed = 3000 + seed;
    const LinearProgram lp = generate_random_lp(spec);
    const OracleSolution sol = solve_lp(lp);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(std::abs(sol.cost - best_vertex_cost(lp)) <=
          1e-9 * std::max(1.0, std::abs(sol.cost)));
  }
}

TEST_CASE("unit box has four vertices") {
  // 0 <= x_i <= 1 in two variables.
  const LinearProgram lp =
      make_lp(vec({1, 1}), Matrix(0, 2), Vector(0),
              mat({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}), vec({1, 1, 0, 0}));
  const auto verts = enumerate_vertices(lp);
  CHECK(verts.size() == 4);
}

TEST_CASE("hardware lp vertex set contains the solution corners") {
  const auto verts = enumerate_vertices(hardware_lp(1, 1));
  auto contains = [&](double a, double b) {
    for (const auto& v : verts)
      if (std::abs(v[0] - a) < 1e-9 && std::abs(v[1] - b) < 1e-9) return true;
    return false;
  };
  CHECK(contains(5, 5));
  CHECK(contains(7, 0));
}

TEST_CASE("infeasible lp yields empty vertex list and infeasible status") {
  // x <= 0 and -x <= -1 conflict.
  const LinearProgram lp = make_lp(vec({1}), Matrix(0, 1), Vector(0),
                                   mat({{1}, {-1}}), vec({0, -1}));
  CHECK(enumerate_vertices(lp).empty());
  CHECK(solve_lp(lp).status == SolveStatus::infeasible);
}

TEST_CASE("unbounded lp is reported") {
  // min -x with only x >= 0.
  const LinearProgram lp =
      make_lp(vec({-1}), Matrix(0, 1), Vector(0), mat({{-1}}), vec({0}));
  CHECK(solve_lp(lp).status == SolveStatus::unbounded);
}

TEST_CASE("vertex enumeration size guard") {
  RandomLpSpec spec;
  spec.n_vars = 14;
  spec.n_eq = 0;
  spec.n_ineq = 30;
  CHECK_THROWS_AS(enumerate_vertices(generate_random_lp(spec)),
                  std::invalid_argument);
}

TEST_CASE("oracle multipliers are dual feasible") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    RandomLpSpec spec;
    spec.n_vars = 3 + static_cast<int>(seed % 5);
    spec.n_eq = static_cast<int>(seed % 3);
    spec.n_ineq = 2 * (spec.n_vars - spec.n_eq) + 4;
    spec.seed = 4000 + seed;
    const LinearProgram lp = generate_random_lp(spec);
    const OracleSolution sol = solve_lp(lp);
    REQUIRE(sol.status == SolveStatus::optimal);
    // Stationarity and sign: c + a_eq'mu + a_ineq'lambda = 0, lambda >= 0.
    Vector grad = lp.c;
    if (lp.num_eq() > 0) grad += lp.a_eq.transpose() * sol.mu_star;
    if (lp.num_ineq() > 0) grad += lp.a_ineq.transpose() * sol.lambda_star;
    CHECK(grad.lpNorm<Eigen::Infinity>() <= 1e-9);
    if (lp.num_ineq() > 0) CHECK(sol.lambda_star.minCoeff() >= -1e-12);
    // Strong duality through the multipliers.
    double dual_value = 0;
    if (lp.num_eq() > 0) dual_value -= lp.b_eq.dot(sol.mu_star);
    if (lp.num_ineq() > 0) dual_value -= lp.b_ineq.dot(sol.lambda_star);
    CHECK(std::abs(dual_value - sol.cost) <=
          1e-8 * std::max(1.0, std::abs(sol.cost)));
  }
}

TEST_CASE("solver is deterministic") {
  RandomLpSpec spec;
  spec.n_vars = 6;
  spec.n_eq = 2;
  spec.n_ineq = 12;
  spec.seed = 99;
  const LinearProgram lp = generate_random_lp(spec);
  const OracleSolution a = solve_lp(lp);
  const OracleSolution b = solve_lp(lp);
  CHECK((a.v_star - b.v_star).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.cost == b.cost);
}
