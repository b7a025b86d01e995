#include <doctest.h>

#include "alp/mpc.hpp"
#include "alp/oracle.hpp"
#include "test_util.hpp"

using namespace alp;
using namespace alp::test;

TEST_CASE("horizon lp with zero reference and zero state is already optimal") {
  MpcSpec spec;
  spec.horizon_n = 1;
  spec.delta = 0.5;
  const LinearProgram lp = build_mpc_lp(spec, 0.0);
  const OracleSolution sol = solve_lp(lp);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.cost == doctest::Approx(0.0));
  CHECK(std::abs(sol.v_star[mpc_u_index(spec, 0)]) <= 1e-9);
}

TEST_CASE("two-step horizon golden values") {
  // delta 0.5, reference 1, start 0: x1 = u0/2 caps at 0.75, so u0 = 1.5;
  // x2 = 0.25 u0 + 0.5 u1 reaches 1 with u1 = 1.25; optimal cost 0.25.
  MpcSpec spec;
  spec.horizon_n = 2;
  spec.delta = 0.5;
  spec.x_ref = {1.0, 1.0, 1.0};
  const LinearProgram lp = build_mpc_lp(spec, 0.0);
  const OracleSolution sol = solve_lp(lp);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.cost == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(sol.v_star[mpc_u_index(spec, 0)] ==
        doctest::Approx(1.5).epsilon(1e-9));
  CHECK(sol.v_star[mpc_u_index(spec, 1)] ==
        doctest::Approx(1.25).epsilon(1e-9));
}

TEST_CASE("horizon lp dimensions") {
  MpcSpec spec;
  spec.horizon_n = 16;
  spec.delta = 0.1;
  const LinearProgram lp = build_mpc_lp(spec, 0.3);
  // variables u_0..u_15, x_0..x_16, t_1..t_16
  CHECK(lp.num_vars() == 49);
  CHECK(lp.num_eq() == 17);    // 16 dynamics rows + the x_0 pin
  CHECK(lp.num_ineq() == 64);  // 32 input box rows + 32 epigraph rows
}

TEST_CASE("epigraph variables are tight at the optimum") {
  MpcSpec spec;
  spec.horizon_n = 4;
  spec.delta = 0.3;
  spec.x_ref = {0.8, -0.2, 0.5, 0.7, 0.1};
  const LinearProgram lp = build_mpc_lp(spec, -0.4);
  const OracleSolution sol = solve_lp(lp);
  REQUIRE(sol.status == SolveStatus::optimal);
  for (int i = 1; i <= spec.horizon_n; ++i) {
    const double xi = sol.v_star[mpc_x_index(spec, i)];
    const double ti = sol.v_star[mpc_t_index(spec, i)];
    CHECK(ti == doctest::Approx(std::abs(xi - spec.reference(i)))
                    .epsilon(1e-8));
  }
}

TEST_CASE("closed loop at the reference stays at rest") {
  MpcSpec spec;
  spec.horizon_n = 3;
  spec.delta = 0.4;
  spec.plant_initial = 0;
  for (MpcSolver solver : {MpcSolver::oracle, MpcSolver::circuit}) {
    ClosedLoopOptions opt;
    opt.solver = solver;
    const ClosedLoopResult res = closed_loop(spec, 2.0, opt);
    REQUIRE(res.inputs.size() == 5);
    for (double u : res.inputs) CHECK(std::abs(u) <= 1e-7);
    for (double x : res.states) CHECK(std::abs(x) <= 1e-7);
  }
}

TEST_CASE("circuit loop tracks the oracle loop") {
  MpcSpec spec;
  spec.horizon_n = 3;
  spec.delta = 0.4;
  spec.plant_initial = 0.2;
  for (int k = 0; k < 14; ++k)
    spec.x_ref.push_back(0.8 * std::sin(0.55 * k) + 0.1);

  ClosedLoopOptions oracle_opt;
  oracle_opt.solver = MpcSolver::oracle;
  const ClosedLoopResult a = closed_loop(spec, 3.2, oracle_opt);
  ClosedLoopOptions circuit_opt;
  circuit_opt.solver = MpcSolver::circuit;
  const ClosedLoopResult b = closed_loop(spec, 3.2, circuit_opt);
  REQUIRE(a.inputs.size() == b.inputs.size());
  for (size_t k = 0; k < a.inputs.size(); ++k) {
    CHECK(std::abs(a.inputs[k] - b.inputs[k]) <= 1e-5);
    CHECK(std::abs(a.inputs[k]) <= spec.u_max + 1e-6);
    CHECK(std::abs(b.inputs[k]) <= spec.u_max + 1e-6);
  }
  for (size_t k = 0; k < a.states.size(); ++k)
    CHECK(std::abs(a.states[k] - b.states[k]) <= 1e-4);
}

TEST_CASE("perturbed loop stays bounded and within limits") {
  MpcSpec spec;
  spec.horizon_n = 3;
  spec.delta = 0.4;
  for (int k = 0; k < 12; ++k)
    spec.x_ref.push_back(k < 6 ? 1.0 : -0.5);

  ClosedLoopOptions nominal;
  nominal.solver = MpcSolver::circuit;
  const ClosedLoopResult a = closed_loop(spec, 3.2, nominal);
  ClosedLoopOptions perturbed = nominal;
  perturbed.perturbation_sigma = 0.01;
  perturbed.seed = 7;
  const ClosedLoopResult b = closed_loop(spec, 3.2, perturbed);
  REQUIRE(b.inputs.size() == a.inputs.size());
  double dev = 0;
  for (size_t k = 0; k < a.states.size(); ++k) {
    dev = std::max(dev, std::abs(a.states[k] - b.states[k]));
    CHECK(std::abs(b.inputs[k]) <= spec.u_max + 1e-6);
  }
  CHECK(dev <= 0.2);  // loose smoke bound; the acceptance pins 5%
  // seeded reproducibility
  const ClosedLoopResult b2 = closed_loop(spec, 3.2, perturbed);
  CHECK(closed_loop_csv(b2) == closed_loop_csv(b));
}

TEST_CASE("closed loop csv format") {
  MpcSpec spec;
  spec.horizon_n = 2;
  spec.delta = 0.5;
  ClosedLoopOptions opt;
  opt.solver = MpcSolver::oracle;
  const ClosedLoopResult res = closed_loop(spec, 1.0, opt);
  const std::string csv = closed_loop_csv(res);
  CHECK(csv.rfind("t,x,u,cost\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') ==
        static_cast<long>(res.times.size()) + 1);
}

TEST_CASE("scenario json parsing") {
  const MpcSpec spec = mpc_spec_from_json(
      R"({"horizon_n": 4, "delta": 0.25, "x_ref": [0, 1, 1], )"
      R"("u_min": -2, "u_max": 2, "plant_initial": 0.5})");
  CHECK(spec.horizon_n == 4);
  CHECK(spec.delta == 0.25);
  CHECK(spec.x_ref.size() == 3);
  CHECK(spec.u_min == -2);
  CHECK(spec.plant_initial == 0.5);
}

TEST_CASE("spec validation") {
  MpcSpec spec;
  spec.horizon_n = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.delta = -1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.u_min = 2;
  spec.u_max = -2;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
