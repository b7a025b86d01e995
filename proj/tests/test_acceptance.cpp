// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with its runtime.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>

#include "alp/mpc.hpp"
#include "alp/random_lp.hpp"
#include "alp/steady_state.hpp"
#include "alp/transient.hpp"
#include "test_util.hpp"

using namespace alp;
using namespace alp::test;

namespace {

struct Criterion {
  const char* name;
  double budget_seconds;
  std::chrono::steady_clock::time_point start;
  bool ok = true;

  Criterion(const char* n, double budget)
      : name(n), budget_seconds(budget),
        start(std::chrono::steady_clock::now()) {}

  void expect(bool cond) { ok = ok && cond; }

  double finish() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start)
            .count();
    std::printf("%-52s %-4s  (%.2f s / %.0f s)\n", name, ok ? "PASS" : "FAIL",
                secs, budget_seconds);
    std::fflush(stdout);
    return secs;
  }
};

RandomLpSpec sized_spec(int n_vars, std::uint64_t seed) {
  RandomLpSpec spec;
  spec.n_vars = n_vars;
  spec.n_eq = std::max(1, n_vars / 5);
  spec.n_ineq = 2 * (n_vars - spec.n_eq) + 4 + static_cast<int>(seed % 5);
  spec.density = 0.35;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("criterion 1: hardware lp golden corners") {
  Criterion crit("1 hardware-lp golden corners", 1.0);

  {
    const LinearProgram lp = hardware_lp(1, 1);
    const CanonicalLP clp = canonicalize(lp);
    const Circuit c = compile(clp);
    const double u_crit = compute_ucrit(lp);
    const SteadyState ss = solve_steady_state(c, u_crit - 1.0);
    const Vector x = clp.recover(ss.v);
    crit.expect(std::abs(x[0] - 5.0) <= 1e-6);
    crit.expect(std::abs(x[1] - 5.0) <= 1e-6);
    CHECK(std::abs(x[0] - 5.0) <= 1e-6);
    CHECK(std::abs(x[1] - 5.0) <= 1e-6);
  }
  {
    const LinearProgram lp = hardware_lp(1, 0);
    const CanonicalLP clp = canonicalize(lp);
    const Circuit c = compile(clp);
    const double u_crit = compute_ucrit(lp);
    const SteadyState ss = solve_steady_state(c, u_crit - 1.0);
    const Vector x = clp.recover(ss.v);
    crit.expect(std::abs(x[0] - 7.0) <= 1e-6);
    crit.expect(std::abs(x[1] - 0.0) <= 1e-6);
    CHECK(std::abs(x[0] - 7.0) <= 1e-6);
    CHECK(std::abs(x[1]) <= 1e-6);
  }
  // The two published mixed-direction corner points are inconsistent with
  // the printed constraint set: both violate a row, and the oracle puts
  // the optimizers elsewhere. Verified, not forced.
  {
    const LinearProgram lp = hardware_lp(-1, 1);
    const Vector claimed = vec({7.0, 5.0});
    crit.expect((lp.a_ineq * claimed - lp.b_ineq).maxCoeff() > 1.0);
    const OracleSolution sol = solve_lp(lp);
    crit.expect(sol.status == SolveStatus::optimal);
    crit.expect(std::abs(sol.v_star[0] + 5.0) <= 1e-8);
    crit.expect(std::abs(sol.v_star[1] - 5.0) <= 1e-8);

    const LinearProgram lp2 = hardware_lp(-1, -1);
    const Vector claimed2 = vec({-7.0, -5.0});
    crit.expect((lp2.a_ineq * claimed2 - lp2.b_ineq).maxCoeff() > 1.0);
    crit.expect(solve_lp(lp2).status == SolveStatus::optimal);
  }
  const double secs = crit.finish();
  CHECK(crit.ok);
  CHECK(secs < 1.0);
}

TEST_CASE("criterion 2: equivalence sweep at the critical voltage") {
  Criterion crit("2 theorem-1 sweep, 100 random LPs", 60.0);
  int passed = 0;
  for (int k = 0; k < 100; ++k) {
    const int n_vars = 8 + (k * 32) / 99;  // 8..40
    const LinearProgram lp = generate_random_lp(sized_spec(n_vars, 200 + k));
    const OracleSolution sol = solve_lp(lp);
    REQUIRE(sol.status == SolveStatus::optimal);
    const CanonicalLP clp = canonicalize(lp);
    const Circuit c = compile(clp);
    const double u_crit = compute_ucrit(lp);
    bool all_ok = true;
    for (double drop : {0.0, 1.0, 5.0}) {
      const SteadyState ss = solve_steady_state(c, u_crit - drop);
      const double cost = lp.c.dot(clp.recover(ss.v));
      const double gap =
          std::abs(cost - sol.cost) / std::max(1.0, std::abs(sol.cost));
      all_ok = all_ok && gap <= 1e-6 && ss.residuals.max() <= 1e-8 &&
               ss.residuals.complementarity <= 1e-8 &&
               ss.residuals.current_sign <= 1e-8;
    }
    if (all_ok) ++passed;
  }
  crit.expect(passed == 100);
  CHECK(passed == 100);
  const double secs = crit.finish();
  CHECK(crit.ok);
  CHECK(secs < 60.0);
}

TEST_CASE("criterion 3: 120-variable scale check") {
  Criterion crit("3 scale check 120 vars / 70 eq / 190 ineq", 300.0);
  RandomLpSpec spec;
  spec.n_vars = 120;
  spec.n_eq = 70;
  spec.n_ineq = 190;
  spec.density = 0.3;
  spec.seed = 424242;
  const LinearProgram lp = generate_random_lp(spec);
  REQUIRE(lp.num_vars() == 120);
  REQUIRE(lp.num_eq() == 70);
  REQUIRE(lp.num_ineq() == 190);
  const OracleSolution sol = solve_lp(lp);
  REQUIRE(sol.status == SolveStatus::optimal);
  const CanonicalLP clp = canonicalize(lp);
  const Circuit c = compile(clp);
  const double u_crit = compute_ucrit(lp);
  const SteadyState ss = solve_steady_state(c, u_crit - 1.0);
  const double cost = lp.c.dot(clp.recover(ss.v));
  const double gap =
      std::abs(cost - sol.cost) / std::max(1.0, std::abs(sol.cost));
  crit.expect(gap <= 1e-6);
  crit.expect(ss.residuals.max() <= 1e-8);
  CHECK(gap <= 1e-6);
  CHECK(ss.residuals.max() <= 1e-8);
  const double secs = crit.finish();
  CHECK(crit.ok);
  CHECK(secs < 300.0);
}

TEST_CASE("criterion 4: passivity of the resistor network") {
  Criterion crit("4 passivity, 50 circuits x 10 port pairs", 30.0);
  int pairs = 0;
  for (int k = 0; k < 50; ++k) {
    const LinearProgram lp =
        generate_random_lp(sized_spec(4 + k % 6, 900 + k));
    const Circuit c = compile(canonicalize(lp));
    const double bound = 1.0 / c.cost().sum();
    const int m = c.num_rows();
    std::uint64_t pick = 0x9e3779b97f4a7c15ull * (k + 1);
    for (int t = 0; t < 10; ++t) {
      pick = pick * 6364136223846793005ull + 1442695040888963407ull;
      const int a = static_cast<int>(pick % (m + 1));
      int b = static_cast<int>((pick >> 17) % (m + 1));
      if (b == a) b = (a + 1) % (m + 1);
      const double r = thevenin_resistance(c, a, b);
      crit.expect(r >= -1e-9);
      CHECK(r >= -1e-9);
      if (a == 0 || b == 0) {
        crit.expect(r >= bound - 1e-9);
        CHECK(r >= bound - 1e-9);
      }
      ++pairs;
    }
    // always exercise the cost port bound at least once per circuit
    const double r0 = thevenin_resistance(c, 0, 1 + k % m);
    crit.expect(r0 >= bound - 1e-9);
    CHECK(r0 >= bound - 1e-9);
  }
  crit.expect(pairs == 500);
  const double secs = crit.finish();
  CHECK(crit.ok);
  CHECK(secs < 30.0);
}

TEST_CASE("criterion 5: cost monotonicity in the drive voltage") {
  Criterion crit("5 monotone cost vs drive voltage", 30.0);
  for (int k = 0; k < 12; ++k) {
    const LinearProgram lp =
        generate_random_lp(sized_spec(4 + k % 5, 1300 + k));
    const Circuit c = compile(canonicalize(lp));
    const double u_crit = compute_ucrit(lp);
    // plateau below the critical voltage
    const double flat = cost_sensitivity(c, u_crit - 3.0, 1.5);
    crit.expect(std::abs(flat) <= 1e-8);
    CHECK(std::abs(flat) <= 1e-8);
    // non-negative slope across the sweep
    for (double u : {u_crit - 1.0, u_crit + 0.5, u_crit + 5.0,
                     u_crit + 50.0}) {
      const double slope = cost_sensitivity(c, u, 0.75);
      crit.expect(slope >= -1e-9);
      CHECK(slope >= -1e-9);
    }
  }
  const double secs = crit.finish();
  CHECK(crit.ok);
  CHECK(secs < 30.0);
}

TEST_CASE("criterion 6: no-cost construction residuals") {
  Criterion crit("6 lemma-1 construction, 50 constraint sets", 30.0);
  for (int k = 0; k < 50; ++k) {
    LinearProgram lp = generate_random_lp(sized_spec(3 + k % 6, 1700 + k));
    lp.c.setZero();
    const Circuit c = compile_feasibility(canonicalize(lp));
    const QpConstruction qp = solve_nocost_qp(c);
    crit.expect(qp.residuals.max() <= 1e-8);
    CHECK(qp.residuals.max() <= 1e-8);
  }
  const double secs = crit.finish();
  CHECK(crit.ok);
  CHECK(secs < 30.0);
}

TEST_CASE("criterion 7: transient settling, two-phase shape") {
  Criterion crit("7 transient settling on a 20-var LP", 120.0);
  const LinearProgram lp = generate_random_lp(sized_spec(20, 777));
  const CanonicalLP clp = canonicalize(lp);
  const Circuit c = compile(clp);
  const double u_crit = compute_ucrit(lp);
  const double u_cost = u_crit - 1.0;
  const SteadyState ss = solve_steady_state(c, u_cost);
  const double ss_cost = c.cost().dot(ss.v);

  TransientConfig cfg;
  cfg.branch_inductance = 100e-9;
  cfg.step = 2e-8;
  cfg.horizon = 1.2e-3;
  const Trajectory traj = simulate(c, u_cost, cfg);

  const double rel =
      std::abs(traj.cost_values.back() - ss_cost) /
      std::max(1.0, std::abs(ss_cost));
  crit.expect(rel <= 0.005);
  CHECK(rel <= 0.005);

  const auto settle = settling_time(traj, ss_cost, cfg.settle_tolerance);
  crit.expect(settle.has_value());
  REQUIRE(settle.has_value());

  // last diode-state change
  double last_switch = 0;
  for (size_t k = 1; k < traj.times.size(); ++k)
    if (traj.diode_states[k] != traj.diode_states[k - 1])
      last_switch = traj.times[k];
  crit.expect(last_switch > 0);
  crit.expect(*settle < last_switch);
  CHECK(*settle < last_switch);
  const double secs = crit.finish();
  CHECK(crit.ok);
  CHECK(secs < 120.0);
}

TEST_CASE("criterion 8: closed-loop tracking, nominal and perturbed") {
  Criterion crit("8 mpc loop: bounds, agreement, 1% perturbation", 120.0);
  MpcSpec spec;
  spec.horizon_n = 4;
  spec.delta = 0.25;
  spec.plant_initial = 0.0;
  for (int k = 0; k < 24; ++k)
    spec.x_ref.push_back(0.8 * std::sin(0.5 * k));
  const double duration = 4.0;  // 16 steps

  ClosedLoopOptions oracle_opt;
  oracle_opt.solver = MpcSolver::oracle;
  const ClosedLoopResult a = closed_loop(spec, duration, oracle_opt);
  ClosedLoopOptions circuit_opt;
  circuit_opt.solver = MpcSolver::circuit;
  const ClosedLoopResult b = closed_loop(spec, duration, circuit_opt);
  REQUIRE(a.inputs.size() == b.inputs.size());

  // Uniqueness certificate per step: the optimal u_0 range probed through
  // the oracle must collapse.
  double x_nom = spec.plant_initial;
  for (size_t k = 0; k < a.inputs.size(); ++k) {
    const LinearProgram lp =
        build_mpc_lp(spec, x_nom, static_cast<int>(k));
    const OracleSolution sol = solve_lp(lp);
    LinearProgram probe = lp;
    const int rows = probe.num_ineq();
    probe.a_ineq.conservativeResize(rows + 1, probe.num_vars());
    probe.a_ineq.row(rows) = lp.c.transpose();
    probe.b_ineq.conservativeResize(rows + 1);
    probe.b_ineq[rows] = sol.cost + 1e-9;
    Vector dir = Vector::Zero(probe.num_vars());
    dir[mpc_u_index(spec, 0)] = 1.0;
    probe.c = dir;
    const double u_lo = solve_lp(probe).v_star[mpc_u_index(spec, 0)];
    probe.c = -dir;
    const double u_hi = solve_lp(probe).v_star[mpc_u_index(spec, 0)];
    crit.expect(u_hi - u_lo <= 1e-7);  // unique optimal first input
    CHECK(u_hi - u_lo <= 1e-7);
    x_nom = a.states[k];  // follow the oracle loop
    crit.expect(std::abs(a.inputs[k]) <= 1.5 + 1e-6);
    crit.expect(std::abs(b.inputs[k]) <= 1.5 + 1e-6);
    crit.expect(std::abs(a.inputs[k] - b.inputs[k]) <= 1e-5);
    CHECK(std::abs(a.inputs[k] - b.inputs[k]) <= 1e-5);
  }

  // 1% resistor perturbation, fixed seed: bounded state deviation.
  ClosedLoopOptions pert = circuit_opt;
  pert.perturbation_sigma = 0.01;
  pert.seed = 20130131;
  const ClosedLoopResult p = closed_loop(spec, duration, pert);
  REQUIRE(p.states.size() == b.states.size());
  double amplitude = 0;
  for (double r : spec.x_ref) amplitude = std::max(amplitude, std::abs(r));
  double dev = 0;
  for (size_t k = 0; k < p.states.size(); ++k) {
    dev = std::max(dev, std::abs(p.states[k] - b.states[k]));
    crit.expect(std::abs(p.inputs[k]) <= 1.5 + 1e-6);
    CHECK(std::abs(p.inputs[k]) <= 1.5 + 1e-6);
  }
  crit.expect(dev <= 0.05 * amplitude);
  CHECK(dev <= 0.05 * amplitude);
  const double secs = crit.finish();
  CHECK(crit.ok);
  CHECK(secs < 120.0);
}

TEST_CASE("criterion 9: netlist determinism and element counts") {
  Criterion crit("9 netlist determinism and counts", 1.0);
  const Circuit c = compile(canonicalize(hardware_lp(1, 1)));
  const std::string deck1 = export_netlist(c, -25.0);
  const std::string deck2 = export_netlist(c, -25.0);
  crit.expect(deck1 == deck2);
  CHECK(deck1 == deck2);

  auto count = [&](const std::string& needle) {
    int k = 0;
    for (size_t pos = 0; (pos = deck1.find(needle, pos)) != std::string::npos;
         pos += needle.size())
      ++k;
    return k;
  };
  int resistors = 0;
  for (int i = 0; i < c.g.rows(); ++i)
    for (int j = 0; j < c.g.cols(); ++j)
      if (c.g(i, j) > 0) ++resistors;
  crit.expect(count("\nS") == c.num_inequalities());
  crit.expect(count("RNEG") == c.num_rows());
  crit.expect(count("VSRC") == c.num_rows());
  crit.expect(count("VCOST") == 1);
  crit.expect(count("\nR") - count("\nRNEG") == resistors);
  CHECK(count("\nS") == c.num_inequalities());
  CHECK(count("\nR") - count("\nRNEG") == resistors);
  const double secs = crit.finish();
  CHECK(crit.ok);
  CHECK(secs < 1.0);
}
