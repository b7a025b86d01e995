// Finite-horizon 1-norm tracking LP and the closed loop against the scalar
// plant dx/dt = -x + u with the circuit (or the oracle) as the solver.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "alp/steady_state.hpp"

namespace alp {

struct MpcSpec {
  int horizon_n = 16;
  double delta = 0.1;                // sampling time, seconds
  std::vector<double> x_ref;         // reference samples per closed-loop step
  double u_min = -1.5;
  double u_max = 1.5;
  double plant_initial = 0;

  void validate() const;
  double reference(int step) const;  // clamped lookup
};

// Variable layout of the horizon LP: [u_0..u_{N-1}, x_0..x_N, t_1..t_N].
// Equalities: forward-Euler dynamics rows then the x_0 pin; inequalities:
// input box rows then the epigraph rows t_i >= +-(x_i - ref).
LinearProgram build_mpc_lp(const MpcSpec& spec, double x0, int ref_offset = 0);

int mpc_u_index(const MpcSpec& spec, int i);
int mpc_x_index(const MpcSpec& spec, int i);
int mpc_t_index(const MpcSpec& spec, int i);  // i in 1..N

enum class MpcSolver { circuit, oracle };

struct MpcStepReport {
  std::string status;
  double eq22_residual = 0;
  double cost_gap_vs_oracle = 0;  // filled only when cross-checked
  bool ucrit_recomputed = false;
};

struct ClosedLoopResult {
  std::vector<double> times;
  std::vector<double> states;
  std::vector<double> inputs;
  std::vector<double> costs;  // per-step LP optimal value
  std::vector<MpcStepReport> reports;
  double final_state = 0;
  double u_crit = 0;
};

struct ClosedLoopOptions {
  MpcSolver solver = MpcSolver::circuit;
  double perturbation_sigma = 0;   // relative resistor error std-dev
  std::uint64_t seed = 1;
  std::optional<double> u_cost;    // default: computed u_crit - 1
};

// Runs `duration` seconds of the loop; the plant is integrated exactly over
// each sampling interval with zero-order-hold input. With a perturbation,
// every conductance is scaled once per run by (1 + eps), eps Gaussian.
ClosedLoopResult closed_loop(const MpcSpec& spec, double duration,
                             const ClosedLoopOptions& opt = {});

// CSV export, header "t,x,u,cost".
std::string closed_loop_csv(const ClosedLoopResult& res);

MpcSpec mpc_spec_from_json(const std::string& text);

}  // namespace alp
