// Time-domain simulation of the circuit with parasitic branch inductances
// and two-state switch diodes.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "alp/circuit.hpp"

namespace alp {

enum class Integrator { backward_euler, trapezoidal };

struct TransientConfig {
  double branch_inductance = 100e-9;  // henries, per crossbar resistor
  // Switch-model diode. Tighter than the netlist defaults: far below the
  // critical voltage the branch currents scale with |u_cost| and the
  // on-resistance drop must stay below the solve tolerances.
  double diode_r_on = 1e-8;
  double diode_r_off = 1e10;
  double step = 2e-8;                 // seconds
  double horizon = 4e-4;              // seconds
  Integrator integrator = Integrator::backward_euler;
  double settle_tolerance = 0.005;    // relative cost tolerance

  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> v_nodes;             // variable node voltages per time
  std::vector<double> cost_values;         // cost-row conductances dot V
  std::vector<std::vector<char>> diode_states;  // conducting flags per time

  // Full electrical state at the final accepted step.
  Vector final_u;
  Vector final_i;
  double final_i_cost = 0;
};

// Implicit time stepping of the network DAE from an all-zero initial
// state. Diode switch states are re-evaluated once per accepted step.
// Throws on integrator divergence or a singular step matrix.
Trajectory simulate(const Circuit& circuit, double u_cost,
                    const TransientConfig& cfg);

// First time after which the cost stays within rel_tol * max(1,|reference|)
// of `reference` for the rest of the trajectory; 0 when that holds from the
// start, empty when it never settles.
std::optional<double> settling_time(const Trajectory& traj,
                                    double reference_cost, double rel_tol);

// CSV export, header "t,V1,...,Vn,cost,d1,...,dq".
std::string trajectory_csv(const Trajectory& traj);

}  // namespace alp
