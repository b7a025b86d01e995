// Steady-state solution of the circuit complementarity system, the no-cost
// QP construction, the critical cost voltage and equivalence verification.
#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "alp/circuit.hpp"
#include "alp/oracle.hpp"

namespace alp {

// Inconsistent constraint structure (e.g. infeasible equality block).
struct StructuralError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Active-set and pivoting fallbacks exhausted without a consistent
// diode partition.
struct NoConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Max-norm residual groups of the steady-state equations, scaled by the
// instance magnitude (b and cost drive scaled to unit max-norm).
struct Eq22Residuals {
  double kcl_constraint = 0;    // wire currents vs. conductance flows
  double kcl_variable = 0;      // variable-node current balance
  double eq_feasibility = 0;    // equality rows hit their targets
  double ineq_feasibility = 0;  // inequality rows within their targets
  double current_sign = 0;      // diode currents non-negative
  double complementarity = 0;   // slack * current per inequality row
  double cost_balance = 0;      // cost-wire current balance
  double max() const;
};

struct SteadyState {
  Vector v;                     // variable node voltages
  Vector u;                     // constraint node voltages
  Vector i;                     // constraint branch currents
  double i_cost = 0;
  double u_cost = 0;
  std::vector<int> active_set;  // conducting inequality rows (constraint ids)
  Eq22Residuals residuals;
};

struct SteadyStateOptions {
  double flip_tolerance = 1e-9;
  int max_iterations = 0;       // 0 = automatic from circuit size
  std::optional<std::set<int>> initial_active;  // warm start
};

// Diode active-set fixed point: start all-blocking, solve the linear
// network for the partition, flip violated diode conditions (all violated
// rows while progress holds, then single most-violated), never revisiting
// a partition; exhaustive search for q <= 12 and Lemke pivoting as
// fallbacks. Throws StructuralError / NoConvergenceError.
SteadyState solve_steady_state(const Circuit& circuit, double u_cost,
                               const SteadyStateOptions& opt = {});

// Residuals of an arbitrary candidate state against the circuit equations.
Eq22Residuals eq22_residuals(const Circuit& circuit, const Vector& v,
                             const Vector& u, const Vector& i, double i_cost,
                             double u_cost);

// Residual groups of the no-cost circuit conditions for the QP-mapped tuple.
struct Eq26Residuals {
  double stationarity = 0;
  double eq_feasibility = 0;
  double ineq_feasibility = 0;
  double multiplier_sign = 0;
  double complementarity = 0;
  double max() const;
};

// Lemma-1 construction: the cancellation matrix Q, a KKT point of the
// no-cost QP over the circuit's constraint set, and the mapped circuit
// quantities.
struct QpConstruction {
  Matrix q_matrix;
  Vector v_star;
  Vector mu_star;       // equality multipliers
  Vector lambda_star;   // inequality multipliers, >= 0
  Vector u_eq, u_ineq, i_eq, i_ineq;
  std::vector<int> active_set;
  Eq26Residuals residuals;
};

// Requires a circuit without a cost wire (or zero cost row). Feasibility of
// the constraint set is certified with the oracle before the KKT search.
QpConstruction solve_nocost_qp(const Circuit& circuit);

// Steady-state voltage of the zero-gap wire of the primal-dual circuit.
// Throws StructuralError naming the violated assumption when the LP or its
// dual is infeasible/unbounded.
double compute_ucrit(const LinearProgram& lp);
double compute_ucrit(const PrimalDualCircuit& pdc,
                     const SteadyStateOptions& opt = {});

// c' dV / d u_cost between two operating points; non-negative by the
// cost-port passivity bound, zero when both points sit at the optimum
// plateau.
double cost_sensitivity(const Circuit& circuit, double u_cost, double delta,
                        const SteadyStateOptions& opt = {});

struct EquivalenceReport {
  std::string status;        // optimal | infeasible | solver_failed
  double u_crit = 0;
  double u_cost = 0;
  double oracle_cost = 0;
  double circuit_cost = 0;
  double cost_gap = 0;       // relative
  double max_violation = 0;  // constraint violation of the recovered point
  KktResidual kkt;           // from circuit-recovered multipliers
  Vector circuit_v;          // recovered original variables
  Vector oracle_v;
  std::vector<int> active_set;  // original inequality-row ids
  Eq22Residuals residuals;
  std::string to_json() const;
};

// Compiles, solves, maps back and compares against the oracle. Never
// throws for well-formed input; failures are carried in the report.
EquivalenceReport verify_equivalence(const LinearProgram& lp,
                                     std::optional<double> u_cost = {});

}  // namespace alp
