// Compilation of canonical LPs into the resistor/diode crossbar circuit,
// Thevenin port-resistance analysis and SPICE netlist export.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "alp/lp.hpp"

namespace alp {

enum class RowKind { equality, inequality };

// Conductance-matrix view of the circuit. g has one row per horizontal
// wire: row 0 is the cost wire (all zero and inert when has_cost is
// false), rows 1..m the constraint wires. g(i,j) > 0 places a resistor
// 1/g(i,j) between variable node j and wire i; each constraint wire has a
// negative resistance -1/row_sum and a grounded source, inequality wires
// additionally an ideal diode.
struct Circuit {
  Matrix g;                       // (m+1) x n
  std::vector<RowKind> kind;      // per constraint row (size m)
  Vector b;                       // per constraint row source target (size m)
  bool has_cost = true;
  std::map<int, double> forced_nodes;  // variable index -> volts

  int num_vars() const { return static_cast<int>(g.cols()); }
  int num_rows() const { return static_cast<int>(g.rows()) - 1; }
  Vector cost() const { return g.row(0).transpose(); }
  Matrix constraints() const { return g.bottomRows(num_rows()); }
  // Row sum of constraint row i (0-based within constraint rows).
  double row_sum(int i) const { return g.row(i + 1).sum(); }
  double neg_resistance(int i) const { return -1.0 / row_sum(i); }
  std::vector<int> inequality_rows() const;
  int num_inequalities() const;

  // Consistency checks per the construction invariants; throws on
  // violation.
  void validate() const;
};

// Builds the circuit for a canonical LP: cost row plus one constraint row
// per canonical row, in [a_eq; a_ineq] order. Rejects constraint rows with
// zero conductance sum and, when `require_cost`, an all-zero cost row.
Circuit compile(const CanonicalLP& clp);

// Same layout with no cost wire (feasibility circuits, Lemma-1 setting).
Circuit compile_feasibility(const CanonicalLP& clp);

struct PrimalDualCircuit {
  Circuit circuit;               // no cost wire
  CanonicalLP canonical;         // canonicalized combined system
  PrimalDualSystem system;
  int gap_row = 0;               // constraint-row index of the zero-gap wire
};

// Circuit realizing the primal-dual feasibility problem; the steady-state
// voltage of constraint row `gap_row` is the critical cost voltage.
PrimalDualCircuit compile_primal_dual(const LinearProgram& lp);

// Two-port equivalent resistance between ports, computed on the resistor
// network (all g resistors plus every row's negative resistance, diodes and
// sources removed) by unit current injection. Port 0 is the cost wire
// (requires has_cost), port i in 1..m the outer terminal of constraint row
// i's negative resistance. Throws on a structurally singular network.
double thevenin_resistance(const Circuit& c, int port_a, int port_b);

struct PortResistanceReport {
  struct Entry {
    int port_a;
    int port_b;
    double resistance;
  };
  std::vector<Entry> pairs;
  double cost_port_lower_bound = 0;  // 1 / sum(cost conductances)
};

PortResistanceReport port_resistance_report(
    const Circuit& c, const std::vector<std::pair<int, int>>& ports);

struct PerturbedCircuit {
  Circuit circuit;
  Vector b_scale;  // per-row ratio perturbed row sum / nominal row sum
};

// Scales every conductance by (1 + eps), eps ~ Gaussian(0, sigma), drawn
// deterministically from the seed in row-major entry order. Source voltages
// are kept, so each row target becomes b_i * b_scale_i.
PerturbedCircuit perturb_conductances(const Circuit& c, double sigma,
                                      std::uint64_t seed);

struct NetlistOptions {
  double diode_r_on = 1e-3;
  double diode_r_off = 1e9;
  double branch_inductance = 0;  // henries; > 0 adds series L per resistor
  double tran_step = 1e-8;
  double tran_stop = 1e-4;
};

// Deterministic SPICE deck. Node names: variable nodes V1..Vn, wire nodes
// U0..Um (U0 = cost).
std::string export_netlist(const Circuit& c, double u_cost,
                           const NetlistOptions& opt = {});

}  // namespace alp
