#include "alp/circuit.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace alp {

namespace {

Circuit compile_impl(const CanonicalLP& clp, bool with_cost) {
  const LinearProgram& lp = clp.inner;
  lp.validate();
  const int n = lp.num_vars();
  const int p = lp.num_eq();
  const int q = lp.num_ineq();
  const int m = p + q;

  if (lp.c.minCoeff() < 0 ||
      (p > 0 && lp.a_eq.minCoeff() < 0) ||
      (q > 0 && lp.a_ineq.minCoeff() < 0))
    throw std::invalid_argument("compile: negative conductance entry");

  Circuit c;
  c.has_cost = with_cost;
  c.g.setZero(m + 1, n);
  if (with_cost) {
    if (lp.c.maxCoeff() <= 0)
      throw std::invalid_argument("compile: all-zero cost row");
    c.g.row(0) = lp.c.transpose();
  }
  if (p > 0) c.g.middleRows(1, p) = lp.a_eq;
  if (q > 0) c.g.middleRows(1 + p, q) = lp.a_ineq;
  c.b = lp.stacked_b();
  c.kind.assign(m, RowKind::equality);
  for (int i = p; i < m; ++i) c.kind[i] = RowKind::inequality;

  for (int i = 0; i < m; ++i)
    if (c.row_sum(i) <= 0)
      throw std::invalid_argument(
          "compile: constraint row " + std::to_string(i) +
          " has zero conductance sum (negative resistance undefined)");
  for (int j = 0; j < n; ++j)
    if (c.g.col(j).sum() <= 0)
      throw std::invalid_argument("compile: variable node " +
                                  std::to_string(j) + " is disconnected");
  return c;
}

}  // namespace

std::vector<int> Circuit::inequality_rows() const {
  std::vector<int> rows;
  for (int i = 0; i < num_rows(); ++i)
    if (kind[i] == RowKind::inequality) rows.push_back(i);
  return rows;
}

int Circuit::num_inequalities() const {
  return static_cast<int>(inequality_rows().size());
}

void Circuit::validate() const {
  if (g.rows() != static_cast<int>(kind.size()) + 1 ||
      b.size() != static_cast<int>(kind.size()))
    throw std::invalid_argument("circuit: inconsistent row bookkeeping");
  if (g.minCoeff() < 0)
    throw std::invalid_argument("circuit: negative conductance");
  for (int i = 0; i < num_rows(); ++i)
    if (row_sum(i) <= 0)
      throw std::invalid_argument("circuit: zero-sum constraint row");
}

Circuit compile(const CanonicalLP& clp) { return compile_impl(clp, true); }

Circuit compile_feasibility(const CanonicalLP& clp) {
  return compile_impl(clp, false);
}

PrimalDualCircuit compile_primal_dual(const LinearProgram& lp) {
  PrimalDualCircuit out;
  out.system = build_primal_dual(lp);

  // The realized feasibility problem is posed over (V, lambda) only; the
  // variable split of canonicalization produces the lambda_minus column
  // block and the lambda + lambda_minus = 0 rows itself, so the compiled
  // wires match the compact circuit exactly.
  const int n = lp.num_vars();
  const int p = lp.num_eq();
  const int q = lp.num_ineq();
  const int m = p + q;
  const int nv = n + m;

  Matrix a_eq = Matrix::Zero(p + n + 1, nv);
  Vector b_eq = Vector::Zero(p + n + 1);
  int r = 0;
  for (int i = 0; i < p; ++i, ++r) {
    a_eq.block(r, 0, 1, n) = lp.a_eq.row(i);
    b_eq[r] = lp.b_eq[i];
  }
  const Matrix at = lp.stacked_a().transpose();
  for (int j = 0; j < n; ++j, ++r) {
    a_eq.block(r, n, 1, m) = at.row(j);
    b_eq[r] = lp.c[j];
  }
  a_eq.block(r, 0, 1, n) = lp.c.transpose();
  a_eq.block(r, n, 1, m) = -lp.stacked_b().transpose();

  Matrix a_ineq = Matrix::Zero(2 * q, nv);
  Vector b_ineq = Vector::Zero(2 * q);
  for (int i = 0; i < q; ++i) {
    a_ineq.block(i, 0, 1, n) = lp.a_ineq.row(i);
    b_ineq[i] = lp.b_ineq[i];
  }
  for (int i = 0; i < q; ++i) a_ineq(q + i, n + p + i) = 1.0;  // lambda <= 0

  const LinearProgram combined =
      make_lp(Vector::Zero(nv), std::move(a_eq), std::move(b_eq),
              std::move(a_ineq), std::move(b_ineq));
  out.canonical = canonicalize(combined);
  out.circuit = compile_feasibility(out.canonical);
  out.gap_row = p + n;
  return out;
}

double thevenin_resistance(const Circuit& c, int port_a, int port_b) {
  const int n = c.num_vars();
  const int m = c.num_rows();
  if (port_a == port_b)
    throw std::invalid_argument("thevenin: ports must differ");
  for (int port : {port_a, port_b}) {
    if (port < 0 || port > m)
      throw std::invalid_argument("thevenin: port out of range");
    if (port == 0 && !c.has_cost)
      throw std::invalid_argument("thevenin: circuit has no cost wire");
  }

  // Nodes: variables, all wires, plus the outer negative-resistance
  // terminal of each queried constraint port. The cost port is its wire.
  const int wire0 = n;
  int next = n + m + 1;
  std::map<int, int> outer;  // port -> node index
  for (int port : {port_a, port_b})
    if (port > 0) outer[port] = next++;
  const int total = next;

  Matrix y = Matrix::Zero(total, total);
  auto stamp = [&](int a, int bnode, double gval) {
    y(a, a) += gval;
    y(bnode, bnode) += gval;
    y(a, bnode) -= gval;
    y(bnode, a) -= gval;
  };
  for (int i = 0; i <= m; ++i) {
    if (i == 0 && !c.has_cost) continue;
    for (int j = 0; j < n; ++j)
      if (c.g(i, j) > 0) stamp(j, wire0 + i, c.g(i, j));
  }
  for (auto [port, node] : outer)
    stamp(wire0 + port, node, -c.row_sum(port - 1));

  auto port_node = [&](int port) {
    return port == 0 ? wire0 : outer.at(port);
  };
  Vector inj = Vector::Zero(total);
  inj[port_node(port_a)] = 1.0;
  inj[port_node(port_b)] = -1.0;

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(y);
  const Vector u = cod.solve(inj);
  if ((y * u - inj).lpNorm<Eigen::Infinity>() > 1e-6)
    throw std::runtime_error("thevenin: singular resistor network");
  return u[port_node(port_a)] - u[port_node(port_b)];
}

PortResistanceReport port_resistance_report(
    const Circuit& c, const std::vector<std::pair<int, int>>& ports) {
  PortResistanceReport rep;
  const double csum = c.cost().sum();
  rep.cost_port_lower_bound = csum > 0 ? 1.0 / csum : 0.0;
  for (auto [a, b] : ports)
    rep.pairs.push_back({a, b, thevenin_resistance(c, a, b)});
  return rep;
}

PerturbedCircuit perturb_conductances(const Circuit& c, double sigma,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // Box-Muller on the raw engine keeps draws identical across standard
  // library implementations.
  auto gaussian = [&rng]() {
    const double u1 =
        (static_cast<double>(rng()) + 1.0) / (static_cast<double>(rng.max()) + 2.0);
    const double u2 =
        static_cast<double>(rng()) / (static_cast<double>(rng.max()) + 1.0);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };

  PerturbedCircuit out;
  out.circuit = c;
  Vector nominal_sum(c.num_rows());
  for (int i = 0; i < c.num_rows(); ++i) nominal_sum[i] = c.row_sum(i);
  for (int i = 0; i < static_cast<int>(c.g.rows()); ++i) {
    if (i == 0 && !c.has_cost) continue;
    for (int j = 0; j < c.num_vars(); ++j)
      if (c.g(i, j) > 0)
        out.circuit.g(i, j) =
            c.g(i, j) * std::max(0.01, 1.0 + sigma * gaussian());
  }
  out.b_scale.resize(c.num_rows());
  for (int i = 0; i < c.num_rows(); ++i) {
    out.b_scale[i] = out.circuit.row_sum(i) / nominal_sum[i];
    out.circuit.b[i] = c.b[i] * out.b_scale[i];
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string export_netlist(const Circuit& c, double u_cost,
                           const NetlistOptions& opt) {
  const int n = c.num_vars();
  const int m = c.num_rows();
  std::ostringstream out;
  out << "* analog-lp crossbar (" << n << " variable nodes, " << m
      << " constraint rows)\n";

  // Crossbar resistors, optional series inductance per branch.
  for (int i = 0; i <= m; ++i) {
    if (i == 0 && !c.has_cost) continue;
    for (int j = 0; j < n; ++j) {
      const double g = c.g(i, j);
      if (g <= 0) continue;
      const std::string vn = "V" + std::to_string(j + 1);
      const std::string un = "U" + std::to_string(i);
      const std::string id = std::to_string(i) + "_" + std::to_string(j + 1);
      if (opt.branch_inductance > 0) {
        out << "L" << id << " " << vn << " M" << id << " "
            << fmt(opt.branch_inductance) << "\n";
        out << "R" << id << " M" << id << " " << un << " " << fmt(1.0 / g)
            << "\n";
      } else {
        out << "R" << id << " " << vn << " " << un << " " << fmt(1.0 / g)
            << "\n";
      }
    }
  }

  if (c.has_cost) out << "VCOST U0 0 DC " << fmt(u_cost) << "\n";

  // Per constraint row: (diode switch ->) negative resistance -> source.
  bool any_switch = false;
  for (int i = 0; i < m; ++i) {
    const int wire = i + 1;
    const double rsum = c.row_sum(i);
    const std::string u = "U" + std::to_string(wire);
    std::string neg_from = u;
    if (c.kind[i] == RowKind::inequality) {
      any_switch = true;
      neg_from = "D" + std::to_string(wire);
      // Voltage-controlled switch across its own terminals: the ideal
      // diode of the inequality wire.
      out << "S" << wire << " " << u << " " << neg_from << " " << u << " "
          << neg_from << " SWDIODE\n";
    }
    out << "RNEG" << wire << " " << neg_from << " N" << wire << " "
        << fmt(-1.0 / rsum) << "\n";
    out << "VSRC" << wire << " N" << wire << " 0 DC " << fmt(c.b[i] / rsum)
        << "\n";
  }
  for (auto [node, volts] : c.forced_nodes)
    out << "VFORCE" << (node + 1) << " V" << (node + 1) << " 0 DC "
        << fmt(volts) << "\n";

  if (any_switch)
    out << ".model SWDIODE SW(Ron=" << fmt(opt.diode_r_on)
        << " Roff=" << fmt(opt.diode_r_off) << " Vt=0 Vh=0)\n";
  out << ".op\n";
  out << ".tran " << fmt(opt.tran_step) << " " << fmt(opt.tran_stop) << "\n";
  out << ".end\n";
  return out.str();
}

}  // namespace alp
