#include "alp/transient.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace alp {

void TransientConfig::validate() const {
  if (!(step > 0)) throw std::invalid_argument("transient: step <= 0");
  if (!(horizon >= step))
    throw std::invalid_argument("transient: horizon < step");
  if (!(diode_r_off > diode_r_on && diode_r_on > 0))
    throw std::invalid_argument("transient: need r_off > r_on > 0");
  if (branch_inductance < 0)
    throw std::invalid_argument("transient: negative inductance");
}

namespace {

struct Branch {
  int row;   // 0..m (0 = cost wire)
  int var;   // variable node
  double r;  // resistance
  double current = 0;
  double v_prev = 0;  // branch terminal voltage difference, trapezoidal use
};

}  // namespace

Trajectory simulate(const Circuit& circuit, double u_cost,
                    const TransientConfig& cfg) {
  circuit.validate();
  cfg.validate();
  const int n = circuit.num_vars();
  const int m = circuit.num_rows();
  const double h = cfg.step;
  const double el = cfg.branch_inductance;
  const bool trap = cfg.integrator == Integrator::trapezoidal;
  // Companion conductance of an RL branch for the chosen implicit rule.
  const double gamma = trap ? 2.0 * el / h : el / h;

  std::vector<Branch> branches;
  for (int i = 0; i <= m; ++i) {
    if (i == 0 && !circuit.has_cost) continue;
    for (int j = 0; j < n; ++j)
      if (circuit.g(i, j) > 0)
        branches.push_back({i, j, 1.0 / circuit.g(i, j), 0, 0});
  }

  // Unknowns: non-forced variable nodes then constraint wires.
  std::vector<int> var_idx(n, -1);
  int dim = 0;
  for (int j = 0; j < n; ++j)
    if (!circuit.forced_nodes.count(j)) var_idx[j] = dim++;
  const int wire_base = dim;
  dim += m;
  auto wire_idx = [&](int row) { return wire_base + row - 1; };

  Vector row_sum(m), src(m);
  for (int i = 0; i < m; ++i) {
    row_sum[i] = circuit.row_sum(i);
    src[i] = circuit.b[i] / row_sum[i];
  }
  const std::vector<int> ineq = circuit.inequality_rows();
  std::vector<char> conducting(m, 0);

  auto row_branch_conductance = [&](int i) {
    if (circuit.kind[i] == RowKind::equality) return -row_sum[i];
    const double rd = conducting[i] ? cfg.diode_r_on : cfg.diode_r_off;
    return 1.0 / (rd - 1.0 / row_sum[i]);
  };

  Vector v_nodes = Vector::Zero(n);
  for (auto [j, val] : circuit.forced_nodes) v_nodes[j] = val;
  Vector w_nodes = Vector::Zero(m);

  using SpMat = Eigen::SparseMatrix<double>;
  Eigen::SparseLU<SpMat> lu;
  bool need_factor = true;

  auto factorize = [&]() {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(4 * branches.size() + 2 * m);
    auto add = [&](int a, int b, double val) {
      if (a >= 0 && b >= 0) trips.emplace_back(a, b, val);
    };
    for (const Branch& br : branches) {
      const double geff = 1.0 / (br.r + gamma);
      const int vj = var_idx[br.var];
      const int wi = br.row == 0 ? -1 : wire_idx(br.row);
      add(vj, vj, geff);
      add(wi, wi, geff);
      add(vj, wi, -geff);
      add(wi, vj, -geff);
    }
    for (int i = 0; i < m; ++i)
      add(wire_idx(i + 1), wire_idx(i + 1), row_branch_conductance(i));
    SpMat a(dim, dim);
    a.setFromTriplets(trips.begin(), trips.end());
    a.makeCompressed();
    lu.compute(a);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("transient: singular step matrix");
    need_factor = false;
  };

  const int steps = static_cast<int>(std::llround(cfg.horizon / h));
  Trajectory traj;
  traj.times.reserve(steps);
  traj.v_nodes.reserve(steps);
  traj.cost_values.reserve(steps);
  traj.diode_states.reserve(steps);

  const Vector cost_row = circuit.has_cost ? circuit.cost() : Vector::Zero(n);
  Vector row_current = Vector::Zero(m);

  for (int k = 0; k < steps; ++k) {
    if (need_factor) factorize();

    Vector rhs = Vector::Zero(dim);
    for (Branch& br : branches) {
      const double geff = 1.0 / (br.r + gamma);
      double hist;
      if (trap)
        hist = geff * (gamma * br.current + br.v_prev - br.r * br.current);
      else
        hist = geff * gamma * br.current;
      const int vj = var_idx[br.var];
      const int wi = br.row == 0 ? -1 : wire_idx(br.row);
      // Current flows variable node -> wire; known voltages (forced nodes,
      // the driven cost wire) move to the right-hand side.
      if (vj >= 0) rhs[vj] -= hist;
      if (wi >= 0) {
        rhs[wi] += hist;
        if (vj < 0) rhs[wi] += geff * v_nodes[br.var];
      }
      if (br.row == 0 && vj >= 0) rhs[vj] += geff * u_cost;
    }
    for (int i = 0; i < m; ++i)
      rhs[wire_idx(i + 1)] += row_branch_conductance(i) * src[i];

    const Vector x = lu.solve(rhs);
    if (!x.allFinite()) {
      std::ostringstream msg;
      msg << "transient: integrator diverged at t=" << (k + 1) * h;
      throw std::runtime_error(msg.str());
    }

    for (int j = 0; j < n; ++j)
      if (var_idx[j] >= 0) v_nodes[j] = x[var_idx[j]];
    for (int i = 0; i < m; ++i) w_nodes[i] = x[wire_idx(i + 1)];

    // Update branch currents and row currents.
    for (Branch& br : branches) {
      const double geff = 1.0 / (br.r + gamma);
      const double wv = br.row == 0 ? u_cost : w_nodes[br.row - 1];
      const double dv = v_nodes[br.var] - wv;
      double hist;
      if (trap)
        hist = geff * (gamma * br.current + br.v_prev - br.r * br.current);
      else
        hist = geff * gamma * br.current;
      br.current = geff * dv + hist;
      br.v_prev = dv;
    }
    for (int i = 0; i < m; ++i)
      row_current[i] = row_branch_conductance(i) * (w_nodes[i] - src[i]);

    // Switch evaluation once per step.
    bool changed = false;
    for (int i : ineq) {
      if (conducting[i]) {
        if (row_current[i] < -1e-9) {
          conducting[i] = 0;
          changed = true;
        }
      } else {
        // Blocking: forward drop across the switch is current * r_off.
        const double v_diode = row_current[i] * cfg.diode_r_off;
        if (v_diode > 1e-9) {
          conducting[i] = 1;
          changed = true;
        }
      }
    }
    if (changed) need_factor = true;

    traj.times.push_back((k + 1) * h);
    traj.v_nodes.push_back(v_nodes);
    traj.cost_values.push_back(cost_row.dot(v_nodes));
    std::vector<char> dstate;
    dstate.reserve(ineq.size());
    for (int i : ineq) dstate.push_back(conducting[i]);
    traj.diode_states.push_back(std::move(dstate));
  }

  traj.final_u = w_nodes;
  traj.final_i = row_current;
  traj.final_i_cost =
      circuit.has_cost ? cost_row.dot(v_nodes) - cost_row.sum() * u_cost : 0;
  return traj;
}

std::optional<double> settling_time(const Trajectory& traj,
                                    double reference_cost, double rel_tol) {
  if (traj.times.empty())
    throw std::invalid_argument("settling_time: empty trajectory");
  const double band = rel_tol * std::max(1.0, std::abs(reference_cost));
  int last_violation = -1;
  for (int k = 0; k < static_cast<int>(traj.times.size()); ++k)
    if (std::abs(traj.cost_values[k] - reference_cost) > band)
      last_violation = k;
  if (last_violation < 0) return 0.0;
  if (last_violation + 1 >= static_cast<int>(traj.times.size()))
    return std::nullopt;
  return traj.times[last_violation + 1];
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream os;
  const int n = traj.v_nodes.empty() ? 0 : static_cast<int>(traj.v_nodes[0].size());
  const int q =
      traj.diode_states.empty() ? 0 : static_cast<int>(traj.diode_states[0].size());
  os << "t";
  for (int j = 1; j <= n; ++j) os << ",V" << j;
  os << ",cost";
  for (int k = 1; k <= q; ++k) os << ",d" << k;
  os << "\n";
  char buf[32];
  for (size_t k = 0; k < traj.times.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.12g", traj.times[k]);
    os << buf;
    for (int j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof(buf), "%.12g", traj.v_nodes[k][j]);
      os << "," << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.12g", traj.cost_values[k]);
    os << "," << buf;
    for (int d = 0; d < q; ++d)
      os << "," << static_cast<int>(traj.diode_states[k][d]);
    os << "\n";
  }
  return os.str();
}

}  // namespace alp
