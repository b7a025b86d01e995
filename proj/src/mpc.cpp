#include "alp/mpc.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

namespace alp {

void MpcSpec::validate() const {
  if (horizon_n < 1) throw std::invalid_argument("mpc: horizon_n < 1");
  if (!(delta > 0)) throw std::invalid_argument("mpc: delta <= 0");
  if (!(u_min < u_max)) throw std::invalid_argument("mpc: bounds unordered");
}

double MpcSpec::reference(int step) const {
  if (x_ref.empty()) return 0;
  const int k = std::min(std::max(step, 0),
                         static_cast<int>(x_ref.size()) - 1);
  return x_ref[k];
}

int mpc_u_index(const MpcSpec&, int i) { return i; }
int mpc_x_index(const MpcSpec& spec, int i) { return spec.horizon_n + i; }
int mpc_t_index(const MpcSpec& spec, int i) {
  return 2 * spec.horizon_n + 1 + (i - 1);
}

LinearProgram build_mpc_lp(const MpcSpec& spec, double x0, int ref_offset) {
  spec.validate();
  const int nn = spec.horizon_n;
  const int nv = 3 * nn + 1;
  const double d = spec.delta;

  Vector c = Vector::Zero(nv);
  for (int i = 1; i <= nn; ++i) c[mpc_t_index(spec, i)] = 1.0;

  // Dynamics x_{i+1} = x_i + (u_i - x_i) delta, then the x_0 pin.
  Matrix a_eq = Matrix::Zero(nn + 1, nv);
  Vector b_eq = Vector::Zero(nn + 1);
  for (int i = 0; i < nn; ++i) {
    a_eq(i, mpc_x_index(spec, i + 1)) = 1.0;
    a_eq(i, mpc_x_index(spec, i)) = -(1.0 - d);
    a_eq(i, mpc_u_index(spec, i)) = -d;
  }
  a_eq(nn, mpc_x_index(spec, 0)) = 1.0;
  b_eq[nn] = x0;

  // Input box rows then epigraph rows.
  Matrix a_ineq = Matrix::Zero(4 * nn, nv);
  Vector b_ineq = Vector::Zero(4 * nn);
  int r = 0;
  for (int i = 0; i < nn; ++i) {
    a_ineq(r, mpc_u_index(spec, i)) = 1.0;
    b_ineq[r++] = spec.u_max;
    a_ineq(r, mpc_u_index(spec, i)) = -1.0;
    b_ineq[r++] = -spec.u_min;
  }
  for (int i = 1; i <= nn; ++i) {
    const double ref = spec.reference(ref_offset + i);
    a_ineq(r, mpc_x_index(spec, i)) = 1.0;
    a_ineq(r, mpc_t_index(spec, i)) = -1.0;
    b_ineq[r++] = ref;
    a_ineq(r, mpc_x_index(spec, i)) = -1.0;
    a_ineq(r, mpc_t_index(spec, i)) = -1.0;
    b_ineq[r++] = -ref;
  }
  return make_lp(c, a_eq, b_eq, a_ineq, b_ineq);
}

namespace {

double plant_step(double x, double u, double delta) {
  return u + (x - u) * std::exp(-delta);
}

// Actuator saturation: a perturbed circuit enforces the input box only to
// the component accuracy, the applied command never leaves it.
double clamp_input(const MpcSpec& spec, double u) {
  return std::min(std::max(u, spec.u_min), spec.u_max);
}

}  // namespace

ClosedLoopResult closed_loop(const MpcSpec& spec, double duration,
                             const ClosedLoopOptions& opt) {
  spec.validate();
  if (duration < spec.delta)
    throw std::invalid_argument("closed_loop: duration < delta");
  const int steps = static_cast<int>(std::llround(duration / spec.delta));

  ClosedLoopResult res;
  res.times.reserve(steps);
  res.states.reserve(steps);
  res.inputs.reserve(steps);

  double x = spec.plant_initial;

  if (opt.solver == MpcSolver::oracle) {
    for (int k = 0; k < steps; ++k) {
      const LinearProgram lp = build_mpc_lp(spec, x, k);
      const OracleSolution sol = solve_lp(lp);
      if (sol.status != SolveStatus::optimal)
        throw std::runtime_error("closed_loop: oracle step " +
                                 std::to_string(k) + " " +
                                 to_string(sol.status));
      const double u0 = clamp_input(spec, sol.v_star[mpc_u_index(spec, 0)]);
      res.times.push_back(k * spec.delta);
      res.states.push_back(x);
      res.inputs.push_back(u0);
      res.costs.push_back(sol.cost);
      res.reports.push_back({"optimal", 0, 0, false});
      x = plant_step(x, u0, spec.delta);
    }
    res.final_state = x;
    return res;
  }

  // Circuit route: one compiled topology for the whole run; only the right
  // hand side (reference window, x0 pin) changes per step.
  const LinearProgram lp0 = build_mpc_lp(spec, x, 0);
  const CanonicalLP clp = canonicalize(lp0);
  Circuit circuit = compile(clp);
  Vector b_scale = Vector::Ones(circuit.num_rows());
  const bool perturbed = opt.perturbation_sigma > 0;
  if (perturbed) {
    PerturbedCircuit pc =
        perturb_conductances(circuit, opt.perturbation_sigma, opt.seed);
    circuit = std::move(pc.circuit);
    b_scale = std::move(pc.b_scale);
  }

  auto compute_loop_ucrit = [&](const LinearProgram& lp) {
    PrimalDualCircuit pdc = compile_primal_dual(lp);
    if (perturbed) {
      PerturbedCircuit pc = perturb_conductances(
          pdc.circuit, opt.perturbation_sigma, opt.seed + 0x9e3779b97f4a7c15ull);
      pdc.circuit = std::move(pc.circuit);
    }
    return compute_ucrit(pdc);
  };
  res.u_crit = compute_loop_ucrit(lp0);
  double u_cost = opt.u_cost.value_or(res.u_crit - 1.0);

  const int p_orig = lp0.num_eq();
  const int q_orig = lp0.num_ineq();
  const int x0_var = mpc_x_index(spec, 0);
  SteadyStateOptions ss_opt;

  for (int k = 0; k < steps; ++k) {
    const LinearProgram lp_k = build_mpc_lp(spec, x, k);
    // Refresh the circuit rhs: original rows keep their position under
    // canonicalization, pairing rows stay at zero.
    for (int i = 0; i < p_orig; ++i)
      circuit.b[i] = lp_k.b_eq[i] * b_scale[i];
    const int ineq0 = p_orig + clp.origin_dim;
    for (int i = 0; i < q_orig; ++i)
      circuit.b[ineq0 + i] = lp_k.b_ineq[i] * b_scale[ineq0 + i];
    circuit.forced_nodes.clear();
    circuit.forced_nodes[clp.pairing[x0_var].first] = x;

    MpcStepReport report{"optimal", 0, 0, false};
    SteadyState ss;
    try {
      ss = solve_steady_state(circuit, u_cost, ss_opt);
      report.eq22_residual = ss.residuals.max();
      if (report.eq22_residual > 1e-7) {
        // Stale critical voltage: recompute once for the current rhs.
        res.u_crit = compute_loop_ucrit(lp_k);
        u_cost = opt.u_cost.value_or(res.u_crit - 1.0);
        report.ucrit_recomputed = true;
        ss = solve_steady_state(circuit, u_cost, ss_opt);
        report.eq22_residual = ss.residuals.max();
      }
    } catch (const std::exception& e) {
      report.status = std::string("failed: ") + e.what();
      res.reports.push_back(report);
      res.final_state = x;
      return res;  // partial result
    }
    // Warm-start the next step from this diode partition.
    ss_opt.initial_active =
        std::set<int>(ss.active_set.begin(), ss.active_set.end());

    const double u0 =
        clamp_input(spec, ss.v[clp.pairing[mpc_u_index(spec, 0)].first]);
    const double cost = clp.inner.c.dot(ss.v);
    res.times.push_back(k * spec.delta);
    res.states.push_back(x);
    res.inputs.push_back(u0);
    res.costs.push_back(cost);
    res.reports.push_back(report);
    x = plant_step(x, u0, spec.delta);
  }
  res.final_state = x;
  return res;
}

std::string closed_loop_csv(const ClosedLoopResult& res) {
  std::ostringstream os;
  os << "t,x,u,cost\n";
  char buf[128];
  for (size_t k = 0; k < res.times.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g\n", res.times[k],
                  res.states[k], res.inputs[k], res.costs[k]);
    os << buf;
  }
  return os.str();
}

MpcSpec mpc_spec_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  MpcSpec spec;
  spec.horizon_n = j.value("horizon_n", 16);
  spec.delta = j.value("delta", 0.1);
  spec.u_min = j.value("u_min", -1.5);
  spec.u_max = j.value("u_max", 1.5);
  spec.plant_initial = j.value("plant_initial", 0.0);
  if (j.contains("x_ref"))
    for (const auto& v : j["x_ref"]) spec.x_ref.push_back(v.get<double>());
  spec.validate();
  return spec;
}

}  // namespace alp
