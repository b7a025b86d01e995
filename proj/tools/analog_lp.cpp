// Command-line front end: solve and verify LPs on the analog crossbar,
// compute the critical cost voltage, run transients and MPC loops,
// generate random instances and export SPICE netlists.
#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "alp/mpc.hpp"
#include "alp/random_lp.hpp"
#include "alp/steady_state.hpp"
#include "alp/transient.hpp"

namespace {

using namespace alp;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int thread_budget(size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ANALOG_LP_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return static_cast<int>(std::min<size_t>(n, jobs));
}

int cmd_solve(const std::string& path, std::optional<double> u_cost) {
  const LinearProgram lp = load_lp_file(path);
  const EquivalenceReport rep = verify_equivalence(lp, u_cost);
  if (rep.status != "optimal") {
    std::cout << "status: " << rep.status << "\n";
    return 1;
  }
  std::cout << "status: optimal\n";
  std::cout << "u_crit: " << fmt(rep.u_crit) << "\n";
  std::cout << "u_cost: " << fmt(rep.u_cost) << "\n";
  std::cout << "v:";
  for (int j = 0; j < rep.circuit_v.size(); ++j)
    std::cout << " " << fmt(rep.circuit_v[j]);
  std::cout << "\n";
  std::cout << "cost: " << fmt(rep.circuit_cost) << "\n";
  std::cout << "oracle_cost: " << fmt(rep.oracle_cost) << "\n";
  std::cout << "gap: " << fmt(rep.cost_gap) << "\n";
  return 0;
}

int cmd_verify(const std::vector<std::string>& paths,
               std::optional<double> u_cost, double tol,
               const std::string& out) {
  std::vector<std::string> reports(paths.size());
  std::vector<bool> ok(paths.size(), false);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t k = next.fetch_add(1); k < paths.size();
         k = next.fetch_add(1)) {
      try {
        const EquivalenceReport rep =
            verify_equivalence(load_lp_file(paths[k]), u_cost);
        reports[k] = rep.to_json();
        ok[k] = rep.status == "optimal" && rep.cost_gap <= tol;
      } catch (const std::exception& e) {
        reports[k] = std::string("{\"status\": \"error: ") + e.what() + "\"}";
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < thread_budget(paths.size()); ++t)
    pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  std::string all = "[\n";
  bool all_ok = true;
  for (size_t k = 0; k < paths.size(); ++k) {
    all += reports[k];
    all += (k + 1 < paths.size()) ? ",\n" : "\n";
    std::cout << paths[k] << ": " << (ok[k] ? "ok" : "FAILED") << "\n";
    all_ok = all_ok && ok[k];
  }
  all += "]\n";
  if (!out.empty()) write_file(out, all);
  return all_ok ? 0 : 1;
}

int cmd_ucrit(const std::string& path) {
  const double u = compute_ucrit(load_lp_file(path));
  std::cout << fmt(u) << "\n";
  return 0;
}

int cmd_transient(const std::string& path, std::optional<double> u_cost,
                  const TransientConfig& cfg, const std::string& out) {
  const LinearProgram lp = load_lp_file(path);
  const CanonicalLP clp = canonicalize(lp);
  const Circuit circuit = compile(clp);
  const double uc = u_cost ? *u_cost : compute_ucrit(lp) - 1.0;
  const Trajectory traj = simulate(circuit, uc, cfg);
  const std::string csv = trajectory_csv(traj);
  if (out.empty())
    std::cout << csv;
  else
    write_file(out, csv);
  std::cerr << "final cost " << fmt(traj.cost_values.back()) << " at t="
            << fmt(traj.times.back()) << "\n";
  return 0;
}

int cmd_netlist(const std::string& path, std::optional<double> u_cost,
                double inductance, const std::string& out) {
  const LinearProgram lp = load_lp_file(path);
  const Circuit circuit = compile(canonicalize(lp));
  NetlistOptions opt;
  opt.branch_inductance = inductance;
  const double uc = u_cost ? *u_cost : compute_ucrit(lp) - 1.0;
  const std::string deck = export_netlist(circuit, uc, opt);
  if (out.empty())
    std::cout << deck;
  else
    write_file(out, deck);
  return 0;
}

int cmd_mpc(const std::string& path, double duration_flag, double sigma,
            std::uint64_t seed, const std::string& solver,
            const std::string& out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const MpcSpec spec = mpc_spec_from_json(ss.str());
  double duration = duration_flag;
  {
    const auto j = nlohmann::json::parse(ss.str());
    if (duration <= 0) duration = j.value("duration", 16 * spec.delta);
  }
  ClosedLoopOptions opt;
  opt.solver = solver == "oracle" ? MpcSolver::oracle : MpcSolver::circuit;
  opt.perturbation_sigma = sigma;
  opt.seed = seed;
  const ClosedLoopResult res = closed_loop(spec, duration, opt);
  const std::string csv = closed_loop_csv(res);
  if (out.empty())
    std::cout << csv;
  else
    write_file(out, csv);
  for (const auto& rep : res.reports)
    if (rep.status != "optimal") {
      std::cerr << "step failed: " << rep.status << "\n";
      return 1;
    }
  return 0;
}

int cmd_randlp(int n, int eq, int ineq, double density, std::uint64_t seed,
               const std::string& out) {
  RandomLpSpec spec;
  spec.n_vars = n;
  spec.n_eq = eq;
  spec.n_ineq = ineq;
  spec.density = density;
  spec.seed = seed;
  const LinearProgram lp = generate_random_lp(spec);
  const std::string js = lp_to_json(lp);
  if (out.empty())
    std::cout << js << "\n";
  else
    write_file(out, js + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analog-lp: linear programs on a resistor/diode crossbar"};
  app.require_subcommand(1);

  double u_cost_flag = std::numeric_limits<double>::quiet_NaN();
  double tol = 1e-6;
  double inductance = 100e-9;
  double sigma = 0.0;
  std::uint64_t seed = 1;
  std::string out;

  auto ucost_opt = [&]() -> std::optional<double> {
    if (std::isnan(u_cost_flag)) return std::nullopt;
    return u_cost_flag;
  };

  auto* solve = app.add_subcommand("solve", "solve one problem and compare");
  std::string solve_path;
  solve->add_option("problem", solve_path, "problem json")->required();
  solve->add_option("--ucost", u_cost_flag, "cost-node voltage");

  auto* verify = app.add_subcommand("verify", "verify problems in batch");
  std::vector<std::string> verify_paths;
  verify->add_option("problems", verify_paths, "problem json files")
      ->required();
  verify->add_option("--ucost", u_cost_flag, "cost-node voltage");
  verify->add_option("--tol", tol, "acceptable relative cost gap");
  verify->add_option("--out", out, "write report json");

  auto* ucrit = app.add_subcommand("ucrit", "critical cost voltage");
  std::string ucrit_path;
  ucrit->add_option("problem", ucrit_path, "problem json")->required();

  auto* transient = app.add_subcommand("transient", "time-domain simulation");
  std::string tr_path;
  TransientConfig tr_cfg;
  std::string integrator = "be";
  transient->add_option("problem", tr_path, "problem json")->required();
  transient->add_option("--ucost", u_cost_flag, "cost-node voltage");
  transient->add_option("--l", tr_cfg.branch_inductance, "branch inductance");
  transient->add_option("--step", tr_cfg.step, "time step");
  transient->add_option("--horizon", tr_cfg.horizon, "simulated time");
  transient->add_option("--integrator", integrator, "be | trap");
  transient->add_option("--out", out, "trajectory csv");

  auto* netlist = app.add_subcommand("netlist", "export a SPICE deck");
  std::string nl_path;
  netlist->add_option("problem", nl_path, "problem json")->required();
  netlist->add_option("--ucost", u_cost_flag, "cost-node voltage");
  netlist->add_option("--l", inductance, "branch inductance");
  netlist->add_option("--out", out, "deck file");

  auto* mpc = app.add_subcommand("mpc", "closed-loop tracking run");
  std::string mpc_path, solver = "circuit";
  double duration = 0;
  mpc->add_option("scenario", mpc_path, "scenario json")->required();
  mpc->add_option("--sigma", sigma, "relative resistor error std-dev");
  mpc->add_option("--seed", seed, "perturbation seed");
  mpc->add_option("--solver", solver, "circuit | oracle");
  mpc->add_option("--duration", duration, "loop duration, seconds");
  mpc->add_option("--out", out, "closed-loop csv");

  auto* randlp = app.add_subcommand("randlp", "generate a random LP");
  int rn = 8, req = 3, rineq = 14;
  double density = 0.35;
  randlp->add_option("--n", rn, "variables");
  randlp->add_option("--eq", req, "equality rows");
  randlp->add_option("--ineq", rineq, "inequality rows");
  randlp->add_option("--density", density, "fill density");
  randlp->add_option("--seed", seed, "generator seed");
  randlp->add_option("--out", out, "problem json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return cmd_solve(solve_path, ucost_opt());
    if (*verify) return cmd_verify(verify_paths, ucost_opt(), tol, out);
    if (*ucrit) return cmd_ucrit(ucrit_path);
    if (*transient) {
      tr_cfg.integrator = integrator == "trap" ? Integrator::trapezoidal
                                               : Integrator::backward_euler;
      return cmd_transient(tr_path, ucost_opt(), tr_cfg, out);
    }
    if (*netlist) return cmd_netlist(nl_path, ucost_opt(), inductance, out);
    if (*mpc) return cmd_mpc(mpc_path, duration, sigma, seed, solver, out);
    if (*randlp) return cmd_randlp(rn, req, rineq, density, seed, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
