#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "regsched/bounds.hpp"
#include "regsched/experiment.hpp"
#include "regsched/index.hpp"
#include "regsched/jointmdp.hpp"
#include "regsched/model.hpp"
#include "regsched/sim.hpp"
#include "regsched/singlearm.hpp"

namespace fs = std::filesystem;
using namespace regsched;

namespace {

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scenario: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_from_json_text(buf.str());
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

ObjectiveMode parse_mode(const std::string& mode) {
  if (mode == "avg") return ObjectiveMode::average;
  if (mode == "disc") return ObjectiveMode::discounted;
  throw std::runtime_error("--mode: expected avg or disc, got " + mode);
}

TieRule parse_tie(const std::string& tie) {
  if (tie == "lowest") return TieRule::lowest_index;
  if (tie == "random") return TieRule::random_with_seed;
  throw std::runtime_error("--tie: expected lowest or random, got " + tie);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

int cmd_index(const Scenario& scenario, const std::string& mode_str, double beta,
              std::int64_t n_max, const std::string& out_path) {
  const ObjectiveMode mode = parse_mode(mode_str);
  std::ostringstream csv;
  csv << (mode == ObjectiveMode::average ? "n,client_id,W_paper_avg,W_renewal,W_oracle\n"
                                         : "n,client_id,W_paper_disc,W_renewal,W_oracle\n");
  for (int i = 0; i < scenario.num_clients(); ++i) {
    const ClientParams& c = scenario.clients[static_cast<std::size_t>(i)];
    for (std::int64_t n = 0; n <= n_max; ++n) {
      csv << n << ',' << i << ',';
      if (mode == ObjectiveMode::average)
        csv << fmt(avg_index_closed_form(n, c)) << ',' << fmt(renewal_index(n, c)) << ','
            << fmt(oracle_index(n, c, mode, 0.0));
      else
        csv << fmt(discounted_index_closed_form(n, c, beta)) << ",,"
            << fmt(oracle_index(n, c, mode, beta));
      csv << '\n';
    }
  }
  if (out_path.empty())
    std::cout << csv.str();
  else
    write_file(out_path, csv.str());
  return 0;
}

int cmd_solve(const Scenario& scenario, int s_max, const std::string& out_dir) {
  const JointMdp mdp = make_joint_mdp(scenario, s_max);
  const MdpSolution sol = solve_average(mdp);

  std::ostringstream csv;
  csv << "state,action\n";
  std::vector<std::int64_t> elapsed;
  for (std::int64_t s = 0; s < mdp.num_states; ++s) {
    mdp.decode(s, elapsed);
    csv << '"';
    for (std::size_t i = 0; i < elapsed.size(); ++i) csv << (i ? " " : "") << elapsed[i];
    csv << "\",\"";
    const auto& act = mdp.actions[static_cast<std::size_t>(sol.policy[static_cast<std::size_t>(s)])];
    for (std::size_t i = 0; i < act.size(); ++i) csv << (i ? " " : "") << act[i];
    csv << "\"\n";
  }
  const fs::path dir(out_dir);
  write_file(dir / "policy.csv", csv.str());

  nlohmann::json j;
  j["gain"] = sol.gain;
  j["residual"] = sol.residual;
  j["iterations"] = sol.iterations;
  j["s_max"] = s_max;
  j["num_states"] = mdp.num_states;
  j["policy_csv"] = (dir / "policy.csv").string();
  write_file(dir / "solution.json", j.dump(2) + "\n");
  std::cout << "gain " << fmt(sol.gain) << ", policy written to " << (dir / "policy.csv").string()
            << "\n";
  return 0;
}

int cmd_bounds(const Scenario& scenario, const std::string& out_dir) {
  const CapacityBoundResult cap = capacity_bound(scenario);
  const LagrangianBoundResult lag = lagrangian_bound(scenario);

  nlohmann::json j;
  j["capacity_bound"] = cap.bound;
  j["lagrangian_bound"] = lag.bound;
  j["w_star"] = lag.w_star;
  j["rates"] = cap.rates;
  j["multiplier"] = cap.multiplier;
  j["kkt_residual"] = cap.kkt_residual;
  j["thresholds"] = lag.thresholds;
  const fs::path dir(out_dir);
  write_file(dir / "bounds.json", j.dump(2) + "\n");

  std::ostringstream csv;
  csv << "w,lagrangian_objective\n";
  const double hi = std::max(1.0, 2.0 * lag.w_star);
  for (int i = 0; i <= 200; ++i) {
    const double w = hi * static_cast<double>(i) / 200.0;
    csv << fmt(w) << ',' << fmt(lagrangian_objective(scenario, w)) << '\n';
  }
  write_file(dir / "w_sweep.csv", csv.str());
  std::cout << "capacity " << fmt(cap.bound) << ", lagrangian " << fmt(lag.bound) << " at w="
            << fmt(lag.w_star) << "\n";
  return 0;
}

int cmd_simulate(const Scenario& scenario, const std::string& policy_name, int s_max,
                 TieRule tie, std::int64_t horizon, int reps, std::uint64_t seed,
                 const std::string& out_dir, const std::string& trace_path) {
  auto policy = make_policy(policy_name, scenario, s_max, tie);
  SimOptions opts;
  opts.horizon = horizon;
  opts.replications = reps;
  opts.seed = seed;
  std::ofstream trace;
  if (!trace_path.empty()) {
    trace.open(trace_path, std::ios::binary);
    if (!trace) throw std::runtime_error("cannot write " + trace_path);
    opts.trace = &trace;
  }
  const SimResult result = run(scenario, *policy, opts);
  write_file(fs::path(out_dir) / "result.json", result.to_json_text() + "\n");
  std::cout << "reward " << fmt(result.reward_avg) << " +- " << fmt(result.reward_stderr) << "\n";
  return 0;
}

int cmd_verify(const std::string& out_dir) {
  const VerifyReport report = run_verify(VerifyOptions{});
  const fs::path dir(out_dir);
  write_file(dir / "errata.json", report.json_text + "\n");
  write_file(dir / "errata.md", report.markdown);
  std::cout << (report.structure_pass && report.renewal_matches_oracle && report.beta_limit_pass
                    ? "verify: pass"
                    : "verify: FAIL")
            << " (max renewal dev " << report.max_renewal_dev << ", closed-form dev avg "
            << report.max_closed_form_avg_dev << " disc " << report.max_closed_form_disc_dev
            << ")\n";
  return report.structure_pass && report.renewal_matches_oracle && report.beta_limit_pass ? 0 : 2;
}

int cmd_sweep(const SweepSpec& spec, const std::string& out_dir) {
  const SweepOutput out = run_sweep(spec);
  const fs::path dir(out_dir);
  write_file(dir / "sweep.csv", sweep_csv(out.rows));
  write_file(dir / "summary.json", out.summary_json + "\n");
  std::cout << out.rows.size() << " rows written to " << (dir / "sweep.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whittle-index scheduling toolkit"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out = "out";
  std::uint64_t seed = 1;
  std::int64_t horizon = 100000;
  int reps = 5;
  int s_max = 50;
  double beta = 0.9;
  std::string mode = "avg";
  std::vector<std::string> policies = {"optimal", "index"};
  std::string tie = "lowest";

  auto add_common = [&](CLI::App* sub, bool needs_scenario) {
    if (needs_scenario)
      sub->add_option("--scenario", scenario_path, "scenario JSON path")->required();
    sub->add_option("--out", out, "output directory (or file for `index`)");
    sub->add_option("--seed", seed, "base RNG seed");
    sub->add_option("--horizon", horizon, "slots per replication");
    sub->add_option("--reps", reps, "simulation replications");
    sub->add_option("--smax", s_max, "per-client state truncation");
    sub->add_option("--beta", beta, "discount factor (disc mode)");
    sub->add_option("--mode", mode, "avg | disc");
    sub->add_option("--policies", policies, "policies to compare")->delimiter(',');
    sub->add_option("--tie", tie, "lowest | random");
  };

  std::int64_t n_max = 20;
  auto* index_cmd = app.add_subcommand("index", "print per-client index tables as CSV");
  add_common(index_cmd, true);
  index_cmd->add_option("--nmax", n_max, "largest state in the table");

  auto* solve_cmd = app.add_subcommand("solve", "solve the joint MDP exactly");
  add_common(solve_cmd, true);

  auto* bounds_cmd = app.add_subcommand("bounds", "capacity and Lagrangian upper bounds");
  add_common(bounds_cmd, true);

  std::string policy_name = "index";
  std::string trace_path;
  auto* sim_cmd = app.add_subcommand("simulate", "simulate one policy");
  add_common(sim_cmd, true);
  sim_cmd->add_option("--policy", policy_name, "policy to simulate");
  sim_cmd->add_option("--trace", trace_path, "per-slot trace CSV path");

  auto* verify_cmd = app.add_subcommand("verify", "index verification and errata report");
  add_common(verify_cmd, false);

  std::string param = "p";
  int client_index = 1;
  std::vector<double> values;
  std::string eval = "exact";
  auto* sweep_cmd = app.add_subcommand("sweep", "policy-comparison parameter sweep");
  add_common(sweep_cmd, true);
  sweep_cmd->add_option("--param", param, "p | theta | R");
  sweep_cmd->add_option("--client", client_index, "index of the varied client");
  sweep_cmd->add_option("--values", values, "sweep values")->delimiter(',')->required();
  sweep_cmd->add_option("--eval", eval, "exact | simulate | both");

  CLI11_PARSE(app, argc, argv);

  try {
    if (index_cmd->parsed()) {
      const std::string out_path = index_cmd->count("--out") ? out : "";
      return cmd_index(load_scenario(scenario_path), mode, beta, n_max, out_path);
    }
    if (solve_cmd->parsed()) return cmd_solve(load_scenario(scenario_path), s_max, out);
    if (bounds_cmd->parsed()) return cmd_bounds(load_scenario(scenario_path), out);
    if (sim_cmd->parsed())
      return cmd_simulate(load_scenario(scenario_path), policy_name, s_max, parse_tie(tie),
                          horizon, reps, seed, out, trace_path);
    if (verify_cmd->parsed()) return cmd_verify(out);
    if (sweep_cmd->parsed()) {
      SweepSpec spec;
      spec.base = load_scenario(scenario_path);
      spec.param = param;
      spec.client_index = client_index;
      spec.values = values;
      spec.policies = policies;
      if (eval == "exact")
        spec.eval = EvalMethod::exact;
      else if (eval == "simulate")
        spec.eval = EvalMethod::simulate;
      else if (eval == "both")
        spec.eval = EvalMethod::both;
      else
        throw std::runtime_error("--eval: expected exact, simulate, or both, got " + eval);
      spec.s_max = s_max;
      spec.horizon = horizon;
      spec.replications = reps;
      spec.seed = seed;
      spec.tie_rule = parse_tie(tie);
      return cmd_sweep(spec, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
