#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "regsched/index.hpp"
#include "regsched/model.hpp"
#include "regsched/sim.hpp"

namespace regsched {

// Policy factory shared by the sweep runner and the CLI. Recognized names:
// optimal, index, max_elapsed, round_robin, random_k. "optimal" solves the
// truncated joint MDP, the rest are cheap.
std::unique_ptr<Policy> make_policy(const std::string& name, const Scenario& scenario, int s_max,
                                    TieRule tie_rule);

enum class EvalMethod { exact, simulate, both };

// One-parameter sweep around a base scenario: vary p, theta, or R of one
// client, compare policies by exact evaluation and/or simulation.
struct SweepSpec {
  Scenario base;
  std::string param = "p";  // "p" | "theta" | "R"
  int client_index = 1;
  std::vector<double> values;
  std::vector<std::string> policies = {"optimal", "index"};
  EvalMethod eval = EvalMethod::exact;
  int s_max = 50;
  std::int64_t horizon = 100000;
  int replications = 5;
  std::uint64_t seed = 1;
  TieRule tie_rule = TieRule::lowest_index;
};

struct SweepRow {
  std::string param;
  double value = 0.0;
  std::string policy;
  std::optional<double> gain_exact;
  std::optional<double> gain_sim;
  std::optional<double> gain_sim_stderr;
  std::optional<double> gap_rel;  // vs. the exact optimal gain, when known
  double capacity_bound = 0.0;
  double lagrangian_bound = 0.0;
  bool budget_skipped = false;
};

struct SweepOutput {
  std::vector<SweepRow> rows;
  std::string summary_json;
};

SweepOutput run_sweep(const SweepSpec& spec);

// Frozen column set:
// sweep_param,sweep_value,policy,gain_exact,gain_sim,gain_sim_stderr,
// gap_rel,capacity_bound,lagrangian_bound
std::string sweep_csv(const std::vector<SweepRow>& rows);

Scenario apply_sweep_value(const Scenario& base, const std::string& param, int client_index,
                           double value);

// Grid for the verification / errata report.
struct VerifyOptions {
  std::vector<double> p_grid = {0.2, 0.5, 0.8};
  std::vector<double> theta_grid = {0.0, 3.0, 10.0};
  std::vector<double> weight_grid = {1.0};
  std::int64_t n_max = 20;
  double beta = 0.9;                              // discounted-mode checks
  std::vector<double> beta_limit_grid = {0.9, 0.99, 0.999};
  int s_max = 200;
  int w_grid_points = 20;
  double oracle_tol = 1e-8;
  double renewal_tol = 1e-6;
  double identity_tol = 1e-6;
  double beta_limit_rel_tol = 0.02;  // at the largest beta in the grid
};

struct VerifyReport {
  bool structure_pass = true;          // threshold/indexability/monotonicity checks
  bool renewal_matches_oracle = true;  // within renewal_tol across the grid
  bool beta_limit_pass = true;         // discounted oracle approaches the average one
  double max_renewal_dev = 0.0;
  double max_identity_residual = 0.0;
  double max_closed_form_avg_dev = 0.0;   // errata: closed form vs oracle
  double max_closed_form_disc_dev = 0.0;  // errata: closed form vs oracle
  double max_beta_limit_rel_gap = 0.0;
  std::string json_text;   // machine-readable report, errata included
  std::string markdown;    // human-readable rendering
};

VerifyReport run_verify(const VerifyOptions& options);

}  // namespace regsched
