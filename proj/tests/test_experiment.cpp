#include <doctest.h>

#include <sstream>

#include "regsched/experiment.hpp"

using namespace regsched;

namespace {

SweepSpec small_spec() {
  SweepSpec spec;
  spec.base.clients = {{0.8, 1.0, 3.0}, {0.6, 1.0, 3.0}};
  spec.base.channels = 1;
  spec.param = "p";
  spec.client_index = 1;
  spec.values = {0.3, 0.6, 0.9};
  spec.policies = {"optimal", "index"};
  spec.s_max = 25;
  spec.horizon = 5000;
  spec.replications = 2;
  spec.seed = 3;
  return spec;
}

}  // namespace

TEST_CASE("apply_sweep_value touches exactly one field") {
  SweepSpec spec = small_spec();
  const Scenario sc = apply_sweep_value(spec.base, "theta", 0, 7.0);
  CHECK(sc.clients[0].theta == doctest::Approx(7.0));
  CHECK(sc.clients[0].p == doctest::Approx(0.8));
  CHECK(sc.clients[1].theta == doctest::Approx(3.0));
  CHECK_THROWS(apply_sweep_value(spec.base, "q", 0, 1.0));
  CHECK_THROWS(apply_sweep_value(spec.base, "p", 5, 0.5));
  CHECK_THROWS(apply_sweep_value(spec.base, "p", 0, 1.5));
}

TEST_CASE("sweep produces one row per (value, policy) with frozen columns") {
  const SweepOutput out = run_sweep(small_spec());
  REQUIRE(out.rows.size() == 6);
  const std::string csv = sweep_csv(out.rows);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "sweep_param,sweep_value,policy,gain_exact,gain_sim,gain_sim_stderr,gap_rel,"
        "capacity_bound,lagrangian_bound");
  int lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 6);

  for (const auto& row : out.rows) {
    REQUIRE(row.gain_exact.has_value());
    CHECK(row.capacity_bound >= *row.gain_exact - 1e-6);
    CHECK(row.lagrangian_bound >= *row.gain_exact - 1e-6);
    if (row.policy == "optimal")
      CHECK_FALSE(row.gap_rel.has_value());
    else
      CHECK(*row.gap_rel >= -1e-9);
    CHECK_FALSE(row.gain_sim.has_value());  // exact-only run
  }
  CHECK(out.summary_json.find("max_gap_rel_per_policy") != std::string::npos);
}

TEST_CASE("sweep output is byte-identical across reruns") {
  SweepSpec spec = small_spec();
  spec.eval = EvalMethod::both;
  const SweepOutput a = run_sweep(spec);
  const SweepOutput b = run_sweep(spec);
  CHECK(sweep_csv(a.rows) == sweep_csv(b.rows));
  CHECK(a.summary_json == b.summary_json);
}

TEST_CASE("simulate-only sweep carries stderr but no exact column") {
  SweepSpec spec = small_spec();
  spec.eval = EvalMethod::simulate;
  spec.policies = {"index", "round_robin"};
  const SweepOutput out = run_sweep(spec);
  for (const auto& row : out.rows) {
    CHECK_FALSE(row.gain_exact.has_value());
    CHECK(row.gain_sim.has_value());
    CHECK(row.gain_sim_stderr.has_value());
  }
}

TEST_CASE("budget overruns are marked, not fatal") {
  SweepSpec spec = small_spec();
  spec.base.clients = std::vector<ClientParams>(6, {0.5, 1.0, 3.0});
  spec.base.channels = 2;
  spec.client_index = 0;
  spec.s_max = 60;  // 61^6 states, far over budget
  const SweepOutput out = run_sweep(spec);
  for (const auto& row : out.rows) {
    CHECK(row.budget_skipped);
    CHECK_FALSE(row.gain_exact.has_value());
  }
  CHECK(sweep_csv(out.rows).find("NA(budget)") != std::string::npos);
}

TEST_CASE("verify on a tiny grid: oracle vs renewal, structure, errata text") {
  VerifyOptions opt;
  opt.p_grid = {0.5};
  opt.theta_grid = {3.0};
  opt.n_max = 5;
  opt.s_max = 120;
  opt.beta_limit_grid = {0.9, 0.99};
  opt.beta_limit_rel_tol = 0.2;  // the short grid stops at beta = 0.99
  const VerifyReport r = run_verify(opt);
  CHECK(r.structure_pass);
  CHECK(r.renewal_matches_oracle);
  CHECK(r.max_renewal_dev < 1e-6);
  CHECK(r.max_closed_form_avg_dev > 0.01);   // the transcribed forms really deviate
  CHECK(r.max_closed_form_disc_dev > 0.01);
  CHECK(r.max_identity_residual < 1e-6);
  CHECK(r.json_text.find("avg_index_comparisons") != std::string::npos);
  CHECK(r.markdown.find("Errata") != std::string::npos);
}
