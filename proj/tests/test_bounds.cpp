#include <doctest.h>

#include <cmath>

#include "regsched/bounds.hpp"
#include "regsched/jointmdp.hpp"
#include "regsched/singlearm.hpp"

using namespace regsched;

namespace {

Scenario make_scenario(std::vector<ClientParams> clients, int k) {
  Scenario sc;
  sc.clients = std::move(clients);
  sc.channels = k;
  return sc;
}

}  // namespace

TEST_CASE("capacity bound: deterministic single client is tight at zero") {
  const CapacityBoundResult r = capacity_bound(make_scenario({{1.0, 1.0, 0.0}}, 1));
  CHECK(r.bound == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r.rates[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(r.constraint_residual) < 1e-9);
}

TEST_CASE("capacity bound: p=1/2 single client") {
  // x <= 1/2 binds; objective -1/(2x) + 1/2 at x = 1/2 gives -1/2, above the
  // exact optimum -1 (serve always: D geometric(1/2), E[D(D-1)/2]/E[D] = 1).
  const CapacityBoundResult r = capacity_bound(make_scenario({{0.5, 1.0, 0.0}}, 1));
  CHECK(r.bound == doctest::Approx(-0.5).epsilon(1e-8));
  CHECK(r.rates[0] == doctest::Approx(0.5).epsilon(1e-8));
  const double exact = solve_average(make_joint_mdp(make_scenario({{0.5, 1.0, 0.0}}, 1), 80)).gain;
  CHECK(exact == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(r.bound >= exact);
}

TEST_CASE("capacity bound KKT stationarity holds per client") {
  const Scenario sc = make_scenario({{0.8, 1.0, 3.0}, {0.6, 2.0, 1.0}, {0.4, 0.5, 5.0}}, 2);
  const CapacityBoundResult r = capacity_bound(sc);
  double used = 0.0;
  for (int i = 0; i < sc.num_clients(); ++i) {
    const auto& c = sc.clients[static_cast<std::size_t>(i)];
    const double x = r.rates[static_cast<std::size_t>(i)];
    // R_i(theta_i + 1/(2x^2)) = lambda / p_i
    CHECK(c.weight * (c.theta + 0.5 / (x * x)) ==
          doctest::Approx(r.multiplier / c.p).epsilon(1e-6));
    used += x / c.p;
  }
  CHECK(used == doctest::Approx(static_cast<double>(sc.channels)).epsilon(1e-8));
  CHECK(std::abs(r.kkt_residual) < 1e-8);
}

TEST_CASE("both bounds dominate the exact optimum") {
  for (double p2 : {0.2, 0.5, 0.9}) {
    const Scenario sc = make_scenario({{0.8, 1.0, 3.0}, {p2, 1.0, 3.0}}, 1);
    const double opt = solve_average(make_joint_mdp(sc, 60)).gain;
    CHECK(capacity_bound(sc).bound >= opt - 1e-6);
    CHECK(lagrangian_bound(sc).bound >= opt - 1e-6);
  }
}

TEST_CASE("lagrangian objective is what it says") {
  const Scenario sc = make_scenario({{0.8, 1.0, 3.0}, {0.5, 1.0, 3.0}}, 1);
  const double w = 2.0;
  double want = -w * (2 - 1);
  for (const auto& c : sc.clients)
    want += threshold_avg_reward(best_threshold(c, w), w, c);
  CHECK(lagrangian_objective(sc, w) == doctest::Approx(want).epsilon(1e-12));

  // best_threshold is really the argmax over a wide range
  for (const auto& c : sc.clients) {
    const int t_star = best_threshold(c, w);
    for (int t = 0; t <= 300; ++t)
      CHECK(threshold_avg_reward(t_star, w, c) >= threshold_avg_reward(t, w, c) - 1e-10);
  }
}

TEST_CASE("lagrangian bound is a certified minimum over the subsidy") {
  const Scenario sc = make_scenario({{0.8, 1.0, 3.0}, {0.5, 1.0, 3.0}}, 1);
  const LagrangianBoundResult r = lagrangian_bound(sc);
  CHECK(r.bound == doctest::Approx(lagrangian_objective(sc, r.w_star)).epsilon(1e-9));
  for (double w : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0})
    CHECK(lagrangian_objective(sc, w) >= r.bound - 1e-7);
  CHECK(r.thresholds.size() == 2);
}

TEST_CASE("K = N makes the lagrangian relaxation degenerate") {
  const Scenario sc = make_scenario({{1.0, 1.0, 2.0}, {1.0, 1.0, 3.0}}, 2);
  // every client served every slot: bound = sum R*theta, and it is tight
  CHECK(lagrangian_bound(sc).bound == doctest::Approx(5.0).epsilon(1e-8));
}

TEST_CASE("identical clients: minimizer sits where thresholds agree") {
  const Scenario sc = make_scenario({{0.6, 1.0, 3.0}, {0.6, 1.0, 3.0}}, 1);
  const LagrangianBoundResult r = lagrangian_bound(sc);
  CHECK(r.thresholds[0] == r.thresholds[1]);
  const double opt = solve_average(make_joint_mdp(sc, 60)).gain;
  CHECK(r.bound >= opt - 1e-6);
}
