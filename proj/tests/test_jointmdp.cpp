#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "regsched/jointmdp.hpp"

using namespace regsched;

namespace {

Scenario make_scenario(std::vector<ClientParams> clients, int k) {
  Scenario sc;
  sc.clients = std::move(clients);
  sc.channels = k;
  return sc;
}

}  // namespace

TEST_CASE("state enumeration round trips") {
  const JointMdp mdp = make_joint_mdp(make_scenario({{0.8, 1, 3}, {0.6, 1, 3}}, 1), 4);
  CHECK(mdp.num_states == 25);
  std::vector<std::int64_t> elapsed;
  for (std::int64_t s = 0; s < mdp.num_states; ++s) {
    mdp.decode(s, elapsed);
    CHECK(mdp.index_of(elapsed) == s);
  }
  CHECK(mdp.actions.size() == 2);
}

TEST_CASE("deterministic single client: serve always, gain R*theta") {
  const JointMdp mdp = make_joint_mdp(make_scenario({{1.0, 1.0, 2.0}}, 1), 20);
  const MdpSolution sol = solve_average(mdp);
  CHECK(sol.gain == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("two deterministic clients, two channels: everyone served, gain = sum R*theta") {
  const JointMdp mdp = make_joint_mdp(make_scenario({{1.0, 1.0, 2.0}, {1.0, 1.0, 3.0}}, 2), 10);
  CHECK(solve_average(mdp).gain == doctest::Approx(5.0).epsilon(1e-8));
}

TEST_CASE("optimal gain dominates arbitrary policies") {
  const JointMdp mdp = make_joint_mdp(make_scenario({{0.8, 1, 3}, {0.6, 1, 3}}, 1), 12);
  const double opt = solve_average(mdp).gain;
  CHECK(opt >= evaluate_uniform_random(mdp) - 1e-9);
  CHECK(opt >= evaluate_rotating_policy(mdp, round_robin_cycle(mdp)) - 1e-9);
  std::vector<int> always0(static_cast<std::size_t>(mdp.num_states), 0);
  CHECK(opt >= evaluate_policy(mdp, always0) - 1e-9);
}

TEST_CASE("evaluating the optimal policy reproduces the optimal gain") {
  const JointMdp mdp = make_joint_mdp(make_scenario({{0.8, 1, 3}, {0.6, 1, 3}}, 1), 12);
  const MdpSolution sol = solve_average(mdp);
  CHECK(evaluate_policy(mdp, sol.policy) == doctest::Approx(sol.gain).epsilon(1e-8));
}

TEST_CASE("round robin on symmetric deterministic clients") {
  // p=1, N=2, K=1, theta=0: each client alternates s = 0,1; gain = -1
  const JointMdp mdp = make_joint_mdp(make_scenario({{1.0, 1.0, 0.0}, {1.0, 1.0, 0.0}}, 1), 6);
  const auto cycle = round_robin_cycle(mdp);
  CHECK(cycle.size() == 2);
  CHECK(evaluate_rotating_policy(mdp, cycle) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("client relabeling leaves the optimal gain unchanged") {
  const Scenario a = make_scenario({{0.8, 1.0, 3.0}, {0.4, 2.0, 1.0}}, 1);
  const Scenario b = make_scenario({{0.4, 2.0, 1.0}, {0.8, 1.0, 3.0}}, 1);
  const double ga = solve_average(make_joint_mdp(a, 15)).gain;
  const double gb = solve_average(make_joint_mdp(b, 15)).gain;
  CHECK(ga == doctest::Approx(gb).epsilon(1e-9));
}

TEST_CASE("beta -> 0: greedy one-step rule") {
  // At beta ~ 0 only the immediate successor reward matters. For N=2, K=1
  // serving i improves the next-slot reward by p_i*R_i*(theta_i + s_i + 1)
  // relative to not serving, so the optimal action maximizes that product.
  // parameters chosen so the two products never tie on the truncated grid
  const Scenario sc = make_scenario({{0.8, 1.0, 3.0}, {0.4, 1.7, 1.0}}, 1);
  const JointMdp mdp = make_joint_mdp(sc, 8);
  const MdpSolution sol = solve_discounted(mdp, 1e-4);
  std::vector<std::int64_t> elapsed;
  for (std::int64_t s = 0; s < mdp.num_states; ++s) {
    mdp.decode(s, elapsed);
    double best = -1e300;
    int want = 0;
    for (int i = 0; i < 2; ++i) {
      const auto& c = sc.clients[static_cast<std::size_t>(i)];
      // next-slot state if not delivered saturates at s_max
      const double aged =
          static_cast<double>(std::min<std::int64_t>(elapsed[static_cast<std::size_t>(i)] + 1,
                                                     mdp.s_max));
      const double gain = c.p * c.weight * (c.theta + aged);
      if (gain > best + 1e-12) {
        best = gain;
        want = i;
      }
    }
    CHECK(mdp.actions[static_cast<std::size_t>(sol.policy[static_cast<std::size_t>(s)])][0] ==
          want);
  }
}

TEST_CASE("discounted single deterministic client: geometric series value") {
  // p=1, K=1, serve always from 0: value = R*theta / (1-beta)
  const JointMdp mdp = make_joint_mdp(make_scenario({{1.0, 1.0, 2.0}}, 1), 10);
  const MdpSolution sol = solve_discounted(mdp, 0.9, 1e-12);
  CHECK(sol.value[0] == doctest::Approx(20.0).epsilon(1e-8));
}

TEST_CASE("truncation bound barely moves the gain") {
  const Scenario sc = make_scenario({{0.8, 1, 3}, {0.6, 1, 3}}, 1);
  const double g50 = solve_average(make_joint_mdp(sc, 50)).gain;
  const double g100 = solve_average(make_joint_mdp(sc, 100)).gain;
  CHECK(std::abs(g50 - g100) < 1e-6);
}

TEST_CASE("state-action budget is enforced with a diagnostic") {
  const Scenario sc = make_scenario(std::vector<ClientParams>(6, {0.5, 1, 3}), 2);
  CHECK_THROWS_AS(make_joint_mdp(sc, 200, 1e6), BudgetExceeded);
  try {
    make_joint_mdp(sc, 200, 1e6);
  } catch (const BudgetExceeded& e) {
    CHECK(e.required_state_action_pairs > 1e6);
  }
}

TEST_CASE("policy_table_from tabulates a feedback rule") {
  const JointMdp mdp = make_joint_mdp(make_scenario({{0.8, 1, 3}, {0.6, 1, 3}}, 1), 6);
  const auto table = policy_table_from(mdp, [&](const SystemState& s) {
    return ScheduleDecision{{s.elapsed[0] >= s.elapsed[1] ? 0 : 1}};
  });
  std::vector<std::int64_t> elapsed;
  for (std::int64_t s = 0; s < mdp.num_states; ++s) {
    mdp.decode(s, elapsed);
    const int want = elapsed[0] >= elapsed[1] ? 0 : 1;
    CHECK(mdp.actions[static_cast<std::size_t>(table[static_cast<std::size_t>(s)])][0] == want);
  }
}
