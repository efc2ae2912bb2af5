#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "regsched/model.hpp"

namespace regsched {

struct BudgetExceeded : std::runtime_error {
  explicit BudgetExceeded(const std::string& what, double required)
      : std::runtime_error(what), required_state_action_pairs(required) {}
  double required_state_action_pairs;
};

// Product chain over {0..s_max}^N with saturating truncation: absent a
// delivery, s sticks at s_max. States enumerated row-major over
// (s_1, ..., s_N); actions are the K-subsets of clients in lexicographic
// order.
struct JointMdp {
  Scenario scenario;
  int s_max = 50;
  std::int64_t num_states = 0;
  std::vector<std::int64_t> strides;
  std::vector<std::vector<int>> actions;

  std::int64_t index_of(const std::vector<std::int64_t>& elapsed) const;
  void decode(std::int64_t state, std::vector<std::int64_t>& elapsed) const;
  int action_index(const std::vector<int>& subset) const;
};

JointMdp make_joint_mdp(const Scenario& scenario, int s_max,
                        double state_action_budget = 5e7);

struct MdpSolution {
  double gain = 0.0;                 // average mode
  std::vector<double> value;         // discounted value, or average-mode bias
  std::vector<int> policy;           // action index per state
  double residual = 0.0;
  std::int64_t iterations = 0;
};

// Relative value iteration anchored at the all-zeros state, stopping when
// span(T(h) - h) < tol. Greedy ties break toward the lexicographically
// smallest subset.
MdpSolution solve_average(const JointMdp& mdp, double tol = 1e-10,
                          std::int64_t max_iters = 1000000);

MdpSolution solve_discounted(const JointMdp& mdp, double beta, double tol = 1e-9,
                             std::int64_t max_iters = 10000000);

// Exact average gain of a stationary deterministic policy (action per state).
double evaluate_policy(const JointMdp& mdp, const std::vector<int>& policy, double tol = 1e-10);

// Average gain of the uniformly random K-subset policy.
double evaluate_uniform_random(const JointMdp& mdp, double tol = 1e-10);

// Average gain of a policy that cycles through a fixed schedule of actions,
// independent of the state (e.g. round robin). Evaluated on the chain
// augmented with the schedule phase.
double evaluate_rotating_policy(const JointMdp& mdp, const std::vector<int>& action_cycle,
                                double tol = 1e-10);

// Round-robin schedule: serve K consecutive clients, advance the pointer by
// K each slot.
std::vector<int> round_robin_cycle(const JointMdp& mdp);

// Tabulates a state-feedback rule (e.g. top-K index selection) as a policy
// vector over the truncated state space.
std::vector<int> policy_table_from(
    const JointMdp& mdp,
    const std::function<ScheduleDecision(const SystemState&)>& rule);

}  // namespace regsched
