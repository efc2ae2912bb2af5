#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "regsched/index.hpp"
#include "regsched/jointmdp.hpp"
#include "regsched/model.hpp"
#include "regsched/rng.hpp"

namespace regsched {

// Slot-level scheduling rule. Policies may keep per-replication state; it is
// reset through begin_replication, which also hands over the replication's
// policy substream (used by the random baseline and random tie-breaking).
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void begin_replication(RandomStream policy_stream) {}
  virtual ScheduleDecision decide(const SystemState& state) = 0;
};

class IndexPolicy : public Policy {
 public:
  IndexPolicy(std::vector<IndexTable> tables, int channels,
              TieRule tie_rule = TieRule::lowest_index);
  std::string name() const override { return "index"; }
  void begin_replication(RandomStream policy_stream) override;
  ScheduleDecision decide(const SystemState& state) override;

 private:
  std::vector<IndexTable> tables_;
  int channels_;
  TieRule tie_rule_;
  RandomStream tie_rng_{0};
};

// Looks up a precomputed joint-MDP policy table; states beyond the
// truncation bound are clamped per component.
class TablePolicy : public Policy {
 public:
  TablePolicy(JointMdp mdp, std::vector<int> action_per_state, std::string name = "optimal");
  std::string name() const override { return name_; }
  ScheduleDecision decide(const SystemState& state) override;

 private:
  JointMdp mdp_;
  std::vector<int> action_per_state_;
  std::string name_;
};

class MaxElapsedPolicy : public Policy {
 public:
  MaxElapsedPolicy(int channels, TieRule tie_rule = TieRule::lowest_index);
  std::string name() const override { return "max_elapsed"; }
  void begin_replication(RandomStream policy_stream) override;
  ScheduleDecision decide(const SystemState& state) override;

 private:
  int channels_;
  TieRule tie_rule_;
  RandomStream tie_rng_{0};
};

class RoundRobinPolicy : public Policy {
 public:
  explicit RoundRobinPolicy(int channels) : channels_(channels) {}
  std::string name() const override { return "round_robin"; }
  void begin_replication(RandomStream policy_stream) override { pointer_ = 0; }
  ScheduleDecision decide(const SystemState& state) override;

 private:
  int channels_;
  int pointer_ = 0;
};

class RandomSubsetPolicy : public Policy {
 public:
  explicit RandomSubsetPolicy(int channels) : channels_(channels) {}
  std::string name() const override { return "random_k"; }
  void begin_replication(RandomStream policy_stream) override;
  ScheduleDecision decide(const SystemState& state) override;

 private:
  int channels_;
  RandomStream rng_{0};
};

struct ClientStats {
  std::int64_t deliveries = 0;
  double mean_interdelivery = 0.0;  // infinity when starved
  double m2 = 0.0;                  // Welford sum of squared deviations
  double sum_dd1_half = 0.0;        // sum of D(D-1)/2 over completed intervals
  std::int64_t final_elapsed = 0;   // last replication's terminal s_i
  bool starved = false;

  double variance() const { return deliveries > 1 ? m2 / static_cast<double>(deliveries - 1) : 0.0; }
};

struct SimResult {
  std::vector<ClientStats> clients;
  double reward_avg = 0.0;         // across replications
  double reward_stderr = 0.0;
  double reward_avg_warm = 0.0;    // first warmup_frac of each horizon discarded
  double reward_warm_stderr = 0.0;
  std::vector<double> per_rep_reward;
  std::int64_t horizon = 0;
  int replications = 0;
  std::uint64_t seed = 0;
  std::string policy;

  std::string to_json_text() const;
};

struct SimOptions {
  std::int64_t horizon = 100000;
  int replications = 1;
  std::uint64_t seed = 1;
  double warmup_frac = 0.01;
  std::ostream* trace = nullptr;  // optional CSV: slot, state, decision, deliveries
};

// Simulates independent replications from the all-zeros state. Bit
// reproducible from (seed, scenario, policy): replication r draws its
// channel stream from substream(r).substream(0) and its policy stream from
// substream(r).substream(1), and per-replication statistics merge in a
// fixed order.
SimResult run(const Scenario& scenario, Policy& policy, const SimOptions& options);

struct RewardEstimates {
  double avg_instantaneous = 0.0;  // time average of the per-slot reward
  double mean_var_form = 0.0;      // sum_i R_i (theta_i / mean(D_i) - var(D_i))
  double counting_form = 0.0;      // sum_i R_i (theta_i N_i / t - sum D(D-1)/2 / t)
  bool any_starved = false;
};

RewardEstimates reward_estimates(const SimResult& result, const Scenario& scenario);

// Exact bookkeeping gap between the instantaneous and counting forms: the
// partial final interval plus at most one uncollected theta per client,
// all divided by the horizon.
double boundary_bound(const SimResult& result, const Scenario& scenario);

}  // namespace regsched
