#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "regsched/rng.hpp"

namespace regsched {

// One client of the shared access point. `p` is the per-attempt delivery
// probability, `weight` scales the client's contribution to the objective,
// and `theta` tunes its throughput vs. service-regularity trade-off.
struct ClientParams {
  double p = 1.0;
  double weight = 1.0;  // serialized as "R"
  double theta = 0.0;

  void validate(const std::string& context = "client") const;
};

struct Scenario {
  std::vector<ClientParams> clients;
  int channels = 1;  // serialized as "K"

  int num_clients() const { return static_cast<int>(clients.size()); }
  void validate() const;
};

// elapsed[i] = slots since client i's last delivery.
struct SystemState {
  std::vector<std::int64_t> elapsed;

  bool operator==(const SystemState&) const = default;
};

// The K clients granted channel access this slot. Indices sorted ascending.
struct ScheduleDecision {
  std::vector<int> active;
};

// Subset of the active set whose packets got through.
struct DeliveryOutcome {
  std::vector<int> delivered;
};

SystemState all_zeros_state(int num_clients);

void validate_decision(const ScheduleDecision& decision, int num_clients, int channels);

// Deterministic state update: delivered clients reset to 0, everyone else
// ages by one slot. Rejects outcomes not contained in the decision.
SystemState step(const SystemState& state, const ScheduleDecision& decision,
                 const DeliveryOutcome& outcome);

// Samples each active client's delivery independently with probability p_i,
// consuming one draw per active client in ascending client-index order.
std::pair<SystemState, DeliveryOutcome> sample_step(const SystemState& state,
                                                    const ScheduleDecision& decision,
                                                    const Scenario& scenario, RandomStream& rng);

// sum_i weight_i * (theta_i * [s_i == 0] - s_i)
double instantaneous_reward(const SystemState& state, const Scenario& scenario);

// JSON wire format: {"clients":[{"p":0.8,"R":1.0,"theta":3.0},...],"K":1}.
// Validation errors name the offending field.
Scenario scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const Scenario& scenario);

}  // namespace regsched
