#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regsched/model.hpp"

namespace regsched {

enum class ObjectiveMode { average, discounted };

// Single-client relaxation: the client earns its usual reward, plus a
// subsidy w for every slot it idles. State space truncated at s_max with
// saturating dynamics (passive at s_max self-loops).
struct SubsidyArm {
  ClientParams client;
  double subsidy = 0.0;
  ObjectiveMode mode = ObjectiveMode::average;
  double beta = 0.9;  // discounted mode only
  int s_max = 200;

  void validate() const;
};

// Idle while s < threshold, transmit while s >= threshold.
struct ThresholdPolicy {
  int threshold = 0;
};

struct ArmSolution {
  // Discounted: optimal value function. Average: bias anchored at state 0.
  std::vector<double> value;
  double gain = 0.0;  // average mode only
  std::vector<std::uint8_t> active;
  double residual = 0.0;
  int iterations = 0;
};

// Renewal-reward gain of the threshold policy under subsidy w:
// cycle 0 -> T passive (collecting w - weight*j, plus weight*theta at 0),
// then active until a geometric(p) success.
double threshold_avg_reward(int threshold, double w, const ClientParams& client);

// Discounted value of the threshold policy from start_state, by exact policy
// evaluation on the truncated chain (linear fixed point, no iteration).
double threshold_discounted_value(int threshold, double w, const ClientParams& client, double beta,
                                  int start_state, int s_max = 400);

// Unique subsidy at which thresholds n and n+1 earn the same average gain.
// Both gains are affine in w with distinct slopes, so the root is exact.
double renewal_index(std::int64_t n, const ClientParams& client);

// Optimal policy of the subsidy MDP. Discounted mode: policy iteration with
// exact evaluation; average mode: damped relative value iteration anchored
// at state 0, stopping when span(T(h) - h) < tol.
ArmSolution solve_arm(const SubsidyArm& arm, double tol = 1e-10,
                      std::vector<double>* warm_start = nullptr);

// Whittle index as the flip subsidy of the optimal action at state n:
// bisection over w, bracket seeded from renewal_index and expanded
// geometrically if needed. Throws if no flip is found (non-threshold arm).
double oracle_index(std::int64_t n, const ClientParams& client, ObjectiveMode mode, double beta,
                    double tol = 1e-8, int s_max = 200);

struct StructureCheck {
  std::string name;
  bool pass = true;
  std::string witness;  // empty when the check passes
};

struct StructureReport {
  ClientParams client;
  ObjectiveMode mode = ObjectiveMode::average;
  double beta = 0.0;
  bool all_pass = true;
  std::vector<StructureCheck> checks;

  std::string to_json_text() const;
};

// Asserts, from solver output: threshold-type optimal policies on the whole
// subsidy grid, passive sets monotone in w, oracle indices nondecreasing,
// and (discounted mode) the index/value identity and value-ordering checks.
StructureReport verify_structure(const ClientParams& client, ObjectiveMode mode, double beta,
                                 const std::vector<double>& w_grid, std::int64_t n_max,
                                 int s_max = 200, double identity_tol = 1e-6);

}  // namespace regsched
