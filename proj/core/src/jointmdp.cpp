#include "regsched/jointmdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace regsched {

namespace {

std::vector<std::vector<int>> k_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(k));
  std::iota(cur.begin(), cur.end(), 0);
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j)
      cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

// Expected next-step value of playing `action` from a decoded state:
// independent Bernoulli deliveries enumerated over the 2^K outcome subsets.
struct TransitionKernel {
  const JointMdp& mdp;
  std::vector<std::int64_t> aged_offset;  // aged[i] * stride[i], refreshed per state

  explicit TransitionKernel(const JointMdp& m)
      : mdp(m), aged_offset(m.scenario.clients.size()) {}

  std::int64_t refresh(const std::vector<std::int64_t>& elapsed) {
    std::int64_t base_next = 0;
    for (std::size_t i = 0; i < elapsed.size(); ++i) {
      const std::int64_t aged = std::min<std::int64_t>(elapsed[i] + 1, mdp.s_max);
      aged_offset[i] = aged * mdp.strides[i];
      base_next += aged_offset[i];
    }
    return base_next;
  }

  double expected_value(int action, std::int64_t base_next, const std::vector<double>& h) const {
    const auto& subset = mdp.actions[static_cast<std::size_t>(action)];
    const int k = static_cast<int>(subset.size());
    double q = 0.0;
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
      double prob = 1.0;
      std::int64_t next = base_next;
      for (int b = 0; b < k; ++b) {
        const int client = subset[static_cast<std::size_t>(b)];
        const double p = mdp.scenario.clients[static_cast<std::size_t>(client)].p;
        if (mask & (1u << b)) {
          prob *= p;
          next -= aged_offset[static_cast<std::size_t>(client)];
        } else {
          prob *= 1.0 - p;
        }
      }
      if (prob > 0.0) q += prob * h[static_cast<std::size_t>(next)];
    }
    return q;
  }
};

struct SweepResult {
  double span;
  double gain;
};

// One damped relative-value sweep. `choose` maps the per-action expected
// values to the backup value of the state (max, fixed action, average, ...).
template <typename Choose>
SweepResult rvi_sweep(const JointMdp& mdp, std::vector<double>& h, std::vector<double>& th,
                      Choose&& choose) {
  TransitionKernel kernel(mdp);
  std::vector<std::int64_t> elapsed(mdp.scenario.clients.size());
  SystemState state;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::int64_t idx = 0; idx < mdp.num_states; ++idx) {
    mdp.decode(idx, elapsed);
    state.elapsed = elapsed;
    const double r = instantaneous_reward(state, mdp.scenario);
    const std::int64_t base_next = kernel.refresh(elapsed);
    th[static_cast<std::size_t>(idx)] =
        r + choose(idx, [&](int a) { return kernel.expected_value(a, base_next, h); });
    const double d = th[static_cast<std::size_t>(idx)] - h[static_cast<std::size_t>(idx)];
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  const double shift = 0.5 * (h[0] + th[0]);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = 0.5 * (h[i] + th[i]) - shift;
  return {hi - lo, 0.5 * (lo + hi)};
}

template <typename Choose>
MdpSolution run_average(const JointMdp& mdp, double tol, std::int64_t max_iters, Choose&& choose) {
  MdpSolution sol;
  std::vector<double> h(static_cast<std::size_t>(mdp.num_states), 0.0);
  std::vector<double> th(h.size());
  for (std::int64_t it = 0; it < max_iters; ++it) {
    const SweepResult r = rvi_sweep(mdp, h, th, choose);
    sol.iterations = it + 1;
    sol.residual = r.span;
    sol.gain = r.gain;
    if (r.span < tol) {
      sol.value = std::move(h);
      return sol;
    }
  }
  std::ostringstream os;
  os << "solve_average: relative value iteration did not converge, span residual " << sol.residual
     << " after " << sol.iterations << " iterations";
  throw std::runtime_error(os.str());
}

}  // namespace

std::int64_t JointMdp::index_of(const std::vector<std::int64_t>& elapsed) const {
  std::int64_t idx = 0;
  for (std::size_t i = 0; i < elapsed.size(); ++i) idx += elapsed[i] * strides[i];
  return idx;
}

void JointMdp::decode(std::int64_t state, std::vector<std::int64_t>& elapsed) const {
  elapsed.resize(strides.size());
  for (std::size_t i = 0; i < strides.size(); ++i) {
    elapsed[i] = state / strides[i];
    state -= elapsed[i] * strides[i];
  }
}

int JointMdp::action_index(const std::vector<int>& subset) const {
  for (std::size_t a = 0; a < actions.size(); ++a)
    if (actions[a] == subset) return static_cast<int>(a);
  throw std::invalid_argument("action_index: subset is not a valid K-subset");
}

JointMdp make_joint_mdp(const Scenario& scenario, int s_max, double state_action_budget) {
  scenario.validate();
  if (s_max < 1) throw std::invalid_argument("s_max: must be >= 1");
  const int n = scenario.num_clients();
  double states = 1.0, subsets = 1.0;
  for (int i = 0; i < n; ++i) states *= static_cast<double>(s_max + 1);
  for (int i = 1; i <= scenario.channels; ++i)
    subsets = subsets * static_cast<double>(n - scenario.channels + i) / static_cast<double>(i);
  const double pairs = states * subsets;
  if (pairs > state_action_budget) {
    std::ostringstream os;
    os << "joint MDP needs " << pairs << " state-action pairs, over the budget of "
       << state_action_budget << "; shrink s_max or N";
    throw BudgetExceeded(os.str(), pairs);
  }

  JointMdp mdp;
  mdp.scenario = scenario;
  mdp.s_max = s_max;
  mdp.num_states = static_cast<std::int64_t>(std::llround(states));
  mdp.strides.assign(static_cast<std::size_t>(n), 1);
  for (int i = n - 2; i >= 0; --i)
    mdp.strides[static_cast<std::size_t>(i)] =
        mdp.strides[static_cast<std::size_t>(i + 1)] * (s_max + 1);
  mdp.actions = k_subsets(n, scenario.channels);
  return mdp;
}

MdpSolution solve_average(const JointMdp& mdp, double tol, std::int64_t max_iters) {
  const int num_actions = static_cast<int>(mdp.actions.size());
  MdpSolution sol = run_average(mdp, tol, max_iters, [&](std::int64_t, auto&& q) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < num_actions; ++a) best = std::max(best, q(a));
    return best;
  });
  // Final greedy pass; first maximizer wins, so ties go to the
  // lexicographically smallest subset.
  sol.policy.assign(static_cast<std::size_t>(mdp.num_states), 0);
  std::vector<double> th(sol.value.size());
  rvi_sweep(mdp, sol.value, th, [&](std::int64_t idx, auto&& q) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < num_actions; ++a) {
      const double v = q(a);
      if (v > best) {
        best = v;
        sol.policy[static_cast<std::size_t>(idx)] = a;
      }
    }
    return best;
  });
  return sol;
}

MdpSolution solve_discounted(const JointMdp& mdp, double beta, double tol,
                             std::int64_t max_iters) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta: must be in (0, 1)");
  MdpSolution sol;
  std::vector<double> v(static_cast<std::size_t>(mdp.num_states), 0.0);
  std::vector<double> nv(v.size());
  const int num_actions = static_cast<int>(mdp.actions.size());
  sol.policy.assign(v.size(), 0);
  TransitionKernel kernel(mdp);
  std::vector<std::int64_t> elapsed(mdp.scenario.clients.size());
  SystemState state;
  const double stop = tol * (1.0 - beta) / (2.0 * beta);
  for (std::int64_t it = 0; it < max_iters; ++it) {
    double diff = 0.0;
    for (std::int64_t idx = 0; idx < mdp.num_states; ++idx) {
      mdp.decode(idx, elapsed);
      state.elapsed = elapsed;
      const double r = instantaneous_reward(state, mdp.scenario);
      const std::int64_t base_next = kernel.refresh(elapsed);
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < num_actions; ++a) {
        const double q = r + beta * kernel.expected_value(a, base_next, v);
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      nv[static_cast<std::size_t>(idx)] = best;
      sol.policy[static_cast<std::size_t>(idx)] = best_a;
      diff = std::max(diff, std::abs(best - v[static_cast<std::size_t>(idx)]));
    }
    v.swap(nv);
    sol.iterations = it + 1;
    sol.residual = diff;
    if (diff < stop) {
      sol.value = std::move(v);
      return sol;
    }
  }
  std::ostringstream os;
  os << "solve_discounted: value iteration did not converge, residual " << sol.residual
     << " after " << sol.iterations << " iterations";
  throw std::runtime_error(os.str());
}

double evaluate_policy(const JointMdp& mdp, const std::vector<int>& policy, double tol) {
  if (static_cast<std::int64_t>(policy.size()) != mdp.num_states)
    throw std::invalid_argument("policy: must assign an action to every state");
  MdpSolution sol = run_average(mdp, tol, 1000000, [&](std::int64_t idx, auto&& q) {
    return q(policy[static_cast<std::size_t>(idx)]);
  });
  return sol.gain;
}

double evaluate_uniform_random(const JointMdp& mdp, double tol) {
  const int num_actions = static_cast<int>(mdp.actions.size());
  MdpSolution sol = run_average(mdp, tol, 1000000, [&](std::int64_t, auto&& q) {
    double sum = 0.0;
    for (int a = 0; a < num_actions; ++a) sum += q(a);
    return sum / static_cast<double>(num_actions);
  });
  return sol.gain;
}

double evaluate_rotating_policy(const JointMdp& mdp, const std::vector<int>& action_cycle,
                                double tol) {
  if (action_cycle.empty()) throw std::invalid_argument("action_cycle: must be non-empty");
  const std::int64_t phases = static_cast<std::int64_t>(action_cycle.size());
  const std::int64_t total = phases * mdp.num_states;
  std::vector<double> h(static_cast<std::size_t>(total), 0.0);
  std::vector<double> th(h.size());
  TransitionKernel kernel(mdp);
  std::vector<std::int64_t> elapsed(mdp.scenario.clients.size());
  SystemState state;

  double span = 0.0, gain = 0.0;
  const std::int64_t max_iters = 1000000;
  for (std::int64_t it = 0; it < max_iters; ++it) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::int64_t ph = 0; ph < phases; ++ph) {
      const std::int64_t next_base = ((ph + 1) % phases) * mdp.num_states;
      const int action = action_cycle[static_cast<std::size_t>(ph)];
      for (std::int64_t idx = 0; idx < mdp.num_states; ++idx) {
        mdp.decode(idx, elapsed);
        state.elapsed = elapsed;
        const double r = instantaneous_reward(state, mdp.scenario);
        const std::int64_t base_next = kernel.refresh(elapsed);

        const auto& subset = mdp.actions[static_cast<std::size_t>(action)];
        const int k = static_cast<int>(subset.size());
        double q = 0.0;
        for (unsigned mask = 0; mask < (1u << k); ++mask) {
          double prob = 1.0;
          std::int64_t next = base_next;
          for (int b = 0; b < k; ++b) {
            const int client = subset[static_cast<std::size_t>(b)];
            const double p = mdp.scenario.clients[static_cast<std::size_t>(client)].p;
            if (mask & (1u << b)) {
              prob *= p;
              next -= kernel.aged_offset[static_cast<std::size_t>(client)];
            } else {
              prob *= 1.0 - p;
            }
          }
          if (prob > 0.0) q += prob * h[static_cast<std::size_t>(next_base + next)];
        }
        const std::size_t flat = static_cast<std::size_t>(ph * mdp.num_states + idx);
        th[flat] = r + q;
        const double d = th[flat] - h[flat];
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
    }
    span = hi - lo;
    gain = 0.5 * (lo + hi);
    if (span < tol) return gain;
    const double shift = 0.5 * (h[0] + th[0]);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = 0.5 * (h[i] + th[i]) - shift;
  }
  std::ostringstream os;
  os << "evaluate_rotating_policy: did not converge, span residual " << span;
  throw std::runtime_error(os.str());
}

std::vector<int> round_robin_cycle(const JointMdp& mdp) {
  const int n = mdp.scenario.num_clients();
  const int k = mdp.scenario.channels;
  const int phases = n / std::gcd(n, k);
  std::vector<int> cycle;
  cycle.reserve(static_cast<std::size_t>(phases));
  for (int ph = 0; ph < phases; ++ph) {
    std::vector<int> subset;
    for (int m = 0; m < k; ++m) subset.push_back((ph * k + m) % n);
    std::sort(subset.begin(), subset.end());
    cycle.push_back(mdp.action_index(subset));
  }
  return cycle;
}

std::vector<int> policy_table_from(
    const JointMdp& mdp, const std::function<ScheduleDecision(const SystemState&)>& rule) {
  std::vector<int> policy(static_cast<std::size_t>(mdp.num_states));
  std::vector<std::int64_t> elapsed(mdp.scenario.clients.size());
  SystemState state;
  for (std::int64_t idx = 0; idx < mdp.num_states; ++idx) {
    mdp.decode(idx, elapsed);
    state.elapsed = elapsed;
    policy[static_cast<std::size_t>(idx)] = mdp.action_index(rule(state).active);
  }
  return policy;
}

}  // namespace regsched
