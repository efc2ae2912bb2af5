#include "regsched/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace regsched {

IndexPolicy::IndexPolicy(std::vector<IndexTable> tables, int channels, TieRule tie_rule)
    : tables_(std::move(tables)), channels_(channels), tie_rule_(tie_rule) {}

void IndexPolicy::begin_replication(RandomStream policy_stream) { tie_rng_ = policy_stream; }

ScheduleDecision IndexPolicy::decide(const SystemState& state) {
  return select_topk(state, tables_, channels_, tie_rule_,
                     tie_rule_ == TieRule::random_with_seed ? &tie_rng_ : nullptr);
}

TablePolicy::TablePolicy(JointMdp mdp, std::vector<int> action_per_state, std::string name)
    : mdp_(std::move(mdp)), action_per_state_(std::move(action_per_state)), name_(std::move(name)) {
  if (static_cast<std::int64_t>(action_per_state_.size()) != mdp_.num_states)
    throw std::invalid_argument("TablePolicy: table size does not match state space");
}

ScheduleDecision TablePolicy::decide(const SystemState& state) {
  std::vector<std::int64_t> clamped = state.elapsed;
  for (auto& s : clamped) s = std::min<std::int64_t>(s, mdp_.s_max);
  const int action = action_per_state_[static_cast<std::size_t>(mdp_.index_of(clamped))];
  return ScheduleDecision{mdp_.actions[static_cast<std::size_t>(action)]};
}

MaxElapsedPolicy::MaxElapsedPolicy(int channels, TieRule tie_rule)
    : channels_(channels), tie_rule_(tie_rule) {}

void MaxElapsedPolicy::begin_replication(RandomStream policy_stream) { tie_rng_ = policy_stream; }

ScheduleDecision MaxElapsedPolicy::decide(const SystemState& state) {
  struct Entry {
    std::int64_t elapsed;
    std::uint64_t tie_key;
    int client;
  };
  std::vector<Entry> entries;
  entries.reserve(state.elapsed.size());
  for (int i = 0; i < static_cast<int>(state.elapsed.size()); ++i) {
    const std::uint64_t key = tie_rule_ == TieRule::random_with_seed
                                  ? tie_rng_.next_u64()
                                  : static_cast<std::uint64_t>(i);
    entries.push_back({state.elapsed[static_cast<std::size_t>(i)], key, i});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.elapsed != b.elapsed) return a.elapsed > b.elapsed;
    return a.tie_key < b.tie_key;
  });
  ScheduleDecision decision;
  for (int i = 0; i < channels_; ++i)
    decision.active.push_back(entries[static_cast<std::size_t>(i)].client);
  std::sort(decision.active.begin(), decision.active.end());
  return decision;
}

ScheduleDecision RoundRobinPolicy::decide(const SystemState& state) {
  const int n = static_cast<int>(state.elapsed.size());
  ScheduleDecision decision;
  for (int m = 0; m < channels_; ++m) decision.active.push_back((pointer_ + m) % n);
  pointer_ = (pointer_ + channels_) % n;
  std::sort(decision.active.begin(), decision.active.end());
  return decision;
}

void RandomSubsetPolicy::begin_replication(RandomStream policy_stream) { rng_ = policy_stream; }

ScheduleDecision RandomSubsetPolicy::decide(const SystemState& state) {
  const int n = static_cast<int>(state.elapsed.size());
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  // Partial Fisher-Yates: the first K entries are a uniform K-subset.
  for (int i = 0; i < channels_; ++i) {
    const int j = i + static_cast<int>(rng_.next_u64() % static_cast<std::uint64_t>(n - i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  ScheduleDecision decision(
      {std::vector<int>(pool.begin(), pool.begin() + channels_)});
  std::sort(decision.active.begin(), decision.active.end());
  return decision;
}

namespace {

void merge_client(ClientStats& into, const ClientStats& from) {
  // Chan's parallel update; commutative up to floating-point rounding.
  const std::int64_t na = into.deliveries;
  const std::int64_t nb = from.deliveries;
  if (nb == 0) {
    into.final_elapsed = from.final_elapsed;
    return;
  }
  if (na == 0) {
    into = from;
    return;
  }
  const double delta = from.mean_interdelivery - into.mean_interdelivery;
  const double n = static_cast<double>(na + nb);
  into.mean_interdelivery += delta * static_cast<double>(nb) / n;
  into.m2 += from.m2 + delta * delta * static_cast<double>(na) * static_cast<double>(nb) / n;
  into.deliveries = na + nb;
  into.sum_dd1_half += from.sum_dd1_half;
  into.final_elapsed = from.final_elapsed;
}

}  // namespace

SimResult run(const Scenario& scenario, Policy& policy, const SimOptions& options) {
  scenario.validate();
  if (options.horizon < 1) throw std::invalid_argument("horizon: must be >= 1");
  if (options.replications < 1) throw std::invalid_argument("replications: must be >= 1");

  const int n = scenario.num_clients();
  SimResult result;
  result.clients.assign(static_cast<std::size_t>(n), ClientStats{});
  result.horizon = options.horizon;
  result.replications = options.replications;
  result.seed = options.seed;
  result.policy = policy.name();

  const std::int64_t warmup =
      static_cast<std::int64_t>(static_cast<double>(options.horizon) * options.warmup_frac);
  std::vector<double> warm_rewards;

  if (options.trace != nullptr) {
    auto& os = *options.trace;
    os << "rep,slot";
    for (int i = 0; i < n; ++i) os << ",s" << i;
    os << ",decision,delivered\n";
  }

  const RandomStream root(options.seed);
  for (int rep = 0; rep < options.replications; ++rep) {
    const RandomStream rep_stream = root.substream(static_cast<std::uint64_t>(rep));
    RandomStream channel_stream = rep_stream.substream(0);
    policy.begin_replication(rep_stream.substream(1));

    SystemState state = all_zeros_state(n);
    std::vector<ClientStats> stats(static_cast<std::size_t>(n));
    double reward_sum = 0.0;
    double reward_sum_warm = 0.0;

    for (std::int64_t t = 0; t < options.horizon; ++t) {
      const double r = instantaneous_reward(state, scenario);
      reward_sum += r;
      if (t >= warmup) reward_sum_warm += r;

      const ScheduleDecision decision = policy.decide(state);
      try {
        validate_decision(decision, n, scenario.channels);
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << "policy '" << policy.name() << "' returned an invalid decision at replication "
           << rep << ", slot " << t << ": " << e.what();
        throw std::runtime_error(os.str());
      }
      auto [next, outcome] = sample_step(state, decision, scenario, channel_stream);
      if (options.trace != nullptr) {
        auto& os = *options.trace;
        os << rep << ',' << t;
        for (auto s : state.elapsed) os << ',' << s;
        os << ",\"";
        for (std::size_t i = 0; i < decision.active.size(); ++i)
          os << (i ? " " : "") << decision.active[i];
        os << "\",\"";
        for (std::size_t i = 0; i < outcome.delivered.size(); ++i)
          os << (i ? " " : "") << outcome.delivered[i];
        os << "\"\n";
      }
      for (int c : outcome.delivered) {
        auto& cs = stats[static_cast<std::size_t>(c)];
        const double d = static_cast<double>(state.elapsed[static_cast<std::size_t>(c)] + 1);
        ++cs.deliveries;
        const double delta = d - cs.mean_interdelivery;
        cs.mean_interdelivery += delta / static_cast<double>(cs.deliveries);
        cs.m2 += delta * (d - cs.mean_interdelivery);
        cs.sum_dd1_half += d * (d - 1.0) / 2.0;
      }
      state = std::move(next);
    }
    for (int i = 0; i < n; ++i)
      stats[static_cast<std::size_t>(i)].final_elapsed = state.elapsed[static_cast<std::size_t>(i)];

    for (int i = 0; i < n; ++i)
      merge_client(result.clients[static_cast<std::size_t>(i)], stats[static_cast<std::size_t>(i)]);
    result.per_rep_reward.push_back(reward_sum / static_cast<double>(options.horizon));
    warm_rewards.push_back(reward_sum_warm / static_cast<double>(options.horizon - warmup));
  }

  for (auto& cs : result.clients) {
    if (cs.deliveries == 0) {
      cs.starved = true;
      cs.mean_interdelivery = std::numeric_limits<double>::infinity();
    }
  }

  auto mean_stderr = [](const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() < 2) return std::pair<double, double>{mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::pair<double, double>{mean, std::sqrt(ss / (n - 1.0) / n)};
  };
  std::tie(result.reward_avg, result.reward_stderr) = mean_stderr(result.per_rep_reward);
  std::tie(result.reward_avg_warm, result.reward_warm_stderr) = mean_stderr(warm_rewards);
  return result;
}

RewardEstimates reward_estimates(const SimResult& result, const Scenario& scenario) {
  RewardEstimates est;
  est.avg_instantaneous = result.reward_avg;
  const double t =
      static_cast<double>(result.horizon) * static_cast<double>(result.replications);
  for (std::size_t i = 0; i < result.clients.size(); ++i) {
    const auto& cs = result.clients[i];
    const auto& c = scenario.clients[i];
    if (cs.starved) {
      est.any_starved = true;
      est.counting_form -= c.weight * cs.sum_dd1_half / t;
      continue;
    }
    est.mean_var_form += c.weight * (c.theta / cs.mean_interdelivery - cs.variance());
    est.counting_form +=
        c.weight * (c.theta * static_cast<double>(cs.deliveries) / t - cs.sum_dd1_half / t);
  }
  return est;
}

double boundary_bound(const SimResult& result, const Scenario& scenario) {
  double bound = 0.0;
  const double t = static_cast<double>(result.horizon);
  for (std::size_t i = 0; i < result.clients.size(); ++i) {
    const double s = static_cast<double>(result.clients[i].final_elapsed);
    const auto& c = scenario.clients[i];
    bound += c.weight * (c.theta + s * (s + 1.0) / 2.0 + 1.0) / t;
  }
  return bound * static_cast<double>(result.replications);
}

std::string SimResult::to_json_text() const {
  nlohmann::json j;
  j["policy"] = policy;
  j["horizon"] = horizon;
  j["replications"] = replications;
  j["seed"] = seed;
  j["reward_avg"] = reward_avg;
  j["reward_stderr"] = reward_stderr;
  j["reward_avg_warm"] = reward_avg_warm;
  j["reward_warm_stderr"] = reward_warm_stderr;
  j["per_rep_reward"] = per_rep_reward;
  j["clients"] = nlohmann::json::array();
  for (const auto& cs : clients) {
    nlohmann::json cj;
    cj["deliveries"] = cs.deliveries;
    cj["starved"] = cs.starved;
    if (cs.starved)
      cj["mean_interdelivery"] = "inf";
    else
      cj["mean_interdelivery"] = cs.mean_interdelivery;
    cj["variance"] = cs.variance();
    cj["sum_dd1_half"] = cs.sum_dd1_half;
    cj["final_elapsed"] = cs.final_elapsed;
    j["clients"].push_back(cj);
  }
  return j.dump(2);
}

}  // namespace regsched
