#include "regsched/model.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace regsched {

void ClientParams::validate(const std::string& context) const {
  if (!(p > 0.0) || p > 1.0)
    throw std::invalid_argument(context + ".p: must be in (0, 1]");
  if (!(weight > 0.0))
    throw std::invalid_argument(context + ".R: must be > 0");
  if (!(theta >= 0.0))
    throw std::invalid_argument(context + ".theta: must be >= 0");
}

void Scenario::validate() const {
  if (clients.empty())
    throw std::invalid_argument("clients: must contain at least one client");
  for (std::size_t i = 0; i < clients.size(); ++i)
    clients[i].validate("clients[" + std::to_string(i) + "]");
  if (channels < 1 || channels > num_clients())
    throw std::invalid_argument("K: must satisfy 1 <= K <= N");
}

SystemState all_zeros_state(int num_clients) {
  return SystemState{std::vector<std::int64_t>(static_cast<std::size_t>(num_clients), 0)};
}

void validate_decision(const ScheduleDecision& decision, int num_clients, int channels) {
  if (static_cast<int>(decision.active.size()) != channels)
    throw std::invalid_argument("decision.active: must contain exactly K indices");
  for (std::size_t i = 0; i < decision.active.size(); ++i) {
    int c = decision.active[i];
    if (c < 0 || c >= num_clients)
      throw std::invalid_argument("decision.active: client index out of range");
    if (i > 0 && decision.active[i - 1] >= c)
      throw std::invalid_argument("decision.active: indices must be strictly ascending");
  }
}

SystemState step(const SystemState& state, const ScheduleDecision& decision,
                 const DeliveryOutcome& outcome) {
  for (int c : outcome.delivered) {
    if (!std::binary_search(decision.active.begin(), decision.active.end(), c))
      throw std::invalid_argument("outcome.delivered: not a subset of decision.active");
  }
  SystemState next = state;
  for (auto& s : next.elapsed) ++s;
  for (int c : outcome.delivered) next.elapsed[static_cast<std::size_t>(c)] = 0;
  return next;
}

std::pair<SystemState, DeliveryOutcome> sample_step(const SystemState& state,
                                                    const ScheduleDecision& decision,
                                                    const Scenario& scenario, RandomStream& rng) {
  validate_decision(decision, scenario.num_clients(), static_cast<int>(decision.active.size()));
  DeliveryOutcome outcome;
  // Ascending client-index order keeps draws reproducible.
  for (int c : decision.active) {
    if (rng.bernoulli(scenario.clients[static_cast<std::size_t>(c)].p))
      outcome.delivered.push_back(c);
  }
  return {step(state, decision, outcome), outcome};
}

double instantaneous_reward(const SystemState& state, const Scenario& scenario) {
  if (state.elapsed.size() != scenario.clients.size())
    throw std::invalid_argument("state: dimension does not match scenario");
  double r = 0.0;
  for (std::size_t i = 0; i < state.elapsed.size(); ++i) {
    const auto& c = scenario.clients[i];
    r += c.weight *
         (c.theta * (state.elapsed[i] == 0 ? 1.0 : 0.0) - static_cast<double>(state.elapsed[i]));
  }
  return r;
}

namespace {

double require_number(const nlohmann::json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key))
    throw std::invalid_argument(context + "." + key + ": missing");
  if (!j[key].is_number())
    throw std::invalid_argument(context + "." + key + ": expected a number");
  return j[key].get<double>();
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("scenario: invalid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw std::invalid_argument("scenario: expected a JSON object");
  if (!j.contains("clients") || !j["clients"].is_array())
    throw std::invalid_argument("clients: expected an array");

  Scenario sc;
  std::size_t i = 0;
  for (const auto& cj : j["clients"]) {
    std::string ctx = "clients[" + std::to_string(i) + "]";
    if (!cj.is_object())
      throw std::invalid_argument(ctx + ": expected an object");
    ClientParams c;
    c.p = require_number(cj, "p", ctx);
    c.weight = require_number(cj, "R", ctx);
    c.theta = require_number(cj, "theta", ctx);
    sc.clients.push_back(c);
    ++i;
  }
  if (!j.contains("K") || !j["K"].is_number_integer())
    throw std::invalid_argument("K: expected an integer");
  sc.channels = j["K"].get<int>();
  sc.validate();
  return sc;
}

std::string scenario_to_json_text(const Scenario& scenario) {
  nlohmann::json j;
  j["clients"] = nlohmann::json::array();
  for (const auto& c : scenario.clients)
    j["clients"].push_back({{"p", c.p}, {"R", c.weight}, {"theta", c.theta}});
  j["K"] = scenario.channels;
  return j.dump();
}

}  // namespace regsched
