#include "regsched/index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace regsched {

namespace {

void check_domain(double p, double beta) {
  if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("p: must be in (0, 1]");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta: must be in (0, 1)");
}

double index_value(const ClientParams& client, ObjectiveMode mode, IndexSource source, double beta,
                   std::int64_t n) {
  switch (source) {
    case IndexSource::closed_form:
      return mode == ObjectiveMode::average ? avg_index_closed_form(n, client)
                                            : discounted_index_closed_form(n, client, beta);
    case IndexSource::renewal:
      if (mode != ObjectiveMode::average)
        throw std::invalid_argument("renewal index tables are average-mode only");
      return renewal_index(n, client);
    case IndexSource::oracle:
      return oracle_index(n, client, mode, beta, 1e-8, std::max<int>(200, static_cast<int>(n) + 32));
  }
  throw std::logic_error("unreachable index source");
}

}  // namespace

void DiscountFactor::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta: must be in (0, 1)");
}

double geom_beta_mean(double p, double beta) {
  check_domain(p, beta);
  return p * beta / (1.0 - (1.0 - p) * beta);
}

double geom_beta_weighted(double p, double beta) {
  check_domain(p, beta);
  const double d = 1.0 - (1.0 - p) * beta;
  return p * beta / (d * d);
}

double discounted_index_closed_form(std::int64_t n, const ClientParams& client, double beta) {
  if (n < 0) throw std::invalid_argument("n: must be >= 0");
  client.validate();
  check_domain(client.p, beta);
  const double p = client.p;
  const double x = geom_beta_mean(p, beta);
  const double y = geom_beta_weighted(p, beta);
  const double bn = std::pow(beta, static_cast<double>(n));
  const double one_m_beta = 1.0 - beta;
  const double nn = static_cast<double>(n);

  const double f1 = (1.0 - bn) / (one_m_beta * one_m_beta) *
                    ((1.0 - x) * (nn * one_m_beta + beta) - y * one_m_beta);
  const double f2 = (beta * (1.0 - bn) - bn * nn * one_m_beta) / (one_m_beta * one_m_beta) * (1.0 - x);
  const double f3 = (1.0 - x) / one_m_beta * (1.0 - bn * x);
  const double f4 = client.theta * (1.0 - x);
  const double f5 = 1.0 - bn * x - p * beta * (1.0 - bn) / one_m_beta * (1.0 - x);
  return client.weight * p * beta * (f1 - f2 - f3 + f4) / f5;
}

double avg_index_closed_form(std::int64_t n, const ClientParams& client) {
  if (n < 0) throw std::invalid_argument("n: must be >= 0");
  client.validate();
  const double p = client.p;
  const double nn = static_cast<double>(n);
  return nn * client.weight * p * (nn / 2.0 + (1.0 - p) / (1.0 + p) + 0.5) +
         client.weight * p * client.theta;
}

double IndexTable::at(std::int64_t n) const {
  if (n < 0 || n >= static_cast<std::int64_t>(values.size()))
    throw std::out_of_range("IndexTable: state outside table range");
  return values[static_cast<std::size_t>(n)];
}

IndexTable make_index_table(const ClientParams& client, ObjectiveMode mode, IndexSource source,
                            double beta, std::int64_t n_max) {
  if (n_max < 0) throw std::invalid_argument("n_max: must be >= 0");
  client.validate();
  IndexTable table{client, mode, beta, source, {}};
  table.values.reserve(static_cast<std::size_t>(n_max) + 1);
  for (std::int64_t n = 0; n <= n_max; ++n)
    table.values.push_back(index_value(client, mode, source, beta, n));
  return table;
}

IndexTable extended_to_cover(const IndexTable& table, std::int64_t n) {
  if (n <= table.n_max()) return table;
  IndexTable wider = table;
  std::int64_t target = std::max<std::int64_t>(2 * (table.n_max() + 1) - 1, n);
  for (std::int64_t m = table.n_max() + 1; m <= target; ++m)
    wider.values.push_back(index_value(wider.client, wider.mode, wider.source, wider.beta, m));
  return wider;
}

ScheduleDecision select_topk(const SystemState& state, std::vector<IndexTable>& tables, int k,
                             TieRule tie_rule, RandomStream* tie_rng) {
  const int n = static_cast<int>(state.elapsed.size());
  if (static_cast<int>(tables.size()) != n)
    throw std::invalid_argument("tables: one index table per client required");
  if (k < 1 || k > n) throw std::invalid_argument("k: must satisfy 1 <= k <= N");
  if (tie_rule == TieRule::random_with_seed && tie_rng == nullptr)
    throw std::invalid_argument("tie_rng: required for random tie rule");

  struct Entry {
    double value;
    std::uint64_t tie_key;
    int client;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& table = tables[static_cast<std::size_t>(i)];
    const std::int64_t s = state.elapsed[static_cast<std::size_t>(i)];
    if (s > table.n_max()) table = extended_to_cover(table, s);
    const std::uint64_t key =
        tie_rule == TieRule::random_with_seed ? tie_rng->next_u64() : static_cast<std::uint64_t>(i);
    entries.push_back({table.at(s), key, i});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.tie_key < b.tie_key;
  });
  ScheduleDecision decision;
  for (int i = 0; i < k; ++i) decision.active.push_back(entries[static_cast<std::size_t>(i)].client);
  std::sort(decision.active.begin(), decision.active.end());
  return decision;
}

}  // namespace regsched
