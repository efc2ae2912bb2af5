#pragma once

#include <cstdint>
#include <vector>

#include "regsched/model.hpp"
#include "regsched/rng.hpp"
#include "regsched/singlearm.hpp"

namespace regsched {

struct DiscountFactor {
  double beta;

  void validate() const;
};

// E[beta^X] for X ~ geometric(p) on {1, 2, ...}: p*beta / (1 - (1-p)*beta).
double geom_beta_mean(double p, double beta);

// E[X * beta^X]: p*beta / (1 - (1-p)*beta)^2.
double geom_beta_weighted(double p, double beta);

// Closed-form discounted index, transcribed as printed. Kept for comparison;
// the subsidy-MDP oracle is the source of truth and the verify report lists
// any deviation.
double discounted_index_closed_form(std::int64_t n, const ClientParams& client, double beta);

// Closed-form average-cost index:
// n*R*p*(n/2 + (1-p)/(1+p) + 1/2) + R*p*theta. Same caveat as above.
double avg_index_closed_form(std::int64_t n, const ClientParams& client);

enum class IndexSource { closed_form, renewal, oracle };

enum class TieRule { lowest_index, random_with_seed };

// Per-client index table over contiguous states 0..n_max, tagged with how
// the values were produced. Extended by copy, never mutated in place.
struct IndexTable {
  ClientParams client;
  ObjectiveMode mode = ObjectiveMode::average;
  double beta = 0.0;
  IndexSource source = IndexSource::renewal;
  std::vector<double> values;

  double at(std::int64_t n) const;
  std::int64_t n_max() const { return static_cast<std::int64_t>(values.size()) - 1; }
};

IndexTable make_index_table(const ClientParams& client, ObjectiveMode mode, IndexSource source,
                            double beta = 0.0, std::int64_t n_max = 512);

// Returns a table covering at least state n, doubling the range as needed.
IndexTable extended_to_cover(const IndexTable& table, std::int64_t n);

// Serves the K clients with the largest W_i(s_i). Tables are extended on
// demand (the vector entries are replaced with wider copies).
ScheduleDecision select_topk(const SystemState& state, std::vector<IndexTable>& tables, int k,
                             TieRule tie_rule = TieRule::lowest_index,
                             RandomStream* tie_rng = nullptr);

}  // namespace regsched
