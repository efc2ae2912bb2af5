#include "regsched/singlearm.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace regsched {

namespace {

double base_reward(const ClientParams& c, int s) {
  return c.weight * (c.theta * (s == 0 ? 1.0 : 0.0) - static_cast<double>(s));
}

// Exact discounted evaluation of an arbitrary stationary policy on the
// single-arm chain. Every v(s) is affine in v(0); a backward sweep collects
// the coefficients and the fixed point closes the loop.
std::vector<double> evaluate_discounted_policy(const ClientParams& c, double w, double beta,
                                               const std::vector<std::uint8_t>& active) {
  const int S = static_cast<int>(active.size());
  std::vector<double> a(static_cast<std::size_t>(S)), b(static_cast<std::size_t>(S));
  const double p = c.p;
  {
    const int s = S - 1;
    const double r = base_reward(c, s);
    if (active[static_cast<std::size_t>(s)]) {
      const double denom = 1.0 - beta * (1.0 - p);
      a[static_cast<std::size_t>(s)] = r / denom;
      b[static_cast<std::size_t>(s)] = beta * p / denom;
    } else {
      a[static_cast<std::size_t>(s)] = (r + w) / (1.0 - beta);
      b[static_cast<std::size_t>(s)] = 0.0;
    }
  }
  for (int s = S - 2; s >= 0; --s) {
    const double r = base_reward(c, s);
    const std::size_t u = static_cast<std::size_t>(s);
    if (active[u]) {
      a[u] = r + beta * (1.0 - p) * a[u + 1];
      b[u] = beta * p + beta * (1.0 - p) * b[u + 1];
    } else {
      a[u] = r + w + beta * a[u + 1];
      b[u] = beta * b[u + 1];
    }
  }
  const double v0 = a[0] / (1.0 - b[0]);
  std::vector<double> v(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s)
    v[static_cast<std::size_t>(s)] = a[static_cast<std::size_t>(s)] + b[static_cast<std::size_t>(s)] * v0;
  return v;
}

ArmSolution solve_discounted(const SubsidyArm& arm, double tol) {
  const ClientParams& c = arm.client;
  const double beta = arm.beta;
  const double w = arm.subsidy;
  const int S = arm.s_max + 1;
  ArmSolution sol;
  sol.active.assign(static_cast<std::size_t>(S), 1);

  std::vector<double> v;
  const int max_pi_iters = 1000;
  for (int it = 0; it < max_pi_iters; ++it) {
    v = evaluate_discounted_policy(c, w, beta, sol.active);
    bool changed = false;
    for (int s = 0; s < S; ++s) {
      const int nxt = std::min(s + 1, arm.s_max);
      const double r = base_reward(c, s);
      const double qa = r + beta * (c.p * v[0] + (1.0 - c.p) * v[static_cast<std::size_t>(nxt)]);
      const double qp = r + w + beta * v[static_cast<std::size_t>(nxt)];
      const std::uint8_t na = qa > qp ? 1 : 0;  // ties resolve passive
      if (na != sol.active[static_cast<std::size_t>(s)]) {
        sol.active[static_cast<std::size_t>(s)] = na;
        changed = true;
      }
    }
    sol.iterations = it + 1;
    if (!changed) break;
  }
  double res = 0.0;
  for (int s = 0; s < S; ++s) {
    const int nxt = std::min(s + 1, arm.s_max);
    const double r = base_reward(c, s);
    const double qa = r + beta * (c.p * v[0] + (1.0 - c.p) * v[static_cast<std::size_t>(nxt)]);
    const double qp = r + w + beta * v[static_cast<std::size_t>(nxt)];
    res = std::max(res, std::abs(std::max(qa, qp) - v[static_cast<std::size_t>(s)]));
  }
  sol.residual = res;
  if (res > std::max(tol, 1e-9) * (1.0 + std::abs(v[0]))) {
    std::ostringstream os;
    os << "solve_arm: policy iteration did not converge, residual " << res << " after "
       << sol.iterations << " iterations";
    throw std::runtime_error(os.str());
  }
  sol.value = std::move(v);
  return sol;
}

ArmSolution solve_average(const SubsidyArm& arm, double tol, std::vector<double>* warm_start) {
  const ClientParams& c = arm.client;
  const double w = arm.subsidy;
  const int S = arm.s_max + 1;
  std::vector<double> h;
  if (warm_start != nullptr && static_cast<int>(warm_start->size()) == S)
    h = *warm_start;
  else
    h.assign(static_cast<std::size_t>(S), 0.0);
  std::vector<double> th(static_cast<std::size_t>(S));

  ArmSolution sol;
  const long max_iters = 1000000;
  double span = 0.0, lo = 0.0, hi = 0.0;
  long it = 0;
  for (; it < max_iters; ++it) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (int s = 0; s < S; ++s) {
      const int nxt = std::min(s + 1, arm.s_max);
      const double r = base_reward(c, s);
      const double qa = r + c.p * h[0] + (1.0 - c.p) * h[static_cast<std::size_t>(nxt)];
      const double qp = r + w + h[static_cast<std::size_t>(nxt)];
      th[static_cast<std::size_t>(s)] = std::max(qa, qp);
      const double d = th[static_cast<std::size_t>(s)] - h[static_cast<std::size_t>(s)];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    span = hi - lo;
    if (span < tol) break;
    // Damping keeps the iteration convergent on periodic chains (p = 1).
    const double shift = 0.5 * (h[0] + th[0]);
    for (int s = 0; s < S; ++s)
      h[static_cast<std::size_t>(s)] = 0.5 * (h[static_cast<std::size_t>(s)] + th[static_cast<std::size_t>(s)]) - shift;
  }
  if (span >= tol) {
    std::ostringstream os;
    os << "solve_arm: relative value iteration did not converge, span residual " << span
       << " after " << it << " iterations";
    throw std::runtime_error(os.str());
  }
  sol.gain = 0.5 * (lo + hi);
  sol.residual = span;
  sol.iterations = static_cast<int>(std::min<long>(it, INT32_MAX));
  sol.active.assign(static_cast<std::size_t>(S), 0);
  for (int s = 0; s < S; ++s) {
    const int nxt = std::min(s + 1, arm.s_max);
    const double r = base_reward(c, s);
    const double qa = r + c.p * h[0] + (1.0 - c.p) * h[static_cast<std::size_t>(nxt)];
    const double qp = r + w + h[static_cast<std::size_t>(nxt)];
    sol.active[static_cast<std::size_t>(s)] = qa > qp ? 1 : 0;
  }
  const double anchor = h[0];
  for (auto& x : h) x -= anchor;
  if (warm_start != nullptr) *warm_start = h;
  sol.value = std::move(h);
  return sol;
}

// Smallest active state, or nullopt if the active set is not an up-set on
// the scanned range.
std::optional<int> threshold_of(const std::vector<std::uint8_t>& active, int scan_limit) {
  int t = scan_limit;
  for (int s = 0; s < scan_limit; ++s) {
    if (active[static_cast<std::size_t>(s)]) {
      t = s;
      break;
    }
  }
  for (int s = t; s < scan_limit; ++s)
    if (!active[static_cast<std::size_t>(s)]) return std::nullopt;
  return t;
}

}  // namespace

void SubsidyArm::validate() const {
  client.validate();
  if (s_max < 2) throw std::invalid_argument("s_max: must be >= 2");
  if (mode == ObjectiveMode::discounted && !(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("beta: must be in (0, 1)");
}

double threshold_avg_reward(int threshold, double w, const ClientParams& client) {
  if (threshold < 0) throw std::invalid_argument("threshold: must be >= 0");
  client.validate();
  const double p = client.p;
  const double T = static_cast<double>(threshold);
  const double cycle_len = T + 1.0 / p;
  const double cycle_reward = T * w + client.weight * client.theta -
                              client.weight * T * (T - 1.0) / 2.0 -
                              client.weight * (T / p + (1.0 - p) / (p * p));
  return cycle_reward / cycle_len;
}

double threshold_discounted_value(int threshold, double w, const ClientParams& client, double beta,
                                  int start_state, int s_max) {
  if (threshold < 0 || start_state < 0)
    throw std::invalid_argument("threshold/start_state: must be >= 0");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta: must be in (0, 1)");
  client.validate();
  const int S = std::max(s_max, std::max(threshold, start_state) + 2) + 1;
  std::vector<std::uint8_t> active(static_cast<std::size_t>(S), 0);
  for (int s = threshold; s < S; ++s) active[static_cast<std::size_t>(s)] = 1;
  const std::vector<double> v = evaluate_discounted_policy(client, w, beta, active);
  return v[static_cast<std::size_t>(start_state)];
}

double renewal_index(std::int64_t n, const ClientParams& client) {
  if (n < 0) throw std::invalid_argument("n: must be >= 0");
  client.validate();
  const int T = static_cast<int>(n);
  // gain(T, w) is affine in w; two evaluations per threshold pin the line.
  const double g0 = threshold_avg_reward(T, 0.0, client);
  const double g1 = threshold_avg_reward(T, 1.0, client);
  const double h0 = threshold_avg_reward(T + 1, 0.0, client);
  const double h1 = threshold_avg_reward(T + 1, 1.0, client);
  const double slope = (g1 - g0) - (h1 - h0);
  return (h0 - g0) / slope;
}

ArmSolution solve_arm(const SubsidyArm& arm, double tol, std::vector<double>* warm_start) {
  arm.validate();
  if (arm.mode == ObjectiveMode::discounted) return solve_discounted(arm, tol);
  return solve_average(arm, tol, warm_start);
}

double oracle_index(std::int64_t n, const ClientParams& client, ObjectiveMode mode, double beta,
                    double tol, int s_max) {
  client.validate();
  if (n < 0 || n > s_max - 10)
    throw std::invalid_argument("n: must satisfy 0 <= n <= s_max - 10");

  std::vector<double> warm;
  auto passive_at = [&](double w) {
    SubsidyArm arm{client, w, mode, beta, s_max};
    const ArmSolution sol = solve_arm(arm, 1e-11, &warm);
    return sol.active[static_cast<std::size_t>(n)] == 0;
  };

  const double seed = renewal_index(n, client);
  double lo = std::max(0.0, seed * 0.5 - 1.0);
  double hi = seed * 2.0 + client.weight * (client.theta + static_cast<double>(s_max));

  if (passive_at(0.0)) return 0.0;  // degenerate arm, never worth playing
  int expansions = 0;
  while (lo > 0.0 && passive_at(lo) && expansions < 10) {
    lo = std::max(0.0, lo * 0.5 - 1.0);
    ++expansions;
  }
  if (passive_at(lo) && lo > 0.0) lo = 0.0;
  expansions = 0;
  while (!passive_at(hi) && expansions < 10) {
    hi = hi * 2.0 + 1.0;
    ++expansions;
  }
  if (!passive_at(hi)) {
    std::ostringstream os;
    os << "oracle_index: no passive/active flip in bracket [" << lo << ", " << hi
       << "] at state " << n << "; arm does not look threshold-indexable";
    throw std::runtime_error(os.str());
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (passive_at(mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

StructureReport verify_structure(const ClientParams& client, ObjectiveMode mode, double beta,
                                 const std::vector<double>& w_grid, std::int64_t n_max, int s_max,
                                 double identity_tol) {
  client.validate();
  if (w_grid.empty()) throw std::invalid_argument("w_grid: must be non-empty");
  if (n_max < 0 || n_max > s_max - 10)
    throw std::invalid_argument("n_max: must satisfy 0 <= n_max <= s_max - 10");

  StructureReport report;
  report.client = client;
  report.mode = mode;
  report.beta = beta;

  auto add = [&](std::string name, bool pass, std::string witness) {
    report.all_pass = report.all_pass && pass;
    report.checks.push_back({std::move(name), pass, pass ? std::string() : std::move(witness)});
  };

  // Truncation perturbs actions near the boundary; ignore the top states.
  const int margin = 10;
  const int scan_limit = s_max + 1 - margin;

  std::vector<double> sorted_w = w_grid;
  std::sort(sorted_w.begin(), sorted_w.end());

  std::vector<double> warm;
  std::vector<std::vector<std::uint8_t>> actions;
  actions.reserve(sorted_w.size());
  bool threshold_ok = true;
  std::string threshold_witness;
  for (double w : sorted_w) {
    SubsidyArm arm{client, w, mode, beta, s_max};
    ArmSolution sol = solve_arm(arm, 1e-11, &warm);
    if (threshold_ok && !threshold_of(sol.active, scan_limit).has_value()) {
      std::ostringstream os;
      os << "non-threshold optimal policy at w=" << w;
      threshold_witness = os.str();
      threshold_ok = false;
    }
    actions.push_back(std::move(sol.active));
  }
  add("threshold_policy_at_every_subsidy", threshold_ok, threshold_witness);

  bool monotone_ok = true;
  std::string monotone_witness;
  for (std::size_t k = 0; k + 1 < actions.size() && monotone_ok; ++k) {
    for (int s = 0; s < scan_limit; ++s) {
      const bool passive_lo = actions[k][static_cast<std::size_t>(s)] == 0;
      const bool passive_hi = actions[k + 1][static_cast<std::size_t>(s)] == 0;
      if (passive_lo && !passive_hi) {
        std::ostringstream os;
        os << "passive set shrank from w=" << sorted_w[k] << " to w=" << sorted_w[k + 1]
           << " at state " << s;
        monotone_witness = os.str();
        monotone_ok = false;
        break;
      }
    }
  }
  add("passive_set_monotone_in_subsidy", monotone_ok, monotone_witness);

  std::vector<double> indices(static_cast<std::size_t>(n_max + 1));
  for (std::int64_t n = 0; n <= n_max; ++n)
    indices[static_cast<std::size_t>(n)] = oracle_index(n, client, mode, beta, 1e-9, s_max);
  bool nondecreasing = true;
  std::string nd_witness;
  for (std::int64_t n = 0; n < n_max; ++n) {
    if (indices[static_cast<std::size_t>(n + 1)] < indices[static_cast<std::size_t>(n)] - 1e-7) {
      std::ostringstream os;
      os << "oracle index decreased: W(" << n << ")=" << indices[static_cast<std::size_t>(n)]
         << " > W(" << n + 1 << ")=" << indices[static_cast<std::size_t>(n + 1)];
      nd_witness = os.str();
      nondecreasing = false;
      break;
    }
  }
  add("oracle_index_nondecreasing", nondecreasing, nd_witness);

  if (mode == ObjectiveMode::discounted) {
    // At w = W(n), the flip subsidy must cancel the value gap between a
    // fresh state and the state just past the threshold.
    bool identity_ok = true;
    std::string id_witness;
    for (std::int64_t n = 0; n <= n_max; ++n) {
      const double wn = indices[static_cast<std::size_t>(n)];
      const int T = static_cast<int>(n);
      const double c_next = threshold_discounted_value(T, wn, client, beta, T + 1, s_max);
      const double c_zero = threshold_discounted_value(T, wn, client, beta, 0, s_max);
      const double residual = std::abs(wn + client.p * beta * (c_next - c_zero));
      if (residual > identity_tol) {
        std::ostringstream os;
        os << "index/value identity residual " << residual << " at n=" << n << " (w=" << wn << ")";
        id_witness = os.str();
        identity_ok = false;
        break;
      }
    }
    add("index_value_identity", identity_ok, id_witness);

    bool ordering_ok = true;
    std::string ord_witness;
    const double w_mid = indices[static_cast<std::size_t>(n_max / 2)];
    for (int T : {0, 2, 5}) {
      for (int i = T; i <= T + 4 && ordering_ok; ++i) {
        for (int j = i + 1; j <= T + 5; ++j) {
          const double ci = threshold_discounted_value(T, w_mid, client, beta, i, s_max);
          const double cj = threshold_discounted_value(T, w_mid, client, beta, j, s_max);
          if (!(cj < ci)) {
            std::ostringstream os;
            os << "value ordering violated at T=" << T << ": c_" << j << "=" << cj
               << " >= c_" << i << "=" << ci;
            ord_witness = os.str();
            ordering_ok = false;
            break;
          }
        }
      }
    }
    add("value_decreasing_above_threshold", ordering_ok, ord_witness);
  }

  return report;
}

std::string StructureReport::to_json_text() const {
  nlohmann::json j;
  j["client"] = {{"p", client.p}, {"R", client.weight}, {"theta", client.theta}};
  j["mode"] = mode == ObjectiveMode::average ? "average" : "discounted";
  if (mode == ObjectiveMode::discounted) j["beta"] = beta;
  j["all_pass"] = all_pass;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json cj{{"name", c.name}, {"pass", c.pass}};
    if (!c.pass) cj["witness"] = c.witness;
    j["checks"].push_back(cj);
  }
  return j.dump(2);
}

}  // namespace regsched
