#include "regsched/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "regsched/singlearm.hpp"

namespace regsched {

namespace {

// Stationarity gives x_i(lambda) in closed form for lambda above the
// per-client pole p_i * R_i * theta_i.
double rate_at(const ClientParams& c, double lambda) {
  const double denom = 2.0 * (lambda / c.p - c.weight * c.theta);
  return std::sqrt(c.weight / denom);
}

double capacity_usage(const Scenario& sc, double lambda) {
  double total = 0.0;
  for (const auto& c : sc.clients) total += rate_at(c, lambda) / c.p;
  return total;
}

}  // namespace

CapacityBoundResult capacity_bound(const Scenario& scenario) {
  scenario.validate();
  const double k = static_cast<double>(scenario.channels);

  double lambda_min = 0.0;
  for (const auto& c : scenario.clients)
    lambda_min = std::max(lambda_min, c.p * c.weight * c.theta);

  // Usage decreases from +inf (at the pole) to 0; bracket then bisect.
  double lo = lambda_min;
  double hi = lambda_min + 1.0;
  int guard = 0;
  while (capacity_usage(scenario, hi) > k && guard++ < 200) hi = lambda_min + (hi - lambda_min) * 2.0;
  if (capacity_usage(scenario, hi) > k)
    throw std::runtime_error("capacity_bound: multiplier bisection failed to bracket");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (capacity_usage(scenario, mid) > k)
      lo = mid;
    else
      hi = mid;
  }

  CapacityBoundResult result;
  result.multiplier = hi;  // feasible side of the bracket
  double bound = 0.0;
  double kkt = 0.0;
  for (const auto& c : scenario.clients) {
    const double x = rate_at(c, result.multiplier);
    result.rates.push_back(x);
    bound += c.weight * (c.theta * x - (1.0 / x - 1.0) / 2.0);
    kkt = std::max(kkt, std::abs(c.weight * (c.theta + 1.0 / (2.0 * x * x)) -
                                 result.multiplier / c.p));
  }
  result.bound = bound;
  result.kkt_residual = kkt;
  result.constraint_residual = std::abs(capacity_usage(scenario, result.multiplier) - k);
  return result;
}

int best_threshold(const ClientParams& client, double w) {
  const int cap = 10000;
  int best = 0;
  double best_gain = threshold_avg_reward(0, w, client);
  double prev = best_gain;
  int decreasing_run = 0;
  for (int t = 1; t <= cap; ++t) {
    const double g = threshold_avg_reward(t, w, client);
    if (g > best_gain) {
      best_gain = g;
      best = t;
    }
    decreasing_run = g < prev ? decreasing_run + 1 : 0;
    prev = g;
    if (decreasing_run >= 10) return best;
  }
  std::ostringstream os;
  os << "best_threshold: no decreasing run below the threshold cap (" << cap
     << ") at subsidy w=" << w;
  throw std::runtime_error(os.str());
}

double lagrangian_objective(const Scenario& scenario, double w) {
  double total = 0.0;
  for (const auto& c : scenario.clients)
    total += threshold_avg_reward(best_threshold(c, w), w, c);
  return total - w * static_cast<double>(scenario.num_clients() - scenario.channels);
}

LagrangianBoundResult lagrangian_bound(const Scenario& scenario, double w_range_hi, double tol) {
  scenario.validate();
  LagrangianBoundResult result;

  if (scenario.channels == scenario.num_clients()) {
    // No scheduling conflict: the relaxation degenerates to the sum of
    // unconstrained single-arm optima at zero subsidy.
    result.w_star = 0.0;
    result.bound = lagrangian_objective(scenario, 0.0);
    for (const auto& c : scenario.clients) result.thresholds.push_back(best_threshold(c, 0.0));
    return result;
  }

  double hi = w_range_hi;
  if (hi <= 0.0) {
    hi = 1.0;
    int guard = 0;
    while (lagrangian_objective(scenario, hi * 2.0) <= lagrangian_objective(scenario, hi) &&
           guard++ < 60)
      hi *= 2.0;
    hi *= 2.0;
  }

  // Golden-section refinement on the convex curve.
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = hi;
  double c1 = b - phi * (b - a), c2 = a + phi * (b - a);
  double f1 = lagrangian_objective(scenario, c1), f2 = lagrangian_objective(scenario, c2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - phi * (b - a);
      f1 = lagrangian_objective(scenario, c1);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + phi * (b - a);
      f2 = lagrangian_objective(scenario, c2);
    }
  }
  const double w0 = lagrangian_objective(scenario, 0.0);
  double w_star = 0.5 * (a + b);
  double bound = std::min(f1, f2);
  if (w0 <= bound) {
    w_star = 0.0;
    bound = w0;
  }
  result.w_star = w_star;
  result.bound = bound;
  for (const auto& c : scenario.clients) result.thresholds.push_back(best_threshold(c, w_star));
  return result;
}

}  // namespace regsched
