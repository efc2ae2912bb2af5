#pragma once

#include <vector>

#include "regsched/model.hpp"

namespace regsched {

struct CapacityBoundResult {
  double bound = 0.0;
  std::vector<double> rates;  // optimal per-client delivery rates x_i = 1/mean(D_i)
  double multiplier = 0.0;    // capacity constraint Lagrange multiplier
  double kkt_residual = 0.0;
  double constraint_residual = 0.0;
};

// Jensen relaxation of the average reward: maximize
//   sum_i R_i * (theta_i * x_i - (1/x_i - 1)/2)
// over x_i > 0 subject to sum_i x_i / p_i <= K. The per-slot state penalty
// over a renewal cycle of length D sums to D(D-1)/2, and Jensen bounds its
// time average below by (1/x - 1)/2, so this is an upper bound on the gain
// of any policy. The objective is increasing in every x_i, so the capacity
// constraint binds and the KKT multiplier is found by bisection.
CapacityBoundResult capacity_bound(const Scenario& scenario);

struct LagrangianBoundResult {
  double bound = 0.0;
  double w_star = 0.0;
  std::vector<int> thresholds;  // per-client optimal thresholds at w_star
};

// Best single-arm threshold gain under subsidy w; cutoff once the gain has
// decreased for 10 consecutive thresholds (capped at 10^4).
int best_threshold(const ClientParams& client, double w);

// sum_i max_T gain_i(T, w) - w * (N - K); the relaxed objective whose
// infimum over w >= 0 upper-bounds the constrained optimum.
double lagrangian_objective(const Scenario& scenario, double w);

// Minimizes the relaxed objective over w >= 0. The curve is convex and
// piecewise affine, so bracketing plus golden-section refinement pins the
// minimum; w_range_hi <= 0 requests automatic bracketing.
LagrangianBoundResult lagrangian_bound(const Scenario& scenario, double w_range_hi = -1.0,
                                       double tol = 1e-9);

}  // namespace regsched
