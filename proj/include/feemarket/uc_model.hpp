// User-competition model: closed forms for the always-operating-miner market.
// Validation probability, equilibrium bid, user payoff/welfare, miner revenue,
// and the stationary law of the pool state.
#pragma once

#include "feemarket/types.hpp"

namespace feemarket::uc {

// Probability that a request offset by mass s from the pool top is validated
// by the next block: 1 - exp(-lambda * max(K - s, 0)). Nonincreasing in s,
// zero for s >= K.
double validation_probability(double s, const MarketParams& p);

// Equilibrium bid of a user arriving at pool state t:
//   1 - exp(-r t),  r = lambda e^{-lambda K} / (1 - e^{-lambda K}).
// Strictly increasing and concave in t, decreasing in lambda and K.
// t is capped at 1e6; results are clamped strictly below 1. Negative t
// evaluates the same analytic expression (used by deviation scans).
double equilibrium_bid(double t, const MarketParams& p);

// Expected payoff of the user arriving at pool state t:
//   U(t) = (1 - e^{-lambda K}) (1 - bid(t)).
double user_payoff(double t, const MarketParams& p);

// Stationary user welfare (1 - e^{-lambda K})^2; depends on lambda, K only
// through the throughput lambda*K.
double user_welfare(const MarketParams& p);

// Expected payment of the user arriving at pool state t:
//   R(t) = (1 - e^{-lambda K}) bid(t);  R(t) + U(t) = 1 - e^{-lambda K}.
double miner_revenue_flow(double t, const MarketParams& p);

// Stationary flow of fees to miners, e^{-lambda K} (1 - e^{-lambda K});
// maximized at throughput log 2 with value 1/4.
double miner_revenue(const MarketParams& p);

// CDF of the stationary pool state, 1 - e^{-lambda t}.
double stationary_cdf(double t, const MarketParams& p);

// Sample the bid curve on a uniform grid over [0, t_max], for export.
BidCurve sample_bid_curve(const MarketParams& p, double t_max, int n_points);

}  // namespace feemarket::uc
