// Endogenous-operation model: two-argument validation probability, equilibrium
// bid (closed form for a zero committed share, quadrature otherwise), miner
// surplus, equilibrium and efficient threshold times, stationary law, social
// welfare, the welfare-optimal block reward, and parameter sweeps.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "feemarket/types.hpp"

namespace feemarket::eo {

// Validation probability of a request offset by s when the miners start
// operating `lead` units of pool time from now (lead = t* - t). Three
// branches depending on whether the next K of capacity clears before or
// after the operation start; zero for s >= K. Reduces to the
// user-competition probability when lead < 0 or committed_share = 1.
double validation_probability(double s, double lead, const MarketParams& p);

// Equilibrium bid of a user at pool state t when the miner threshold is
// `tstar`. With committed_share = 0 this uses the closed form (threshold
// must lie in [0, K); otherwise ErrorCode::domain). With committed_share > 0
// the log-bid integral is evaluated by adaptive quadrature with breakpoints
// at t* - K and t*. never_suspend reduces to the user-competition bid.
// Negative t evaluates the analytic continuation (used by deviation scans).
double equilibrium_bid(double t, ThresholdTime tstar, const MarketParams& p);

// Total fees collected by a block produced exactly at the threshold time:
// M*(t*) = integral of the equilibrium bid over the validated window.
// Closed form for committed_share = 0 and tstar in [0, K]; quadrature of the
// bid otherwise. Increasing in tstar, strictly convex on [0, K] at eta = 0.
double miner_surplus(double tstar, const MarketParams& p);

// Fees collected by a block produced at pool state t under a FIXED bid curve
// with threshold tstar: integral of the bid over [max(t - K, 0), t]. This is
// the per-block fee income the simulator should reproduce.
double block_fee_income(double t, ThresholdTime tstar, const MarketParams& p);

// Equilibrium threshold time:
//   never_suspend  if lambda * y >  c
//   never_operate  if lambda * (K + y) <= c
//   finite root of lambda (M*(t) + y) = c otherwise (bisection; unique by
//   monotone M*). Returns finite(0) when operation is already profitable at 0.
ThresholdTime equilibrium_threshold(const MarketParams& p);

// Stationary density of the pool state for a threshold tstar in [0, K):
// constant lambda / (1 + lambda t*) below the threshold, exponential decay
// above. Uses the normalizing constant consistent with the boundary
// condition psi(0) = lambda (1 - Psi(t*)); integrates to one.
// Switching-miner dynamics (blocks only arrive past the threshold).
double stationary_density(double t, double tstar, const MarketParams& p);

// CDF matching stationary_density.
double stationary_cdf(double t, double tstar, const MarketParams& p);

// Stationary social welfare for a threshold tstar in [0, K]:
//   SW(t*) = 1 - (e^{-lambda (K - t*)} + c) / (1 + lambda t*).
double social_welfare(double tstar, const MarketParams& p);

// Stationary user welfare under threshold tstar: expectation of the flow
// user surplus W(0, t* - t)(1 - bid) under the stationary law (quadrature).
double user_welfare(ThresholdTime tstar, const MarketParams& p);

// Threshold maximizing social welfare: never_operate when lambda K <= c,
// else the unique root of t* e^{-lambda (K - t*)} = c / lambda in (0, K).
ThresholdTime efficient_threshold(const MarketParams& p);

// The block reward that makes the equilibrium threshold efficient:
//   y^O = t^O e^{-lambda (K - t^O)} - M*(t^O), always > 0.
// Throws ErrorCode::domain when lambda K <= c (no finite efficient threshold).
double optimal_block_reward(const MarketParams& p);

struct WelfareReport {
    ThresholdTime t_E;
    ThresholdTime t_O;
    std::optional<double> y_O;  // absent when lambda K <= c
    double sw_at_tE = 0.0;
    double sw_at_tO = 0.0;
    double user_welfare = 0.0;
    double miner_surplus_at_tE = 0.0;
};

// Solve every welfare quantity for one parameter set.
WelfareReport solve(const MarketParams& p);

enum class SweepParameter { arrival_rate, capacity, operating_cost, block_reward };

const char* to_string(SweepParameter p);

struct SweepRow {
    double parameter = 0.0;
    bool valid = false;
    std::string error;  // set when !valid
    ThresholdTime t_E;
    ThresholdTime t_O;
    std::optional<double> y_O;
    double sw = 0.0;  // social welfare at the equilibrium threshold
};

struct SweepTable {
    SweepParameter parameter;
    std::vector<SweepRow> rows;
};

// Per-point solves over a strictly increasing parameter grid. A failing row
// is marked invalid instead of aborting the sweep. Rows are independent and
// may be evaluated in parallel.
SweepTable sweep(const MarketParams& base, SweepParameter parameter,
                 const std::vector<double>& grid, int threads = 1);

}  // namespace feemarket::eo
