// Monte Carlo discrete-event simulator of the market: Poisson block arrivals,
// continuum user arrivals at unit rate discretized as dt-mass cells, greedy
// validation, threshold miner operation. Used as an independent oracle for
// every closed form.
#pragma once

#include <cstdint>
#include <vector>

#include "feemarket/types.hpp"

namespace feemarket::sim {

struct SimConfig {
    long n_blocks = 100000;  // total block events, burn-in included
    double dt = 1e-3;        // user-mass discretization step (<= K / 100)
    long burn_in = 100;      // blocks discarded before recording
    RandomSource rs;
    int threads = 1;      // recorded blocks are split over independent streams
    int hist_bins = 400;  // uniform bins on [0, hist_max], plus an overflow bin
    double hist_max = 0.0;  // 0 = pick from the stationary scale

    void validate(const MarketParams& p) const;
};

struct SimStats {
    // Pool-state occupancy histogram; edges has hist_bins+1 entries and mass
    // hist_bins+1 entries (the last is the overflow bin [last edge, inf)).
    // Mass sums to one.
    std::vector<double> hist_edges;
    std::vector<double> hist_mass;

    double user_welfare_hat = 0.0;
    double user_welfare_se = 0.0;
    double miner_revenue_hat = 0.0;  // fee flow per unit time
    double miner_revenue_se = 0.0;
    double miner_profit_flow_hat = 0.0;  // fees + rewards - operating cost, per unit time
    double miner_profit_flow_se = 0.0;
    double mean_block_fee_hat = 0.0;  // fee income per block
    double mean_block_fee_se = 0.0;

    double ks_distance = 0.0;  // max CDF deviation vs the analytic stationary law

    std::uint64_t seed = 0;  // seed echo
    std::uint64_t stream_id = 0;
    long n_blocks_recorded = 0;
    double total_time = 0.0;
};

// Simulate the always-operating-miner market; estimates converge to the
// user-competition closed forms.
SimStats simulate_uc(const MarketParams& p, const SimConfig& cfg);

// Simulate the endogenous-operation market under the given threshold. With
// committed_share = 0 the within-cycle arrival intensity is zero before the
// threshold (sampled as threshold + exponential, no thinning) and lambda
// after; with committed_share > 0 blocks also arrive before the threshold at
// the committed rate.
SimStats simulate_eo(const MarketParams& p, ThresholdTime tstar, const SimConfig& cfg);

// Validated cell window for a block arriving at pool state t: cells
// [begin, end) are validated, newest cells first by construction. A marginal
// cell is validated only when it fits entirely within capacity.
struct CellWindow {
    long begin = 0;
    long end = 0;
};
CellWindow block_validation_window(double t, double capacity, double dt);

// Deviation-payoff scan: tabulates s -> W(s, t* - t) * (1 - bid(t - s)) over
// s in [-t, K]. In equilibrium the payoff peaks at s = 0. Reported argmax
// breaks ties (within 1e-9) toward the smallest |s|; at committed_share = 0
// all reports below the threshold are payoff-equivalent, so the tie rule
// selects the on-path report from that plateau.
struct ScanResult {
    std::vector<double> s;
    std::vector<double> payoff;
    std::size_t argmax_index = 0;
    double argmax_s = 0.0;
};
ScanResult best_response_scan(double t, ThresholdTime tstar, const MarketParams& p,
                              int n_points);

}  // namespace feemarket::sim
