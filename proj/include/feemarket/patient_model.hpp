// Patient-user model: Monte Carlo estimation of the expected-discount
// function W~(s), verification of its delay ODE, the candidate equilibrium
// bid, and deviation-payoff scans.
#pragma once

#include <cstddef>
#include <vector>

#include "feemarket/types.hpp"

namespace feemarket::patient {

// Sampled estimate of W~(s) = E[e^{-rho T} | offset s] with per-point Monte
// Carlo standard errors. All grid points share the same simulated block-gap
// paths (common random numbers), which leaves per-point inference intact and
// sharpens finite differences across neighboring points.
struct DiscountCurve {
    std::vector<double> grid;       // increasing s values
    std::vector<double> estimate;   // W~(s) in [0, 1]
    std::vector<double> std_error;  // per-point MC standard errors
    long n_paths = 0;
};

// Renewal simulation. Per path: block gaps are exponential with the arrival
// rate; after each block the request's distance from the pool top drops by
// the capacity; the request is validated at the first block where the
// remaining distance fits within capacity, and the path records e^{-rho T}
// with T the cumulative time. Paths end at validation or after n_max_blocks
// arrivals (truncated paths contribute 0; the bias is bounded by
// (lambda / (rho + lambda))^n_max_blocks).
DiscountCurve estimate_wtilde(const MarketParams& p, const std::vector<double>& grid,
                              long n_paths, RandomSource rs, int n_max_blocks = 200);

// Linear interpolation of the curve estimate (clamped to the grid range).
double interpolate(const DiscountCurve& curve, double s);

// Central-difference residuals of the delay ODE
//   W~'(s) = (rho + lambda) W~(s) - lambda W~*(s - K),
//   W~*(x) = W~(x) for x >= 0, else 1,
// at interior grid points away from the kink abscissae s = nK. `noise` is the
// propagated MC noise floor per point assuming independent point errors.
struct OdeResidualReport {
    std::vector<double> s;
    std::vector<double> residual;
    std::vector<double> noise;
    double grid_step = 0.0;
    double kink_guard = 0.0;
    std::size_t n_pass_5sigma = 0;  // points with |residual| <= 5 * noise
    double pass_fraction = 0.0;
};

// Requires a uniform grid; throws ErrorCode::grid_too_coarse when the spacing
// exceeds K / 20 and ErrorCode::bad_config when kink_guard <= spacing.
OdeResidualReport wtilde_ode_residual(const DiscountCurve& curve, const MarketParams& p,
                                      double kink_guard);

// Candidate equilibrium bid 1 - e^{(W~'(0)/W~(0)) t}. W~'(0) is a symmetric
// central difference over the grid neighbors straddling zero (the ODE has no
// kink at s = 0), so the curve must be sampled densely there; callers wanting
// the reference step pass a grid with spacing K/200 around zero.
// Throws ErrorCode::insufficient_curve when the neighborhood of zero is
// missing, off-center, or too noisy to give a negative rate.
double patient_bid(double t, const DiscountCurve& curve);

// Deviation payoff W~(s) (1 - bid(t - s)) over s in [-t, s_max of the curve].
struct PatientScan {
    std::vector<double> s;
    std::vector<double> payoff;
    std::vector<double> payoff_se;  // curve-point noise propagated through the payoff
    std::size_t argmax_index = 0;
    double argmax_s = 0.0;
};
PatientScan patient_payoff_scan(double t, const DiscountCurve& curve, int n_points);

}  // namespace feemarket::patient
