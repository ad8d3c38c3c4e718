#include "feemarket/patient_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "feemarket/numerics.hpp"

namespace feemarket::patient {

namespace {

constexpr double kMaxTime = 1e6;

inline double clamp_bid(double b) {
    return std::min(b, std::nextafter(1.0, 0.0));
}

// Index of the last grid point <= x, assuming x within range.
std::size_t lower_index(const std::vector<double>& grid, double x) {
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - grid.begin()) - 1));
}

struct Interp {
    double value;
    double se;
};

Interp interpolate_with_se(const DiscountCurve& c, double x) {
    if (x <= c.grid.front()) return {c.estimate.front(), c.std_error.front()};
    if (x >= c.grid.back()) return {c.estimate.back(), c.std_error.back()};
    const std::size_t k = lower_index(c.grid, x);
    const double w = (x - c.grid[k]) / (c.grid[k + 1] - c.grid[k]);
    const double v = (1.0 - w) * c.estimate[k] + w * c.estimate[k + 1];
    const double se = std::hypot((1.0 - w) * c.std_error[k], w * c.std_error[k + 1]);
    return {v, se};
}

double bid_rate(const DiscountCurve& curve) {
    const auto& g = curve.grid;
    if (g.size() < 3)
        throw Error(ErrorCode::insufficient_curve, "patient_bid: need at least 3 grid points");
    std::size_t j0 = 0;
    for (std::size_t i = 1; i < g.size(); ++i)
        if (std::abs(g[i]) < std::abs(g[j0])) j0 = i;
    if (j0 == 0 || j0 + 1 >= g.size())
        throw Error(ErrorCode::insufficient_curve, "patient_bid: zero not interior to the grid");
    const double span = g[j0 + 1] - g[j0 - 1];
    if (!(g[j0 - 1] < 0.0 && g[j0 + 1] > 0.0) || std::abs(g[j0]) > 0.25 * span)
        throw Error(ErrorCode::insufficient_curve,
                    "patient_bid: grid not centered around s = 0");
    const double w0 = curve.estimate[j0];
    if (!(w0 > 0.0))
        throw Error(ErrorCode::insufficient_curve, "patient_bid: W~(0) estimate not positive");
    const double rate = (curve.estimate[j0 + 1] - curve.estimate[j0 - 1]) / span / w0;
    if (!(rate < 0.0))
        throw Error(ErrorCode::insufficient_curve,
                    "patient_bid: derivative estimate at 0 not negative");
    return rate;
}

}  // namespace

DiscountCurve estimate_wtilde(const MarketParams& p, const std::vector<double>& grid,
                              long n_paths, RandomSource rs, int n_max_blocks) {
    p.validate();
    if (grid.empty()) throw Error(ErrorCode::bad_config, "estimate_wtilde: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw Error(ErrorCode::bad_config, "estimate_wtilde: grid must be increasing");
    if (n_paths < 1) throw Error(ErrorCode::bad_config, "estimate_wtilde: n_paths must be >= 1");
    if (n_max_blocks < 1)
        throw Error(ErrorCode::bad_config, "estimate_wtilde: n_max_blocks must be >= 1");

    const std::size_t G = grid.size();
    const double lam = p.arrival_rate;
    const double rho = p.discount_rate;
    const double K = p.capacity;

    // Difference-array accumulation: a path validates the contiguous block of
    // grid points between the previous and the new running maximum of
    // A_n = nK - sum(gaps), all with the same discount weight.
    std::vector<double> dsum(G + 1, 0.0);
    std::vector<double> dsum2(G + 1, 0.0);

    num::Pcg32 rng(rs);
    for (long path = 0; path < n_paths; ++path) {
        double elapsed = 0.0;
        std::size_t gi = 0;
        double run_max = -std::numeric_limits<double>::infinity();
        for (int n = 1; n <= n_max_blocks && gi < G; ++n) {
            elapsed += num::sample_exponential(rng, lam);
            const double reach = static_cast<double>(n) * K - elapsed;
            if (reach <= run_max) continue;
            run_max = reach;
            std::size_t gi_new = gi;
            while (gi_new < G && grid[gi_new] <= run_max) ++gi_new;
            if (gi_new > gi) {
                const double w = std::exp(-rho * elapsed);
                dsum[gi] += w;
                dsum[gi_new] -= w;
                dsum2[gi] += w * w;
                dsum2[gi_new] -= w * w;
                gi = gi_new;
            }
        }
        // Points never reached contribute 0 for this path.
    }

    DiscountCurve curve;
    curve.grid = grid;
    curve.estimate.resize(G);
    curve.std_error.resize(G);
    curve.n_paths = n_paths;
    const double n = static_cast<double>(n_paths);
    double sum = 0.0;
    double sum2 = 0.0;
    for (std::size_t i = 0; i < G; ++i) {
        sum += dsum[i];
        sum2 += dsum2[i];
        const double mean = sum / n;
        curve.estimate[i] = mean;
        if (n_paths > 1) {
            const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
            curve.std_error[i] = std::sqrt(var / n);
        } else {
            curve.std_error[i] = 0.0;
        }
    }
    return curve;
}

double interpolate(const DiscountCurve& curve, double s) {
    if (curve.grid.empty()) throw Error(ErrorCode::insufficient_curve, "empty curve");
    return interpolate_with_se(curve, s).value;
}

OdeResidualReport wtilde_ode_residual(const DiscountCurve& curve, const MarketParams& p,
                                      double kink_guard) {
    p.validate();
    const auto& g = curve.grid;
    if (g.size() < 3)
        throw Error(ErrorCode::bad_config, "wtilde_ode_residual: need at least 3 points");
    const double h = g[1] - g[0];
    for (std::size_t i = 1; i < g.size(); ++i)
        if (std::abs((g[i] - g[i - 1]) - h) > 1e-6 * std::max(1.0, std::abs(h)))
            throw Error(ErrorCode::bad_config, "wtilde_ode_residual: grid must be uniform");
    const double K = p.capacity;
    if (h > K / 20.0)
        throw Error(ErrorCode::grid_too_coarse,
                    "wtilde_ode_residual: grid spacing exceeds capacity / 20");
    if (!(kink_guard > h))
        throw Error(ErrorCode::bad_config, "wtilde_ode_residual: kink_guard must exceed spacing");

    const double lam = p.arrival_rate;
    const double rho = p.discount_rate;

    OdeResidualReport rep;
    rep.grid_step = h;
    rep.kink_guard = kink_guard;
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        const double s = g[i];
        const double nearest_kink = K * std::round(s / K);
        if (std::abs(s - nearest_kink) < kink_guard) continue;

        const double x = s - K;  // delayed abscissa
        Interp delayed{1.0, 0.0};
        if (x >= 0.0) {
            if (x > g.back()) continue;  // delayed value not covered by the curve
            delayed = interpolate_with_se(curve, x);
        }
        const double deriv = (curve.estimate[i + 1] - curve.estimate[i - 1]) / (2.0 * h);
        const double residual = deriv - (rho + lam) * curve.estimate[i] + lam * delayed.value;
        const double noise = std::sqrt(
            (curve.std_error[i + 1] * curve.std_error[i + 1] +
             curve.std_error[i - 1] * curve.std_error[i - 1]) / (4.0 * h * h) +
            std::pow((rho + lam) * curve.std_error[i], 2) +
            std::pow(lam * delayed.se, 2));
        rep.s.push_back(s);
        rep.residual.push_back(residual);
        rep.noise.push_back(noise);
        if (std::abs(residual) <= 5.0 * noise) ++rep.n_pass_5sigma;
    }
    rep.pass_fraction =
        rep.s.empty() ? 0.0
                      : static_cast<double>(rep.n_pass_5sigma) / static_cast<double>(rep.s.size());
    return rep;
}

double patient_bid(double t, const DiscountCurve& curve) {
    const double rate = bid_rate(curve);
    const double tc = std::clamp(t, -kMaxTime, kMaxTime);
    return clamp_bid(-std::expm1(rate * tc));
}

PatientScan patient_payoff_scan(double t, const DiscountCurve& curve, int n_points) {
    if (!(t >= 0.0)) throw Error(ErrorCode::domain, "patient_payoff_scan: t must be >= 0");
    if (n_points < 3)
        throw Error(ErrorCode::bad_config, "patient_payoff_scan: n_points must be >= 3");
    if (curve.grid.empty() || curve.grid.front() > -t)
        throw Error(ErrorCode::insufficient_curve,
                    "patient_payoff_scan: curve does not span [-t, s_max]");
    const double rate = bid_rate(curve);

    const double s_lo = -t;
    const double s_hi = curve.grid.back();
    PatientScan scan;
    scan.s.resize(static_cast<std::size_t>(n_points));
    scan.payoff.resize(static_cast<std::size_t>(n_points));
    scan.payoff_se.resize(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        const double s = s_lo + (s_hi - s_lo) * static_cast<double>(i) / (n_points - 1);
        const Interp w = interpolate_with_se(curve, s);
        const double x = std::clamp(t - s, -kMaxTime, kMaxTime);
        const double one_minus_bid = std::exp(rate * x);
        scan.s[static_cast<std::size_t>(i)] = s;
        scan.payoff[static_cast<std::size_t>(i)] = w.value * one_minus_bid;
        scan.payoff_se[static_cast<std::size_t>(i)] = w.se * one_minus_bid;
    }

    double best = -std::numeric_limits<double>::infinity();
    for (double v : scan.payoff) best = std::max(best, v);
    std::size_t best_i = 0;
    double best_abs = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < scan.s.size(); ++i) {
        if (scan.payoff[i] >= best - 1e-12 && std::abs(scan.s[i]) < best_abs) {
            best_abs = std::abs(scan.s[i]);
            best_i = i;
        }
    }
    scan.argmax_index = best_i;
    scan.argmax_s = scan.s[best_i];
    return scan;
}

}  // namespace feemarket::patient
