#include "feemarket/uc_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace feemarket::uc {

namespace {

constexpr double kMaxTime = 1e6;  // cap on t before exponentiation

// Largest double strictly below 1; keeps bids inside [0, 1) when the
// exponential underflows.
inline double clamp_bid(double b) {
    return std::min(b, std::nextafter(1.0, 0.0));
}

inline double bid_rate(const MarketParams& p) {
    const double x = p.arrival_rate * p.capacity;
    return p.arrival_rate * std::exp(-x) / (-std::expm1(-x));
}

}  // namespace

double validation_probability(double s, const MarketParams& p) {
    p.validate();
    const double gap = std::max(p.capacity - s, 0.0);
    return -std::expm1(-p.arrival_rate * gap);
}

double equilibrium_bid(double t, const MarketParams& p) {
    p.validate();
    const double tc = std::clamp(t, -kMaxTime, kMaxTime);
    return clamp_bid(-std::expm1(-bid_rate(p) * tc));
}

double user_payoff(double t, const MarketParams& p) {
    return validation_probability(0.0, p) * (1.0 - equilibrium_bid(t, p));
}

double user_welfare(const MarketParams& p) {
    const double w = validation_probability(0.0, p);
    return w * w;
}

double miner_revenue_flow(double t, const MarketParams& p) {
    return validation_probability(0.0, p) * equilibrium_bid(t, p);
}

double miner_revenue(const MarketParams& p) {
    p.validate();
    const double e = std::exp(-p.arrival_rate * p.capacity);
    return e * (1.0 - e);
}

double stationary_cdf(double t, const MarketParams& p) {
    p.validate();
    if (t <= 0.0) return 0.0;
    return -std::expm1(-p.arrival_rate * t);
}

BidCurve sample_bid_curve(const MarketParams& p, double t_max, int n_points) {
    p.validate();
    if (!(t_max > 0.0)) throw Error(ErrorCode::bad_config, "t_max must be > 0");
    if (n_points < 2) throw Error(ErrorCode::bad_config, "n_points must be >= 2");
    BidCurve curve;
    curve.grid.reserve(static_cast<std::size_t>(n_points));
    curve.values.reserve(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        const double t = t_max * static_cast<double>(i) / (n_points - 1);
        curve.grid.push_back(t);
        curve.values.push_back(equilibrium_bid(t, p));
    }
    return curve;
}

}  // namespace feemarket::uc
