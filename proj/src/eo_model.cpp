#include "feemarket/eo_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "feemarket/numerics.hpp"
#include "feemarket/uc_model.hpp"

namespace feemarket::eo {

namespace {

constexpr double kMaxTime = 1e6;
constexpr double kThresholdEps = 1e-12;  // upper bracket margin below K

inline double clamp_bid(double b) {
    return std::min(b, std::nextafter(1.0, 0.0));
}

inline double uc_rate(const MarketParams& p) {
    const double x = p.arrival_rate * p.capacity;
    return p.arrival_rate * std::exp(-x) / (-std::expm1(-x));
}

// d/dtau log W(0, t* - tau): the integrand of the log-bid integral.
// Piecewise in tau with kinks at t* - K and t*.
double log_bid_slope(double tau, double tstar, const MarketParams& p) {
    const double lam = p.arrival_rate;
    const double K = p.capacity;
    const double eta = p.committed_share;
    if (tau > tstar) {
        return -lam * std::exp(-lam * K) / (-std::expm1(-lam * K));
    }
    if (tau + K < tstar) {
        const double x = eta * lam * K;
        return -eta * lam * std::exp(-x) / (-std::expm1(-x));
    }
    const double expo = -eta * lam * (tstar - tau) - lam * (K + tau - tstar);
    return -lam * std::exp(expo) / (-std::expm1(expo));
}

// Closed-form bid for committed_share = 0 and tstar in [0, K).
double bid_closed_form(double t, double tstar, const MarketParams& p) {
    const double lam = p.arrival_rate;
    const double K = p.capacity;
    const double num = -std::expm1(-lam * (K - tstar));
    if (t < tstar) {
        return clamp_bid(1.0 - num / (-std::expm1(-lam * (K + t - tstar))));
    }
    const double den = -std::expm1(-lam * K);
    return clamp_bid(1.0 - (num / den) * std::exp(-uc_rate(p) * (t - tstar)));
}

double bid_by_quadrature(double t, double tstar_lead, const MarketParams& p) {
    // tstar_lead is the finite threshold; integrate the log slope over [0, t]
    // (or [t, 0] for the analytic continuation below zero).
    const Tolerance qtol{1e-12, 1e-12, 200};
    const auto f = [&](double tau) { return log_bid_slope(tau, tstar_lead, p); };
    const std::vector<double> kinks{tstar_lead - p.capacity, tstar_lead};
    double log_term;
    if (t >= 0.0) {
        log_term = num::integrate(f, 0.0, t, qtol, kinks);
    } else {
        log_term = -num::integrate(f, t, 0.0, qtol, kinks);
    }
    return clamp_bid(-std::expm1(log_term));
}

}  // namespace

double validation_probability(double s, double lead, const MarketParams& p) {
    p.validate();
    const double lam = p.arrival_rate;
    const double K = p.capacity;
    const double eta = p.committed_share;
    if (s >= K) return 0.0;
    if (lead < 0.0) return -std::expm1(-lam * (K - s));
    if (K - s <= lead) return -std::expm1(-eta * lam * (K - s));
    return -std::expm1(-eta * lam * lead - lam * (K - s - lead));
}

double equilibrium_bid(double t, ThresholdTime tstar, const MarketParams& p) {
    p.validate();
    const double tc = std::clamp(t, -kMaxTime, kMaxTime);
    switch (tstar.kind) {
        case ThresholdTime::Kind::never_suspend:
            return uc::equilibrium_bid(tc, p);
        case ThresholdTime::Kind::never_operate: {
            if (p.committed_share == 0.0)
                throw Error(ErrorCode::domain,
                            "equilibrium_bid: no operating miners (eta = 0, never_operate)");
            // Only committed miners ever operate: the user-competition bid at
            // the committed arrival rate.
            MarketParams q = p;
            q.arrival_rate = p.committed_share * p.arrival_rate;
            q.committed_share = 1.0;
            return uc::equilibrium_bid(tc, q);
        }
        case ThresholdTime::Kind::finite:
            break;
    }
    const double ts = tstar.value;
    if (p.committed_share == 0.0) {
        if (!(ts < p.capacity))
            throw Error(ErrorCode::domain,
                        "equilibrium_bid: closed form requires threshold < capacity at eta = 0");
        return bid_closed_form(tc, ts, p);
    }
    return bid_by_quadrature(tc, ts, p);
}

double miner_surplus(double tstar, const MarketParams& p) {
    p.validate();
    if (!(tstar >= 0.0)) throw Error(ErrorCode::domain, "miner_surplus: tstar must be >= 0");
    const double lam = p.arrival_rate;
    const double K = p.capacity;
    if (p.committed_share == 0.0 && tstar <= K) {
        if (tstar == 0.0) return 0.0;
        const double a = -std::expm1(-lam * (K - tstar));  // 1 - e^{-lam (K - t*)}
        const double head = std::exp(-lam * (K - tstar)) * tstar;
        if (a == 0.0) return head;  // tstar == K limit: the log term vanishes
        const double b = -std::expm1(-lam * K);
        return head + (a / lam) * (std::log(a) - std::log(b));
    }
    const double lo = std::max(tstar - K, 0.0);
    const auto f = [&](double u) { return equilibrium_bid(u, ThresholdTime::finite(tstar), p); };
    return num::integrate(f, lo, tstar, Tolerance{1e-11, 1e-11, 200}, {});
}

double block_fee_income(double t, ThresholdTime tstar, const MarketParams& p) {
    p.validate();
    if (!(t >= 0.0)) throw Error(ErrorCode::domain, "block_fee_income: t must be >= 0");
    const double lo = std::max(t - p.capacity, 0.0);
    const auto f = [&](double u) { return equilibrium_bid(u, tstar, p); };
    std::vector<double> kinks;
    if (tstar.is_finite()) kinks.push_back(tstar.value);
    return num::integrate(f, lo, t, Tolerance{1e-11, 1e-11, 200}, kinks);
}

ThresholdTime equilibrium_threshold(const MarketParams& p) {
    p.validate();
    const double lam = p.arrival_rate;
    const double K = p.capacity;
    const double c = p.operating_cost;
    const double y = p.block_reward;
    if (lam * y > c) return ThresholdTime::never_suspend();
    if (lam * (K + y) <= c) return ThresholdTime::never_operate();

    const auto profit_gap = [&](double t) { return lam * (miner_surplus(t, p) + y) - c; };
    if (profit_gap(0.0) >= 0.0) return ThresholdTime::finite(0.0);

    double hi = K - kThresholdEps;
    if (p.committed_share > 0.0) {
        // M* keeps growing past K; extend the bracket geometrically.
        hi = K;
        while (profit_gap(hi) < 0.0) {
            hi *= 2.0;
            if (hi > 1e9)
                throw Error(ErrorCode::no_bracket, "equilibrium_threshold: no finite bracket");
        }
    } else if (profit_gap(hi) < 0.0) {
        // Root pinched within kThresholdEps of the capacity boundary.
        return ThresholdTime::finite(hi);
    }
    return ThresholdTime::finite(num::bisect(profit_gap, 0.0, hi, Tolerance{1e-12, 0.0, 200}));
}

double stationary_density(double t, double tstar, const MarketParams& p) {
    p.validate();
    if (!(tstar >= 0.0 && tstar < p.capacity))
        throw Error(ErrorCode::domain, "stationary_density: tstar must be in [0, K)");
    if (t < 0.0) return 0.0;
    const double lam = p.arrival_rate;
    const double level = lam / (1.0 + lam * tstar);
    if (t < tstar) return level;
    return level * std::exp(-lam * (t - tstar));
}

double stationary_cdf(double t, double tstar, const MarketParams& p) {
    p.validate();
    if (!(tstar >= 0.0 && tstar < p.capacity))
        throw Error(ErrorCode::domain, "stationary_cdf: tstar must be in [0, K)");
    if (t <= 0.0) return 0.0;
    const double lam = p.arrival_rate;
    const double norm = 1.0 + lam * tstar;
    if (t < tstar) return lam * t / norm;
    return (lam * tstar - std::expm1(-lam * (t - tstar))) / norm;
}

double social_welfare(double tstar, const MarketParams& p) {
    p.validate();
    if (!(tstar >= 0.0 && tstar <= p.capacity))
        throw Error(ErrorCode::domain, "social_welfare: tstar must be in [0, K]");
    const double lam = p.arrival_rate;
    return 1.0 - (std::exp(-lam * (p.capacity - tstar)) + p.operating_cost) /
                     (1.0 + lam * tstar);
}

double user_welfare(ThresholdTime tstar, const MarketParams& p) {
    p.validate();
    switch (tstar.kind) {
        case ThresholdTime::Kind::never_suspend:
            return uc::user_welfare(p);
        case ThresholdTime::Kind::never_operate:
            return 0.0;
        case ThresholdTime::Kind::finite:
            break;
    }
    const double ts = tstar.value;
    if (ts == 0.0) return uc::user_welfare(p);
    const double lam = p.arrival_rate;
    const auto f = [&](double t) {
        return validation_probability(0.0, ts - t, p) *
               (1.0 - equilibrium_bid(t, tstar, p)) * stationary_density(t, ts, p);
    };
    const double t_hi = ts + 60.0 / lam;  // tail mass beyond is ~e^{-60}
    return num::integrate(f, 0.0, t_hi, Tolerance{1e-10, 1e-10, 200}, {ts, ts + p.capacity});
}

ThresholdTime efficient_threshold(const MarketParams& p) {
    p.validate();
    const double lam = p.arrival_rate;
    const double K = p.capacity;
    const double c = p.operating_cost;
    if (lam * K <= c) return ThresholdTime::never_operate();
    if (c == 0.0) return ThresholdTime::finite(0.0);
    const auto foc = [&](double t) { return t * std::exp(-lam * (K - t)) - c / lam; };
    return ThresholdTime::finite(num::bisect(foc, 0.0, K, Tolerance{1e-12, 0.0, 200}));
}

double optimal_block_reward(const MarketParams& p) {
    p.validate();
    if (!(p.arrival_rate * p.capacity > p.operating_cost))
        throw Error(ErrorCode::domain,
                    "optimal_block_reward: requires lambda K > c (operation socially viable)");
    const ThresholdTime t_O = efficient_threshold(p);
    const double ts = t_O.value;
    return ts * std::exp(-p.arrival_rate * (p.capacity - ts)) - miner_surplus(ts, p);
}

namespace {

double sw_of_threshold(ThresholdTime t, const MarketParams& p) {
    switch (t.kind) {
        case ThresholdTime::Kind::never_suspend:
            return social_welfare(0.0, p);
        case ThresholdTime::Kind::never_operate:
            return 0.0;  // no validations, no operating cost
        case ThresholdTime::Kind::finite:
            return social_welfare(std::min(t.value, p.capacity), p);
    }
    return 0.0;
}

}  // namespace

WelfareReport solve(const MarketParams& p) {
    p.validate();
    WelfareReport r;
    r.t_E = equilibrium_threshold(p);
    r.t_O = efficient_threshold(p);
    if (p.arrival_rate * p.capacity > p.operating_cost)
        r.y_O = optimal_block_reward(p);
    r.sw_at_tE = sw_of_threshold(r.t_E, p);
    r.sw_at_tO = sw_of_threshold(r.t_O, p);
    r.user_welfare = user_welfare(r.t_E, p);
    r.miner_surplus_at_tE =
        r.t_E.is_finite() ? miner_surplus(r.t_E.value, p) : 0.0;
    return r;
}

const char* to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::arrival_rate: return "lambda";
        case SweepParameter::capacity: return "capacity";
        case SweepParameter::operating_cost: return "cost";
        case SweepParameter::block_reward: return "reward";
    }
    return "unknown";
}

SweepTable sweep(const MarketParams& base, SweepParameter parameter,
                 const std::vector<double>& grid, int threads) {
    base.validate();
    if (grid.empty()) throw Error(ErrorCode::bad_config, "sweep: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw Error(ErrorCode::bad_config, "sweep: grid must be strictly increasing");
    if (threads < 1) throw Error(ErrorCode::bad_config, "sweep: threads must be >= 1");

    SweepTable table;
    table.parameter = parameter;
    table.rows.resize(grid.size());

    const auto solve_row = [&](std::size_t i) {
        SweepRow& row = table.rows[i];
        row.parameter = grid[i];
        MarketParams p = base;
        switch (parameter) {
            case SweepParameter::arrival_rate: p.arrival_rate = grid[i]; break;
            case SweepParameter::capacity: p.capacity = grid[i]; break;
            case SweepParameter::operating_cost: p.operating_cost = grid[i]; break;
            case SweepParameter::block_reward: p.block_reward = grid[i]; break;
        }
        try {
            row.t_E = equilibrium_threshold(p);
            row.t_O = efficient_threshold(p);
            if (p.arrival_rate * p.capacity > p.operating_cost)
                row.y_O = optimal_block_reward(p);
            row.sw = sw_of_threshold(row.t_E, p);
            row.valid = true;
        } catch (const Error& e) {
            row.valid = false;
            row.error = e.what();
        }
    };

    if (threads == 1 || grid.size() < 2) {
        for (std::size_t i = 0; i < grid.size(); ++i) solve_row(i);
    } else {
        const int nt = std::min<int>(threads, static_cast<int>(grid.size()));
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nt));
        for (int k = 0; k < nt; ++k) {
            pool.emplace_back([&, k] {
                for (std::size_t i = static_cast<std::size_t>(k); i < grid.size();
                     i += static_cast<std::size_t>(nt))
                    solve_row(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    return table;
}

}  // namespace feemarket::eo
