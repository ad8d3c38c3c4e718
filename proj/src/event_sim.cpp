#include "feemarket/event_sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "feemarket/eo_model.hpp"
#include "feemarket/numerics.hpp"
#include "feemarket/uc_model.hpp"

namespace feemarket::sim {

namespace {

struct Mode {
    bool endogenous = false;
    ThresholdTime tstar = ThresholdTime::never_suspend();
};

// Lazily extended per-cell bid table with prefix sums. Cell j spans
// [j dt, (j+1) dt) and carries the analytic bid at its midpoint arrival time.
class BidTable {
public:
    BidTable(const MarketParams& p, const Mode& mode, double dt)
        : p_(p), mode_(mode), dt_(dt) {
        prefix_.push_back(0.0);
    }

    void ensure(long n_cells) {
        while (static_cast<long>(prefix_.size()) - 1 < n_cells) {
            const long j = static_cast<long>(prefix_.size()) - 1;
            const double t = (static_cast<double>(j) + 0.5) * dt_;
            const double bid = mode_.endogenous
                                   ? eo::equilibrium_bid(t, mode_.tstar, p_)
                                   : uc::equilibrium_bid(t, p_);
            prefix_.push_back(prefix_.back() + bid);
        }
    }

    // Sum of bids over cells [lo, hi), times dt.
    double fee_mass(long lo, long hi) {
        ensure(hi);
        return (prefix_[static_cast<std::size_t>(hi)] -
                prefix_[static_cast<std::size_t>(lo)]) * dt_;
    }

private:
    const MarketParams& p_;
    const Mode& mode_;
    double dt_;
    std::vector<double> prefix_;
};

struct Accum {
    long n = 0;  // recorded cycles
    double sum_g = 0.0, sum_gg = 0.0;
    double sum_P = 0.0, sum_PP = 0.0, sum_Pg = 0.0;     // user payoff mass
    double sum_F = 0.0, sum_FF = 0.0, sum_Fg = 0.0;     // fees per block
    double sum_Q = 0.0, sum_QQ = 0.0, sum_Qg = 0.0;     // profit per cycle
    std::vector<double> hist;                            // occupancy mass per bin

    void merge(const Accum& o) {
        n += o.n;
        sum_g += o.sum_g; sum_gg += o.sum_gg;
        sum_P += o.sum_P; sum_PP += o.sum_PP; sum_Pg += o.sum_Pg;
        sum_F += o.sum_F; sum_FF += o.sum_FF; sum_Fg += o.sum_Fg;
        sum_Q += o.sum_Q; sum_QQ += o.sum_QQ; sum_Qg += o.sum_Qg;
        if (hist.empty()) hist = o.hist;
        else for (std::size_t i = 0; i < hist.size(); ++i) hist[i] += o.hist[i];
    }
};

// Ratio-estimator standard error for sum_x / sum_g over iid cycles
// (delta method).
double ratio_se(double sum_x, double sum_xx, double sum_xg, double sum_g,
                double sum_gg, long n) {
    if (n < 2 || sum_g <= 0.0) return 0.0;
    const double r = sum_x / sum_g;
    const double ss = std::max(0.0, sum_xx - 2.0 * r * sum_xg + r * r * sum_gg);
    const double g_bar = sum_g / static_cast<double>(n);
    return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) / g_bar;
}

double mean_se(double sum_x, double sum_xx, long n) {
    if (n < 2) return 0.0;
    const double mean = sum_x / static_cast<double>(n);
    const double var =
        std::max(0.0, (sum_xx - static_cast<double>(n) * mean * mean) /
                          static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
}

double sample_gap(num::Pcg32& rng, const MarketParams& p, const Mode& mode) {
    const double lam = p.arrival_rate;
    const double eta = p.committed_share;
    if (!mode.endogenous || mode.tstar.kind == ThresholdTime::Kind::never_suspend)
        return num::sample_exponential(rng, lam);
    if (mode.tstar.kind == ThresholdTime::Kind::never_operate)
        return num::sample_exponential(rng, eta * lam);
    const double ts = mode.tstar.value;
    if (eta > 0.0) {
        const double early = num::sample_exponential(rng, eta * lam);
        if (early < ts) return early;
    }
    // No arrivals before the threshold; conditional exponential from there.
    return ts + num::sample_exponential(rng, lam);
}

double operating_time(double g, const MarketParams& p, const Mode& mode) {
    if (!mode.endogenous || mode.tstar.kind == ThresholdTime::Kind::never_suspend)
        return g;
    const double eta = p.committed_share;
    if (mode.tstar.kind == ThresholdTime::Kind::never_operate) return eta * g;
    return eta * g + (1.0 - eta) * std::max(g - mode.tstar.value, 0.0);
}

// Stationary CDF of the pool state under the simulated arrival intensity:
// survival of the reset process, normalized. Matches eo::stationary_cdf at
// committed_share = 0 and the exponential law in the always-operating case.
double analytic_cdf(double t, const MarketParams& p, const Mode& mode) {
    const double lam = p.arrival_rate;
    const double eta = p.committed_share;
    if (t <= 0.0) return 0.0;
    if (!mode.endogenous || mode.tstar.kind == ThresholdTime::Kind::never_suspend)
        return -std::expm1(-lam * t);
    if (mode.tstar.kind == ThresholdTime::Kind::never_operate)
        return -std::expm1(-eta * lam * t);
    const double ts = mode.tstar.value;
    // Density proportional to exp(-eta lam min(t, ts) - lam max(t - ts, 0)).
    const double head_mass =
        eta > 0.0 ? -std::expm1(-eta * lam * ts) / (eta * lam) : ts;
    const double tail_mass = std::exp(-eta * lam * ts) / lam;
    const double norm = head_mass + tail_mass;
    if (t < ts) {
        const double below =
            eta > 0.0 ? -std::expm1(-eta * lam * t) / (eta * lam) : t;
        return below / norm;
    }
    const double tail_part =
        std::exp(-eta * lam * ts) * (-std::expm1(-lam * (t - ts))) / lam;
    return (head_mass + tail_part) / norm;
}

void run_chunk(const MarketParams& p, const Mode& mode, const SimConfig& cfg,
               std::uint64_t stream_id, long record_blocks,
               const std::vector<double>& edges, Accum& acc) {
    num::Pcg32 rng(cfg.rs.seed, stream_id);
    BidTable bids(p, mode, cfg.dt);
    acc.hist.assign(edges.size(), 0.0);  // last slot = overflow past edges.back()

    const double K = p.capacity;
    const double y = p.block_reward;
    const double c = p.operating_cost;
    const long total = cfg.burn_in + record_blocks;

    for (long b = 0; b < total; ++b) {
        const double g = sample_gap(rng, p, mode);
        const bool record = b >= cfg.burn_in;
        if (!record) continue;

        const CellWindow w = block_validation_window(g, K, cfg.dt);
        const double validated_mass = static_cast<double>(w.end - w.begin) * cfg.dt;
        const double fee = bids.fee_mass(w.begin, w.end);
        const double payoff = validated_mass - fee;
        const double profit = fee + y - c * operating_time(g, p, mode);

        acc.n += 1;
        acc.sum_g += g; acc.sum_gg += g * g;
        acc.sum_P += payoff; acc.sum_PP += payoff * payoff; acc.sum_Pg += payoff * g;
        acc.sum_F += fee; acc.sum_FF += fee * fee; acc.sum_Fg += fee * g;
        acc.sum_Q += profit; acc.sum_QQ += profit * profit; acc.sum_Qg += profit * g;

        // Exact occupancy: the pool state sweeps [0, g) within the cycle.
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
            if (edges[i] >= g) break;
            acc.hist[i] += std::min(g, edges[i + 1]) - edges[i];
        }
        if (g > edges.back()) acc.hist[edges.size() - 1] += g - edges.back();
    }
}

SimStats run(const MarketParams& p, const Mode& mode, const SimConfig& cfg) {
    p.validate();
    cfg.validate(p);
    if (mode.endogenous) {
        if (mode.tstar.kind == ThresholdTime::Kind::never_operate &&
            p.committed_share == 0.0)
            throw Error(ErrorCode::domain, "simulate_eo: no miners ever operate");
        if (mode.tstar.is_finite() && p.committed_share == 0.0 &&
            !(mode.tstar.value < p.capacity))
            throw Error(ErrorCode::domain, "simulate_eo: threshold must be < capacity at eta = 0");
        if (mode.tstar.is_finite() && !(mode.tstar.value >= 0.0))
            throw Error(ErrorCode::domain, "simulate_eo: threshold must be >= 0");
    }

    double hist_max = cfg.hist_max;
    if (hist_max <= 0.0) {
        const double lam_eff =
            (mode.endogenous && mode.tstar.kind == ThresholdTime::Kind::never_operate)
                ? p.committed_share * p.arrival_rate
                : p.arrival_rate;
        hist_max = 15.0 / lam_eff;
        if (mode.endogenous && mode.tstar.is_finite()) hist_max += mode.tstar.value;
    }
    std::vector<double> edges(static_cast<std::size_t>(cfg.hist_bins) + 1);
    for (std::size_t i = 0; i < edges.size(); ++i)
        edges[i] = hist_max * static_cast<double>(i) / cfg.hist_bins;

    const long record_total = cfg.n_blocks - cfg.burn_in;
    const int nt = static_cast<int>(std::min<long>(cfg.threads, record_total));
    std::vector<Accum> parts(static_cast<std::size_t>(nt));
    if (nt <= 1) {
        run_chunk(p, mode, cfg, cfg.rs.stream_id, record_total, edges, parts[0]);
    } else {
        std::vector<std::thread> pool;
        long assigned = 0;
        for (int k = 0; k < nt; ++k) {
            const long share = record_total / nt + (k < record_total % nt ? 1 : 0);
            pool.emplace_back(run_chunk, std::cref(p), std::cref(mode), std::cref(cfg),
                              cfg.rs.stream_id + static_cast<std::uint64_t>(k), share,
                              std::cref(edges), std::ref(parts[static_cast<std::size_t>(k)]));
            assigned += share;
        }
        for (auto& th : pool) th.join();
        (void)assigned;
    }
    Accum acc = parts[0];
    for (int k = 1; k < nt; ++k) acc.merge(parts[static_cast<std::size_t>(k)]);

    SimStats st;
    st.seed = cfg.rs.seed;
    st.stream_id = cfg.rs.stream_id;
    st.n_blocks_recorded = acc.n;
    st.total_time = acc.sum_g;
    st.hist_edges = edges;
    st.hist_mass.assign(acc.hist.size(), 0.0);
    for (std::size_t i = 0; i < acc.hist.size(); ++i)
        st.hist_mass[i] = acc.hist[i] / acc.sum_g;

    st.user_welfare_hat = acc.sum_P / acc.sum_g;
    st.user_welfare_se = ratio_se(acc.sum_P, acc.sum_PP, acc.sum_Pg, acc.sum_g,
                                  acc.sum_gg, acc.n);
    st.miner_revenue_hat = acc.sum_F / acc.sum_g;
    st.miner_revenue_se = ratio_se(acc.sum_F, acc.sum_FF, acc.sum_Fg, acc.sum_g,
                                   acc.sum_gg, acc.n);
    st.miner_profit_flow_hat = acc.sum_Q / acc.sum_g;
    st.miner_profit_flow_se = ratio_se(acc.sum_Q, acc.sum_QQ, acc.sum_Qg, acc.sum_g,
                                       acc.sum_gg, acc.n);
    st.mean_block_fee_hat = acc.sum_F / static_cast<double>(acc.n);
    st.mean_block_fee_se = mean_se(acc.sum_F, acc.sum_FF, acc.n);

    double ks = 0.0;
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < st.hist_edges.size(); ++i) {
        cum += st.hist_mass[i];
        ks = std::max(ks, std::abs(cum - analytic_cdf(st.hist_edges[i + 1], p, mode)));
    }
    st.ks_distance = ks;

    for (double m : st.hist_mass)
        if (!std::isfinite(m)) throw Error(ErrorCode::bad_config, "simulate: non-finite histogram");
    return st;
}

}  // namespace

void SimConfig::validate(const MarketParams& p) const {
    if (n_blocks < 1) throw Error(ErrorCode::bad_config, "n_blocks must be >= 1");
    if (burn_in < 0) throw Error(ErrorCode::bad_config, "burn_in must be >= 0");
    if (n_blocks <= burn_in)
        throw Error(ErrorCode::bad_config, "n_blocks must exceed burn_in");
    if (!(dt > 0.0)) throw Error(ErrorCode::bad_config, "dt must be > 0");
    if (!(dt <= p.capacity / 100.0))
        throw Error(ErrorCode::bad_config, "dt must be <= capacity / 100");
    if (threads < 1) throw Error(ErrorCode::bad_config, "threads must be >= 1");
    if (hist_bins < 2) throw Error(ErrorCode::bad_config, "hist_bins must be >= 2");
}

CellWindow block_validation_window(double t, double capacity, double dt) {
    CellWindow w;
    w.end = static_cast<long>(std::floor(t / dt));
    const double lo = (t - capacity) / dt;
    w.begin = lo <= 0.0 ? 0 : static_cast<long>(std::ceil(lo));
    if (w.begin > w.end) w.begin = w.end;
    return w;
}

SimStats simulate_uc(const MarketParams& p, const SimConfig& cfg) {
    return run(p, Mode{false, ThresholdTime::never_suspend()}, cfg);
}

SimStats simulate_eo(const MarketParams& p, ThresholdTime tstar, const SimConfig& cfg) {
    return run(p, Mode{true, tstar}, cfg);
}

ScanResult best_response_scan(double t, ThresholdTime tstar, const MarketParams& p,
                              int n_points) {
    p.validate();
    if (!(t >= 0.0)) throw Error(ErrorCode::domain, "best_response_scan: t must be >= 0");
    if (n_points < 3) throw Error(ErrorCode::bad_config, "best_response_scan: n_points >= 3");

    constexpr double kTieTol = 1e-9;
    const double s_lo = -t;
    const double s_hi = p.capacity;

    double lead = 0.0;  // t* - t
    switch (tstar.kind) {
        case ThresholdTime::Kind::never_suspend:
            lead = -std::numeric_limits<double>::infinity();
            break;
        case ThresholdTime::Kind::never_operate:
            lead = std::numeric_limits<double>::infinity();
            break;
        case ThresholdTime::Kind::finite:
            lead = tstar.value - t;
            break;
    }

    ScanResult res;
    res.s.resize(static_cast<std::size_t>(n_points));
    res.payoff.resize(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        const double s = s_lo + (s_hi - s_lo) * static_cast<double>(i) / (n_points - 1);
        res.s[static_cast<std::size_t>(i)] = s;
        const double w = eo::validation_probability(s, lead, p);
        // Skip the bid when the validation probability is already zero; the
        // bid's analytic continuation is singular exactly there.
        res.payoff[static_cast<std::size_t>(i)] =
            w <= 0.0 ? 0.0 : w * (1.0 - eo::equilibrium_bid(t - s, tstar, p));
    }

    double best = -std::numeric_limits<double>::infinity();
    for (double v : res.payoff) best = std::max(best, v);
    std::size_t best_i = 0;
    double best_abs = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < res.s.size(); ++i) {
        if (res.payoff[i] >= best - kTieTol && std::abs(res.s[i]) < best_abs) {
            best_abs = std::abs(res.s[i]);
            best_i = i;
        }
    }
    res.argmax_index = best_i;
    res.argmax_s = res.s[best_i];
    return res;
}

}  // namespace feemarket::sim
