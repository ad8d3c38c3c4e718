// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each criterion carries its tolerance and runtime budget.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "feemarket/eo_model.hpp"
#include "feemarket/event_sim.hpp"
#include "feemarket/numerics.hpp"
#include "feemarket/patient_model.hpp"
#include "feemarket/uc_model.hpp"

using feemarket::MarketParams;
using feemarket::ThresholdTime;
using feemarket::Tolerance;
namespace eo = feemarket::eo;
namespace uc = feemarket::uc;
namespace sim = feemarket::sim;
namespace pat = feemarket::patient;
namespace num = feemarket::num;

namespace {

struct Check {
    std::vector<std::string> failures;

    void require(bool cond, const std::string& what) {
        if (!cond) failures.push_back(what);
    }
};

MarketParams figure_params() {
    MarketParams p;
    p.arrival_rate = 1.2;
    p.capacity = 1.0;
    p.operating_cost = 0.3;
    p.block_reward = 0.0;
    p.committed_share = 0.0;
    return p;
}

double surplus_by_quadrature(double ts, const MarketParams& p) {
    const auto bid = [&](double u) {
        return eo::equilibrium_bid(u, ThresholdTime::finite(ts), p);
    };
    return num::integrate(bid, std::max(ts - p.capacity, 0.0), ts,
                          Tolerance{1e-11, 1e-11, 200}, {});
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// --------------------------------------------------------------- criteria

void criterion_equilibrium_threshold(Check& c) {
    const auto p = figure_params();
    const auto t_E = eo::equilibrium_threshold(p);
    c.require(t_E.is_finite(), "equilibrium threshold should be finite");
    if (!t_E.is_finite()) return;
    c.require(std::abs(t_E.value - 0.676) <= 0.005,
              "t_E = " + fmt(t_E.value) + " not within 0.676 +- 0.005");

    // Independent route: bisection on the quadrature surplus.
    const auto gap = [&](double t) {
        return p.arrival_rate * surplus_by_quadrature(t, p) - p.operating_cost;
    };
    const double t_quad = num::bisect(gap, 0.0, p.capacity - 1e-9, Tolerance{1e-12, 0.0, 200});
    c.require(std::abs(t_E.value - t_quad) <= 1e-6,
              "closed-form and quadrature threshold differ by " +
                  fmt(std::abs(t_E.value - t_quad)));
}

void criterion_efficient_threshold_and_reward(Check& c) {
    const auto p = figure_params();
    const auto t_O = eo::efficient_threshold(p);
    c.require(t_O.is_finite(), "efficient threshold should be finite");
    if (!t_O.is_finite()) return;
    c.require(std::abs(t_O.value - 0.4714) <= 0.002,
              "t_O = " + fmt(t_O.value) + " not within 0.4714 +- 0.002");

    const double y_O = eo::optimal_block_reward(p);
    c.require(std::abs(y_O - 0.1555) <= 0.003,
              "y_O = " + fmt(y_O) + " not within 0.1555 +- 0.003");

    auto rewarded = p;
    rewarded.block_reward = y_O;
    const auto t_back = eo::equilibrium_threshold(rewarded);
    c.require(t_back.is_finite(), "t_E(y_O) should be finite");
    if (t_back.is_finite())
        c.require(std::abs(t_back.value - t_O.value) <= 1e-6,
                  "round trip |t_E(y_O) - t_O| = " +
                      fmt(std::abs(t_back.value - t_O.value)) + " > 1e-6");
}

void criterion_welfare_dominance(Check& c) {
    const auto p = figure_params();
    const auto t_O = eo::efficient_threshold(p);
    const auto t_E = eo::equilibrium_threshold(p);
    c.require(t_O.is_finite() && t_E.is_finite(), "thresholds should be finite");
    if (!(t_O.is_finite() && t_E.is_finite())) return;
    const double sw_opt = eo::social_welfare(t_O.value, p);
    const double sw_eq = eo::social_welfare(t_E.value, p);
    c.require(sw_opt > sw_eq, "SW(t_O) should exceed SW(t_E(0))");
    c.require(eo::optimal_block_reward(p) > 0.0, "y_O should be positive");
    for (int i = 0; i <= 200; ++i) {
        const double t = p.capacity * i / 200.0;
        if (!(sw_opt >= eo::social_welfare(t, p) - 1e-12)) {
            c.require(false, "SW(t_O) not maximal on the 200-point grid at t = " + fmt(t));
            return;
        }
    }
}

int sign_changes(const std::vector<double>& values, double dead_band) {
    int changes = 0, prev = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double d = values[i] - values[i - 1];
        if (std::abs(d) <= dead_band) continue;
        const int s = d > 0 ? 1 : -1;
        if (prev != 0 && s != prev) ++changes;
        prev = s;
    }
    return changes;
}

void criterion_lambda_nonmonotonicity(Check& c) {
    auto p = figure_params();
    std::vector<double> grid;
    for (int i = 0; i < 100; ++i) grid.push_back(0.35 + (5.0 - 0.35) * i / 99.0);

    const auto at_zero = eo::sweep(p, eo::SweepParameter::arrival_rate, grid, 4);
    std::vector<double> te0;
    for (const auto& row : at_zero.rows) {
        c.require(row.valid && row.t_E.is_finite(), "sweep row should be valid and finite");
        if (!(row.valid && row.t_E.is_finite())) return;
        te0.push_back(row.t_E.value);
    }
    c.require(sign_changes(te0, 1e-6) >= 1,
              "t_E(lambda) at y = 0 should be decreasing then increasing");

    p.block_reward = 0.04;
    const auto rewarded = eo::sweep(p, eo::SweepParameter::arrival_rate, grid, 4);
    std::vector<double> te4;
    for (const auto& row : rewarded.rows) {
        c.require(row.valid && row.t_E.is_finite(), "sweep row should be valid and finite");
        if (!(row.valid && row.t_E.is_finite())) return;
        te4.push_back(row.t_E.value);
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < te4.size(); ++i)
        if (te4[i] > te4[i - 1] + 1e-6) decreasing = false;
    c.require(decreasing, "t_E(lambda) at y = 0.04 should be monotonically decreasing");
}

void criterion_simulation_uc(Check& c) {
    const auto p = figure_params();
    sim::SimConfig cfg;
    cfg.n_blocks = 100000;
    cfg.dt = 1e-3;
    cfg.rs = {7, 0};
    const auto st = sim::simulate_uc(p, cfg);
    const double u_rel = std::abs(st.user_welfare_hat / 0.48832952946500831 - 1.0);
    const double r_rel = std::abs(st.miner_revenue_hat / 0.21047625862278959 - 1.0);
    c.require(u_rel < 0.01, "welfare estimate off by " + fmt(100 * u_rel) + "%");
    c.require(r_rel < 0.01, "revenue estimate off by " + fmt(100 * r_rel) + "%");
    c.require(st.ks_distance <= 0.01,
              "KS distance " + fmt(st.ks_distance) + " exceeds 0.01");
}

void criterion_simulation_eo(Check& c) {
    const auto p = figure_params();
    const auto tstar = ThresholdTime::finite(0.5);
    sim::SimConfig cfg;
    cfg.n_blocks = 100000;
    cfg.dt = 1e-3;
    cfg.rs = {7, 0};
    const auto st = sim::simulate_eo(p, tstar, cfg);
    c.require(st.ks_distance <= 0.01,
              "KS distance " + fmt(st.ks_distance) + " exceeds 0.01");
    const double lam = p.arrival_rate;
    const auto fee_density = [&](double u) {
        return eo::block_fee_income(0.5 + u, tstar, p) * lam * std::exp(-lam * u);
    };
    const double oracle = num::integrate(fee_density, 0.0, 60.0 / lam,
                                         Tolerance{1e-9, 1e-9, 200}, {0.5, 1.0});
    const double rel = std::abs(st.mean_block_fee_hat / oracle - 1.0);
    c.require(rel < 0.01, "mean block fee off the quadrature oracle by " +
                              fmt(100 * rel) + "%");
}

void criterion_best_response(Check& c) {
    const auto p = figure_params();
    const std::vector<ThresholdTime> thresholds{
        ThresholdTime::never_suspend(), ThresholdTime::finite(0.0),
        ThresholdTime::finite(0.3), ThresholdTime::finite(0.6),
        ThresholdTime::finite(0.9)};
    for (int i = 1; i <= 20; ++i) {
        const double t = 0.25 * i;
        for (const auto& tstar : thresholds) {
            const auto scan = sim::best_response_scan(t, tstar, p, 2001);
            const double step = (p.capacity + t) / 2000.0;
            if (!(std::abs(scan.argmax_s) <= step + 1e-12)) {
                c.require(false, "scan peak at s = " + fmt(scan.argmax_s) +
                                     " for t = " + fmt(t));
                return;
            }
        }
    }
}

void criterion_structural_invariants(Check& c) {
    const auto p = figure_params();

    // Bid-curve properties on grids: values in [0, 1), strictly increasing,
    // continuous (small increments), zero at zero, limit one.
    const auto check_curve = [&](const std::function<double(double)>& bid,
                                 const std::string& name) {
        double prev = -1.0;
        for (double t = 0.0; t <= 8.0; t += 0.01) {
            const double b = bid(t);
            if (!(b >= 0.0 && b < 1.0)) {
                c.require(false, name + ": bid outside [0, 1) at t = " + fmt(t));
                return;
            }
            if (!(b > prev || t == 0.0)) {
                c.require(false, name + ": bid not strictly increasing at t = " + fmt(t));
                return;
            }
            if (t > 0.0 && !(b - prev < 0.02)) {
                c.require(false, name + ": bid jumps at t = " + fmt(t));
                return;
            }
            prev = b;
        }
        c.require(bid(0.0) == 0.0, name + ": bid(0) should be 0");
        c.require(bid(5e4) > 0.999999, name + ": bid should approach 1");
    };
    check_curve([&](double t) { return uc::equilibrium_bid(t, p); }, "uc bid");
    check_curve([&](double t) {
        return eo::equilibrium_bid(t, ThresholdTime::finite(0.5), p);
    }, "eo bid");

    // Hazard ordering in the threshold.
    for (double t = 0.0; t <= 3.0; t += 0.1) {
        double prev_bid = -1.0;
        for (double ts : {0.0, 0.25, 0.5, 0.75, 0.95}) {
            const double b = eo::equilibrium_bid(t, ThresholdTime::finite(ts), p);
            if (!(b >= prev_bid - 1e-12)) {
                c.require(false, "hazard ordering fails at t = " + fmt(t));
                return;
            }
            prev_bid = b;
        }
    }

    // Convexity of the bid and the miner surplus in the threshold.
    const double dts = 0.02;
    for (double t : {0.05, 0.2, 0.4}) {
        for (double ts = t; ts + 2 * dts < p.capacity; ts += dts) {
            const double b0 = eo::equilibrium_bid(t, ThresholdTime::finite(ts), p);
            const double b1 = eo::equilibrium_bid(t, ThresholdTime::finite(ts + dts), p);
            const double b2 = eo::equilibrium_bid(t, ThresholdTime::finite(ts + 2 * dts), p);
            if (!(b2 - 2 * b1 + b0 >= -1e-9)) {
                c.require(false, "bid not convex in threshold at t = " + fmt(t));
                return;
            }
        }
    }
    for (double ts = 0.0; ts + 2 * dts <= 0.98; ts += dts) {
        const double m0 = eo::miner_surplus(ts, p);
        const double m1 = eo::miner_surplus(ts + dts, p);
        const double m2 = eo::miner_surplus(ts + 2 * dts, p);
        if (!(m2 - 2 * m1 + m0 >= -1e-9)) {
            c.require(false, "miner surplus not convex at t* = " + fmt(ts));
            return;
        }
        if (!(m1 >= m0)) {
            c.require(false, "miner surplus not increasing at t* = " + fmt(ts));
            return;
        }
    }

    // Bid monotonicity in lambda and capacity.
    auto p_lam = p;
    p_lam.arrival_rate = 2.0;
    auto p_cap = p;
    p_cap.capacity = 1.5;
    for (double t = 0.05; t <= 6.0; t += 0.2) {
        if (!(uc::equilibrium_bid(t, p_lam) <= uc::equilibrium_bid(t, p) &&
              uc::equilibrium_bid(t, p_cap) <= uc::equilibrium_bid(t, p))) {
            c.require(false, "uc bid not decreasing in lambda/capacity at t = " + fmt(t));
            return;
        }
    }

    // Miner surplus: closed form vs quadrature within 1e-8 on a 50-point grid.
    for (int i = 0; i < 50; ++i) {
        const double ts = 0.98 * p.capacity * i / 49.0;
        const double diff = std::abs(eo::miner_surplus(ts, p) - surplus_by_quadrature(ts, p));
        if (!(diff <= 1e-8)) {
            c.require(false, "surplus routes differ by " + fmt(diff) + " at t* = " + fmt(ts));
            return;
        }
    }

    // Stationary densities normalize to one within 1e-10.
    for (double ts : {0.0, 0.3, 0.5, 0.9}) {
        const auto dens = [&](double t) { return eo::stationary_density(t, ts, p); };
        const double mass = num::integrate(dens, 0.0, ts + 60.0 / p.arrival_rate,
                                           Tolerance{1e-12, 1e-12, 200}, {ts});
        if (!(std::abs(mass - 1.0) <= 1e-10)) {
            c.require(false, "density mass " + fmt(mass) + " at t* = " + fmt(ts));
            return;
        }
    }
}

void criterion_patient_model(Check& c) {
    MarketParams p;
    p.arrival_rate = 1.2;
    p.capacity = 1.0;
    p.discount_rate = 1.0;
    const double bound1 = p.arrival_rate / (p.discount_rate + p.arrival_rate);

    std::vector<double> grid;
    for (long i = 0;; ++i) {
        const double s = -12.0 + static_cast<double>(i) * (1.0 / 200.0);
        if (s > 4.0 + 1e-9) break;
        grid.push_back(s);
    }
    const auto curve = pat::estimate_wtilde(p, grid, 1000000, {7, 0});

    c.require(std::abs(curve.estimate.front() - bound1) <= 3.0 * curve.std_error.front(),
              "left limit " + fmt(curve.estimate.front()) + " not within 3 sigma of " +
                  fmt(bound1));

    for (int n = 0; n <= 3; ++n) {
        const double bound = std::pow(bound1, n + 1);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] < static_cast<double>(n) * p.capacity) continue;
            if (!(curve.estimate[i] <= bound + 3.0 * curve.std_error[i])) {
                c.require(false, "bound ladder fails at n = " + fmt(n) +
                                     ", s = " + fmt(grid[i]));
                return;
            }
        }
    }

    const auto rep = pat::wtilde_ode_residual(curve, p, 2.5 / 200.0);
    c.require(rep.pass_fraction >= 0.95,
              "ODE residual pass fraction " + fmt(rep.pass_fraction) + " below 0.95");

    const auto scan = pat::patient_payoff_scan(1.0, curve, 2001);
    const double step = (grid.back() + 1.0) / 2000.0;
    std::size_t j0 = 0;
    for (std::size_t i = 0; i < scan.s.size(); ++i)
        if (std::abs(scan.s[i]) < std::abs(scan.s[j0])) j0 = i;
    const double max_payoff = scan.payoff[scan.argmax_index];
    const bool peak_ok =
        std::abs(scan.argmax_s) <= step + 1e-12 ||
        scan.payoff[j0] >=
            max_payoff - 3.0 * (scan.payoff_se[j0] + scan.payoff_se[scan.argmax_index]);
    c.require(peak_ok, "payoff scan peak at s = " + fmt(scan.argmax_s) +
                           " not at zero within one step and 3 sigma");
}

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<void(Check&)> fn;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "equilibrium threshold, two independent routes", 1.0,
         criterion_equilibrium_threshold},
        {2, "efficient threshold, optimal reward, round trip", 1.0,
         criterion_efficient_threshold_and_reward},
        {3, "welfare dominance and positive reward", 1.0, criterion_welfare_dominance},
        {4, "threshold non-monotone in lambda, monotone at y = 0.04", 10.0,
         criterion_lambda_nonmonotonicity},
        {5, "simulation agrees with user-competition closed forms", 60.0,
         criterion_simulation_uc},
        {6, "simulation agrees with endogenous-operation analytics", 60.0,
         criterion_simulation_eo},
        {7, "best-response scans peak at zero deviation", 30.0, criterion_best_response},
        {8, "structural invariant suite", 30.0, criterion_structural_invariants},
        {9, "patient model: limits, ladder, ODE residuals, scan", 300.0,
         criterion_patient_model},
    };

    int failures = 0;
    for (const auto& crit : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            crit.fn(check);
        } catch (const std::exception& e) {
            check.failures.push_back(std::string("exception: ") + e.what());
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed >= crit.budget_s)
            check.failures.push_back("runtime " + fmt(elapsed) + " s exceeds budget " +
                                     fmt(crit.budget_s) + " s");
        if (check.failures.empty()) {
            std::printf("PASS  %d: %s (%.2f s)\n", crit.id, crit.name.c_str(), elapsed);
        } else {
            ++failures;
            std::printf("FAIL  %d: %s (%.2f s)\n", crit.id, crit.name.c_str(), elapsed);
            for (const auto& f : check.failures)
                std::printf("      - %s\n", f.c_str());
        }
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
