#include "feemarket/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace feemarket {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::no_bracket: return "NO_BRACKET";
        case ErrorCode::max_iter: return "MAX_ITER";
        case ErrorCode::bad_rate: return "BAD_RATE";
        case ErrorCode::bad_config: return "BAD_CONFIG";
        case ErrorCode::domain: return "DOMAIN";
        case ErrorCode::grid_too_coarse: return "GRID_TOO_COARSE";
        case ErrorCode::insufficient_curve: return "INSUFFICIENT_CURVE";
    }
    return "UNKNOWN";
}

void BidCurve::validate() const {
    if (grid.size() != values.size())
        throw Error(ErrorCode::bad_config, "BidCurve grid/values size mismatch");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(values[i] >= 0.0 && values[i] < 1.0))
            throw Error(ErrorCode::bad_config, "BidCurve value outside [0, 1)");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw Error(ErrorCode::bad_config, "BidCurve grid not strictly increasing");
        if (i > 0 && !(values[i] > values[i - 1]))
            throw Error(ErrorCode::bad_config, "BidCurve values not strictly increasing");
    }
}

}  // namespace feemarket

namespace feemarket::num {

double bisect(const std::function<double(double)>& f, double lo, double hi,
              const Tolerance& tol) {
    tol.validate();
    if (!(lo <= hi)) throw Error(ErrorCode::domain, "bisect: lo > hi");

    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw Error(ErrorCode::no_bracket, "bisect: f(lo) and f(hi) have the same sign");

    for (int it = 0; it < tol.max_iter; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        const double fmid = f(mid);
        if (fmid == 0.0 || std::abs(fmid) <= tol.abs_tol) return mid;
        if ((fmid > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if (hi - lo <= std::max(tol.abs_tol, tol.rel_tol * std::abs(mid)))
            return lo + 0.5 * (hi - lo);
    }
    throw Error(ErrorCode::max_iter, "bisect: bracket did not converge");
}

namespace {

// Gauss-Kronrod 7/15 pair. All nodes are interior, so jump discontinuities
// sitting exactly on a split point never get sampled.
constexpr double kGkNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0,
};
constexpr double kKronrodW[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
};
constexpr double kGaussW[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
};

struct QuadState {
    const std::function<double(double)>& f;
    long evals_left;
};

struct GkResult {
    double value;
    double err;    // QUADPACK-style scaled error estimate
    double floor;  // roundoff scale; error at or below it is irreducible
};

GkResult gk15(QuadState& st, double a, double b) {
    if (st.evals_left < 15)
        throw Error(ErrorCode::max_iter, "integrate: evaluation budget exhausted");
    st.evals_left -= 15;
    const double m = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double lo_vals[7], hi_vals[7];
    const double fc = st.f(m);
    double kron = kKronrodW[7] * fc;
    double gauss = kGaussW[3] * fc;
    double resabs = kKronrodW[7] * std::abs(fc);
    for (int i = 0; i < 7; ++i) {
        lo_vals[i] = st.f(m - h * kGkNodes[i]);
        hi_vals[i] = st.f(m + h * kGkNodes[i]);
        kron += kKronrodW[i] * (lo_vals[i] + hi_vals[i]);
        resabs += kKronrodW[i] * (std::abs(lo_vals[i]) + std::abs(hi_vals[i]));
        if (i % 2 == 1) gauss += kGaussW[i / 2] * (lo_vals[i] + hi_vals[i]);
    }
    const double mean = 0.5 * kron;
    double resasc = kKronrodW[7] * std::abs(fc - mean);
    for (int i = 0; i < 7; ++i)
        resasc += kKronrodW[i] * (std::abs(lo_vals[i] - mean) + std::abs(hi_vals[i] - mean));
    resasc *= h;
    resabs *= h;
    double err = std::abs(kron - gauss) * h;
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double floor = 50.0 * std::numeric_limits<double>::epsilon() * resabs;
    return {kron * h, std::max(err, floor), floor};
}

struct Segment {
    double a, b, value, err, floor;
};

// Error at the roundoff scale is irreducible; such segments are not worth
// splitting further and do not count against the target.
double effective_err(const Segment& s) {
    return s.err <= 1.01 * s.floor ? 0.0 : s.err;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const Tolerance& tol, const std::vector<double>& breakpoints) {
    tol.validate();
    if (!(a <= b)) throw Error(ErrorCode::domain, "integrate: a > b");
    if (a == b) return 0.0;

    std::vector<double> cuts;
    cuts.push_back(a);
    for (double x : breakpoints)
        if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    QuadState st{f, 5000L * static_cast<long>(tol.max_iter)};

    // Globally budgeted refinement: split the segment with the largest error
    // until the summed estimate meets the (dynamic) target. The global
    // criterion tolerates locally noisy integrands, e.g. nested quadrature,
    // that a per-subinterval rule would refine forever.
    const auto by_err = [](const Segment& x, const Segment& y) {
        return effective_err(x) < effective_err(y);
    };
    std::priority_queue<Segment, std::vector<Segment>, decltype(by_err)> queue(by_err);
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const GkResult r = gk15(st, cuts[i], cuts[i + 1]);
        const Segment s{cuts[i], cuts[i + 1], r.value, r.err, r.floor};
        total += s.value;
        total_err += effective_err(s);
        queue.push(s);
    }

    while (total_err > std::max(tol.abs_tol, tol.rel_tol * std::abs(total))) {
        if (queue.empty() || effective_err(queue.top()) == 0.0)
            throw Error(ErrorCode::max_iter, "integrate: error target unreachable");
        const Segment s = queue.top();
        queue.pop();
        const double m = 0.5 * (s.a + s.b);
        if (!(m > s.a && m < s.b)) continue;  // not splittable at this precision
        const GkResult left = gk15(st, s.a, m);
        const GkResult right = gk15(st, m, s.b);
        const Segment ls{s.a, m, left.value, left.err, left.floor};
        const Segment rs{m, s.b, right.value, right.err, right.floor};
        total += ls.value + rs.value - s.value;
        total_err += effective_err(ls) + effective_err(rs) - effective_err(s);
        queue.push(ls);
        queue.push(rs);
    }
    return total;
}

double sample_exponential(Pcg32& rng, double rate) {
    if (!(rate > 0.0)) throw Error(ErrorCode::bad_rate, "sample_exponential: rate must be > 0");
    // u in [0, 1): log1p(-u) is finite and the variate is nonnegative.
    return -std::log1p(-rng.next_double()) / rate;
}

}  // namespace feemarket::num
