// Shared numeric kernels: bracketed root-finding, adaptive quadrature,
// and a seeded random source with an exponential-variate sampler.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "feemarket/types.hpp"

namespace feemarket::num {

// Bisection on [lo, hi]. Requires a sign change; robust to kinks, which is
// why it is the default root-finder here (the target functions are monotone
// but only piecewise smooth).
//
// Returns x with |f(x)| <= abs_tol or bracket width <= max(abs_tol, rel_tol*|x|).
// Throws ErrorCode::no_bracket if f(lo) and f(hi) have the same sign,
// ErrorCode::max_iter if the bracket does not shrink enough in max_iter steps.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              const Tolerance& tol = {});

// Adaptive Simpson quadrature of f over [a, b] with target error
// max(abs_tol, rel_tol * |result|). `breakpoints` lists abscissae where the
// integrand is non-smooth; the interval is split there before refinement
// (callers pass e.g. a bid curve's threshold kinks).
// Throws ErrorCode::max_iter when the refinement budget is exhausted.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const Tolerance& tol = {}, const std::vector<double>& breakpoints = {});

// PCG32: 64-bit state, 64-bit stream selector. Chosen for the determinism
// contract -- identical (seed, stream_id) reproduce identical sequences and
// distinct stream_ids give independent streams for parallel runs.
class Pcg32 {
public:
    explicit Pcg32(RandomSource rs) : Pcg32(rs.seed, rs.stream_id) {}
    Pcg32(std::uint64_t seed, std::uint64_t stream_id) {
        inc_ = (stream_id << 1u) | 1u;
        state_ = 0u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        const std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const std::uint32_t xorshifted =
            static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        const std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        const std::uint64_t hi = next_u32();
        const std::uint64_t lo = next_u32();
        return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_ = 1;
};

// Exponential variate with the given rate via inversion.
// Throws ErrorCode::bad_rate if rate <= 0.
double sample_exponential(Pcg32& rng, double rate);

}  // namespace feemarket::num
