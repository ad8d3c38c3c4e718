// Core domain types shared across the fee-market library.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace feemarket {

enum class ErrorCode {
    no_bracket,
    max_iter,
    bad_rate,
    bad_config,
    domain,
    grid_too_coarse,
    insufficient_curve,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Absolute/relative tolerances and iteration cap for the numeric kernels.
struct Tolerance {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_iter = 200;

    void validate() const {
        if (!(abs_tol > 0.0)) throw Error(ErrorCode::bad_config, "abs_tol must be > 0");
        if (!(rel_tol >= 0.0)) throw Error(ErrorCode::bad_config, "rel_tol must be >= 0");
        if (max_iter < 1) throw Error(ErrorCode::bad_config, "max_iter must be >= 1");
    }
};

// Descriptor for a deterministic random stream. Identical (seed, stream_id)
// reproduce identical variate sequences; parallel runs use distinct stream ids.
struct RandomSource {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

// Primitive constants of the market.
//   arrival_rate    lambda, block arrivals per unit time while miners operate
//   capacity        K, mass of transactions validated per block
//   operating_cost  c, flow cost of operating the full miner mass
//   block_reward    y, fixed payment per block in newly minted coins
//   committed_share eta, mass of miners that always operate
//   discount_rate   rho, user time discount (patient model only)
struct MarketParams {
    double arrival_rate = 1.2;
    double capacity = 1.0;
    double operating_cost = 0.0;
    double block_reward = 0.0;
    double committed_share = 0.0;
    double discount_rate = 1.0;

    void validate() const {
        if (!(arrival_rate > 0.0)) throw Error(ErrorCode::bad_config, "arrival_rate must be > 0");
        if (!(capacity > 0.0)) throw Error(ErrorCode::bad_config, "capacity must be > 0");
        if (!(operating_cost >= 0.0)) throw Error(ErrorCode::bad_config, "operating_cost must be >= 0");
        if (!(block_reward >= 0.0)) throw Error(ErrorCode::bad_config, "block_reward must be >= 0");
        if (!(committed_share >= 0.0 && committed_share <= 1.0))
            throw Error(ErrorCode::bad_config, "committed_share must be in [0, 1]");
        if (!(discount_rate > 0.0)) throw Error(ErrorCode::bad_config, "discount_rate must be > 0");
    }
};

// Miner operation start time, extended with the two infinite cases:
// never_suspend (operate from the start, -inf) and never_operate (+inf).
struct ThresholdTime {
    enum class Kind { never_suspend, finite, never_operate };

    Kind kind = Kind::finite;
    double value = 0.0;  // meaningful iff kind == finite

    static ThresholdTime finite(double v) {
        if (!(v >= 0.0)) throw Error(ErrorCode::domain, "finite threshold must be >= 0");
        return ThresholdTime{Kind::finite, v};
    }
    static ThresholdTime never_suspend() { return ThresholdTime{Kind::never_suspend, 0.0}; }
    static ThresholdTime never_operate() { return ThresholdTime{Kind::never_operate, 0.0}; }

    bool is_finite() const { return kind == Kind::finite; }

    bool operator==(const ThresholdTime& o) const {
        return kind == o.kind && (kind != Kind::finite || value == o.value);
    }
};

// Sampled equilibrium bid curve, for export and plotting data. Analytic
// evaluation stays lazy; this is never used as an interpolation source.
struct BidCurve {
    std::vector<double> grid;    // strictly increasing times t >= 0
    std::vector<double> values;  // bids in [0, 1), strictly increasing

    void validate() const;
};

}  // namespace feemarket
