#pragma once

// Finite-blocklength decoding error probability (normal approximation).

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rsma_sqp/channel.hpp"
#include "rsma_sqp/errors.hpp"

namespace rsma_sqp {

/// Gaussian upper tail.
inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

struct CodingPoint {
    double b_bits = 1.0;
    int n_d_cu = 1;

    double rate_bpcu() const { return b_bits / static_cast<double>(n_d_cu); }
};

inline constexpr double kZeroSinr = 1e-12;

/// Argument of the Q-function; +/-inf never occurs for sinr >= kZeroSinr.
inline double dep_argument(const CodingPoint& cp, double sinr) {
    const double n = static_cast<double>(cp.n_d_cu);
    const double cap = std::log1p(sinr);
    // 1 - (1+s)^-2 computed without cancellation for small s.
    const double disp = -std::expm1(-2.0 * cap);
    return (cap - cp.rate_bpcu() * std::numbers::ln2) / std::sqrt(disp / n);
}

inline double dep_instant(const CodingPoint& cp, double sinr) {
    if (std::isnan(sinr) || sinr < 0) throw DomainError("SINR must be non-negative");
    if (sinr < kZeroSinr) return 1.0;
    return q_function(dep_argument(cp, sinr));
}

inline double dep_expected(const CodingPoint& cp, const SinrDistribution& d, const quad::Options& opt = {}) {
    const double v = d.expect([&](double x) { return dep_instant(cp, std::max(0.0, x)); }, opt);
    return std::clamp(v, 0.0, 1.0);
}

} // namespace rsma_sqp
