#pragma once

// Independent reference computations used only by the tests. None of these
// call into the library.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

/// Gaussian upper tail in long double: Taylor series of erf for small x,
/// Lentz continued fraction for the tail.
inline long double q_function(long double x) {
    if (x < 0) return 1.0L - q_function(-x);
    const long double pi = 3.141592653589793238462643383279502884L;
    if (x < 3.0L) {
        const long double z = x / std::sqrt(2.0L);
        long double term = z;
        long double sum = z;
        for (int n = 1; n < 200; ++n) {
            term *= -z * z / n;
            const long double add = term / (2 * n + 1);
            sum += add;
            if (std::fabs(add) < 1e-22L * std::fabs(sum)) break;
        }
        const long double erf = 2.0L / std::sqrt(pi) * sum;
        return 0.5L * (1.0L - erf);
    }
    // Q(x) = phi(x) / (x + 1/(x + 2/(x + 3/(x + ...))))
    const long double tiny = 1e-300L;
    long double f = x;
    long double c = x;
    long double d = 0.0L;
    for (int n = 1; n < 5000; ++n) {
        const long double a = n;
        d = x + a * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = x + a / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0L / d;
        const long double delta = c * d;
        f *= delta;
        if (std::fabs(delta - 1.0L) < 1e-21L) break;
    }
    const long double phi = std::exp(-0.5L * x * x) / std::sqrt(2.0L * pi);
    return phi / f;
}

/// Normal-approximation decoding error, written from the formula directly.
inline long double dep(long double b, long double n, long double s) {
    const long double num = std::log(1.0L + s) - b / n * std::log(2.0L);
    const long double v = (1.0L - 1.0L / ((1.0L + s) * (1.0L + s))) / n;
    return q_function(num / std::sqrt(v));
}

/// Poisson MGF by summing the series term by term.
inline long double poisson_mgf_series(long double lambda, long double theta, int terms) {
    long double logp = -lambda; // log P(z = 0)
    long double acc = std::exp(logp);
    for (int z = 1; z <= terms; ++z) {
        logp += std::log(lambda) - std::log(static_cast<long double>(z));
        acc += std::exp(logp + z * theta);
    }
    return acc;
}

/// Mean of a two-point service variable e^{-theta S}, S = B w.p. 1-eps, else 0.
inline long double two_point_inv_mgf(long double b, long double eps, long double theta) {
    return (1.0L - eps) * std::exp(-theta * b) + eps;
}

/// Brute-force minimum over a dense log grid of the closed-form objective.
template <class F>
double grid_min(F&& f, double lo, double hi, int n) {
    double best = INFINITY;
    for (int i = 0; i <= n; ++i) {
        const double t = lo + (hi - lo) * i / n;
        if (t <= 0) continue;
        best = std::min(best, f(t));
    }
    return best;
}

/// Simple FIFO queue replica with per-bit delay, for cross-checking the simulator
/// on tiny deterministic inputs.
struct TinyQueue {
    std::vector<std::pair<long long, long long>> fifo; // (arrival slot, bits)
    std::vector<long long> delay;                       // bits per delay value
    long long backlog = 0;

    void arrive(long long t, long long bits) {
        if (bits > 0) fifo.push_back({t, bits});
        backlog += bits;
    }
    void serve(long long t, long long budget) {
        std::size_t head = 0;
        while (budget > 0 && head < fifo.size()) {
            auto& [at, bits] = fifo[head];
            const long long take = std::min(budget, bits);
            bits -= take;
            budget -= take;
            backlog -= take;
            if (static_cast<long long>(delay.size()) <= t - at) delay.resize(t - at + 1, 0);
            delay[t - at] += take;
            if (bits == 0) ++head;
        }
        fifo.erase(fifo.begin(), fifo.begin() + static_cast<long>(head));
    }
};

} // namespace oracle
