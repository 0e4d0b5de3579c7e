#pragma once

// MGF-based delay bound for a Poisson source served by an all-or-nothing
// B-bit channel that fails with probability eps.

#include <algorithm>
#include <cmath>
#include <limits>

#include "rsma_sqp/errors.hpp"
#include "rsma_sqp/scenario.hpp"

namespace rsma_sqp {

struct ArrivalModel {
    double lambda_dag = 0.0; // bits per slot
};

struct ServiceModel {
    double b_bits = 0.0;
    double dep = 0.0;
};

struct SncKernel {
    ArrivalModel arrival;
    ServiceModel service;
    int w_th_slots = 0;
};

namespace snc_detail {

inline double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

} // namespace snc_detail

inline double log_arrival_mgf(const ArrivalModel& a, double theta) {
    if (a.lambda_dag == 0.0) return 0.0;
    return a.lambda_dag * std::expm1(theta);
}

/// ln(e^{-theta B} + eps (1 - e^{-theta B})) = ln(eps + (1 - eps) e^{-theta B}).
inline double log_service_inv_mgf(const ServiceModel& sv, double theta) {
    if (!(sv.dep >= 0 && sv.dep <= 1)) throw DomainError("decoding error probability outside [0, 1]");
    const double lead = std::log1p(-sv.dep) - theta * sv.b_bits;
    if (sv.dep == 0.0) return lead;
    return snc_detail::log_add(std::log(sv.dep), lead);
}

inline double arrival_mgf(const ArrivalModel& a, double theta) {
    if (!(theta >= 0)) throw DomainError("theta must be non-negative");
    const double l = log_arrival_mgf(a, theta);
    return l > 709.0 ? std::numeric_limits<double>::infinity() : std::exp(l);
}

inline double service_inv_mgf(const ServiceModel& sv, double theta) {
    if (!(theta >= 0)) throw DomainError("theta must be non-negative");
    return std::exp(log_service_inv_mgf(sv, theta));
}

inline double log_stability_product(const SncKernel& k, double theta) {
    return log_arrival_mgf(k.arrival, theta) + log_service_inv_mgf(k.service, theta);
}

inline double stability_product(const SncKernel& k, double theta) {
    const double l = log_stability_product(k, theta);
    return l > 709.0 ? std::numeric_limits<double>::infinity() : std::exp(l);
}

/// Mean-rate test: some theta > 0 gives product < 1 iff lambda < (1 - eps) B.
inline bool is_stable(const SncKernel& k) {
    return k.service.dep < 1.0 && k.arrival.lambda_dag < (1.0 - k.service.dep) * k.service.b_bits;
}

/// ln of the bound objective at theta; +inf outside the stable region.
inline double log_sdvp_objective(const SncKernel& k, double theta) {
    const double lp = log_stability_product(k, theta);
    if (!(lp < 0)) return std::numeric_limits<double>::infinity();
    return k.w_th_slots * log_service_inv_mgf(k.service, theta) - std::log(-std::expm1(lp));
}

inline double sdvp_objective(const SncKernel& k, double theta) {
    return std::exp(log_sdvp_objective(k, theta));
}

struct ThetaMax {
    bool feasible = false;
    double value = 0.0;  // largest theta known to satisfy product < 1
    double upper = 0.0;  // smallest theta known to violate it (inf if none found)
    int evaluations = 0;
};

inline constexpr double kThetaCap = 512.0;

/// Supremum of the stable theta region: geometric expansion from psi_theta,
/// then bisection until the bracket is narrower than psi_th (relative once
/// theta itself drops below one).
inline ThetaMax theta_max(const SncKernel& k, const AlgoConstants& algo = {}) {
    ThetaMax r;
    if (!is_stable(k)) return r;
    auto ok = [&](double t) {
        ++r.evaluations;
        return log_stability_product(k, t) < 0;
    };
    double lo = 0.0;
    double hi = algo.psi_theta;
    if (ok(hi)) {
        lo = hi;
        hi = std::min(2.0 * hi, kThetaCap);
        while (ok(hi)) {
            lo = hi;
            if (hi >= kThetaCap) {
                r.feasible = true;
                r.value = kThetaCap;
                r.upper = std::numeric_limits<double>::infinity();
                return r;
            }
            hi = std::min(2.0 * hi, kThetaCap);
        }
    } else {
        // Shrink until stable; the derivative at zero is negative so this ends.
        lo = hi / 2.0;
        while (!ok(lo)) {
            hi = lo;
            lo /= 2.0;
            if (lo < 1e-300) return r;
        }
    }
    while (hi - lo > algo.psi_th * std::min(1.0, lo)) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (ok(mid) ? lo : hi) = mid;
    }
    r.feasible = true;
    r.value = lo;
    r.upper = hi;
    return r;
}

struct SdvpBound {
    double value = 1.0;
    double log_value = 0.0;
    double theta_star = 0.0;
    double theta_max = 0.0;
    bool feasible = false;
    bool underflow = false;
    int evaluations = 0;
};

inline constexpr double kUnderflow = 1e-300;

/// Golden-section minimum of a unimodal function on (a, b).
template <class F>
std::pair<double, double> golden_section_min(F&& f, double a, double b, double tol, int max_iter = 400) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < max_iter; ++i) {
        if (b - a <= std::max(tol, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(c))) break;
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

/// Minimized delay-violation bound over the stable theta region, clamped to 1.
inline SdvpBound ub_sdvp(const SncKernel& k, const AlgoConstants& algo = {}) {
    SdvpBound r;
    const ThetaMax tm = theta_max(k, algo);
    r.evaluations = tm.evaluations;
    if (!tm.feasible) return r;
    r.feasible = true;
    r.theta_max = tm.value;
    int evals = 0;
    auto f = [&](double t) {
        ++evals;
        return log_sdvp_objective(k, t);
    };
    auto [t, lv] = golden_section_min(f, 0.0, tm.value, algo.phi_th * std::max(1.0, tm.value));
    // The objective is decreasing in theta when the queue never builds up.
    const double edge = f(tm.value);
    if (edge < lv) {
        t = tm.value;
        lv = edge;
    }
    r.evaluations += evals;
    r.theta_star = t;
    r.log_value = std::min(0.0, lv);
    if (lv >= 0) {
        r.value = 1.0;
    } else if (lv < std::log(kUnderflow)) {
        r.value = 0.0;
        r.underflow = true;
    } else {
        r.value = std::exp(lv);
    }
    return r;
}

/// Truncated min-deconvolution sum at horizon t with i.i.d. increments:
/// sum_{v=1}^{t} M_a^{t-v} * Mbar_s^{t+w-v}. Upper-bounded by the closed form.
inline double finite_horizon_bound(const SncKernel& k, double theta, int horizon) {
    const double la = log_arrival_mgf(k.arrival, theta);
    const double ls = log_service_inv_mgf(k.service, theta);
    double acc = 0.0;
    for (int v = 1; v <= horizon; ++v) {
        acc += std::exp((horizon - v) * la + (horizon + k.w_th_slots - v) * ls);
    }
    return acc;
}

} // namespace rsma_sqp
