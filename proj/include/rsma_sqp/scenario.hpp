#pragma once

// Experiment configuration, unit conversions and the per-device link budget.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "rsma_sqp/errors.hpp"

namespace rsma_sqp {

enum class Scheme { Rsma, Noma, Oma };

// X1 is the unsplit device-1 stream used by NOMA and OMA.
enum class StreamId { X11 = 0, X12 = 1, X2 = 2, X1 = 3 };

inline constexpr std::size_t kStreamSlots = 4;

inline const char* to_string(Scheme s) {
    switch (s) {
    case Scheme::Rsma: return "rsma";
    case Scheme::Noma: return "noma";
    case Scheme::Oma: return "oma";
    }
    return "?";
}

inline const char* to_string(StreamId q) {
    switch (q) {
    case StreamId::X11: return "x11";
    case StreamId::X12: return "x12";
    case StreamId::X2: return "x2";
    case StreamId::X1: return "x1";
    }
    return "?";
}

inline Scheme parse_scheme(const std::string& s) {
    if (s == "rsma" || s == "RSMA") return Scheme::Rsma;
    if (s == "noma" || s == "NOMA") return Scheme::Noma;
    if (s == "oma" || s == "OMA") return Scheme::Oma;
    throw ConfigError("unknown scheme '" + s + "'");
}

inline StreamId parse_stream(const std::string& s) {
    if (s == "x11") return StreamId::X11;
    if (s == "x12") return StreamId::X12;
    if (s == "x2") return StreamId::X2;
    if (s == "x1") return StreamId::X1;
    throw ConfigError("unknown stream '" + s + "'");
}

/// Small fixed map keyed by StreamId.
template <class T>
struct PerStream {
    std::array<T, kStreamSlots> v{};
    T& operator[](StreamId q) { return v[static_cast<std::size_t>(q)]; }
    const T& operator[](StreamId q) const { return v[static_cast<std::size_t>(q)]; }
    bool operator==(const PerStream&) const = default;
};

struct HHatMode {
    enum class Kind { MeanPower, Fixed, Marginalize };
    Kind kind = Kind::MeanPower;
    std::array<double, 2> fixed_sq{1.0, 1.0}; // |h_hat_u|^2 for Fixed
    int samples = 64;                         // stratified draws for Marginalize
};

struct AlgoConstants {
    double pi_th = 1e-15;
    int m_iter = 200;
    double psi_theta = 1.0;
    double psi_th = 1e-6;
    double lambda_s = 1e-6; // kept for config compatibility; golden-section needs no step
    double phi_th = 1e-15;
};

struct QosTarget {
    int w_th_slots = 2;
    double xi_th = 1e-6;
    double eps_th = 1e-5;
};

struct Scenario {
    Scheme scheme = Scheme::Rsma;
    double cell_radius_m = 500.0;
    double bandwidth_hz = 2e6;
    double slot_s = 5e-4;
    int n0_cu = 1000;
    std::array<int, 2> np_cu{50, 50};
    double noise_psd_dbm_hz = -176.0;
    double pathloss_exp = 2.5;
    double shadow_sigma_db = 8.0;
    std::uint64_t shadow_seed = 1;
    std::array<double, 2> distances_m{250.0, 250.0};
    double arrival_rate_bps = 1.25e5;
    double p_max_w = 1.0;
    double b_min_bits = 80.0;
    double b_max_bits = 500.0;
    HHatMode h_hat;
    AlgoConstants algo;
    QosTarget qos;
    std::map<StreamId, QosTarget> qos_override;
};

inline void validate(const Scenario& s) {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (!(s.cell_radius_m > 0)) fail("cell_radius_m must be positive");
    if (!(s.bandwidth_hz > 0)) fail("bandwidth_hz must be positive");
    if (!(s.slot_s > 0)) fail("slot_s must be positive");
    if (s.np_cu[0] < 0 || s.np_cu[1] < 0) fail("pilot lengths must be non-negative");
    if (s.n0_cu - s.np_cu[0] - s.np_cu[1] <= 0) fail("n0_cu must exceed total pilot length");
    for (double d : s.distances_m) {
        if (!(d > 0) || d > s.cell_radius_m) fail("distances must lie in (0, cell_radius_m]");
    }
    if (!(s.pathloss_exp > 0)) fail("pathloss_exp must be positive");
    if (!(s.shadow_sigma_db >= 0)) fail("shadow_sigma_db must be non-negative");
    if (!(s.arrival_rate_bps > 0)) fail("arrival_rate_bps must be positive");
    if (!(s.p_max_w >= 0)) fail("p_max_w must be non-negative");
    if (!(s.b_min_bits >= 1) || s.b_min_bits > s.b_max_bits) fail("need 1 <= b_min_bits <= b_max_bits");
    const auto& a = s.algo;
    if (!(a.pi_th > 0 && a.psi_theta > 0 && a.psi_th > 0 && a.lambda_s > 0 && a.phi_th > 0))
        fail("algorithm constants must be positive");
    if (a.m_iter < 1) fail("m_iter must be >= 1");
    if (s.h_hat.kind == HHatMode::Kind::Marginalize && s.h_hat.samples < 1)
        fail("h_hat_samples must be >= 1");
    if (s.h_hat.kind == HHatMode::Kind::Fixed && (s.h_hat.fixed_sq[0] < 0 || s.h_hat.fixed_sq[1] < 0))
        fail("h_hat_sq must be non-negative");
    auto check_qos = [&](const QosTarget& q) {
        if (q.w_th_slots < 0) fail("w_th must be non-negative");
        if (!(q.xi_th > 0 && q.xi_th < 1)) fail("xi_th must lie in (0, 1)");
        if (!(q.eps_th > 0 && q.eps_th < 1)) fail("eps_th must lie in (0, 1)");
    };
    check_qos(s.qos);
    for (const auto& [q, t] : s.qos_override) check_qos(t);
}

inline QosTarget target_for(const Scenario& s, StreamId q) {
    auto it = s.qos_override.find(q);
    return it == s.qos_override.end() ? s.qos : it->second;
}

// ---- unit conversions ------------------------------------------------------

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Noise power over the subcarrier bandwidth, in watts.
inline double noise_power_w(const Scenario& s) {
    return db_to_linear(s.noise_psd_dbm_hz - 30.0) * s.bandwidth_hz;
}

inline int data_blocklength(const Scenario& s) { return s.n0_cu - s.np_cu[0] - s.np_cu[1]; }

/// Delay threshold in whole slots (floored).
inline int slots_from_ms(const Scenario& s, double t_ms) {
    if (!(t_ms >= 0)) throw ConfigError("delay must be non-negative");
    // Small guard so that 2.0 / 0.5 lands on 4 despite binary rounding.
    return static_cast<int>(std::floor(t_ms / (s.slot_s * 1000.0) + 1e-9));
}

inline int device_of(StreamId q) { return q == StreamId::X2 ? 1 : 0; }

inline std::vector<StreamId> streams_of(Scheme scheme) {
    if (scheme == Scheme::Rsma) return {StreamId::X11, StreamId::X12, StreamId::X2};
    return {StreamId::X1, StreamId::X2};
}

/// SIC decoding order at the base station.
inline std::vector<StreamId> decoding_order(Scheme scheme) { return streams_of(scheme); }

/// Optimization order: reverse of decoding.
inline std::vector<StreamId> solve_order(Scheme scheme) {
    auto order = decoding_order(scheme);
    return {order.rbegin(), order.rend()};
}

inline bool stream_in(Scheme scheme, StreamId q) {
    for (StreamId r : streams_of(scheme))
        if (r == q) return true;
    return false;
}

/// Mean arrivals in bits per slot. Device 1 is split alpha : (1 - alpha) under RSMA.
inline double arrival_bits_per_slot(const Scenario& s, StreamId q, double alpha) {
    if (!(alpha >= 0 && alpha <= 1)) throw DomainError("alpha must lie in [0, 1]");
    const double device = s.arrival_rate_bps * s.slot_s;
    switch (q) {
    case StreamId::X11: return alpha * device;
    case StreamId::X12: return (1.0 - alpha) * device;
    default: return device;
    }
}

/// Data channel uses available to a stream in one slot.
inline int blocklength(const Scenario& s, Scheme scheme) {
    const int nd = data_blocklength(s);
    return scheme == Scheme::Oma ? nd / 2 : nd;
}

// ---- link budget -----------------------------------------------------------

struct DeviceLink {
    double shadow_db = 0.0;
    double zeta = 0.0;             // large-scale gain
    double mean_snr_per_watt = 0.0; // zeta / noise power
    double pilot_snr = 0.0;
    double rho_sq = 0.0;           // variance of the channel estimate
    double sigma_e_sq = 0.0;       // variance of the estimation error
};

struct LinkBudget {
    std::array<DeviceLink, 2> dev;
};

/// Estimate/error variances for a pilot of length np at training SNR gp.
inline std::pair<double, double> mmse_variances(double gp, int np) {
    const double x = gp * static_cast<double>(np);
    return {x / (1.0 + x), 1.0 / (1.0 + x)};
}

inline LinkBudget derive_link_budget(const Scenario& s) {
    validate(s);
    // Two draws from one seeded engine: device 1 first, then device 2.
    std::mt19937_64 eng(s.shadow_seed);
    std::normal_distribution<double> shadow(0.0, s.shadow_sigma_db);
    const double noise = noise_power_w(s);
    LinkBudget lb;
    for (int u = 0; u < 2; ++u) {
        auto& d = lb.dev[u];
        d.shadow_db = s.shadow_sigma_db > 0 ? shadow(eng) : 0.0;
        d.zeta = std::pow(s.distances_m[u], -s.pathloss_exp) * db_to_linear(d.shadow_db);
        d.mean_snr_per_watt = d.zeta / noise;
        d.pilot_snr = s.p_max_w * d.mean_snr_per_watt;
        auto [rho, err] = mmse_variances(d.pilot_snr, s.np_cu[u]);
        d.rho_sq = rho;
        d.sigma_e_sq = err;
    }
    return lb;
}

} // namespace rsma_sqp
