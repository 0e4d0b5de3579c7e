#pragma once

// Slot-level Monte-Carlo of the per-stream FCFS queues over sampled channels.

#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "rsma_sqp/channel.hpp"
#include "rsma_sqp/fbl.hpp"
#include "rsma_sqp/optimizer.hpp"
#include "rsma_sqp/scenario.hpp"
#include "rsma_sqp/snc.hpp"

namespace rsma_sqp {

enum class Sampling { ExactChannel, GaussianApprox };

inline const char* to_string(Sampling s) { return s == Sampling::ExactChannel ? "exact" : "gaussian-approx"; }

inline Sampling parse_sampling(const std::string& s) {
    if (s == "exact") return Sampling::ExactChannel;
    if (s == "gaussian-approx" || s == "gaussian") return Sampling::GaussianApprox;
    throw ConfigError("unknown sampling mode '" + s + "'");
}

struct SimConfig {
    std::uint64_t slots = 10'000'000;
    std::uint64_t seed = 1;
    std::uint64_t warmup_slots = 10'000;
    Sampling sampling = Sampling::ExactChannel;
    int batches = 50;          // batch-means groups for standard errors
    int sinr_bins = 100;       // SINR histogram resolution
    double sinr_hist_sigmas = 6.0;
};

/// splitmix64 step; used to derive independent stream seeds from one master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for worker `index` derived from `master`.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t st = master;
    std::uint64_t out = 0;
    for (std::uint64_t i = 0; i <= index; ++i) out = splitmix64(st);
    return out;
}

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::uint64_t> counts;
    std::uint64_t below = 0;
    std::uint64_t above = 0;

    Histogram() = default;
    Histogram(double l, double h, int bins) : lo(l), hi(h), counts(static_cast<std::size_t>(bins), 0) {}

    void add(double x) {
        if (counts.empty() || !(hi > lo)) return;
        if (x < lo) { ++below; return; }
        if (x >= hi) { ++above; return; }
        auto k = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(counts.size()));
        if (k >= counts.size()) k = counts.size() - 1;
        ++counts[k];
    }
    double width() const { return (hi - lo) / static_cast<double>(counts.size()); }
    std::uint64_t total() const {
        std::uint64_t t = below + above;
        for (auto c : counts) t += c;
        return t;
    }
};

/// L1 distance between a histogram (as a density) and a pdf, using the pdf's
/// bin averages from 15-point Kronrod panels. Out-of-range mass counts fully.
template <class Pdf>
double histogram_l1(const Histogram& h, Pdf&& pdf) {
    const double n = static_cast<double>(h.total());
    if (n == 0) return 2.0;
    const double w = h.width();
    double l1 = static_cast<double>(h.below + h.above) / n;
    double inside_model = 0.0;
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        const double a = h.lo + w * static_cast<double>(k);
        const double model = quad::kronrod_15(pdf, a, a + w);
        inside_model += model;
        l1 += std::abs(static_cast<double>(h.counts[k]) / n - model);
    }
    // Model mass outside the histogram window.
    l1 += std::max(0.0, 1.0 - inside_model);
    return l1;
}

struct StreamSimResult {
    StreamId stream = StreamId::X2;
    double lambda = 0.0;
    double b_bits = 0.0;
    double p_w = 0.0;
    std::uint64_t arrived_bits = 0;
    std::uint64_t departed_bits = 0;
    std::uint64_t backlog_bits = 0;
    std::uint64_t service_attempts = 0;
    std::uint64_t service_failures = 0;
    std::uint64_t measured_bits = 0;            // departed bits that arrived after warmup
    std::vector<std::uint64_t> delay_bits;      // delay_bits[d] = measured bits delayed d slots
    std::vector<std::vector<std::uint64_t>> batch_delay; // delay histogram per arrival batch
    std::vector<std::uint64_t> batch_bits;
    bool unstable = false;
    Histogram sinr_hist;

    double emp_dep() const {
        return service_attempts ? static_cast<double>(service_failures) / static_cast<double>(service_attempts) : 0.0;
    }
    double emp_dep_stderr() const {
        const double p = emp_dep();
        const double n = static_cast<double>(service_attempts);
        return n > 0 ? std::sqrt(std::max(p * (1 - p), 0.0) / n) : 0.0;
    }

    /// Bits with delay strictly greater than w.
    std::uint64_t tail_bits(int w) const {
        std::uint64_t acc = 0;
        for (std::size_t d = static_cast<std::size_t>(std::max(w + 1, 0)); d < delay_bits.size(); ++d) acc += delay_bits[d];
        return acc;
    }

    /// Fraction of measured bits with delay > w.
    double sim_sdvp(int w) const {
        return measured_bits ? static_cast<double>(tail_bits(w)) / static_cast<double>(measured_bits) : 0.0;
    }

    /// Batch-means standard error of sim_sdvp(w).
    double sim_sdvp_stderr(int w) const {
        std::vector<double> f;
        for (std::size_t b = 0; b < batch_bits.size(); ++b) {
            if (batch_bits[b] == 0) continue;
            std::uint64_t t = 0;
            const auto& h = batch_delay[b];
            for (std::size_t d = static_cast<std::size_t>(std::max(w + 1, 0)); d < h.size(); ++d) t += h[d];
            f.push_back(static_cast<double>(t) / static_cast<double>(batch_bits[b]));
        }
        if (f.size() < 2) return 0.0;
        double m = 0.0;
        for (double x : f) m += x;
        m /= static_cast<double>(f.size());
        double v = 0.0;
        for (double x : f) v += (x - m) * (x - m);
        v /= static_cast<double>(f.size() - 1);
        return std::sqrt(v / static_cast<double>(f.size()));
    }
};

struct SimResult {
    Scheme scheme = Scheme::Rsma;
    SimConfig cfg;
    std::vector<StreamSimResult> streams; // decoding order
    bool unstable = false;

    const StreamSimResult& at(StreamId q) const {
        for (const auto& s : streams)
            if (s.stream == q) return s;
        throw DomainError("stream not simulated");
    }
};

namespace sim_detail {

struct Batch {
    std::uint64_t slot;
    std::uint64_t bits;
};

inline void add_delay(std::vector<std::uint64_t>& h, std::uint64_t d, std::uint64_t bits) {
    if (h.size() <= d) h.resize(d + 1, 0);
    h[d] += bits;
}

inline constexpr std::uint64_t kBacklogLimit = std::uint64_t{1} << 48;

} // namespace sim_detail

/// Simulates every stream of the scheme at operating point `op`.
inline SimResult run_simulation(const Scenario& s, Scheme scheme, const OperatingPoint& op, const SimConfig& cfg) {
    if (cfg.slots <= cfg.warmup_slots) throw ConfigError("slots must exceed warmup_slots");
    const LinkBudget lb = derive_link_budget(s);
    const auto streams = decoding_order(scheme);
    const int nd = blocklength(s, scheme);

    std::uint64_t seed_state = cfg.seed;
    std::mt19937_64 chan_rng(splitmix64(seed_state));
    std::mt19937_64 arr_rng(splitmix64(seed_state));
    std::mt19937_64 svc_rng(splitmix64(seed_state));

    const ExactSampler exact(s, lb, scheme, op.p);
    const auto laws = build_sinr_distributions(s, lb, scheme, op.p);
    const GaussianSampler approx(laws, scheme);

    SimResult res;
    res.scheme = scheme;
    res.cfg = cfg;
    const std::size_t n = streams.size();
    std::vector<std::deque<sim_detail::Batch>> fifo(n);
    std::vector<std::poisson_distribution<std::uint64_t>> arrivals;
    std::vector<CodingPoint> cps;
    for (StreamId q : streams) {
        StreamSimResult r;
        r.stream = q;
        r.lambda = arrival_bits_per_slot(s, q, op.alpha);
        r.b_bits = op.b[q];
        r.p_w = op.p[q];
        r.batch_delay.resize(static_cast<std::size_t>(cfg.batches));
        r.batch_bits.assign(static_cast<std::size_t>(cfg.batches), 0);
        // Histogram window around the analytic law.
        const auto [slo, shi] = laws[q].support();
        double mu = 0.0;
        double sd = 0.0;
        if (laws[q].point_mass()) {
            mu = slo;
        } else {
            mu = laws[q].mean();
            const double m2 = laws[q].expect([mu](double x) { return (x - mu) * (x - mu); });
            sd = std::sqrt(std::max(m2, 0.0));
        }
        const double hw = sd > 0 ? cfg.sinr_hist_sigmas * sd : std::max(1e-9, 1e-9 * mu);
        r.sinr_hist = Histogram(std::max(0.0, mu - hw), mu + hw, cfg.sinr_bins);
        res.streams.push_back(std::move(r));
        arrivals.emplace_back(std::max(res.streams.back().lambda, 1e-300));
        cps.push_back({op.b[q], nd});
    }

    const std::uint64_t measured_slots = cfg.slots - cfg.warmup_slots;
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (std::uint64_t t = 0; t < cfg.slots; ++t) {
        const PerStream<double> sinr =
            cfg.sampling == Sampling::ExactChannel ? exact(chan_rng) : approx(chan_rng);
        for (std::size_t i = 0; i < n; ++i) {
            auto& r = res.streams[i];
            const StreamId q = streams[i];
            if (r.lambda > 0) {
                const std::uint64_t a = arrivals[i](arr_rng);
                if (a > 0) {
                    fifo[i].push_back({t, a});
                    r.arrived_bits += a;
                    r.backlog_bits += a;
                }
            }
            r.sinr_hist.add(sinr[q]);
            const double err = dep_instant(cps[i], std::max(0.0, sinr[q]));
            ++r.service_attempts;
            const bool success = unif(svc_rng) >= err;
            if (!success) {
                ++r.service_failures;
            } else {
                auto budget = static_cast<std::uint64_t>(std::floor(op.b[q]));
                while (budget > 0 && !fifo[i].empty()) {
                    auto& head = fifo[i].front();
                    const std::uint64_t take = std::min(budget, head.bits);
                    head.bits -= take;
                    budget -= take;
                    r.departed_bits += take;
                    r.backlog_bits -= take;
                    if (head.slot >= cfg.warmup_slots) {
                        const std::uint64_t d = t - head.slot;
                        const auto hb = static_cast<std::size_t>(
                            (head.slot - cfg.warmup_slots) * static_cast<std::uint64_t>(cfg.batches) / measured_slots);
                        r.measured_bits += take;
                        sim_detail::add_delay(r.delay_bits, d, take);
                        sim_detail::add_delay(r.batch_delay[hb], d, take);
                        r.batch_bits[hb] += take;
                    }
                    if (head.bits == 0) fifo[i].pop_front();
                }
            }
            if (r.backlog_bits > sim_detail::kBacklogLimit) {
                r.unstable = true;
                res.unstable = true;
            }
        }
        if (res.unstable) break;
    }
    return res;
}

// ---- bound validation ------------------------------------------------------

struct ValidationRow {
    int w = 0;
    double ub = 1.0;
    double sim = 0.0;
    double stderr_ = 0.0;
    std::uint64_t tail_bits = 0;
    bool censored = false;     // no tail events observed
    bool checked = false;      // at least 100 tail events; bound compared here
    bool well_sampled = false; // sim >= 100 / slots; used for the slope fit
    bool holds = true;
};

struct StreamValidation {
    StreamId stream = StreamId::X2;
    double lambda = 0.0;
    double b_bits = 0.0;
    double dep_analytic = 0.0;
    double dep_empirical = 0.0;
    double dep_empirical_stderr = 0.0;
    std::vector<ValidationRow> rows;
    double slope_ub = 0.0;
    double slope_sim = 0.0;
    int fit_points = 0;
    bool bound_holds = true;

    double slope_rel_diff() const {
        return slope_sim != 0.0 ? std::abs(slope_ub - slope_sim) / std::abs(slope_sim)
                                : std::numeric_limits<double>::infinity();
    }
};

struct ValidationReport {
    Scheme scheme = Scheme::Rsma;
    std::vector<StreamValidation> streams;
    HHatMode::Kind h_hat_mode = HHatMode::Kind::MeanPower;
    bool bound_holds = true;
};

/// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    if (x.size() < 2) return 0.0;
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

/// Compares the analytic bound with simulated delay tails for w = 1..w_max.
/// The bound is checked wherever at least 100 tail bits were seen; log10
/// slopes are fitted where additionally sim >= 100 / slots.
inline ValidationReport validate_bound(const Scenario& s, Scheme scheme, const OperatingPoint& op, const SimResult& sim,
                                       int w_max) {
    const StreamEvaluator ev(s, scheme);
    ValidationReport rep;
    rep.scheme = scheme;
    rep.h_hat_mode = s.h_hat.kind;
    const double floor_frac = 100.0 / static_cast<double>(sim.cfg.slots);
    for (const auto& sr : sim.streams) {
        StreamValidation v;
        v.stream = sr.stream;
        v.lambda = sr.lambda;
        v.b_bits = sr.b_bits;
        v.dep_analytic = ev.dep(sr.stream, op);
        v.dep_empirical = sr.emp_dep();
        v.dep_empirical_stderr = sr.emp_dep_stderr();
        std::vector<double> xs;
        std::vector<double> yu;
        std::vector<double> ys;
        for (int w = 1; w <= w_max; ++w) {
            SncKernel k = ev.kernel(sr.stream, op, v.dep_analytic);
            k.w_th_slots = w;
            ValidationRow row;
            row.w = w;
            row.ub = ub_sdvp(k, s.algo).value;
            row.tail_bits = sr.tail_bits(w);
            row.sim = sr.sim_sdvp(w);
            row.stderr_ = sr.sim_sdvp_stderr(w);
            row.censored = row.tail_bits == 0;
            row.checked = row.tail_bits >= 100;
            row.well_sampled = row.checked && row.sim >= floor_frac;
            row.holds = row.ub >= row.sim - 3.0 * row.stderr_;
            if (row.checked) v.bound_holds = v.bound_holds && row.holds;
            if (row.well_sampled && row.ub > 0 && row.ub < 1) {
                xs.push_back(w);
                yu.push_back(std::log10(row.ub));
                ys.push_back(std::log10(row.sim));
            }
            v.rows.push_back(row);
        }
        v.fit_points = static_cast<int>(xs.size());
        v.slope_ub = ls_slope(xs, yu);
        v.slope_sim = ls_slope(xs, ys);
        rep.bound_holds = rep.bound_holds && v.bound_holds;
        rep.streams.push_back(std::move(v));
    }
    return rep;
}

} // namespace rsma_sqp
