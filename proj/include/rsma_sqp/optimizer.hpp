#pragma once

// Sequential per-stream bisection for the packet-size (P1) and power (P2)
// problems, solved in reverse SIC decoding order.

#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rsma_sqp/channel.hpp"
#include "rsma_sqp/fbl.hpp"
#include "rsma_sqp/scenario.hpp"
#include "rsma_sqp/snc.hpp"

namespace rsma_sqp {

enum class ProblemKind { P1MaxPacket, P2MinPower };

inline const char* to_string(ProblemKind k) { return k == ProblemKind::P1MaxPacket ? "p1" : "p2"; }

inline ProblemKind parse_problem(const std::string& s) {
    if (s == "p1" || s == "P1") return ProblemKind::P1MaxPacket;
    if (s == "p2" || s == "P2") return ProblemKind::P2MinPower;
    throw ConfigError("unknown problem '" + s + "'");
}

enum class Binding { None, Sdvp, Dep, Both };

inline const char* to_string(Binding b) {
    switch (b) {
    case Binding::None: return "none";
    case Binding::Sdvp: return "sdvp";
    case Binding::Dep: return "dep";
    case Binding::Both: return "sdvp+dep";
    }
    return "?";
}

/// Decision variables for every stream of a scheme.
struct OperatingPoint {
    PerStream<double> b;
    PowerVector p;
    double alpha = 0.5;
};

struct StreamEval {
    double xi = 1.0;
    double dep = 1.0;
    SdvpBound bound;
    double lambda = 0.0;
    bool sdvp_ok = false;
    bool dep_ok = false;

    bool ok() const { return sdvp_ok && dep_ok; }
    Binding binding() const {
        if (sdvp_ok && dep_ok) return Binding::None;
        if (!sdvp_ok && !dep_ok) return Binding::Both;
        return sdvp_ok ? Binding::Dep : Binding::Sdvp;
    }
};

/// Evaluates one stream's constraints at an operating point.
class StreamEvaluator {
public:
    StreamEvaluator(Scenario s, Scheme scheme) : s_(std::move(s)), lb_(derive_link_budget(s_)), scheme_(scheme) {}

    const Scenario& scenario() const { return s_; }
    const LinkBudget& link_budget() const { return lb_; }
    Scheme scheme() const { return scheme_; }

    double dep(StreamId q, const OperatingPoint& op) const {
        const auto laws = build_sinr_distributions(s_, lb_, scheme_, op.p);
        return dep_expected({op.b[q], blocklength(s_, scheme_)}, laws[q]);
    }

    SncKernel kernel(StreamId q, const OperatingPoint& op, double dep) const {
        return {{arrival_bits_per_slot(s_, q, op.alpha)}, {op.b[q], dep}, target_for(s_, q).w_th_slots};
    }

    StreamEval operator()(StreamId q, const OperatingPoint& op) const {
        StreamEval e;
        const QosTarget t = target_for(s_, q);
        e.dep = dep(q, op);
        const SncKernel k = kernel(q, op, e.dep);
        e.lambda = k.arrival.lambda_dag;
        e.bound = ub_sdvp(k, s_.algo);
        e.xi = e.bound.value;
        // Constraints are non-strict: equality counts as satisfied.
        e.sdvp_ok = e.xi <= t.xi_th;
        e.dep_ok = e.dep <= t.eps_th;
        return e;
    }

private:
    Scenario s_;
    LinkBudget lb_;
    Scheme scheme_;
};

struct TraceRow {
    int k = 0;
    double iterate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double xi = 0.0;
    double dep = 0.0;
    bool feasible = false;
};

struct StreamSolution {
    StreamId stream = StreamId::X2;
    bool feasible = false;
    Binding binding = Binding::None;
    double b_bits = 0.0;     // continuous bisection result (P1) or the fixed size (P2)
    double b_int = 0.0;      // reported integer packet size
    double p_w = 0.0;
    double theta_star = 0.0;
    double achieved_xi = 1.0;
    double achieved_dep = 1.0;
    int iterations = 0;
    bool ratio_stop = false; // stopped on the threshold-ratio test rather than bracket width
    std::vector<TraceRow> trace;
};

struct TssoOptions {
    std::optional<double> fixed_power; // P1: common power for every stream (default p_max)
    std::optional<double> fixed_bits;  // P2: common packet size (default b_min)
    int max_alpha_passes = 5;
    double p2_width_w = 1e-6;
    double p1_width_bits = 1.0;
    int p1_probe_points = 16;
};

struct TssoResult {
    Scheme scheme = Scheme::Rsma;
    ProblemKind kind = ProblemKind::P1MaxPacket;
    std::vector<StreamSolution> streams; // solve order
    OperatingPoint point;                // the operating point the solutions were evaluated at
    double alpha_star = std::numeric_limits<double>::quiet_NaN();
    int alpha_passes = 0;
    bool alpha_converged = true;

    bool all_feasible() const {
        for (const auto& s : streams)
            if (!s.feasible) return false;
        return true;
    }
    double sum_bits() const {
        double acc = 0.0;
        for (const auto& s : streams) acc += s.b_int;
        return acc;
    }
    double sum_power() const {
        double acc = 0.0;
        for (const auto& s : streams) acc += s.p_w;
        return acc;
    }
    const StreamSolution& at(StreamId q) const {
        for (const auto& s : streams)
            if (s.stream == q) return s;
        throw DomainError("stream not part of this scheme");
    }
};

struct FeasibilityReport {
    bool feasible = false;
    Binding binding = Binding::None;
    StreamEval eval;
};

/// Constraint check at the favourable extreme of the stream's decision
/// variable: B_min for P1, p_max for P2. Other streams keep their values in `op`.
inline FeasibilityReport feasibility_check(const StreamEvaluator& ev, ProblemKind kind, StreamId q, OperatingPoint op) {
    const Scenario& s = ev.scenario();
    if (kind == ProblemKind::P1MaxPacket) op.b[q] = s.b_min_bits;
    else op.p[q] = s.p_max_w;
    FeasibilityReport r;
    r.eval = ev(q, op);
    r.feasible = r.eval.ok();
    r.binding = r.eval.binding();
    return r;
}

namespace optimizer_detail {

inline bool ratio_met(const StreamEval& e, const QosTarget& t, double pi_th) {
    return e.ok() && (std::abs(e.xi / t.xi_th - 1.0) <= pi_th || std::abs(e.dep / t.eps_th - 1.0) <= pi_th);
}

inline void record(StreamSolution& sol, const StreamEval& e) {
    sol.achieved_xi = e.xi;
    sol.achieved_dep = e.dep;
    sol.theta_star = e.bound.theta_star;
}

// Largest packet size meeting both constraints for stream q at fixed powers.
inline StreamSolution solve_p1_stream(const StreamEvaluator& ev, StreamId q, OperatingPoint& op, const TssoOptions& o) {
    const Scenario& s = ev.scenario();
    const QosTarget t = target_for(s, q);
    StreamSolution sol;
    sol.stream = q;
    sol.p_w = op.p[q];

    auto eval_at = [&](double b) {
        OperatingPoint x = op;
        x.b[q] = b;
        return ev(q, x);
    };

    double lower = s.b_min_bits;
    StreamEval e = eval_at(lower);
    if (!e.ok()) {
        sol.binding = e.binding();
        // A queue that is unstable at B_min may stabilise at larger packets, so
        // probe upward before declaring infeasibility. DEP only grows with B.
        bool found = false;
        if (e.dep_ok) {
            for (int k = 1; k <= o.p1_probe_points && !found; ++k) {
                const double b = s.b_min_bits + (s.b_max_bits - s.b_min_bits) * k / o.p1_probe_points;
                const StreamEval pe = eval_at(b);
                if (pe.ok()) {
                    lower = b;
                    e = pe;
                    found = true;
                } else if (!pe.dep_ok) {
                    break;
                }
            }
        }
        if (!found) {
            sol.feasible = false;
            sol.b_bits = sol.b_int = s.b_min_bits;
            record(sol, e);
            op.b[q] = s.b_min_bits;
            return sol;
        }
    }

    double upper = s.b_max_bits;
    double accepted = lower;
    for (int k = 1; k <= s.algo.m_iter && upper - lower > o.p1_width_bits; ++k) {
        const double mid = 0.5 * (lower + upper);
        const StreamEval me = eval_at(mid);
        if (me.ok()) lower = mid;
        else upper = mid;
        sol.iterations = k;
        sol.trace.push_back({k, mid, lower, upper, me.xi, me.dep, me.ok()});
        if (ratio_met(me, t, s.algo.pi_th)) {
            sol.ratio_stop = true;
            break;
        }
    }
    accepted = lower;
    sol.b_bits = accepted;

    // Integer packet size: floor, then step up while the next bit still fits.
    double b = std::floor(accepted);
    if (b < s.b_min_bits) b = std::ceil(s.b_min_bits);
    StreamEval be = eval_at(b);
    while (b + 1 <= s.b_max_bits) {
        const StreamEval next = eval_at(b + 1);
        if (!next.ok()) break;
        b += 1;
        be = next;
    }
    sol.b_int = b;
    sol.feasible = be.ok();
    sol.binding = be.binding();
    record(sol, be);
    op.b[q] = b;
    return sol;
}

// Smallest power meeting both constraints for stream q at fixed packet sizes.
inline StreamSolution solve_p2_stream(const StreamEvaluator& ev, StreamId q, OperatingPoint& op, const TssoOptions& o) {
    const Scenario& s = ev.scenario();
    const QosTarget t = target_for(s, q);
    StreamSolution sol;
    sol.stream = q;
    sol.b_bits = sol.b_int = op.b[q];

    auto eval_at = [&](double p) {
        OperatingPoint x = op;
        x.p[q] = p;
        return ev(q, x);
    };

    const StreamEval top = eval_at(s.p_max_w);
    if (!top.ok()) {
        sol.feasible = false;
        sol.binding = top.binding();
        sol.p_w = s.p_max_w;
        record(sol, top);
        op.p[q] = s.p_max_w;
        return sol;
    }

    double lower = 0.0;
    double upper = s.p_max_w;
    StreamEval best = top;
    for (int k = 1; k <= s.algo.m_iter && upper - lower > o.p2_width_w; ++k) {
        const double mid = 0.5 * (lower + upper);
        const StreamEval me = eval_at(mid);
        if (me.ok()) {
            upper = mid;
            best = me;
        } else {
            lower = mid;
        }
        sol.iterations = k;
        sol.trace.push_back({k, mid, lower, upper, me.xi, me.dep, me.ok()});
        if (ratio_met(me, t, s.algo.pi_th)) {
            sol.ratio_stop = true;
            break;
        }
    }
    sol.p_w = upper;
    sol.feasible = true;
    sol.binding = best.binding();
    record(sol, best);
    op.p[q] = upper;
    return sol;
}

} // namespace optimizer_detail

/// Three-step sequential optimization for one scheme.
inline TssoResult tsso(const Scenario& s, Scheme scheme, ProblemKind kind, const TssoOptions& o = {}) {
    const StreamEvaluator ev(s, scheme);
    TssoResult r;
    r.scheme = scheme;
    r.kind = kind;
    const auto order = solve_order(scheme);

    OperatingPoint op;
    if (kind == ProblemKind::P1MaxPacket) {
        const double p = o.fixed_power.value_or(s.p_max_w);
        if (!(p >= 0 && p <= s.p_max_w)) throw ConfigError("fixed power outside [0, p_max]");
        op.p = uniform_power(p);
        op.b.v.fill(s.b_min_bits);
        op.alpha = 0.5;
        // The arrival split follows the packet split; iterate to a fixed point.
        for (int pass = 1; pass <= std::max(1, o.max_alpha_passes); ++pass) {
            r.streams.clear();
            for (StreamId q : order) r.streams.push_back(optimizer_detail::solve_p1_stream(ev, q, op, o));
            r.alpha_passes = pass;
            if (scheme != Scheme::Rsma) break;
            const double b11 = op.b[StreamId::X11];
            const double b12 = op.b[StreamId::X12];
            const double next = b11 / (b11 + b12);
            if (next == op.alpha) {
                r.alpha_converged = true;
                break;
            }
            r.alpha_converged = false;
            if (pass == std::max(1, o.max_alpha_passes)) break;
            op.alpha = next;
        }
        if (scheme == Scheme::Rsma) {
            const double b11 = op.b[StreamId::X11];
            const double b12 = op.b[StreamId::X12];
            r.alpha_star = b11 / (b11 + b12);
        }
    } else {
        const double b = o.fixed_bits.value_or(s.b_min_bits);
        if (!(b >= s.b_min_bits && b <= s.b_max_bits)) throw ConfigError("fixed packet size outside [b_min, b_max]");
        op.b.v.fill(b);
        op.p = uniform_power(s.p_max_w);
        op.alpha = 0.5;
        // Every interferer of a stream comes later in decoding order and is
        // therefore already fixed when the stream is solved.
        for (StreamId q : order) r.streams.push_back(optimizer_detail::solve_p2_stream(ev, q, op, o));
        r.alpha_passes = 1;
        if (scheme == Scheme::Rsma) r.alpha_star = 0.5;
    }
    r.point = op;
    return r;
}

/// Runs tsso for RSMA, NOMA and OMA concurrently; results in that order.
inline std::vector<TssoResult> compare_schemes(const Scenario& s, ProblemKind kind, const TssoOptions& o = {}) {
    std::vector<std::future<TssoResult>> jobs;
    for (Scheme sc : {Scheme::Rsma, Scheme::Noma, Scheme::Oma}) {
        jobs.push_back(std::async(std::launch::async, [&s, sc, kind, &o] { return tsso(s, sc, kind, o); }));
    }
    std::vector<TssoResult> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

/// Per-stream powers at which each stream's expected DEP equals `target_dep`
/// for the given packet sizes, solved in reverse decoding order by bisection
/// on log power. Streams that cannot reach the target get p_max.
inline PowerVector calibrate_powers(const Scenario& s, Scheme scheme, const PerStream<double>& bits, double target_dep) {
    const StreamEvaluator ev(s, scheme);
    OperatingPoint op;
    op.b = bits;
    op.p = uniform_power(s.p_max_w);
    for (StreamId q : solve_order(scheme)) {
        if (ev.dep(q, op) > target_dep) continue;
        double lo = std::log(s.p_max_w) - 60.0;
        double hi = std::log(s.p_max_w);
        for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
            const double mid = 0.5 * (lo + hi);
            op.p[q] = std::exp(mid);
            (ev.dep(q, op) > target_dep ? lo : hi) = mid;
        }
        op.p[q] = std::exp(0.5 * (lo + hi));
    }
    return op.p;
}

} // namespace rsma_sqp
