#pragma once

// Subcommand implementations. Each builds a RunManifest of CSV tables; the
// caller decides whether to write it.

#include <algorithm>
#include <cmath>
#include <future>
#include <string>
#include <vector>

#include "report.hpp"

#include "rsma_sqp/channel.hpp"
#include "rsma_sqp/config.hpp"
#include "rsma_sqp/fbl.hpp"
#include "rsma_sqp/optimizer.hpp"
#include "rsma_sqp/scenario.hpp"
#include "rsma_sqp/simulator.hpp"
#include "rsma_sqp/snc.hpp"

namespace rsma_sqp::tool {

// ---- flag parsing ----------------------------------------------------------

/// Accepts integers written as "1000000" or "1e6".
inline std::uint64_t parse_count(const std::string& s) {
    double v = 0.0;
    try {
        std::size_t pos = 0;
        v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
        throw ConfigError("expected a count, got '" + s + "'");
    }
    if (!(v >= 0) || v != std::floor(v) || v > 1.8e19) throw ConfigError("expected a non-negative integer, got '" + s + "'");
    return static_cast<std::uint64_t>(v);
}

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad number '" + item + "' in list '" + s + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

/// START:STOP[:STEP]. STEP defaults to 1; a leading 'x' makes it a ratio
/// (geometric sweep). STOP is included when hit within rounding.
inline std::vector<double> parse_range(const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        const auto c = s.find(':', start);
        parts.push_back(s.substr(start, c == std::string::npos ? std::string::npos : c - start));
        if (c == std::string::npos) break;
        start = c + 1;
    }
    if (parts.size() < 2 || parts.size() > 3) throw ConfigError("range must be START:STOP[:STEP], got '" + s + "'");
    const double a = parse_list(parts[0]).at(0);
    const double b = parse_list(parts[1]).at(0);
    bool geometric = false;
    double step = 1.0;
    if (parts.size() == 3) {
        std::string st = parts[2];
        if (!st.empty() && st[0] == 'x') {
            geometric = true;
            st = st.substr(1);
        }
        step = parse_list(st).at(0);
    }
    std::vector<double> out;
    if (geometric) {
        if (!(a > 0) || !(step > 1) || b < a) throw ConfigError("geometric range needs 0 < START <= STOP and ratio > 1");
        for (int k = 0;; ++k) {
            const double v = a * std::pow(step, k);
            if (v > b * (1 + 1e-9)) break;
            out.push_back(v);
        }
    } else {
        if (!(step > 0) || b < a) throw ConfigError("range needs START <= STOP and STEP > 0");
        const auto n = static_cast<long long>(std::floor((b - a) / step + 1e-9));
        for (long long k = 0; k <= n; ++k) out.push_back(a + static_cast<double>(k) * step);
    }
    return out;
}

inline std::vector<Scheme> parse_schemes(const std::string& s) {
    if (s == "all") return {Scheme::Rsma, Scheme::Noma, Scheme::Oma};
    return {parse_scheme(s)};
}

// ---- shared inputs ---------------------------------------------------------

struct PointArgs {
    std::string bits;            // comma list in decoding order, or one value for all
    std::string power;           // same
    double alpha = 0.5;
    double calibrate_dep = 0.0;  // > 0: choose powers so each stream hits this DEP
};

inline OperatingPoint make_point(const Scenario& s, Scheme scheme, const PointArgs& a) {
    const auto streams = decoding_order(scheme);
    auto fill = [&](const std::string& text, double dflt, const char* what) {
        PerStream<double> v;
        v.v.fill(dflt);
        if (text.empty()) return v;
        const auto xs = parse_list(text);
        if (xs.size() == 1) {
            for (StreamId q : streams) v[q] = xs[0];
        } else if (xs.size() == streams.size()) {
            for (std::size_t i = 0; i < xs.size(); ++i) v[streams[i]] = xs[i];
        } else {
            throw ConfigError(std::string("--") + what + " needs 1 or " + std::to_string(streams.size()) +
                              " values (decoding order)");
        }
        return v;
    };
    OperatingPoint op;
    op.b = fill(a.bits, s.b_min_bits, "bits");
    op.p = fill(a.power, s.p_max_w, "power");
    op.alpha = a.alpha;
    if (!(a.alpha >= 0 && a.alpha <= 1)) throw ConfigError("--alpha must lie in [0, 1]");
    for (StreamId q : streams) {
        if (!(op.b[q] >= 1)) throw ConfigError("packet sizes must be >= 1 bit");
        if (!(op.p[q] >= 0 && op.p[q] <= s.p_max_w)) throw ConfigError("powers must lie in [0, p_max]");
    }
    if (a.calibrate_dep > 0) {
        if (!(a.calibrate_dep < 1)) throw ConfigError("--calibrate-dep must lie in (0, 1)");
        op.p = calibrate_powers(s, scheme, op.b, a.calibrate_dep);
    }
    return op;
}

inline nlohmann::json point_json(const PointArgs& a) {
    return {{"bits", a.bits}, {"power", a.power}, {"alpha", a.alpha}, {"calibrate_dep", a.calibrate_dep}};
}

inline std::vector<int> w_values(const std::string& range) {
    std::vector<int> out;
    for (double v : parse_range(range)) {
        if (v < 0 || v != std::floor(v)) throw ConfigError("w range must contain non-negative integers");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

// ---- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
    std::string scheme = "rsma";
    PointArgs point;
    std::string w_range = "1:20";
};

inline RunManifest cmd_analyze(const Scenario& s, const AnalyzeArgs& a) {
    RunManifest m("analyze", to_text(s), 0,
                  {{"scheme", a.scheme}, {"point", point_json(a.point)}, {"w_range", a.w_range}});
    CsvTable t({"scheme", "stream", "w_slots", "ub_sdvp", "theta_star", "theta_max", "dep", "lambda_bits", "b_bits",
                "p_w", "flag"});
    const auto ws = w_values(a.w_range);
    for (Scheme sc : parse_schemes(a.scheme)) {
        const OperatingPoint op = make_point(s, sc, a.point);
        const StreamEvaluator ev(s, sc);
        for (StreamId q : decoding_order(sc)) {
            const double dep = ev.dep(q, op);
            for (int w : ws) {
                SncKernel k = ev.kernel(q, op, dep);
                k.w_th_slots = w;
                const SdvpBound b = ub_sdvp(k, s.algo);
                const char* flag = !b.feasible ? "UNSTABLE" : b.underflow ? "UNDERFLOW" : "OK";
                t.row({to_string(sc), to_string(q), std::to_string(w), fmt(b.value), fmt(b.theta_star),
                       fmt(b.theta_max), fmt(dep), fmt(k.arrival.lambda_dag), fmt(op.b[q]), fmt(op.p[q]), flag});
            }
        }
    }
    m.add("analyze.csv", std::move(t));
    return m;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
    std::string scheme = "rsma";
    PointArgs point;
    std::string w_range = "1:20";
    std::uint64_t slots = 1'000'000;
    std::uint64_t seed = 1;
    std::uint64_t warmup = 10'000;
    std::string sampling = "exact";
};

inline SimConfig sim_config(const SimulateArgs& a) {
    SimConfig c;
    c.slots = a.slots;
    c.seed = a.seed;
    c.warmup_slots = std::min<std::uint64_t>(a.warmup, a.slots / 2);
    c.sampling = parse_sampling(a.sampling);
    return c;
}

inline nlohmann::json sim_json(const SimulateArgs& a) {
    return {{"scheme", a.scheme}, {"point", point_json(a.point)}, {"w_range", a.w_range}, {"slots", a.slots},
            {"warmup", a.warmup}, {"sampling", a.sampling}};
}

inline RunManifest cmd_simulate(const Scenario& s, const SimulateArgs& a) {
    RunManifest m("simulate", to_text(s), a.seed, sim_json(a));
    CsvTable curve({"scheme", "stream", "w_slots", "sim_sdvp", "stderr", "ub_sdvp", "tail_bits", "censored"});
    CsvTable summary({"scheme", "stream", "lambda_bits", "b_bits", "p_w", "arrived_bits", "departed_bits",
                      "backlog_bits", "emp_dep", "emp_dep_stderr", "dep_expected", "status"});
    const auto ws = w_values(a.w_range);
    const SimConfig cfg = sim_config(a);
    std::uint64_t idx = 0;
    for (Scheme sc : parse_schemes(a.scheme)) {
        const OperatingPoint op = make_point(s, sc, a.point);
        SimConfig c = cfg;
        c.seed = split_seed(a.seed, idx++);
        const SimResult r = run_simulation(s, sc, op, c);
        const StreamEvaluator ev(s, sc);
        for (const auto& sr : r.streams) {
            const double dep = ev.dep(sr.stream, op);
            for (int w : ws) {
                SncKernel k = ev.kernel(sr.stream, op, dep);
                k.w_th_slots = w;
                const auto tail = sr.tail_bits(w);
                curve.row({to_string(sc), to_string(sr.stream), std::to_string(w), fmt(sr.sim_sdvp(w)),
                           fmt(sr.sim_sdvp_stderr(w)), fmt(ub_sdvp(k, s.algo).value), std::to_string(tail),
                           tail == 0 ? "1" : "0"});
            }
            summary.row({to_string(sc), to_string(sr.stream), fmt(sr.lambda), fmt(sr.b_bits), fmt(sr.p_w),
                         std::to_string(sr.arrived_bits), std::to_string(sr.departed_bits),
                         std::to_string(sr.backlog_bits), fmt(sr.emp_dep()), fmt(sr.emp_dep_stderr()), fmt(dep),
                         sr.unstable ? "UNSTABLE" : "OK"});
        }
    }
    m.add("simulate_" + a.sampling + ".csv", std::move(curve));
    m.add("simulate_summary_" + a.sampling + ".csv", std::move(summary));
    return m;
}

// ---- optimize --------------------------------------------------------------

struct OptimizeArgs {
    std::string scheme = "rsma";
    std::string problem = "p1";
};

inline void solution_rows(CsvTable& t, const TssoResult& r, const std::string& axis = "", double value = NAN) {
    const bool swept = !axis.empty();
    for (const auto& sol : r.streams) {
        std::vector<std::string> row;
        if (swept) {
            row.push_back(axis);
            row.push_back(fmt(value));
        }
        const std::vector<std::string> rest = {to_string(r.scheme), to_string(r.kind), to_string(sol.stream),
                                               sol.feasible ? "OK" : "INFEASIBLE", to_string(sol.binding),
                                               fmt(sol.b_bits), fmt(sol.b_int), fmt(sol.p_w), fmt(sol.theta_star),
                                               fmt(sol.achieved_xi), fmt(sol.achieved_dep),
                                               std::to_string(sol.iterations)};
        row.insert(row.end(), rest.begin(), rest.end());
        t.row(std::move(row));
    }
}

inline std::vector<std::string> solution_header() {
    return {"scheme", "problem", "stream", "status", "binding", "b_bits", "b_int", "p_w", "theta_star",
            "achieved_xi", "achieved_dep", "iterations"};
}

inline RunManifest cmd_optimize(const Scenario& s, const OptimizeArgs& a) {
    RunManifest m("optimize", to_text(s), 0, {{"scheme", a.scheme}, {"problem", a.problem}});
    const ProblemKind kind = parse_problem(a.problem);
    CsvTable sol(solution_header());
    CsvTable alpha({"scheme", "problem", "alpha_star", "alpha_passes", "alpha_converged", "sum_bits", "sum_power_w"});
    CsvTable trace({"scheme", "problem", "stream", "k", "iterate", "lower", "upper", "xi", "dep", "feasible"});
    const auto schemes = parse_schemes(a.scheme);
    std::vector<std::future<TssoResult>> jobs;
    for (Scheme sc : schemes) jobs.push_back(std::async(std::launch::async, [&s, sc, kind] { return tsso(s, sc, kind); }));
    for (auto& j : jobs) {
        const TssoResult r = j.get();
        solution_rows(sol, r);
        alpha.row({to_string(r.scheme), to_string(kind), fmt(r.alpha_star), std::to_string(r.alpha_passes),
                   r.alpha_converged ? "1" : "0", fmt(r.sum_bits()), fmt(r.sum_power())});
        for (const auto& st : r.streams)
            for (const auto& row : st.trace)
                trace.row({to_string(r.scheme), to_string(kind), to_string(st.stream), std::to_string(row.k),
                           fmt(row.iterate), fmt(row.lower), fmt(row.upper), fmt(row.xi), fmt(row.dep),
                           row.feasible ? "1" : "0"});
    }
    m.add("optimize_" + a.problem + ".csv", std::move(sol));
    m.add("optimize_" + a.problem + "_summary.csv", std::move(alpha));
    m.add("trace_" + a.problem + ".csv", std::move(trace));
    return m;
}

// ---- compare ---------------------------------------------------------------

struct CompareArgs {
    std::string problem = "p1";
    std::string sweep = "w_th=1:1:1"; // AXIS=START:STOP:STEP
};

/// Scenario with the swept QoS field overridden for every stream.
inline Scenario with_axis(Scenario s, const std::string& axis, double v) {
    s.qos_override.clear();
    if (axis == "w_th") s.qos.w_th_slots = slots_from_ms(s, v);
    else if (axis == "xi_th") s.qos.xi_th = v;
    else if (axis == "eps_th") s.qos.eps_th = v;
    else throw ConfigError("sweep axis must be w_th, xi_th or eps_th");
    validate(s);
    return s;
}

inline RunManifest cmd_compare(const Scenario& s, const CompareArgs& a) {
    RunManifest m("compare", to_text(s), 0, {{"problem", a.problem}, {"sweep", a.sweep}});
    const ProblemKind kind = parse_problem(a.problem);
    const auto eq = a.sweep.find('=');
    if (eq == std::string::npos) throw ConfigError("--sweep must be AXIS=START:STOP:STEP");
    const std::string axis = a.sweep.substr(0, eq);
    const auto values = parse_range(a.sweep.substr(eq + 1));
    for (double v : values) with_axis(s, axis, v); // fail fast on bad values

    std::vector<std::future<std::vector<TssoResult>>> jobs;
    for (double v : values) {
        jobs.push_back(std::async(std::launch::async, [&s, &axis, v, kind] {
            return compare_schemes(with_axis(s, axis, v), kind);
        }));
    }
    CsvTable table({"axis", "value", "scheme", "objective", "all_feasible"});
    auto header = solution_header();
    header.insert(header.begin(), {"axis", "value"});
    CsvTable detail(header);
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (const auto& r : jobs[i].get()) {
            const double obj = kind == ProblemKind::P1MaxPacket ? r.sum_bits() : r.sum_power();
            table.row({axis, fmt(values[i]), to_string(r.scheme), fmt(obj), r.all_feasible() ? "1" : "0"});
            solution_rows(detail, r, axis, values[i]);
        }
    }
    m.add("compare_" + a.problem + "_" + axis + ".csv", std::move(table));
    m.add("compare_" + a.problem + "_" + axis + "_streams.csv", std::move(detail));
    return m;
}

// ---- validate --------------------------------------------------------------

inline RunManifest cmd_validate(const Scenario& s, const SimulateArgs& a) {
    RunManifest m("validate", to_text(s), a.seed, sim_json(a));
    CsvTable rows({"scheme", "stream", "w_slots", "ub_sdvp", "sim_sdvp", "stderr", "tail_bits", "checked",
                   "well_sampled", "holds"});
    CsvTable summary({"scheme", "stream", "lambda_bits", "b_bits", "p_w", "dep_analytic", "dep_empirical",
                      "dep_empirical_stderr", "slope_ub", "slope_sim", "slope_rel_diff", "fit_points", "bound_holds",
                      "sinr_pdf_l1", "h_hat_mode", "sampling"});
    const auto ws = w_values(a.w_range);
    const int w_max = ws.empty() ? 0 : *std::max_element(ws.begin(), ws.end());
    const SimConfig cfg = sim_config(a);
    const char* mode = s.h_hat.kind == HHatMode::Kind::MeanPower ? "mean_power"
                       : s.h_hat.kind == HHatMode::Kind::Fixed   ? "fixed"
                                                                 : "marginalize";
    std::uint64_t idx = 0;
    for (Scheme sc : parse_schemes(a.scheme)) {
        const OperatingPoint op = make_point(s, sc, a.point);
        SimConfig c = cfg;
        c.seed = split_seed(a.seed, idx++);
        const SimResult r = run_simulation(s, sc, op, c);
        const ValidationReport rep = validate_bound(s, sc, op, r, w_max);
        const auto laws = build_sinr_distributions(s, sc, op.p);
        for (std::size_t i = 0; i < rep.streams.size(); ++i) {
            const auto& v = rep.streams[i];
            for (const auto& row : v.rows) {
                if (std::find(ws.begin(), ws.end(), row.w) == ws.end()) continue;
                rows.row({to_string(sc), to_string(v.stream), std::to_string(row.w), fmt(row.ub), fmt(row.sim),
                          fmt(row.stderr_), std::to_string(row.tail_bits), row.checked ? "1" : "0",
                          row.well_sampled ? "1" : "0", row.holds ? "1" : "0"});
            }
            double l1 = NAN;
            const auto& law = laws[v.stream];
            if (!law.point_mass()) l1 = histogram_l1(r.at(v.stream).sinr_hist, [&](double x) { return law.pdf(x); });
            summary.row({to_string(sc), to_string(v.stream), fmt(v.lambda), fmt(v.b_bits), fmt(op.p[v.stream]),
                         fmt(v.dep_analytic), fmt(v.dep_empirical), fmt(v.dep_empirical_stderr), fmt(v.slope_ub),
                         fmt(v.slope_sim), fmt(v.slope_rel_diff()), std::to_string(v.fit_points),
                         v.bound_holds ? "1" : "0", fmt(l1), mode, a.sampling});
        }
    }
    m.add("validate_" + a.sampling + ".csv", std::move(rows));
    m.add("validate_summary_" + a.sampling + ".csv", std::move(summary));
    return m;
}

} // namespace rsma_sqp::tool
