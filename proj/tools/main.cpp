// rsma-sqp: delay-bound analysis, simulation and optimization runner.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "commands.hpp"

namespace {

using namespace rsma_sqp;
using namespace rsma_sqp::tool;

struct Common {
    std::string scenario;
    std::string out = "out";
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--scenario", c.scenario, "scenario file (key = value); defaults apply when omitted");
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
}

void add_point(CLI::App* sub, PointArgs& p) {
    sub->add_option("--bits", p.bits, "packet sizes in decoding order, or one value for all (default b_min)");
    sub->add_option("--power", p.power, "stream powers in W, decoding order, or one value (default p_max)");
    sub->add_option("--alpha", p.alpha, "RSMA arrival split for x11")->capture_default_str();
    sub->add_option("--calibrate-dep", p.calibrate_dep, "pick powers so each stream's expected DEP equals this");
}

void add_sim(CLI::App* sub, SimulateArgs& s, std::string& slots, std::string& warmup) {
    sub->add_option("--scheme", s.scheme, "rsma, noma, oma or all")->capture_default_str();
    sub->add_option("--w-range", s.w_range, "delay thresholds in slots, START:STOP[:STEP]")->capture_default_str();
    sub->add_option("--slots", slots, "simulated slots (1e6 style accepted)")->capture_default_str();
    sub->add_option("--warmup", warmup, "discarded leading slots")->capture_default_str();
    sub->add_option("--seed", s.seed, "master RNG seed")->capture_default_str();
    sub->add_option("--sampling", s.sampling, "exact or gaussian-approx")->capture_default_str();
    add_point(sub, s.point);
}

Scenario load(const Common& c) {
    if (c.scenario.empty()) return Scenario{};
    return load_scenario(c.scenario);
}

void emit(const RunManifest& m, const Common& c) {
    for (const auto& path : m.write(c.out)) std::cout << path << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Statistical delay bounds and sequential optimization for uplink RSMA/NOMA/OMA short packets"};
    app.require_subcommand(1);

    Common common;
    AnalyzeArgs analyze;
    SimulateArgs simulate;
    SimulateArgs validate;
    OptimizeArgs optimize;
    CompareArgs compare;
    std::string sim_slots = "1e6";
    std::string sim_warmup = "1e4";
    std::string val_slots = "1e7";
    std::string val_warmup = "1e4";
    validate.w_range = "1:20";

    auto* a = app.add_subcommand("analyze", "closed-form delay-violation bound per stream over w");
    add_common(a, common);
    a->add_option("--scheme", analyze.scheme, "rsma, noma, oma or all")->capture_default_str();
    a->add_option("--w-range", analyze.w_range, "delay thresholds in slots")->capture_default_str();
    add_point(a, analyze.point);

    auto* s = app.add_subcommand("simulate", "Monte-Carlo queue simulation");
    add_common(s, common);
    add_sim(s, simulate, sim_slots, sim_warmup);

    auto* o = app.add_subcommand("optimize", "sequential bisection for p1 (max bits) or p2 (min power)");
    add_common(o, common);
    o->add_option("--scheme", optimize.scheme, "rsma, noma, oma or all")->capture_default_str();
    o->add_option("--problem", optimize.problem, "p1 or p2")->capture_default_str();

    auto* c = app.add_subcommand("compare", "RSMA/NOMA/OMA over a QoS sweep");
    add_common(c, common);
    c->add_option("--problem", compare.problem, "p1 or p2")->capture_default_str();
    c->add_option("--sweep", compare.sweep, "AXIS=START:STOP[:STEP], AXIS in w_th (ms), xi_th, eps_th; xR step is geometric")
        ->capture_default_str();

    auto* v = app.add_subcommand("validate", "bound versus simulation, slopes and SINR pdf check");
    add_common(v, common);
    add_sim(v, validate, val_slots, val_warmup);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        const Scenario scen = load(common);
        if (*a) {
            emit(cmd_analyze(scen, analyze), common);
        } else if (*s) {
            simulate.slots = parse_count(sim_slots);
            simulate.warmup = parse_count(sim_warmup);
            emit(cmd_simulate(scen, simulate), common);
        } else if (*o) {
            emit(cmd_optimize(scen, optimize), common);
        } else if (*c) {
            emit(cmd_compare(scen, compare), common);
        } else if (*v) {
            validate.slots = parse_count(val_slots);
            validate.warmup = parse_count(val_warmup);
            emit(cmd_validate(scen, validate), common);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
