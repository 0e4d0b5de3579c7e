// Solve both problems for RSMA on the default scenario, then check the delay
// bound of one operating point against a short simulation.

#include <cstdio>

#include "rsma_sqp/optimizer.hpp"
#include "rsma_sqp/simulator.hpp"

int main() {
    using namespace rsma_sqp;
    const Scenario s;

    for (ProblemKind k : {ProblemKind::P1MaxPacket, ProblemKind::P2MinPower}) {
        const TssoResult r = tsso(s, Scheme::Rsma, k);
        std::printf("%s  alpha*=%.4f  sum_bits=%.0f  sum_power=%.3g W\n", to_string(k), r.alpha_star, r.sum_bits(),
                    r.sum_power());
        for (const auto& st : r.streams)
            std::printf("  %-3s %-10s B=%-4.0f p=%.3g W  xi=%.3g  dep=%.3g  iterations=%d\n", to_string(st.stream),
                        st.feasible ? "feasible" : "infeasible", st.b_int, st.p_w, st.achieved_xi, st.achieved_dep,
                        st.iterations);
    }

    OperatingPoint op;
    op.b.v.fill(100.0);
    op.p = calibrate_powers(s, Scheme::Rsma, op.b, 0.2);
    SimConfig cfg;
    cfg.slots = 1'000'000;
    const SimResult sim = run_simulation(s, Scheme::Rsma, op, cfg);
    const ValidationReport rep = validate_bound(s, Scheme::Rsma, op, sim, 10);
    std::printf("\nbound vs simulation at DEP 0.2, B=100 (1e6 slots)\n");
    for (const auto& v : rep.streams) {
        std::printf("  %-3s", to_string(v.stream));
        for (const auto& row : v.rows) std::printf("  w=%d %.2e/%.2e", row.w, row.ub, row.sim);
        std::printf("\n");
    }
    return rep.bound_holds ? 0 : 1;
}
