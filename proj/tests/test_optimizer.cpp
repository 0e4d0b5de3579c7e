#include <gtest/gtest.h>

#include "rsma_sqp/optimizer.hpp"

using namespace rsma_sqp;

namespace {

void expect_same(const TssoResult& a, const TssoResult& b) {
    ASSERT_EQ(a.streams.size(), b.streams.size());
    for (std::size_t i = 0; i < a.streams.size(); ++i) {
        EXPECT_EQ(a.streams[i].b_bits, b.streams[i].b_bits);
        EXPECT_EQ(a.streams[i].b_int, b.streams[i].b_int);
        EXPECT_EQ(a.streams[i].p_w, b.streams[i].p_w);
        EXPECT_EQ(a.streams[i].achieved_xi, b.streams[i].achieved_xi);
        EXPECT_EQ(a.streams[i].achieved_dep, b.streams[i].achieved_dep);
        EXPECT_EQ(a.streams[i].trace.size(), b.streams[i].trace.size());
    }
}

} // namespace

TEST(Tsso, BracketsNestAndHalve) {
    Scenario s;
    for (ProblemKind k : {ProblemKind::P1MaxPacket, ProblemKind::P2MinPower}) {
        for (Scheme sc : {Scheme::Rsma, Scheme::Noma, Scheme::Oma}) {
            const auto r = tsso(s, sc, k);
            for (const auto& st : r.streams) {
                double lo = -1e300, hi = 1e300, width = 1e300;
                for (const auto& row : st.trace) {
                    EXPECT_LE(row.lower, row.upper);
                    EXPECT_GE(row.lower, lo);
                    EXPECT_LE(row.upper, hi);
                    EXPECT_TRUE(row.iterate == row.lower || row.iterate == row.upper);
                    EXPECT_EQ(row.feasible, k == ProblemKind::P1MaxPacket ? row.iterate == row.lower
                                                                         : row.iterate == row.upper);
                    if (width < 1e300) {
                        EXPECT_DOUBLE_EQ(row.upper - row.lower, 0.5 * width);
                    }
                    lo = row.lower;
                    hi = row.upper;
                    width = row.upper - row.lower;
                }
                EXPECT_LE(st.iterations, s.algo.m_iter);
            }
        }
    }
}

TEST(Tsso, SolutionsStayInBox) {
    Scenario s;
    for (Scheme sc : {Scheme::Rsma, Scheme::Noma, Scheme::Oma}) {
        for (const auto& st : tsso(s, sc, ProblemKind::P1MaxPacket).streams) {
            EXPECT_GE(st.b_int, s.b_min_bits);
            EXPECT_LE(st.b_int, s.b_max_bits);
            EXPECT_EQ(st.b_int, std::floor(st.b_int));
            EXPECT_EQ(st.p_w, s.p_max_w);
        }
        for (const auto& st : tsso(s, sc, ProblemKind::P2MinPower).streams) {
            EXPECT_GT(st.p_w, 0.0);
            EXPECT_LE(st.p_w, s.p_max_w);
            EXPECT_EQ(st.b_int, s.b_min_bits);
        }
    }
}

TEST(Tsso, SolutionsMeetTargets) {
    Scenario s;
    for (Scheme sc : {Scheme::Rsma, Scheme::Noma, Scheme::Oma}) {
        for (ProblemKind k : {ProblemKind::P1MaxPacket, ProblemKind::P2MinPower}) {
            const auto r = tsso(s, sc, k);
            const StreamEvaluator ev(s, sc);
            for (const auto& st : r.streams) {
                if (!st.feasible) continue;
                const auto e = ev(st.stream, r.point);
                EXPECT_TRUE(e.ok()) << to_string(st.stream);
                EXPECT_LE(e.xi, target_for(s, st.stream).xi_th);
                EXPECT_LE(e.dep, target_for(s, st.stream).eps_th);
            }
        }
    }
}

// P1: one more bit breaks a constraint, unless the box edge was reached.
TEST(Tsso, P1LocallyMaximal) {
    Scenario s;
    for (Scheme sc : {Scheme::Rsma, Scheme::Noma, Scheme::Oma}) {
        const auto r = tsso(s, sc, ProblemKind::P1MaxPacket);
        const StreamEvaluator ev(s, sc);
        for (const auto& st : r.streams) {
            if (!st.feasible || st.b_int + 1 > s.b_max_bits) continue;
            OperatingPoint op = r.point;
            op.b[st.stream] = st.b_int + 1;
            EXPECT_FALSE(ev(st.stream, op).ok()) << to_string(sc) << " " << to_string(st.stream);
        }
    }
}

// P2: the power one bracket width lower fails.
TEST(Tsso, P2LocallyMinimal) {
    Scenario s;
    const TssoOptions o;
    for (Scheme sc : {Scheme::Rsma, Scheme::Noma, Scheme::Oma}) {
        const auto r = tsso(s, sc, ProblemKind::P2MinPower, o);
        const StreamEvaluator ev(s, sc);
        for (const auto& st : r.streams) {
            ASSERT_TRUE(st.feasible);
            double last_bad = 0.0;
            for (const auto& row : st.trace)
                if (!row.feasible) last_bad = row.iterate;
            OperatingPoint op = r.point;
            op.p[st.stream] = last_bad;
            EXPECT_FALSE(ev(st.stream, op).ok());
            EXPECT_LE(st.p_w - last_bad, o.p2_width_w);
        }
    }
}

TEST(Tsso, DeterministicAcrossRuns) {
    Scenario s;
    for (ProblemKind k : {ProblemKind::P1MaxPacket, ProblemKind::P2MinPower}) {
        const auto a = tsso(s, Scheme::Rsma, k);
        const auto b = tsso(s, Scheme::Rsma, k);
        expect_same(a, b);
        if (k == ProblemKind::P1MaxPacket) {
            EXPECT_EQ(a.alpha_star, b.alpha_star);
        }
    }
}

TEST(Tsso, ZeroDelayTargetMakesSdvpBind) {
    Scenario s;
    s.qos.w_th_slots = 0;
    const auto r = tsso(s, Scheme::Rsma, ProblemKind::P1MaxPacket);
    EXPECT_FALSE(r.all_feasible());
    EXPECT_EQ(r.at(StreamId::X2).binding, Binding::Sdvp);
    for (const auto& st : r.streams) EXPECT_EQ(st.b_int, s.b_min_bits);
}

TEST(Tsso, ZeroPowerInfeasibleOnDep) {
    Scenario s;
    TssoOptions o;
    o.fixed_power = 0.0;
    const auto r = tsso(s, Scheme::Noma, ProblemKind::P1MaxPacket, o);
    for (const auto& st : r.streams) {
        EXPECT_FALSE(st.feasible);
        EXPECT_EQ(st.achieved_dep, 1.0);
        EXPECT_EQ(st.binding, Binding::Both);
    }
}

TEST(Tsso, VacuousTargetsGiveMinimalPower) {
    Scenario s;
    s.qos.xi_th = 0.999;
    s.qos.eps_th = 0.999;
    const TssoOptions o;
    const auto r = tsso(s, Scheme::Oma, ProblemKind::P2MinPower, o);
    for (const auto& st : r.streams) {
        EXPECT_TRUE(st.feasible);
        EXPECT_LE(st.p_w, o.p2_width_w);
    }
}

TEST(Tsso, P2UsesEqualSplitAndMinimumPackets) {
    Scenario s;
    const auto r = tsso(s, Scheme::Rsma, ProblemKind::P2MinPower);
    EXPECT_EQ(r.alpha_star, 0.5);
    for (const auto& st : r.streams) EXPECT_EQ(st.b_int, s.b_min_bits);
}

TEST(Tsso, OutOfBoxOptionsRejected) {
    Scenario s;
    TssoOptions o;
    o.fixed_power = 2 * s.p_max_w;
    EXPECT_THROW(tsso(s, Scheme::Rsma, ProblemKind::P1MaxPacket, o), ConfigError);
    TssoOptions b;
    b.fixed_bits = s.b_max_bits + 1;
    EXPECT_THROW(tsso(s, Scheme::Rsma, ProblemKind::P2MinPower, b), ConfigError);
}

// With x11 silent and carrying no traffic, x12 sees exactly NOMA's x1 channel and load.
TEST(Evaluator, RsmaWithoutX11MatchesNoma) {
    Scenario s;
    const StreamEvaluator rsma(s, Scheme::Rsma);
    const StreamEvaluator noma(s, Scheme::Noma);
    OperatingPoint a;
    a.p = uniform_power(0.3);
    a.p[StreamId::X11] = 0.0;
    a.b.v.fill(150.0);
    a.alpha = 0.0;
    OperatingPoint b = a;
    b.p[StreamId::X1] = 0.3;
    const auto r12 = rsma(StreamId::X12, a);
    const auto n1 = noma(StreamId::X1, b);
    EXPECT_DOUBLE_EQ(r12.dep, n1.dep);
    EXPECT_DOUBLE_EQ(r12.lambda, n1.lambda);
    EXPECT_DOUBLE_EQ(r12.xi, n1.xi);
    EXPECT_DOUBLE_EQ(rsma(StreamId::X2, a).dep, noma(StreamId::X2, b).dep);
}

TEST(Feasibility, ReportsBindingConstraint) {
    Scenario s;
    const StreamEvaluator ev(s, Scheme::Oma);
    OperatingPoint op;
    op.b.v.fill(s.b_min_bits);
    op.p = uniform_power(s.p_max_w);
    const auto ok = feasibility_check(ev, ProblemKind::P1MaxPacket, StreamId::X2, op);
    EXPECT_TRUE(ok.feasible);
    EXPECT_EQ(ok.binding, Binding::None);
    // Powers where DEP sits at 1e-3, far above the DEP target, with a
    // stable and loosely constrained queue.
    Scenario loose = s;
    loose.qos.xi_th = 0.5;
    loose.qos.w_th_slots = 20;
    const StreamEvaluator ev2(loose, Scheme::Oma);
    op.p = calibrate_powers(s, Scheme::Oma, op.b, 1e-3);
    const auto bad = feasibility_check(ev2, ProblemKind::P1MaxPacket, StreamId::X2, op);
    EXPECT_FALSE(bad.feasible);
    EXPECT_EQ(bad.binding, Binding::Dep);
}

TEST(Calibration, HitsTargetDep) {
    Scenario s;
    PerStream<double> bits;
    bits.v.fill(120.0);
    const auto p = calibrate_powers(s, Scheme::Rsma, bits, 1e-3);
    const StreamEvaluator ev(s, Scheme::Rsma);
    OperatingPoint op;
    op.b = bits;
    op.p = p;
    for (StreamId q : streams_of(Scheme::Rsma)) {
        EXPECT_LT(p[q], s.p_max_w);
        EXPECT_NEAR(ev.dep(q, op), 1e-3, 1e-3 * 1e-5) << to_string(q);
    }
}

TEST(CompareSchemes, ReturnsFixedOrder) {
    Scenario s;
    const auto r = compare_schemes(s, ProblemKind::P2MinPower);
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r[0].scheme, Scheme::Rsma);
    EXPECT_EQ(r[1].scheme, Scheme::Noma);
    EXPECT_EQ(r[2].scheme, Scheme::Oma);
    expect_same(r[0], tsso(s, Scheme::Rsma, ProblemKind::P2MinPower));
}
