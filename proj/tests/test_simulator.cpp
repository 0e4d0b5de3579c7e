#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rsma_sqp/simulator.hpp"

using namespace rsma_sqp;

namespace {

SimConfig short_run(std::uint64_t slots, std::uint64_t seed = 1) {
    SimConfig c;
    c.slots = slots;
    c.warmup_slots = 1000;
    c.seed = seed;
    c.batches = 20;
    return c;
}

OperatingPoint calibrated(const Scenario& s, Scheme sc, double b, double dep) {
    OperatingPoint op;
    op.b.v.fill(b);
    op.p = calibrate_powers(s, sc, op.b, dep);
    return op;
}

} // namespace

TEST(Seeds, SplitSeedsDiffer) {
    EXPECT_NE(split_seed(1, 0), split_seed(1, 1));
    EXPECT_NE(split_seed(1, 0), split_seed(2, 0));
    EXPECT_EQ(split_seed(7, 3), split_seed(7, 3));
}

TEST(Simulator, BitsAreConserved) {
    Scenario s;
    const auto op = calibrated(s, Scheme::Rsma, 120.0, 0.1);
    const auto r = run_simulation(s, Scheme::Rsma, op, short_run(50'000));
    for (const auto& st : r.streams) {
        EXPECT_EQ(st.arrived_bits, st.departed_bits + st.backlog_bits);
        std::uint64_t hist = 0;
        for (auto b : st.delay_bits) hist += b;
        EXPECT_EQ(hist, st.measured_bits);
        std::uint64_t batches = 0;
        for (auto b : st.batch_bits) batches += b;
        EXPECT_EQ(batches, st.measured_bits);
    }
}

TEST(Simulator, SameSeedReproduces) {
    Scenario s;
    const auto op = calibrated(s, Scheme::Noma, 120.0, 0.1);
    const auto a = run_simulation(s, Scheme::Noma, op, short_run(20'000, 42));
    const auto b = run_simulation(s, Scheme::Noma, op, short_run(20'000, 42));
    const auto c = run_simulation(s, Scheme::Noma, op, short_run(20'000, 43));
    for (std::size_t i = 0; i < a.streams.size(); ++i) {
        EXPECT_EQ(a.streams[i].arrived_bits, b.streams[i].arrived_bits);
        EXPECT_EQ(a.streams[i].delay_bits, b.streams[i].delay_bits);
        EXPECT_EQ(a.streams[i].service_failures, b.streams[i].service_failures);
        EXPECT_NE(a.streams[i].arrived_bits, c.streams[i].arrived_bits);
    }
}

TEST(Simulator, SilentStreamHasNoTraffic) {
    Scenario s;
    OperatingPoint op = calibrated(s, Scheme::Rsma, 120.0, 0.1);
    op.alpha = 1.0;
    const auto r = run_simulation(s, Scheme::Rsma, op, short_run(10'000));
    const auto& x12 = r.at(StreamId::X12);
    EXPECT_EQ(x12.lambda, 0.0);
    EXPECT_EQ(x12.arrived_bits, 0u);
    EXPECT_EQ(x12.sim_sdvp(1), 0.0);
}

TEST(Simulator, ZeroPowerNeverDelivers) {
    Scenario s;
    OperatingPoint op;
    op.b.v.fill(100.0);
    op.p = uniform_power(0.0);
    const auto r = run_simulation(s, Scheme::Oma, op, short_run(5'000));
    for (const auto& st : r.streams) {
        EXPECT_EQ(st.emp_dep(), 1.0);
        EXPECT_EQ(st.departed_bits, 0u);
        EXPECT_EQ(st.backlog_bits, st.arrived_bits);
    }
}

TEST(Simulator, RejectsWarmupBeyondRun) {
    Scenario s;
    OperatingPoint op;
    op.b.v.fill(100.0);
    op.p = uniform_power(1.0);
    SimConfig c;
    c.slots = 10;
    c.warmup_slots = 10;
    EXPECT_THROW(run_simulation(s, Scheme::Oma, op, c), ConfigError);
}

// Under the Gaussian-law sampler the analytic expected DEP is the exact mean.
TEST(Simulator, EmpiricalDepMatchesAnalytic) {
    Scenario s;
    const auto op = calibrated(s, Scheme::Rsma, 120.0, 0.05);
    SimConfig c = short_run(200'000);
    c.sampling = Sampling::GaussianApprox;
    const auto r = run_simulation(s, Scheme::Rsma, op, c);
    const StreamEvaluator ev(s, Scheme::Rsma);
    for (const auto& st : r.streams) {
        const double a = ev.dep(st.stream, op);
        EXPECT_NEAR(st.emp_dep(), a, 4 * st.emp_dep_stderr()) << to_string(st.stream);
    }
}

TEST(Simulator, TailIsNonIncreasingInW) {
    Scenario s;
    const auto op = calibrated(s, Scheme::Rsma, 80.0, 0.2);
    const auto r = run_simulation(s, Scheme::Rsma, op, short_run(100'000));
    for (const auto& st : r.streams) {
        for (int w = 1; w < 30; ++w) EXPECT_LE(st.sim_sdvp(w + 1), st.sim_sdvp(w));
        EXPECT_GT(st.sim_sdvp(1), 0.0);
    }
}

// Error-free service: the delay histogram must match an independent FIFO
// replica fed with the same Poisson draws.
TEST(Simulator, FifoMatchesReplica) {
    Scenario s;
    OperatingPoint op;
    op.b.v.fill(70.0);
    op.p = uniform_power(s.p_max_w);
    SimConfig c;
    c.slots = 20'000;
    c.warmup_slots = 0;
    c.seed = 5;
    const auto r = run_simulation(s, Scheme::Oma, op, c);
    for (const auto& st : r.streams) ASSERT_EQ(st.service_failures, 0u);

    std::uint64_t state = c.seed;
    splitmix64(state);
    std::mt19937_64 arr(splitmix64(state));
    const auto order = decoding_order(Scheme::Oma);
    std::vector<std::poisson_distribution<std::uint64_t>> pois;
    for (StreamId q : order) pois.emplace_back(arrival_bits_per_slot(s, q, op.alpha));
    std::vector<oracle::TinyQueue> replica(order.size());
    for (long long t = 0; t < static_cast<long long>(c.slots); ++t) {
        for (std::size_t i = 0; i < order.size(); ++i) {
            replica[i].arrive(t, static_cast<long long>(pois[i](arr)));
            replica[i].serve(t, 70);
        }
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& got = r.streams[i].delay_bits;
        ASSERT_EQ(got.size(), replica[i].delay.size());
        for (std::size_t d = 0; d < got.size(); ++d)
            EXPECT_EQ(static_cast<long long>(got[d]), replica[i].delay[d]) << d;
        EXPECT_EQ(static_cast<long long>(r.streams[i].backlog_bits), replica[i].backlog);
    }
}

TEST(Validation, BoundHoldsOnShortRun) {
    Scenario s;
    OperatingPoint op;
    op.b.v.fill(80.0);
    op.b[StreamId::X2] = 160.0;
    op.p = calibrate_powers(s, Scheme::Rsma, op.b, 0.2);
    const auto sim = run_simulation(s, Scheme::Rsma, op, short_run(300'000));
    const auto rep = validate_bound(s, Scheme::Rsma, op, sim, 20);
    EXPECT_TRUE(rep.bound_holds);
    for (const auto& v : rep.streams) {
        EXPECT_EQ(v.rows.size(), 20u);
        EXPECT_GE(v.fit_points, 2);
        EXPECT_LT(v.slope_sim, 0.0);
        EXPECT_LT(v.slope_ub, 0.0);
    }
}

TEST(Validation, LeastSquaresSlope) {
    EXPECT_DOUBLE_EQ(ls_slope({1, 2, 3, 4}, {3, 1, -1, -3}), -2.0);
    EXPECT_EQ(ls_slope({1}, {1}), 0.0);
}

TEST(Histogram, CountsAndL1) {
    Histogram h(0.0, 1.0, 10);
    for (int i = 0; i < 1000; ++i) h.add((i + 0.5) / 1000.0);
    h.add(-1);
    h.add(2);
    EXPECT_EQ(h.total(), 1002u);
    EXPECT_LT(histogram_l1(h, [](double) { return 1.0; }), 0.005);
}
