#include "support.hpp"

#include <carbonsim/error.hpp>
#include <carbonsim/pcaps.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace carbonsim;
using carbonsim::support::job;
using carbonsim::support::stage;

namespace {

ScoreDistribution dist(std::vector<double> p) {
    ScoreDistribution d;
    for (std::size_t i = 0; i < p.size(); ++i) {
        d.entries.push_back({i, 0, static_cast<int>(i), p[i]});
    }
    return d;
}

} // namespace

TEST(RelativeImportance, Examples) {
    auto r = relative_importance(dist({0.2, 0.8}));
    EXPECT_DOUBLE_EQ(r.entries[0].importance, 0.25);
    EXPECT_DOUBLE_EQ(r.entries[1].importance, 1.0);
    r = relative_importance(dist({1.0}));
    EXPECT_DOUBLE_EQ(r.entries[0].importance, 1.0);
    r = relative_importance(dist({0.5, 0.3, 0.2}));
    EXPECT_DOUBLE_EQ(r.entries[0].importance, 1.0);
    EXPECT_DOUBLE_EQ(r.entries[1].importance, 0.6);
    EXPECT_DOUBLE_EQ(r.entries[2].importance, 0.4);
    EXPECT_THROW((void)relative_importance(dist({})), ConfigError);
}

TEST(Psi, Examples) {
    EXPECT_DOUBLE_EQ(psi(0.7, 100, 500, 1.0), 500);
    EXPECT_DOUBLE_EQ(psi(0.5, 100, 500, 0.0), 300);
    EXPECT_NEAR(psi(1.0, 0, 1, 0.5), (std::exp(0.5) - 1) / (std::exp(1.0) - 1), 1e-12);
    EXPECT_NEAR(psi(1.0, 0, 1, 0.5), 0.377541, 1e-6);
    EXPECT_DOUBLE_EQ(psi(0.0, 100, 500, 0.3), 500);
    EXPECT_DOUBLE_EQ(psi(0.6, 200, 200, 0.3), 200);
}

TEST(Psi, DomainErrors) {
    EXPECT_THROW((void)psi(1.5, 0, 1, 0.5), ConfigError);
    EXPECT_THROW((void)psi(0.5, 2, 1, 0.5), ConfigError);
    EXPECT_THROW((void)psi(0.5, 0, 1, 1.5), ConfigError);
}

TEST(Psi, MonotoneAndBounded) {
    for (double g = 0.1; g <= 1.0 + 1e-12; g += 0.1) {
        double previous = -1;
        for (int i = 0; i <= 100; ++i) {
            const double v = psi(g, 100, 500, i / 100.0);
            EXPECT_GT(v, previous);
            EXPECT_GE(v, g * 100 + (1 - g) * 500 - 1e-9);
            EXPECT_LE(v, 500 + 1e-9);
            previous = v;
        }
    }
}

TEST(Filter, Examples) {
    PcapsConfig zero{0.0};
    EXPECT_EQ(filter_decision(zero, 0.01, 499, 100, 500, true), FilterOutcome::Pass);
    PcapsConfig g{0.9};
    EXPECT_EQ(filter_decision(g, 1.0, 500, 100, 500, true), FilterOutcome::Pass);
    EXPECT_EQ(filter_decision(g, 0.1, 499, 100, 500, true), FilterOutcome::Defer);
    EXPECT_EQ(filter_decision(g, 0.1, 499, 100, 500, false), FilterOutcome::Pass);
    EXPECT_EQ(filter_decision(g, 1.0, 600, 100, 500, true), FilterOutcome::Pass);
    PcapsConfig strict{0.9, CarbonScale::Normalized, true};
    EXPECT_EQ(filter_decision(strict, 1.0, 600, 100, 500, true), FilterOutcome::Defer);
}

TEST(PcapsParallelism, Examples) {
    EXPECT_EQ(pcaps_parallelism(PcapsConfig{0.0}, 10, 300, 100, 500), 10);
    EXPECT_EQ(pcaps_parallelism(PcapsConfig{0.5}, 10, 100, 100, 500), 5);
    EXPECT_EQ(pcaps_parallelism(PcapsConfig{1.0}, 10, 500, 100, 500), 1);
    EXPECT_EQ(pcaps_parallelism(PcapsConfig{0.5, CarbonScale::Raw}, 10, 150, 100, 500), 1);
    EXPECT_EQ(pcaps_parallelism(PcapsConfig{0.5}, 10, 200, 200, 200), 5);
}

TEST(PcapsPolicy, ConstantTraceNoDeferrals) {
    const auto trace = support::constant_trace(100, 24 * 30);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto w = support::random_small_workload(seed, 8);
        ClusterConfig c;
        c.K = 4;
        PcapsPolicy p(std::make_unique<ProbabilisticPolicy>(), PcapsConfig{0.8});
        EXPECT_TRUE(run_simulation(c, w, trace, p, seed).deferrals.empty());
    }
}

TEST(PcapsPolicy, DefersOnlyLowImportance) {
    // One long chain next to a wide, short branch: the chain head carries the bottleneck.
    const auto trace = square_wave(50, 500, 6 * 3600, 3600, 24 * 10, true);
    WorkloadSpec w;
    for (int j = 0; j < 4; ++j) {
        w.jobs.push_back(job(j, j * 3600.0,
                             {stage(0, {1800}), stage(1, {1800}), stage(2, {1800}), stage(3, {600, 600, 600}),
                              stage(4, {300})},
                             {{0, 1}, {1, 2}, {2, 4}, {3, 4}}));
    }
    ClusterConfig c;
    c.K = 2;
    PcapsPolicy p(std::make_unique<ProbabilisticPolicy>(), PcapsConfig{0.9});
    const auto r = run_simulation(c, w, trace, p, 3);
    verify_record(r, w);
    ASSERT_FALSE(r.deferrals.empty());
    for (const auto& d : r.deferrals) {
        EXPECT_LT(d.relative_importance, 1.0);
        EXPECT_GT(d.carbon, 50.0);
        CarbonBounds b;
        for (const auto& h : r.carbon_bounds_history) {
            if (h.time <= d.time) {
                b = {h.L, h.U};
            }
        }
        EXPECT_LT(psi(0.9, b.L, b.U, d.relative_importance), d.carbon);
        int busy = 0;
        for (const auto& a : r.assignments) {
            if (a.start <= d.time && a.end > d.time) {
                ++busy;
            }
        }
        EXPECT_GE(busy, 1);
    }
}
