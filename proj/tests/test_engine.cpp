#include "support.hpp"

#include <carbonsim/cap.hpp>
#include <carbonsim/engine.hpp>
#include <carbonsim/error.hpp>
#include <carbonsim/pcaps.hpp>
#include <carbonsim/schedulers.hpp>

#include <gtest/gtest.h>

using namespace carbonsim;
using carbonsim::support::constant_trace;
using carbonsim::support::job;
using carbonsim::support::stage;

namespace {

ScheduleRecord run_fifo(const WorkloadSpec& w, int K, const CarbonTrace& trace) {
    ClusterConfig c;
    c.K = K;
    FifoPolicy p;
    return run_simulation(c, w, trace, p, 1);
}

} // namespace

TEST(Engine, SingleTask) {
    const auto r = run_fifo({{job(0, 0, {stage(0, {5})})}}, 1, constant_trace(100));
    ASSERT_EQ(r.assignments.size(), 1U);
    EXPECT_DOUBLE_EQ(r.makespan(), 5);
}

TEST(Engine, ChainUsesOneExecutor) {
    const auto r = run_fifo({{job(0, 0, {stage(0, {3}), stage(1, {4})}, {{0, 1}})}}, 4, constant_trace(100));
    EXPECT_DOUBLE_EQ(r.makespan(), 7);
    for (const auto& iv : busy_profile(r)) {
        EXPECT_EQ(iv.executors, 1);
    }
}

TEST(Engine, CapacityWaves) {
    const auto r = run_fifo({{job(0, 0, {stage(0, {2, 2, 2, 2})})}}, 2, constant_trace(100));
    EXPECT_DOUBLE_EQ(r.makespan(), 4);
    EXPECT_EQ(r.assignments.size(), 4U);
}

TEST(Engine, LateArrival) {
    const auto r = run_fifo({{job(0, 0, {stage(0, {2})}), job(1, 100, {stage(0, {3})})}}, 2, constant_trace(100));
    ASSERT_EQ(r.per_job.size(), 2U);
    EXPECT_DOUBLE_EQ(r.per_job[1].arrival, 100);
    EXPECT_DOUBLE_EQ(r.per_job[1].completion, 103);
}

TEST(Engine, TraceOverrunIsError) {
    const CarbonTrace short_trace(0, 3600, {100});
    EXPECT_THROW((void)run_fifo({{job(0, 0, {stage(0, {7200})})}}, 1, short_trace), Error);
}

TEST(Engine, PerJobCap) {
    ClusterConfig c;
    c.K = 4;
    c.per_job_executor_cap = 1;
    FifoPolicy p;
    const auto r = run_simulation(c, {{job(0, 0, {stage(0, {1, 1, 1, 1})})}}, constant_trace(1), p, 1);
    EXPECT_DOUBLE_EQ(r.makespan(), 4);
}

TEST(Engine, MoveDelay) {
    ClusterConfig c;
    c.K = 1;
    c.executor_move_delay_s = 2;
    FifoPolicy p;
    const auto r =
        run_simulation(c, {{job(0, 0, {stage(0, {1})}), job(1, 0, {stage(0, {1})})}}, constant_trace(1), p, 1);
    EXPECT_GE(r.makespan(), 4 - 1e-9);
}

TEST(BusyProfile, Examples) {
    ScheduleRecord r;
    r.K = 2;
    r.assignments = {{0, 0, 0, 0, 0, 5}};
    EXPECT_EQ(busy_profile(r), (std::vector<BusyInterval>{{0, 5, 1}}));
    r.assignments = {{0, 0, 0, 0, 0, 4}, {0, 0, 1, 1, 2, 6}};
    EXPECT_EQ(busy_profile(r), (std::vector<BusyInterval>{{0, 2, 1}, {2, 4, 2}, {4, 6, 1}}));
}

TEST(BusyProfile, MatchesCountingOracle) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        WorkloadSpec w;
        for (int j = 0; j < 3; ++j) {
            auto dag = support::random_tiny_job(rng, 8);
            dag.job_id = j;
            dag.arrival_time = static_cast<double>(j * 3);
            w.jobs.push_back(dag);
        }
        const auto r = run_fifo(w, 3, constant_trace(10));
        double integral = 0;
        for (const auto& iv : busy_profile(r)) {
            integral += (iv.end - iv.start) * iv.executors;
        }
        EXPECT_NEAR(integral, support::counting_integral(r, 1.0), 1e-9);
    }
}

TEST(Engine, DeterministicAndInvariants) {
    const auto trace = square_wave(50, 500, 6 * 3600, 3600, 24 * 30, true);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto w = support::random_small_workload(seed, 8);
        ClusterConfig c;
        c.K = 5;
        PcapsPolicy a(std::make_unique<ProbabilisticPolicy>(), PcapsConfig{0.7});
        PcapsPolicy b(std::make_unique<ProbabilisticPolicy>(), PcapsConfig{0.7});
        const auto ra = run_simulation(c, w, trace, a, seed);
        const auto rb = run_simulation(c, w, trace, b, seed);
        EXPECT_EQ(ra, rb);
        EXPECT_NO_THROW(verify_record(ra, w));
        for (const auto& iv : busy_profile(ra)) {
            EXPECT_LE(iv.executors, c.K);
        }
    }
}

TEST(Engine, CapNeverStartsAboveQuota) {
    const auto trace = square_wave(50, 500, 6 * 3600, 3600, 24 * 30, true);
    const auto w = support::random_small_workload(3, 10);
    ClusterConfig c;
    c.K = 6;
    CapPolicy p(std::make_unique<FifoPolicy>(), 1);
    const auto r = run_simulation(c, w, trace, p, 1);
    verify_record(r, w);
    for (std::size_t i = 0; i < r.assignments.size(); ++i) {
        const auto& a = r.assignments[i];
        int quota = c.K;
        for (const auto& q : r.quota_history) {
            if (q.time <= a.start) {
                quota = q.quota;
            }
        }
        // Busy executors just before this start, including earlier starts at the same instant.
        int busy = 0;
        for (std::size_t j = 0; j < i; ++j) {
            const auto& b = r.assignments[j];
            if (b.start <= a.start && b.end > a.start) {
                ++busy;
            }
        }
        EXPECT_LT(busy, std::max(quota, 1)) << "start at " << a.start;
    }
}

TEST(VerifyRecord, DetectsOverlap) {
    const WorkloadSpec w{{job(0, 0, {stage(0, {2, 2})})}};
    ScheduleRecord r;
    r.K = 1;
    r.assignments = {{0, 0, 0, 0, 0, 2}, {0, 0, 1, 0, 1, 3}};
    r.per_job = {{0, 0, 3}};
    EXPECT_THROW(verify_record(r, w), SimulationError);
}
