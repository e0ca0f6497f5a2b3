#include "support.hpp"

#include <carbonsim/error.hpp>
#include <carbonsim/workload.hpp>

#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

using namespace carbonsim;
using carbonsim::support::job;
using carbonsim::support::stage;

TEST(WorkloadValidate, ChainOk) {
    EXPECT_NO_THROW(validate(job(0, 0, {stage(0, {1}), stage(1, {1}), stage(2, {1})}, {{0, 1}, {1, 2}})));
}

TEST(WorkloadValidate, CycleListed) {
    try {
        validate(job(0, 0, {stage(0, {1}), stage(1, {1})}, {{0, 1}, {1, 0}}));
        FAIL() << "expected a cycle error";
    } catch (const WorkloadError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("cycle"), std::string::npos);
        EXPECT_NE(msg.find("0->1"), std::string::npos);
    }
}

TEST(WorkloadValidate, DanglingDuplicateAndSelfLoop) {
    EXPECT_THROW(validate(job(0, 0, {stage(0, {1})}, {{0, 9}})), WorkloadError);
    EXPECT_THROW(validate(job(0, 0, {stage(0, {1}), stage(0, {1})})), WorkloadError);
    EXPECT_THROW(validate(job(0, 0, {stage(0, {1})}, {{0, 0}})), WorkloadError);
    EXPECT_THROW(validate(job(0, 0, {stage(0, {1}), stage(1, {1})}, {{0, 1}, {0, 1}})), WorkloadError);
    EXPECT_THROW(validate(job(0, 0, {stage(0, {0.0})})), WorkloadError);
}

TEST(WorkloadGraph, CriticalPath) {
    EXPECT_DOUBLE_EQ(critical_path(job(0, 0, {stage(0, {3}), stage(1, {4})}, {{0, 1}})), 7);
    const auto diamond =
        job(0, 0, {stage(0, {1}), stage(1, {5}), stage(2, {2}), stage(3, {1})}, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
    EXPECT_DOUBLE_EQ(critical_path(diamond), 7);
    EXPECT_DOUBLE_EQ(critical_path(job(0, 0, {stage(0, {2, 2, 2, 2})})), 2);
}

TEST(WorkloadGraph, TotalWork) {
    EXPECT_DOUBLE_EQ(total_work(job(0, 0, {stage(0, {5}), stage(1, {5}), stage(2, {5})})), 15);
    EXPECT_DOUBLE_EQ(total_work(job(0, 0, {stage(0, {1, 2, 3})})), 6);
    const auto w = support::random_small_workload(4, 10);
    for (const auto& j : w.jobs) {
        double sum = 0;
        for (const auto& s : j.stages) {
            sum = std::accumulate(s.task_durations.begin(), s.task_durations.end(), sum);
        }
        EXPECT_DOUBLE_EQ(total_work(j), sum);
        EXPECT_LE(critical_path(j), total_work(j) + 1e-9);
    }
}

TEST(WorkloadGenerate, Deterministic) {
    GeneratorParams p;
    p.n_jobs = 5;
    std::ostringstream a;
    std::ostringstream b;
    save_workload(generate_workload(p, 7), a);
    save_workload(generate_workload(p, 7), b);
    EXPECT_EQ(a.str(), b.str());
    p.dag_model = DagModel::TemplateLibrary;
    EXPECT_EQ(generate_workload(p, 7), generate_workload(p, 7));
}

TEST(WorkloadGenerate, InterarrivalMean) {
    GeneratorParams p;
    p.n_jobs = 10000;
    p.mean_interarrival_s = 1800;
    p.mean_stages = 2;
    p.max_tasks_per_stage = 1;
    const auto w = generate_workload(p, 1);
    const double mean_gap = (w.jobs.back().arrival_time - w.jobs.front().arrival_time) / (p.n_jobs - 1);
    EXPECT_NEAR(mean_gap, 1800, 0.05 * 1800);
}

TEST(WorkloadGenerate, WidthOneIsChain) {
    GeneratorParams p;
    p.n_jobs = 30;
    p.max_width = 1;
    const auto w = generate_workload(p, 3);
    for (const auto& j : w.jobs) {
        validate(j);
        const auto idx = index_dag(j);
        for (std::size_t s = 0; s < j.stages.size(); ++s) {
            EXPECT_LE(idx.parents[s].size(), 1U);
            EXPECT_LE(idx.children[s].size(), 1U);
        }
        EXPECT_EQ(j.edges.size() + 1, j.stages.size());
    }
}

TEST(WorkloadGenerate, AlibabaShape) {
    const auto w = generate_workload(alibaba_like_params(200, 60), 2);
    double stages = 0;
    for (const auto& j : w.jobs) {
        validate(j);
        stages += static_cast<double>(j.stages.size());
    }
    EXPECT_GT(stages / 200, 20.0);
}

TEST(WorkloadGenerate, RejectsBadParams) {
    GeneratorParams p;
    p.n_jobs = 0;
    EXPECT_THROW((void)generate_workload(p, 1), WorkloadError);
    p.n_jobs = 1;
    p.mean_interarrival_s = 0;
    EXPECT_THROW((void)generate_workload(p, 1), WorkloadError);
}

TEST(WorkloadIo, RoundTrip) {
    const auto w = support::random_small_workload(12, 8);
    std::stringstream buf;
    save_workload(w, buf);
    EXPECT_EQ(load_workload(buf), w);
}

TEST(WorkloadIo, MissingFieldAndOrdering) {
    std::istringstream bad(R"({"jobs":[{"job_id":0,"stages":[{"stage_id":0,"num_tasks":1,"duration":1}],"edges":[]}]})");
    EXPECT_THROW((void)load_workload(bad), WorkloadError);
    std::istringstream two(R"({"jobs":[
        {"job_id":1,"arrival_time":50,"stages":[{"stage_id":0,"num_tasks":2,"duration":3}],"edges":[]},
        {"job_id":0,"arrival_time":10,"stages":[{"stage_id":0,"num_tasks":1,"task_durations":[4]}],"edges":[]}]})");
    const auto w = load_workload(two);
    ASSERT_EQ(w.jobs.size(), 2U);
    EXPECT_EQ(w.jobs[0].job_id, 0);
    EXPECT_EQ(w.jobs[1].stages[0].task_durations, (std::vector<double>{3, 3}));
}
