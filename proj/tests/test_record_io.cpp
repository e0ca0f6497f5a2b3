#include "support.hpp"

#include <carbonsim/error.hpp>
#include <carbonsim/pcaps.hpp>
#include <carbonsim/record_io.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace carbonsim;

TEST(RecordIo, RoundTrip) {
    const auto trace = square_wave(50, 500, 6 * 3600, 3600, 24 * 30, true);
    const auto w = support::random_small_workload(9, 6);
    ClusterConfig c;
    c.K = 3;
    PcapsPolicy p(std::make_unique<ProbabilisticPolicy>(), PcapsConfig{0.9});
    const auto r = run_simulation(c, w, trace, p, 4);
    std::stringstream csv;
    std::stringstream events;
    write_schedule_csv(r, csv);
    write_events_jsonl(r, events);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "job,stage,task,executor,start,end");
    EXPECT_EQ(read_record(csv, events), r);
}

TEST(RecordIo, BadCsv) {
    std::istringstream csv("job,stage,task,executor,start,end\n0,0,0,0,abc,1\n");
    EXPECT_THROW((void)read_schedule_csv(csv), Error);
}

TEST(RecordIo, GanttGroupsByExecutor) {
    ScheduleRecord r;
    r.K = 2;
    r.assignments = {{0, 0, 0, 0, 0, 1}, {0, 0, 1, 1, 0, 2}, {0, 1, 0, 0, 1, 3}};
    const auto g = gantt_json(r);
    EXPECT_EQ(g["K"], 2);
    ASSERT_EQ(g["executors"].size(), 2U);
    EXPECT_EQ(g["executors"][0]["tasks"].size(), 2U);
}
