#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
    int status = 0;
    std::string out;
};

Result sh(const std::string& args) {
    const std::string cmd = std::string(CARBONSIM_CLI) + " " + args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        r.status = -1;
        return r;
    }
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) {
        r.out.append(buf, n);
    }
    const int status = pclose(pipe);
    r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("carbonsim-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        trace_ = dir_ / "trace.csv";
        const auto r = sh("gen-trace --kind square --low 50 --high 500 --period-hours 6 --hours 2000 --out " +
                          trace_.string());
        ASSERT_EQ(r.status, 0) << r.out;
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string base() const {
        return "--trace " + trace_.string() + " --K 4 --seed 3 ";
    }

    fs::path dir_;
    fs::path trace_;
};

} // namespace

TEST_F(Cli, RunWritesArtifacts) {
    const auto r = sh("run " + base() + "--policy pcaps --out " + (dir_ / "a").string());
    ASSERT_EQ(r.status, 0) << r.out;
    for (const char* f : {"config.json", "schedule.csv", "events.jsonl", "gantt.json", "metrics.json"}) {
        EXPECT_TRUE(fs::exists(dir_ / "a" / f)) << f;
    }
}

TEST_F(Cli, BadTracePathFails) {
    const auto r = sh("run --trace " + (dir_ / "missing.csv").string() + " --out " + (dir_ / "x").string());
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.out.find("missing.csv"), std::string::npos) << r.out;
}

TEST_F(Cli, RunTwiceIdentical) {
    ASSERT_EQ(sh("run " + base() + "--policy cap-pb --B 2 --out " + (dir_ / "a").string()).status, 0);
    ASSERT_EQ(sh("run " + base() + "--policy cap-pb --B 2 --out " + (dir_ / "b").string()).status, 0);
    EXPECT_EQ(slurp(dir_ / "a" / "metrics.json"), slurp(dir_ / "b" / "metrics.json"));
}

TEST_F(Cli, AnalyzeReproducesMetrics) {
    ASSERT_EQ(sh("run " + base() + "--policy pcaps --out " + (dir_ / "a").string()).status, 0);
    const auto r = sh("analyze --check " + (dir_ / "a").string());
    EXPECT_EQ(r.status, 0) << r.out;
    EXPECT_EQ(sh("analyze " + (dir_ / "a").string()).out, slurp(dir_ / "a" / "metrics.json"));
}

TEST_F(Cli, CompareSelfAndMismatch) {
    ASSERT_EQ(sh("run " + base() + "--policy fifo --out " + (dir_ / "a").string()).status, 0);
    ASSERT_EQ(sh("run " + base() + "--policy cap-fifo --out " + (dir_ / "c").string()).status, 0);
    auto r = sh("compare " + (dir_ / "a").string() + " " + (dir_ / "a").string());
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_NE(r.out.find("\"savings\""), std::string::npos);
    r = sh("compare " + (dir_ / "a").string() + " " + (dir_ / "c").string());
    EXPECT_EQ(r.status, 0) << r.out;
    ASSERT_EQ(sh("run --trace " + trace_.string() + " --K 4 --seed 99 --policy fifo --out " +
                 (dir_ / "other").string())
                  .status,
              0);
    r = sh("compare " + (dir_ / "a").string() + " " + (dir_ / "other").string());
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.out.find("mismatch"), std::string::npos) << r.out;
}

TEST_F(Cli, ValidateTrace) {
    std::ofstream(dir_ / "three.csv") << "timestamp,carbon_intensity\n"
                                         "2021-01-01T00:00:00Z,1\n2021-01-01T01:00:00Z,2\n2021-01-01T02:00:00Z,3\n";
    auto r = sh("validate-trace " + (dir_ / "three.csv").string());
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_EQ(r.out.rfind("ok ", 0), 0U);
    EXPECT_NE(r.out.find("cv=0.4082"), std::string::npos) << r.out;
    std::ofstream(dir_ / "bad.csv") << "timestamp,carbon_intensity\n2021-01-01T00:00:00Z,1\n2021-01-01T01:00:00Z,x\n";
    r = sh("validate-trace " + (dir_ / "bad.csv").string());
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.out.find("row 2"), std::string::npos) << r.out;
}

TEST_F(Cli, SweepTwiceIdentical) {
    const std::string args = "sweep " + base() + "--policy pcaps --axis gamma --values 0,0.5 --seeds 1-2 --baseline pb";
    ASSERT_EQ(sh(args + " --out " + (dir_ / "s1").string()).status, 0);
    ASSERT_EQ(sh(args + " --out " + (dir_ / "s2").string()).status, 0);
    const auto a = slurp(dir_ / "s1" / "summary.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir_ / "s2" / "summary.csv"));
}

TEST_F(Cli, GenWorkload) {
    const auto r = sh("gen-workload --n-jobs 3 --seed 4 --out " + (dir_ / "w.json").string());
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_NE(slurp(dir_ / "w.json").find("\"jobs\""), std::string::npos);
}
