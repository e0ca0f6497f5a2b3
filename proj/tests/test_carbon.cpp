#include <carbonsim/carbon.hpp>
#include <carbonsim/error.hpp>
#include <carbonsim/random.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace carbonsim;

namespace {

CarbonTrace hourly(std::vector<double> values) {
    return CarbonTrace(0, 3600.0, std::move(values));
}

double riemann(const CarbonTrace& trace, const std::vector<BusyInterval>& profile) {
    double total = 0.0;
    for (const auto& iv : profile) {
        for (double t = iv.start; t < iv.end; t += 1.0) {
            total += intensity_at(trace, t + 0.5) * iv.executors * std::min(1.0, iv.end - t);
        }
    }
    return total / 3600.0;
}

} // namespace

TEST(CarbonLoad, ParsesHourlyRows) {
    std::istringstream in("timestamp,carbon_intensity\n2021-01-01T00:00:00Z,100\n2021-01-01T01:00:00Z,200\n");
    const auto trace = load_trace(in);
    EXPECT_DOUBLE_EQ(trace.step(), 3600.0);
    EXPECT_EQ(trace.intensities(), (std::vector<double>{100, 200}));
    EXPECT_FALSE(trace.has_green_fraction());
}

TEST(CarbonLoad, NegativeIntensityNamesRow) {
    std::istringstream in("timestamp,carbon_intensity\n2021-01-01T00:00:00Z,-5\n2021-01-01T01:00:00Z,200\n");
    try {
        (void)load_trace(in);
        FAIL() << "expected a parse error";
    } catch (const TraceParseError& e) {
        EXPECT_EQ(e.row(), 1U);
        EXPECT_NE(std::string(e.what()).find("negative intensity at row 1"), std::string::npos);
    }
}

TEST(CarbonLoad, DistinctRowErrors) {
    auto row_of = [](const std::string& body) -> std::size_t {
        std::istringstream in(body);
        try {
            (void)load_trace(in);
        } catch (const TraceParseError& e) {
            return e.row();
        }
        return 0;
    };
    EXPECT_EQ(row_of("timestamp,carbon_intensity\n2021-01-01T00:00:00Z,1\n2021-01-01T01:00:00Z,2\n"
                     "2021-01-01T03:00:00Z,3\n"),
              3U);
    EXPECT_EQ(row_of("timestamp,carbon_intensity\n2021-01-01T00:00:00Z,1\nnot-a-time,2\n"), 2U);
    EXPECT_EQ(row_of("timestamp,carbon_intensity,green_fraction\n2021-01-01T00:00:00Z,1,0.5\n"
                     "2021-01-01T01:00:00Z,2,1.5\n"),
              2U);
    EXPECT_EQ(row_of("timestamp,carbon_intensity\n2021-01-01T00:00:00Z,abc\n"), 1U);
}

TEST(CarbonLoad, SaveLoadRoundTrip) {
    const auto trace = synthetic_grid_trace(72, 300, 80, 20, 10, 3);
    std::stringstream buf;
    save_trace(trace, buf);
    const auto back = load_trace(buf);
    EXPECT_EQ(back.intensities(), trace.intensities());
    EXPECT_EQ(back.start_epoch(), trace.start_epoch());
    const auto stats = trace_stats(back);
    EXPECT_EQ(stats.min, *std::min_element(trace.intensities().begin(), trace.intensities().end()));
    EXPECT_EQ(stats.max, *std::max_element(trace.intensities().begin(), trace.intensities().end()));
    EXPECT_EQ(stats.count, 72U);
}

TEST(CarbonIntensity, StepFunction) {
    const auto trace = hourly({100, 200});
    EXPECT_EQ(intensity_at(trace, 1800), 100);
    EXPECT_EQ(intensity_at(trace, 3600), 200);
    EXPECT_THROW((void)intensity_at(trace, 7200), TraceRangeError);
    EXPECT_THROW((void)intensity_at(trace, -1), TraceRangeError);
}

TEST(CarbonIntensity, PeriodicWraps) {
    const auto trace = hourly({100, 200}).as_periodic();
    EXPECT_EQ(intensity_at(trace, 7200 + 10), 100);
    EXPECT_EQ(intensity_at(trace, 3 * 3600 + 10), 200);
}

TEST(CarbonBoundsWindow, Examples) {
    const auto trace = hourly({300, 100, 500, 200});
    EXPECT_EQ(bounds_over_window(trace, 0, 4 * 3600), (CarbonBounds{100, 500}));
    EXPECT_EQ(bounds_over_window(trace, 2 * 3600, 2 * 3600), (CarbonBounds{200, 500}));
    EXPECT_EQ(bounds_over_window(trace, 3 * 3600, 10 * 3600), (CarbonBounds{200, 200}));
}

TEST(CarbonBoundsWindow, ContainsEveryIntensityInWindow) {
    Rng rng(11);
    std::vector<double> v(48);
    for (auto& x : v) {
        x = rng.uniform(50, 600);
    }
    const auto trace = hourly(v);
    for (int i = 0; i < 200; ++i) {
        const double t = rng.uniform(0, trace.duration() - 1);
        const double h = rng.uniform(1, 20 * 3600);
        const auto b = bounds_over_window(trace, t, h);
        for (double s = t; s < std::min(t + h, trace.duration()); s += 600) {
            EXPECT_LE(b.L, intensity_at(trace, s));
            EXPECT_GE(b.U, intensity_at(trace, s));
        }
    }
}

TEST(CarbonEmissions, Examples) {
    const auto trace = hourly({2, 4});
    const std::vector<BusyInterval> full{{0, 7200, 1}};
    EXPECT_DOUBLE_EQ(integrate_emissions(trace, full, 1.0), 6.0);
    const std::vector<BusyInterval> split{{1800, 5400, 1}};
    EXPECT_DOUBLE_EQ(integrate_emissions(trace, split, 1.0), 3.0);
    EXPECT_DOUBLE_EQ(integrate_emissions(trace, full, 2.5), 15.0);
    const std::vector<BusyInterval> outside{{0, 7201, 1}};
    EXPECT_THROW((void)integrate_emissions(trace, outside), TraceRangeError);
}

TEST(CarbonEmissions, MatchesRiemannOracle) {
    Rng rng(5);
    std::vector<double> v(24);
    for (auto& x : v) {
        x = rng.uniform(10, 500);
    }
    const auto trace = hourly(v);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<BusyInterval> profile;
        double t = 0;
        while (true) {
            const double start = t + static_cast<double>(rng.uniform_int(0, 3000));
            const double end = start + static_cast<double>(rng.uniform_int(1, 9000));
            if (end >= trace.duration()) {
                break;
            }
            profile.push_back({start, end, static_cast<double>(rng.uniform_int(1, 5))});
            t = end;
        }
        const double exact = integrate_emissions(trace, profile);
        EXPECT_NEAR(exact, riemann(trace, profile), 1e-6 * exact);
    }
}

TEST(CarbonEmissions, AdditiveAndScaling) {
    Rng rng(9);
    std::vector<double> v(24);
    for (auto& x : v) {
        x = rng.uniform(10, 500);
    }
    const auto trace = hourly(v);
    std::vector<double> scaled_v = v;
    for (auto& x : scaled_v) {
        x *= 3.5;
    }
    const auto scaled = hourly(scaled_v);
    for (int i = 0; i < 50; ++i) {
        const double a = rng.uniform(0, 40000);
        const double b = rng.uniform(a + 1, 86000);
        const double m = rng.uniform(a, b);
        const double k = static_cast<double>(rng.uniform_int(1, 6));
        const std::vector<BusyInterval> whole{{a, b, k}};
        const std::vector<BusyInterval> parts{{a, m, k}, {m, b, k}};
        const double w = integrate_emissions(trace, whole);
        EXPECT_NEAR(integrate_emissions(trace, parts), w, 1e-9 * w);
        EXPECT_NEAR(integrate_emissions(scaled, whole), 3.5 * w, 1e-9 * w);
    }
}

TEST(CarbonStats, ThreeValues) {
    const auto s = trace_stats(hourly({1, 2, 3}));
    EXPECT_DOUBLE_EQ(s.mean, 2.0);
    EXPECT_NEAR(s.stddev, 0.8165, 1e-4);
    EXPECT_NEAR(s.cv, 0.4082, 1e-4);
}

TEST(CarbonShapes, SquareWave) {
    const auto t = square_wave(50, 500, 6 * 3600, 3600, 12);
    EXPECT_EQ(t.intensities(), (std::vector<double>{50, 50, 50, 500, 500, 500, 50, 50, 50, 500, 500, 500}));
}

TEST(CarbonShapes, RotateIsPeriodic) {
    const auto r = rotate(hourly({1, 2, 3, 4}), 1);
    EXPECT_TRUE(r.periodic());
    EXPECT_EQ(r.intensities(), (std::vector<double>{2, 3, 4, 1}));
}

TEST(CarbonShapes, DerivedGreenFraction) {
    const auto g = with_derived_green_fraction(hourly({100, 300, 200}));
    ASSERT_TRUE(g.has_green_fraction());
    EXPECT_EQ(*g.green_fraction(), (std::vector<double>{1.0, 0.0, 0.5}));
}

TEST(CarbonTime, Iso8601) {
    EXPECT_EQ(parse_iso8601("1970-01-01T01:00:00Z"), 3600);
    EXPECT_EQ(parse_iso8601("2021-01-01 00:00"), 1609459200);
    EXPECT_EQ(parse_iso8601("2021-01-01T02:00:00+02:00"), 1609459200);
    EXPECT_FALSE(parse_iso8601("yesterday").has_value());
    EXPECT_EQ(parse_iso8601(format_iso8601(1609459200)), 1609459200);
}
