#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace carbonsim {

/// Piecewise-constant carbon-intensity signal (gCO2eq/kWh).
///
/// Step k covers the half-open interval [k*step, (k+1)*step) measured from
/// the trace start, so a boundary instant belongs to the later step. A
/// trace marked periodic repeats itself indefinitely; otherwise queries past
/// the end are errors.
class CarbonTrace {
public:
    /// Validates and builds a trace. Throws TraceParseError (row 0) on bad input.
    CarbonTrace(std::int64_t start_epoch,
                double step_seconds,
                std::vector<double> intensities,
                std::optional<std::vector<double>> green_fraction = std::nullopt,
                bool periodic = false);

    [[nodiscard]] std::int64_t start_epoch() const noexcept { return start_epoch_; }
    [[nodiscard]] double step() const noexcept { return step_; }
    [[nodiscard]] std::size_t size() const noexcept { return intensities_.size(); }
    [[nodiscard]] const std::vector<double>& intensities() const noexcept { return intensities_; }
    [[nodiscard]] const std::optional<std::vector<double>>& green_fraction() const noexcept {
        return green_fraction_;
    }
    [[nodiscard]] bool has_green_fraction() const noexcept { return green_fraction_.has_value(); }
    [[nodiscard]] bool periodic() const noexcept { return periodic_; }

    /// Seconds covered by one pass over the data.
    [[nodiscard]] double duration() const noexcept {
        return step_ * static_cast<double>(intensities_.size());
    }

    /// Absolute step index containing t (unbounded for periodic traces).
    /// Throws TraceRangeError when t is outside the domain.
    [[nodiscard]] std::int64_t step_index(double t) const;

    /// Intensity of absolute step k (wrapped when periodic).
    [[nodiscard]] double intensity_of_step(std::int64_t k) const;
    [[nodiscard]] double green_of_step(std::int64_t k) const;

    [[nodiscard]] double step_start(std::int64_t k) const noexcept {
        return step_ * static_cast<double>(k);
    }

    [[nodiscard]] bool contains(double t) const noexcept {
        return t >= 0.0 && (periodic_ || t < duration());
    }

    [[nodiscard]] CarbonTrace as_periodic() const;

    bool operator==(const CarbonTrace&) const = default;

private:
    std::int64_t start_epoch_;
    double step_;
    std::vector<double> intensities_;
    std::optional<std::vector<double>> green_fraction_;
    bool periodic_;
};

struct CarbonBounds {
    double L = 0.0;
    double U = 0.0;

    bool operator==(const CarbonBounds&) const = default;
};

/// One piece of a busy-executor profile: `executors` busy on [start, end).
struct BusyInterval {
    double start = 0.0;
    double end = 0.0;
    double executors = 0.0;

    bool operator==(const BusyInterval&) const = default;
};

struct TraceStats {
    std::size_t count = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double stddev = 0.0; ///< population standard deviation
    double cv = 0.0;     ///< stddev / mean
};

/// Parses `timestamp,carbon_intensity[,green_fraction]` CSV. The step is
/// inferred from the first two timestamps and every later gap must match.
CarbonTrace load_trace(std::istream& in);
CarbonTrace load_trace_file(const std::filesystem::path& path);

void save_trace(const CarbonTrace& trace, std::ostream& out);
void save_trace_file(const CarbonTrace& trace, const std::filesystem::path& path);

/// c(t) for t relative to the trace start; right-continuous step function.
double intensity_at(const CarbonTrace& trace, double t);

/// Min/max over every step intersecting [t, t + horizon), clamped to the
/// trace end for non-periodic traces. Always includes the step holding t.
CarbonBounds bounds_over_window(const CarbonTrace& trace, double t, double horizon);

/// Grams CO2eq emitted by the busy profile: sum of c(t) * executors * power dt,
/// split exactly at step boundaries (g/kWh * kW * h).
double integrate_emissions(const CarbonTrace& trace,
                           std::span<const BusyInterval> busy_profile,
                           double power_per_executor_kw = 1.0);

TraceStats trace_stats(const CarbonTrace& trace);

/// Periodic copy of the trace starting at step `offset_steps`.
CarbonTrace rotate(const CarbonTrace& trace, std::size_t offset_steps);

/// Alternating low/high blocks, each half a period long; starts low.
CarbonTrace square_wave(double low, double high, double period_seconds,
                        double step_seconds, std::size_t steps,
                        bool periodic = false);

/// Diurnal-plus-seasonal synthetic trace with noise, rounded to 0.1 g/kWh so
/// values survive a CSV round trip unchanged. Deterministic in `seed`.
CarbonTrace synthetic_grid_trace(std::size_t hours, double mean, double daily_amplitude,
                                 double seasonal_amplitude, double noise, std::uint64_t seed,
                                 std::int64_t start_epoch = 1609459200);

/// Copy with green_fraction = (max - c) / (max - min) per step (0 when flat).
CarbonTrace with_derived_green_fraction(const CarbonTrace& trace);

/// ISO-8601 `YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z|+HH:MM|-HH:MM]` to epoch seconds.
std::optional<std::int64_t> parse_iso8601(std::string_view text);
std::string format_iso8601(std::int64_t epoch_seconds);

} // namespace carbonsim
