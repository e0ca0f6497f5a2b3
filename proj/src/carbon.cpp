#include <carbonsim/carbon.hpp>

#include <carbonsim/error.hpp>
#include <carbonsim/random.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace carbonsim {

namespace {

std::string row_message(std::string_view what, std::size_t row) {
    std::ostringstream os;
    os << what << " at row " << row;
    return os.str();
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                              : comma - pos)));
        if (comma == std::string_view::npos) {
            break;
        }
        pos = comma + 1;
    }
    return out;
}

std::optional<double> parse_double(std::string_view s) {
    double value = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (!s.empty() && s.front() == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

bool parse_digits(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) {
        return false;
    }
    int value = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (s[i] < '0' || s[i] > '9') {
            return false;
        }
        value = value * 10 + (s[i] - '0');
    }
    out = value;
    return true;
}

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2 ? 1 : 0;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2 ? 1 : 0;
}

void check_trace(double step, const std::vector<double>& intensities,
                 const std::optional<std::vector<double>>& green) {
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw TraceParseError("trace step must be positive", 0);
    }
    if (intensities.empty()) {
        throw TraceParseError("trace is empty", 0);
    }
    for (std::size_t i = 0; i < intensities.size(); ++i) {
        if (!(intensities[i] >= 0.0) || !std::isfinite(intensities[i])) {
            throw TraceParseError(row_message("negative intensity", i + 1), i + 1);
        }
    }
    if (green) {
        if (green->size() != intensities.size()) {
            throw TraceParseError("green_fraction length differs from intensities", 0);
        }
        for (std::size_t i = 0; i < green->size(); ++i) {
            const double g = (*green)[i];
            if (!(g >= 0.0 && g <= 1.0)) {
                throw TraceParseError(row_message("green_fraction outside [0,1]", i + 1), i + 1);
            }
        }
    }
}

} // namespace

CarbonTrace::CarbonTrace(std::int64_t start_epoch,
                         double step_seconds,
                         std::vector<double> intensities,
                         std::optional<std::vector<double>> green_fraction,
                         bool periodic)
    : start_epoch_(start_epoch)
    , step_(step_seconds)
    , intensities_(std::move(intensities))
    , green_fraction_(std::move(green_fraction))
    , periodic_(periodic) {
    check_trace(step_, intensities_, green_fraction_);
}

std::int64_t CarbonTrace::step_index(double t) const {
    if (!contains(t) || !std::isfinite(t)) {
        std::ostringstream os;
        os << "time " << t << " s outside carbon trace [0, " << duration() << ")";
        throw TraceRangeError(os.str());
    }
    auto k = static_cast<std::int64_t>(std::floor(t / step_));
    // Guard against t/step rounding across a boundary.
    if (step_start(k) > t) {
        --k;
    } else if (step_start(k + 1) <= t) {
        ++k;
    }
    if (!periodic_) {
        k = std::min<std::int64_t>(k, static_cast<std::int64_t>(intensities_.size()) - 1);
    }
    return k;
}

double CarbonTrace::intensity_of_step(std::int64_t k) const {
    const auto n = static_cast<std::int64_t>(intensities_.size());
    if (k < 0 || (!periodic_ && k >= n)) {
        throw TraceRangeError("carbon step " + std::to_string(k) + " outside trace");
    }
    return intensities_[static_cast<std::size_t>(k % n)];
}

double CarbonTrace::green_of_step(std::int64_t k) const {
    if (!green_fraction_) {
        throw TraceRangeError("trace has no green_fraction column");
    }
    const auto n = static_cast<std::int64_t>(intensities_.size());
    if (k < 0 || (!periodic_ && k >= n)) {
        throw TraceRangeError("carbon step " + std::to_string(k) + " outside trace");
    }
    return (*green_fraction_)[static_cast<std::size_t>(k % n)];
}

CarbonTrace CarbonTrace::as_periodic() const {
    return CarbonTrace(start_epoch_, step_, intensities_, green_fraction_, true);
}

std::optional<std::int64_t> parse_iso8601(std::string_view s) {
    s = trim(s);
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    if (!parse_digits(s, 0, 4, year) || s.size() < 16 || s[4] != '-' ||
        !parse_digits(s, 5, 2, month) || s[7] != '-' || !parse_digits(s, 8, 2, day) ||
        (s[10] != 'T' && s[10] != ' ') || !parse_digits(s, 11, 2, hour) || s[13] != ':' ||
        !parse_digits(s, 14, 2, minute)) {
        return std::nullopt;
    }
    std::size_t pos = 16;
    if (pos < s.size() && s[pos] == ':') {
        if (!parse_digits(s, pos + 1, 2, second)) {
            return std::nullopt;
        }
        pos += 3;
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
                ++pos;
            }
        }
    }
    int offset_seconds = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z' && pos + 1 == s.size()) {
            pos += 1;
        } else if (s[pos] == '+' || s[pos] == '-') {
            int oh = 0, om = 0;
            if (!parse_digits(s, pos + 1, 2, oh)) {
                return std::nullopt;
            }
            std::size_t mpos = pos + 3;
            if (mpos < s.size() && s[mpos] == ':') {
                ++mpos;
            }
            if (!parse_digits(s, mpos, 2, om) || mpos + 2 != s.size()) {
                return std::nullopt;
            }
            offset_seconds = (oh * 3600 + om * 60) * (s[pos] == '-' ? -1 : 1);
            pos = s.size();
        } else {
            return std::nullopt;
        }
    }
    if (pos != s.size() || month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 ||
        minute > 59 || second > 60) {
        return std::nullopt;
    }
    const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                              static_cast<unsigned>(day));
    return days * 86400 + hour * 3600 + minute * 60 + second - offset_seconds;
}

std::string format_iso8601(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    std::int64_t y = 0;
    unsigned m = 0, d = 0;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>(rem % 3600 / 60), static_cast<long long>(rem % 60));
    return buf;
}

CarbonTrace load_trace(std::istream& in) {
    std::vector<std::int64_t> stamps;
    std::vector<double> values;
    std::vector<double> green;
    std::optional<std::size_t> columns;
    std::string line;
    std::size_t row = 0;
    bool first_line = true;

    while (std::getline(in, line)) {
        const auto view = trim(line);
        if (view.empty()) {
            continue;
        }
        auto fields = split_commas(view);
        if (first_line) {
            first_line = false;
            if (!parse_iso8601(fields.front())) {
                // Header row.
                if (fields.size() < 2 || fields.size() > 3) {
                    throw TraceParseError("malformed header: expected "
                                          "timestamp,carbon_intensity[,green_fraction]",
                                          0);
                }
                columns = fields.size();
                continue;
            }
        }
        ++row;
        if (fields.size() < 2 || fields.size() > 3 || (columns && fields.size() != *columns)) {
            throw TraceParseError(row_message("malformed row (wrong column count)", row), row);
        }
        if (!columns) {
            columns = fields.size();
        }
        const auto stamp = parse_iso8601(fields[0]);
        if (!stamp) {
            throw TraceParseError(row_message("malformed row (bad timestamp)", row), row);
        }
        const auto value = parse_double(fields[1]);
        if (!value) {
            throw TraceParseError(row_message("malformed row (bad intensity)", row), row);
        }
        if (*value < 0.0) {
            throw TraceParseError(row_message("negative intensity", row), row);
        }
        if (fields.size() == 3) {
            const auto g = parse_double(fields[2]);
            if (!g) {
                throw TraceParseError(row_message("malformed row (bad green_fraction)", row), row);
            }
            if (*g < 0.0 || *g > 1.0) {
                throw TraceParseError(row_message("green_fraction outside [0,1]", row), row);
            }
            green.push_back(*g);
        }
        if (stamps.size() >= 1) {
            const std::int64_t gap = *stamp - stamps.back();
            if (gap <= 0) {
                throw TraceParseError(row_message("non-increasing timestamp", row), row);
            }
            if (stamps.size() >= 2 && gap != stamps[1] - stamps[0]) {
                throw TraceParseError(row_message("non-uniform spacing", row), row);
            }
        }
        stamps.push_back(*stamp);
        values.push_back(*value);
    }
    if (values.empty()) {
        throw TraceParseError("trace is empty", 0);
    }
    const double step = stamps.size() >= 2 ? static_cast<double>(stamps[1] - stamps[0]) : 3600.0;
    std::optional<std::vector<double>> green_opt;
    if (columns == 3u) {
        green_opt = std::move(green);
    }
    return CarbonTrace(stamps.front(), step, std::move(values), std::move(green_opt));
}

CarbonTrace load_trace_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw TraceParseError("cannot open trace file: " + path.string(), 0);
    }
    return load_trace(in);
}

void save_trace(const CarbonTrace& trace, std::ostream& out) {
    const bool green = trace.has_green_fraction();
    out << (green ? "timestamp,carbon_intensity,green_fraction\n" : "timestamp,carbon_intensity\n");
    char buf[64];
    const auto step = static_cast<std::int64_t>(std::llround(trace.step()));
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << format_iso8601(trace.start_epoch() + step * static_cast<std::int64_t>(i)) << ',';
        auto res = std::to_chars(buf, buf + sizeof buf, trace.intensities()[i]);
        out.write(buf, res.ptr - buf);
        if (green) {
            res = std::to_chars(buf, buf + sizeof buf, (*trace.green_fraction())[i]);
            out << ',';
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
}

void save_trace_file(const CarbonTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write trace file: " + path.string());
    }
    save_trace(trace, out);
}

double intensity_at(const CarbonTrace& trace, double t) {
    return trace.intensity_of_step(trace.step_index(t));
}

CarbonBounds bounds_over_window(const CarbonTrace& trace, double t, double horizon) {
    if (!(horizon > 0.0)) {
        throw TraceRangeError("lookahead horizon must be positive");
    }
    const std::int64_t first = trace.step_index(t);
    double end = t + horizon;
    if (!trace.periodic()) {
        end = std::min(end, trace.duration());
    }
    auto last = static_cast<std::int64_t>(std::ceil(end / trace.step())) - 1;
    last = std::max(last, first);
    if (!trace.periodic()) {
        last = std::min<std::int64_t>(last, static_cast<std::int64_t>(trace.size()) - 1);
    }
    // A window covering a full period sees every value.
    last = std::min<std::int64_t>(last, first + static_cast<std::int64_t>(trace.size()) - 1);

    CarbonBounds b{trace.intensity_of_step(first), trace.intensity_of_step(first)};
    for (std::int64_t k = first + 1; k <= last; ++k) {
        const double c = trace.intensity_of_step(k);
        b.L = std::min(b.L, c);
        b.U = std::max(b.U, c);
    }
    return b;
}

double integrate_emissions(const CarbonTrace& trace,
                           std::span<const BusyInterval> busy_profile,
                           double power_per_executor_kw) {
    double total = 0.0; // intensity * executor-seconds
    for (const auto& piece : busy_profile) {
        if (!(piece.start <= piece.end) || piece.executors < 0.0) {
            throw TraceRangeError("invalid busy interval");
        }
        if (piece.start < 0.0 || (!trace.periodic() && piece.end > trace.duration())) {
            std::ostringstream os;
            os << "busy interval [" << piece.start << ", " << piece.end
               << ") outside carbon trace [0, " << trace.duration() << ")";
            throw TraceRangeError(os.str());
        }
        if (piece.end == piece.start || piece.executors == 0.0) {
            continue;
        }
        double weighted = 0.0;
        for (std::int64_t k = trace.step_index(piece.start);; ++k) {
            const double lo = std::max(piece.start, trace.step_start(k));
            const double hi = std::min(piece.end, trace.step_start(k + 1));
            if (lo >= piece.end) {
                break;
            }
            if (hi > lo) {
                weighted += trace.intensity_of_step(k) * (hi - lo);
            }
        }
        total += weighted * piece.executors;
    }
    return total * power_per_executor_kw / 3600.0;
}

TraceStats trace_stats(const CarbonTrace& trace) {
    const auto& v = trace.intensities();
    TraceStats s;
    s.count = v.size();
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) {
        sum += x;
    }
    s.mean = sum / static_cast<double>(v.size());
    double sq = 0.0;
    for (double x : v) {
        sq += (x - s.mean) * (x - s.mean);
    }
    s.stddev = std::sqrt(sq / static_cast<double>(v.size()));
    s.cv = s.mean > 0.0 ? s.stddev / s.mean : 0.0;
    return s;
}

CarbonTrace rotate(const CarbonTrace& trace, std::size_t offset_steps) {
    const std::size_t n = trace.size();
    offset_steps %= n;
    std::vector<double> values(n);
    std::optional<std::vector<double>> green;
    if (trace.has_green_fraction()) {
        green.emplace(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        values[i] = trace.intensities()[(i + offset_steps) % n];
        if (green) {
            (*green)[i] = (*trace.green_fraction())[(i + offset_steps) % n];
        }
    }
    const auto shift = static_cast<std::int64_t>(std::llround(trace.step())) *
                       static_cast<std::int64_t>(offset_steps);
    return CarbonTrace(trace.start_epoch() + shift, trace.step(), std::move(values),
                       std::move(green), true);
}

CarbonTrace square_wave(double low, double high, double period_seconds, double step_seconds,
                        std::size_t steps, bool periodic) {
    std::vector<double> values(steps);
    const double half = period_seconds / 2.0;
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = step_seconds * static_cast<double>(i);
        const auto block = static_cast<std::int64_t>(std::floor(t / half + 1e-9));
        values[i] = block % 2 == 0 ? low : high;
    }
    return CarbonTrace(0, step_seconds, std::move(values), std::nullopt, periodic);
}

CarbonTrace synthetic_grid_trace(std::size_t hours, double mean, double daily_amplitude,
                                 double seasonal_amplitude, double noise, std::uint64_t seed,
                                 std::int64_t start_epoch) {
    Rng rng(seed);
    std::vector<double> values(hours);
    double drift = 0.0;
    for (std::size_t h = 0; h < hours; ++h) {
        const double t = static_cast<double>(h);
        const double daily = std::sin(2.0 * std::numbers::pi * (t - 8.0) / 24.0);
        const double seasonal = std::cos(2.0 * std::numbers::pi * t / (24.0 * 365.0));
        drift = 0.9 * drift + noise * (rng.uniform() - 0.5);
        const double raw = mean + daily_amplitude * daily + seasonal_amplitude * seasonal + drift;
        values[h] = std::round(std::max(raw, 0.0) * 10.0) / 10.0;
    }
    return CarbonTrace(start_epoch, 3600.0, std::move(values));
}

CarbonTrace with_derived_green_fraction(const CarbonTrace& trace) {
    const auto stats = trace_stats(trace);
    std::vector<double> green;
    green.reserve(trace.size());
    for (double c : trace.intensities()) {
        green.push_back(stats.max > stats.min ? (stats.max - c) / (stats.max - stats.min) : 0.0);
    }
    return CarbonTrace(trace.start_epoch(), trace.step(), trace.intensities(), std::move(green), trace.periodic());
}

} // namespace carbonsim
