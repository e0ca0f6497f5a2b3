#include <carbonsim/record_io.hpp>

#include <carbonsim/error.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace carbonsim {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T>
T parse_number(const std::string& text, std::size_t row) {
    T value{};
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw Error("schedule csv: malformed value '" + text + "' at row " + std::to_string(row));
    }
    return value;
}

} // namespace

void write_schedule_csv(const ScheduleRecord& record, std::ostream& out) {
    out << "job,stage,task,executor,start,end\n";
    for (const auto& a : record.assignments) {
        out << a.job_id << ',' << a.stage_id << ',' << a.task_index << ',' << a.executor_id << ','
            << fmt_double(a.start) << ',' << fmt_double(a.end) << '\n';
    }
}

std::vector<Assignment> read_schedule_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "job,stage,task,executor,start,end") {
        throw Error("schedule csv: missing header 'job,stage,task,executor,start,end'");
    }
    std::vector<Assignment> out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() != 6) {
            throw Error("schedule csv: expected 6 columns at row " + std::to_string(row));
        }
        Assignment a;
        a.job_id = parse_number<int>(cells[0], row);
        a.stage_id = parse_number<int>(cells[1], row);
        a.task_index = parse_number<int>(cells[2], row);
        a.executor_id = parse_number<int>(cells[3], row);
        a.start = parse_number<double>(cells[4], row);
        a.end = parse_number<double>(cells[5], row);
        out.push_back(a);
    }
    return out;
}

void write_events_jsonl(const ScheduleRecord& record, std::ostream& out) {
    using nlohmann::json;
    out << json{{"type", "meta"}, {"K", record.K}}.dump() << '\n';
    for (const auto& j : record.per_job) {
        out << json{{"type", "arrival"}, {"time", j.arrival}, {"job", j.job_id}}.dump() << '\n';
    }
    for (const auto& j : record.per_job) {
        out << json{{"type", "completion"}, {"time", j.completion}, {"job", j.job_id}}.dump() << '\n';
    }
    for (const auto& d : record.deferrals) {
        out << json{{"type", "deferral"},
                    {"time", d.time},
                    {"job", d.job_id},
                    {"stage", d.stage_id},
                    {"relative_importance", d.relative_importance},
                    {"carbon", d.carbon}}
                   .dump()
            << '\n';
    }
    for (const auto& q : record.quota_history) {
        out << json{{"type", "quota"}, {"time", q.time}, {"quota", q.quota}}.dump() << '\n';
    }
    for (const auto& b : record.carbon_bounds_history) {
        out << json{{"type", "bounds"}, {"time", b.time}, {"L", b.L}, {"U", b.U}}.dump() << '\n';
    }
}

ScheduleRecord read_record(std::istream& schedule_csv, std::istream& events_jsonl) {
    ScheduleRecord record;
    record.assignments = read_schedule_csv(schedule_csv);
    std::map<int, std::size_t> slot;
    std::string line;
    std::size_t row = 0;
    bool have_meta = false;
    while (std::getline(events_jsonl, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        nlohmann::json e;
        try {
            e = nlohmann::json::parse(line);
            const auto type = e.at("type").get<std::string>();
            if (type == "meta") {
                record.K = e.at("K").get<int>();
                have_meta = true;
            } else if (type == "arrival") {
                const int job = e.at("job").get<int>();
                slot[job] = record.per_job.size();
                record.per_job.push_back({job, e.at("time").get<double>(), 0.0});
            } else if (type == "completion") {
                const int job = e.at("job").get<int>();
                const auto it = slot.find(job);
                if (it == slot.end()) {
                    throw Error("completion before arrival for job " + std::to_string(job));
                }
                record.per_job[it->second].completion = e.at("time").get<double>();
            } else if (type == "deferral") {
                record.deferrals.push_back({e.at("time").get<double>(), e.at("job").get<int>(),
                                            e.at("stage").get<int>(),
                                            e.at("relative_importance").get<double>(),
                                            e.at("carbon").get<double>()});
            } else if (type == "quota") {
                record.quota_history.push_back({e.at("time").get<double>(), e.at("quota").get<int>()});
            } else if (type == "bounds") {
                record.carbon_bounds_history.push_back(
                    {e.at("time").get<double>(), e.at("L").get<double>(), e.at("U").get<double>()});
            } else {
                throw Error("unknown event type '" + type + "'");
            }
        } catch (const nlohmann::json::exception& ex) {
            throw Error("events log: " + std::string(ex.what()) + " at line " + std::to_string(row));
        }
    }
    if (!have_meta) {
        throw Error("events log: missing meta line");
    }
    return record;
}

ScheduleRecord read_record_files(const std::filesystem::path& schedule_csv,
                                 const std::filesystem::path& events_jsonl) {
    std::ifstream csv(schedule_csv);
    if (!csv) {
        throw Error("cannot open " + schedule_csv.string());
    }
    std::ifstream events(events_jsonl);
    if (!events) {
        throw Error("cannot open " + events_jsonl.string());
    }
    return read_record(csv, events);
}

nlohmann::json gantt_json(const ScheduleRecord& record) {
    using nlohmann::json;
    std::map<int, json> lanes;
    for (const auto& a : record.assignments) {
        lanes[a.executor_id].push_back(
            {{"job", a.job_id}, {"stage", a.stage_id}, {"task", a.task_index}, {"start", a.start}, {"end", a.end}});
    }
    json executors = json::array();
    for (auto& [id, bars] : lanes) {
        executors.push_back({{"executor", id}, {"tasks", std::move(bars)}});
    }
    json quota = json::array();
    for (const auto& q : record.quota_history) {
        quota.push_back({{"time", q.time}, {"quota", q.quota}});
    }
    return {{"K", record.K}, {"executors", std::move(executors)}, {"quota", std::move(quota)}};
}

nlohmann::json to_json(const MetricsReport& m) {
    using nlohmann::json;
    json per_job = json::array();
    for (const auto& j : m.per_job_jct) {
        per_job.push_back({{"job", j.job_id}, {"jct", j.jct}});
    }
    json out{{"K", m.K},
             {"footprint_g", m.footprint_g},
             {"per_job_jct", std::move(per_job)},
             {"avg_jct", m.avg_jct},
             {"ect", m.ect},
             {"utilization", m.utilization},
             {"busy_executor_seconds", m.busy_executor_seconds},
             {"deferrals", m.deferrals},
             {"min_quota", m.min_quota}};
    if (m.normalized) {
        out["normalized"] = {{"baseline", m.normalized->baseline},
                             {"footprint", m.normalized->footprint},
                             {"ect", m.normalized->ect},
                             {"avg_jct", m.normalized->avg_jct}};
    }
    return out;
}

nlohmann::json to_json(const BoundReport& r) {
    nlohmann::json out{{"name", r.name}, {"observed", r.observed}, {"bound", r.bound},
                       {"K", r.K},       {"pass", r.pass},         {"slack", r.slack}};
    auto put = [&out](const char* key, const auto& opt) {
        if (opt) {
            out[key] = *opt;
        }
    };
    put("B", r.B);
    put("opt", r.opt);
    put("d_hat_measured", r.d_hat);
    put("M", r.M);
    put("a", r.a);
    put("b", r.b);
    return out;
}

nlohmann::json to_json(const SavingsDecomposition& d) {
    nlohmann::json out{{"defined", d.defined}, {"savings_g", d.savings_g}, {"direct_g", d.direct_g},
                       {"T", d.T},             {"T_prime", d.T_prime}};
    if (d.defined) {
        out["W"] = d.W;
        out["s_minus"] = d.s_minus;
        out["s_plus"] = d.s_plus;
        out["c_bar"] = d.c_bar;
    }
    return out;
}

nlohmann::json to_json(const TraceStats& s) {
    return {{"count", s.count}, {"min", s.min},       {"max", s.max},
            {"mean", s.mean},   {"stddev", s.stddev}, {"cv", s.cv}};
}

} // namespace carbonsim
