#pragma once

#include <carbonsim/analysis.hpp>
#include <carbonsim/engine.hpp>

#include <json.hpp>

#include <filesystem>
#include <iosfwd>

namespace carbonsim {

/// `job,stage,task,executor,start,end`, one row per assignment in start order.
void write_schedule_csv(const ScheduleRecord& record, std::ostream& out);
std::vector<Assignment> read_schedule_csv(std::istream& in);

/// Line-delimited JSON: a `meta` line with K, then arrivals, completions,
/// deferrals, quota and bounds changes, each tagged by `type`.
void write_events_jsonl(const ScheduleRecord& record, std::ostream& out);

/// Rebuilds a record from its schedule CSV and events log.
ScheduleRecord read_record(std::istream& schedule_csv, std::istream& events_jsonl);
ScheduleRecord read_record_files(const std::filesystem::path& schedule_csv,
                                 const std::filesystem::path& events_jsonl);

/// Per-executor task bars for external plotting.
nlohmann::json gantt_json(const ScheduleRecord& record);

nlohmann::json to_json(const MetricsReport& metrics);
nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const SavingsDecomposition& decomposition);
nlohmann::json to_json(const TraceStats& stats);

} // namespace carbonsim
