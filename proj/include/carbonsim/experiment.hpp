#pragma once

#include <carbonsim/analysis.hpp>
#include <carbonsim/carbon.hpp>
#include <carbonsim/engine.hpp>
#include <carbonsim/pcaps.hpp>
#include <carbonsim/workload.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace carbonsim {

/// Policy name plus every knob; unused knobs are ignored by the chosen policy.
struct PolicySpec {
    std::string name = "fifo";
    double gamma = 0.5;   ///< pcaps
    int B = 1;            ///< cap-*
    double theta = 0.5;   ///< greenhadoop
    double tau = 0.25;    ///< pb / pcaps softmax temperature
    double w = 1.0;       ///< weighted-fair exponent
    CarbonScale carbon_scale = CarbonScale::Normalized;
    bool strict_filter = false;

    /// Throws ConfigError for unknown names or knobs outside their domains.
    void validate(int K) const;
    bool operator==(const PolicySpec&) const = default;
};

/// fifo, weighted-fair, pb, greenhadoop, pcaps, and cap-<fifo|weighted-fair|pb>.
std::vector<std::string> policy_names();
std::unique_ptr<SchedulingPolicy> make_policy(const PolicySpec& spec);

struct ExperimentConfig {
    ClusterConfig cluster;
    std::filesystem::path trace_path;
    bool trace_periodic = true;
    std::optional<std::filesystem::path> workload_path; ///< otherwise generated
    GeneratorParams generator;
    PolicySpec policy;
    std::uint64_t seed = 1;
    int trials = 1;
    bool random_offset = false;                      ///< per-trial uniform trace start
    std::optional<std::size_t> trace_offset_steps;   ///< pinned start step
    std::filesystem::path output_dir;                ///< empty: $CARBONSIM_OUT or ./runs

    void validate() const;
};

/// Relative paths inside the document resolve against `base_dir`.
ExperimentConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config_file(const std::filesystem::path& path);

/// Default output root: $CARBONSIM_OUT when set, else "runs".
std::filesystem::path default_output_root();

struct RunInputs {
    WorkloadSpec workload;
    CarbonTrace trace;
    std::size_t offset_steps = 0;
    std::uint64_t seed = 0;
};

/// Workload (loaded or generated from `seed`) and trace (rotated to the pinned
/// offset or to one drawn from `seed`).
RunInputs materialize(const ExperimentConfig& config, const CarbonTrace& base_trace, std::uint64_t seed);

struct RunResult {
    ScheduleRecord record;
    MetricsReport metrics;
};

RunResult simulate(const ExperimentConfig& config, const RunInputs& inputs, const PolicySpec& policy);

/// Metrics document written to metrics.json and printed by `analyze`.
std::string metrics_document(const ExperimentConfig& config, const RunInputs& inputs,
                             const PolicySpec& policy, const MetricsReport& metrics);

/// Writes config.json, workload.json, schedule.csv, events.jsonl, gantt.json
/// and metrics.json into `dir`.
void write_run_dir(const std::filesystem::path& dir, const ExperimentConfig& config,
                   const RunInputs& inputs, const RunResult& result);

/// Runs every trial; returns the run directories in trial order.
std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& config);

/// Recomputes metrics.json from a run directory's stored artifacts.
std::string analyze_run_dir(const std::filesystem::path& dir);

/// CSF, normalized metrics, savings decomposition and, for single tiny jobs,
/// the makespan bound checks. Throws AnalysisError on mismatched inputs.
nlohmann::json compare_run_dirs(const std::filesystem::path& baseline_dir,
                                const std::filesystem::path& aware_dir);

struct SweepSpec {
    std::string axis = "gamma";          ///< gamma | B | theta
    std::vector<double> values;
    std::vector<std::uint64_t> seeds;
    std::optional<PolicySpec> baseline;  ///< normalizes every point per seed
    int threads = 0;                     ///< 0: hardware concurrency
};

struct SweepSample {
    double value = 0.0;
    std::uint64_t seed = 0;
    MetricsReport metrics;
};

struct SweepStat {
    double mean = 0.0;
    double stddev = 0.0; ///< sample standard deviation (0 for one seed)
};

struct SweepRow {
    double value = 0.0;
    std::size_t seeds = 0;
    SweepStat footprint_g;
    SweepStat ect;
    SweepStat avg_jct;
    std::optional<SweepStat> norm_footprint;
    std::optional<SweepStat> norm_ect;
    std::optional<SweepStat> norm_avg_jct;
};

struct SweepResult {
    std::string axis;
    std::string policy;
    std::vector<SweepRow> rows;
    std::vector<SweepSample> samples;    ///< point-major, seed-minor
    std::vector<SweepSample> baseline;   ///< per seed when a baseline is set
};

SweepResult run_sweep(const ExperimentConfig& config, const SweepSpec& spec);
void write_sweep_summary_csv(const SweepResult& result, std::ostream& out);
void write_sweep_samples_csv(const SweepResult& result, std::ostream& out);

PolicySpec with_axis_value(PolicySpec spec, const std::string& axis, double value);

} // namespace carbonsim
