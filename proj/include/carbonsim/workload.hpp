#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace carbonsim {

/// A group of sibling tasks that share dependencies.
struct StageSpec {
    int stage_id = 0;
    std::vector<double> task_durations; ///< seconds, one per task

    [[nodiscard]] int num_tasks() const noexcept { return static_cast<int>(task_durations.size()); }
    [[nodiscard]] double max_duration() const;
    [[nodiscard]] double work() const;

    bool operator==(const StageSpec&) const = default;
};

struct Edge {
    int parent = 0;
    int child = 0;

    bool operator==(const Edge&) const = default;
};

/// One job: a DAG of stages.
struct JobDag {
    int job_id = 0;
    double arrival_time = 0.0;
    std::vector<StageSpec> stages;
    std::vector<Edge> edges;

    bool operator==(const JobDag&) const = default;
};

struct WorkloadSpec {
    std::vector<JobDag> jobs; ///< sorted by arrival_time, ties by job_id

    bool operator==(const WorkloadSpec&) const = default;
};

/// Index-based adjacency for a validated job. Stage indices follow `job.stages` order.
struct DagIndex {
    std::vector<std::vector<int>> parents;
    std::vector<std::vector<int>> children;
    std::vector<int> topo_order;
};

/// Checks stage ids, durations, edge endpoints, duplicates and acyclicity.
/// Throws WorkloadError; a cycle error lists the stage ids on one cycle.
void validate(const JobDag& job);

/// Validates every job and that arrivals are nonnegative and sorted.
void validate(const WorkloadSpec& workload);

/// Builds adjacency and a topological order (requires a valid job).
DagIndex index_dag(const JobDag& job);

/// Longest path where each stage weighs its longest task.
double critical_path(const JobDag& job);

/// Sum of every task duration (single-executor makespan).
double total_work(const JobDag& job);

std::size_t total_tasks(const JobDag& job);

/// Sorts jobs by (arrival_time, job_id).
void sort_by_arrival(WorkloadSpec& workload);

enum class DagModel { TemplateLibrary, LayeredRandom };

/// TPC-H-like input scales and their mean single-executor job durations.
enum class TemplateScale { Small2GB, Medium10GB, Large50GB };

double template_scale_mean_seconds(TemplateScale scale);

struct GeneratorParams {
    int n_jobs = 10;
    double mean_interarrival_s = 1800.0;
    DagModel dag_model = DagModel::LayeredRandom;

    // Template library.
    TemplateScale template_scale = TemplateScale::Small2GB;
    /// Multiplies template job durations; 1 keeps the scale's mean.
    double template_duration_factor = 1.0;

    // Layered random DAGs.
    double mean_stages = 8.0;       ///< mean of the power-law stage count
    int max_width = 4;              ///< stages per layer
    int max_tasks_per_stage = 8;
    double mean_job_work_s = 600.0; ///< mean single-executor duration per job
    double power_law_exponent = 2.0;
    double power_law_range = 100.0; ///< max/min ratio of the truncated power law
    double edge_probability = 0.5;  ///< extra edges from the previous layer
    double duration_scale = 1.0;    ///< applied to all durations (e.g. 1/60)

    bool operator==(const GeneratorParams&) const = default;
};

/// Alibaba-like defaults: ~66 stages per job on average, mean single-executor
/// duration 7989 s scaled by 1/60.
GeneratorParams alibaba_like_params(int n_jobs, double mean_interarrival_s);

/// Deterministic in (params, seed). Interarrival gaps are exponential.
WorkloadSpec generate_workload(const GeneratorParams& params, std::uint64_t seed);

/// Workload JSON:
/// {"jobs":[{"job_id":0,"arrival_time":0.0,
///           "stages":[{"stage_id":0,"num_tasks":2,"task_durations":[1.5,1.5]}
///                     | {"stage_id":1,"num_tasks":3,"duration":2.0}],
///           "edges":[[0,1]]}]}
WorkloadSpec load_workload(std::istream& in);
WorkloadSpec load_workload_file(const std::filesystem::path& path);
void save_workload(const WorkloadSpec& workload, std::ostream& out);
void save_workload_file(const WorkloadSpec& workload, const std::filesystem::path& path);

std::string dag_model_name(DagModel model);
DagModel parse_dag_model(const std::string& name);

} // namespace carbonsim
