#pragma once

#include <carbonsim/carbon.hpp>
#include <carbonsim/workload.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace carbonsim {

struct ClusterConfig {
    int K = 1;
    double power_per_executor_kw = 1.0;
    double executor_move_delay_s = 0.0;
    std::optional<int> per_job_executor_cap;
    double lookahead_s = 48.0 * 3600.0;
    /// On a deferral, hold every idle executor until the next event (true) or
    /// only the prompting one, continuing the round with the rest (false).
    bool defer_holds_all_idle = true;

    void validate() const;
};

struct Assignment {
    int job_id = 0;
    int stage_id = 0;
    int task_index = 0;
    int executor_id = 0;
    double start = 0.0;
    double end = 0.0;

    bool operator==(const Assignment&) const = default;
};

struct DeferralEvent {
    double time = 0.0;
    int job_id = 0;
    int stage_id = 0;
    double relative_importance = 0.0;
    double carbon = 0.0;

    bool operator==(const DeferralEvent&) const = default;
};

struct QuotaChange {
    double time = 0.0;
    int quota = 0;

    bool operator==(const QuotaChange&) const = default;
};

struct BoundsChange {
    double time = 0.0;
    double L = 0.0;
    double U = 0.0;

    bool operator==(const BoundsChange&) const = default;
};

struct JobOutcome {
    int job_id = 0;
    double arrival = 0.0;
    double completion = 0.0;

    bool operator==(const JobOutcome&) const = default;
};

/// Complete history of one simulated run.
struct ScheduleRecord {
    int K = 0;
    std::vector<Assignment> assignments;      ///< in start order
    std::vector<DeferralEvent> deferrals;
    std::vector<QuotaChange> quota_history;   ///< executor quota, recorded on change
    std::vector<BoundsChange> carbon_bounds_history;
    std::vector<JobOutcome> per_job;          ///< in workload order

    [[nodiscard]] double first_arrival() const;
    [[nodiscard]] double last_completion() const;
    /// last completion minus first arrival
    [[nodiscard]] double makespan() const;

    bool operator==(const ScheduleRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Policy interface

/// A stage in the available set: parents complete, unstarted tasks remain.
struct AvailableStage {
    std::size_t job_slot = 0; ///< index into SchedulingContext::jobs
    int stage_index = 0;      ///< position in JobDag::stages
    int job_id = 0;
    int stage_id = 0;
    int unstarted_tasks = 0;
};

/// Read-only view of an arrived, incomplete job.
struct JobView {
    const JobDag* dag = nullptr;
    int job_id = 0;
    double arrival = 0.0;
    double remaining_work = 0.0;   ///< unstarted task seconds + remaining running seconds
    int executors = 0;             ///< executors currently working for the job
    /// Longest stage-weight path from each stage to a sink, inclusive.
    const std::vector<double>* downstream_path = nullptr;
};

struct SchedulingContext {
    double now = 0.0;
    double carbon = 0.0;
    CarbonBounds bounds;
    const CarbonTrace* trace = nullptr;
    int K = 0;
    int idle = 0;
    int busy = 0;
    std::span<const AvailableStage> available;
    std::span<const JobView> jobs;
};

struct Decision {
    enum class Kind { Schedule, Idle, Defer };

    Kind kind = Kind::Idle;
    std::size_t choice = 0;        ///< index into SchedulingContext::available
    int parallelism = 0;           ///< executors requested (Schedule)
    double relative_importance = 0.0; ///< logged with Defer

    static Decision schedule(std::size_t choice, int parallelism) {
        return {Kind::Schedule, choice, parallelism, 0.0};
    }
    static Decision idle() { return {}; }
    static Decision defer(std::size_t choice, double relative_importance) {
        return {Kind::Defer, choice, 0, relative_importance};
    }
};

class SchedulingPolicy {
public:
    virtual ~SchedulingPolicy() = default;

    [[nodiscard]] virtual std::string name() const = 0;

    /// Called once before a run; policies owning an rng reseed here.
    virtual void reset(std::uint64_t /*seed*/) {}

    /// Called whenever c(t) or the rolling bounds may have changed.
    virtual void on_carbon_change(const SchedulingContext& /*ctx*/) {}

    /// Called repeatedly during a scheduling round while executors are idle.
    virtual Decision decide(const SchedulingContext& ctx) = 0;

    /// Executor quota currently in force (K when unconstrained).
    [[nodiscard]] virtual int quota(const SchedulingContext& ctx) const { return ctx.K; }

    /// Whether an executor that just finished a task may pull the next task
    /// of the same stage. `ctx.busy` excludes the asking executor; `available`
    /// and `jobs` are empty.
    virtual bool may_continue(const SchedulingContext& /*ctx*/) { return true; }
};

/// Runs the discrete-event simulation. Time zero is the trace start.
/// Throws SimulationError on trace overrun or invalid policy decisions.
ScheduleRecord run_simulation(const ClusterConfig& cluster,
                              const WorkloadSpec& workload,
                              const CarbonTrace& trace,
                              SchedulingPolicy& policy,
                              std::uint64_t seed);

/// Piecewise-constant busy-executor count; zero-count gaps omitted and
/// adjacent pieces with equal counts merged.
std::vector<BusyInterval> busy_profile(const ScheduleRecord& record);

/// Post-hoc checks: executor overlap, capacity, precedence, work
/// conservation and completion bookkeeping. Throws SimulationError.
void verify_record(const ScheduleRecord& record, const WorkloadSpec& workload);

} // namespace carbonsim
