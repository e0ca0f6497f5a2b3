#include <carbonsim/engine.hpp>

#include <carbonsim/error.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <sstream>

namespace carbonsim {

void ClusterConfig::validate() const {
    if (K < 1) {
        throw ConfigError("cluster K must be >= 1");
    }
    if (!(power_per_executor_kw > 0.0)) {
        throw ConfigError("power_per_executor_kw must be > 0");
    }
    if (!(executor_move_delay_s >= 0.0)) {
        throw ConfigError("executor_move_delay_s must be >= 0");
    }
    if (per_job_executor_cap && (*per_job_executor_cap < 1 || *per_job_executor_cap > K)) {
        throw ConfigError("per_job_executor_cap must lie in [1, K]");
    }
    if (!(lookahead_s > 0.0)) {
        throw ConfigError("lookahead must be > 0");
    }
}

double ScheduleRecord::first_arrival() const {
    double t = per_job.empty() ? 0.0 : per_job.front().arrival;
    for (const auto& j : per_job) {
        t = std::min(t, j.arrival);
    }
    return t;
}

double ScheduleRecord::last_completion() const {
    double t = 0.0;
    for (const auto& j : per_job) {
        t = std::max(t, j.completion);
    }
    return t;
}

double ScheduleRecord::makespan() const {
    return per_job.empty() ? 0.0 : last_completion() - first_arrival();
}

namespace {

enum class EventKind : int { CarbonChange = 0, JobArrival = 1, TaskCompletion = 2 };

struct Event {
    double time;
    EventKind kind;
    std::uint64_t seq;
    int payload; // step index, job slot, or executor id
};

struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) {
            return a.time > b.time;
        }
        if (a.kind != b.kind) {
            return static_cast<int>(a.kind) > static_cast<int>(b.kind);
        }
        return a.seq > b.seq;
    }
};

struct StageRuntime {
    int next_task = 0;
    int running = 0;
    int done = 0;
    int pending_parents = 0;
};

struct JobRuntime {
    const JobDag* dag = nullptr;
    DagIndex index;
    std::vector<double> downstream;
    std::vector<int> stage_order; ///< stage indices sorted by stage_id
    std::vector<StageRuntime> stages;
    double unstarted_work = 0.0;
    int executors = 0;
    int stages_done = 0;
    bool arrived = false;
    bool complete = false;
};

struct Executor {
    bool busy = false;
    int job = -1;   ///< job slot of the current/last task
    int stage = -1;
    double task_end = 0.0;
    int last_job = -1;
};

std::vector<double> downstream_paths(const JobDag& job, const DagIndex& idx) {
    std::vector<double> down(job.stages.size(), 0.0);
    for (auto it = idx.topo_order.rbegin(); it != idx.topo_order.rend(); ++it) {
        const auto v = static_cast<std::size_t>(*it);
        double best = 0.0;
        for (int c : idx.children[v]) {
            best = std::max(best, down[static_cast<std::size_t>(c)]);
        }
        down[v] = job.stages[v].max_duration() + best;
    }
    return down;
}

class Simulation {
public:
    Simulation(const ClusterConfig& cluster, const WorkloadSpec& workload,
               const CarbonTrace& trace, SchedulingPolicy& policy)
        : cluster_(cluster), trace_(trace), policy_(policy),
          executors_(static_cast<std::size_t>(cluster.K)) {
        jobs_.reserve(workload.jobs.size());
        for (const auto& dag : workload.jobs) {
            JobRuntime jr;
            jr.dag = &dag;
            jr.index = index_dag(dag);
            jr.downstream = downstream_paths(dag, jr.index);
            jr.stages.resize(dag.stages.size());
            for (std::size_t s = 0; s < dag.stages.size(); ++s) {
                jr.stages[s].pending_parents = static_cast<int>(jr.index.parents[s].size());
                jr.stage_order.push_back(static_cast<int>(s));
            }
            std::sort(jr.stage_order.begin(), jr.stage_order.end(), [&](int a, int b) {
                return dag.stages[static_cast<std::size_t>(a)].stage_id <
                       dag.stages[static_cast<std::size_t>(b)].stage_id;
            });
            jr.unstarted_work = total_work(dag);
            jobs_.push_back(std::move(jr));
        }
        record_.K = cluster.K;
    }

    void run() {
        if (jobs_.empty()) {
            return;
        }
        remaining_jobs_ = static_cast<int>(jobs_.size());
        for (std::size_t j = 0; j < jobs_.size(); ++j) {
            push(jobs_[j].dag->arrival_time, EventKind::JobArrival, static_cast<int>(j));
        }
        apply_carbon_step(0, 0.0);
        schedule_next_carbon(0);

        while (remaining_jobs_ > 0) {
            if (events_.empty()) {
                throw SimulationError("simulation stalled with unfinished jobs");
            }
            const double now = events_.top().time;
            if (!trace_.periodic() && now > trace_.duration()) {
                throw_overrun(now);
            }
            while (!events_.empty() && events_.top().time == now) {
                const Event ev = events_.top();
                events_.pop();
                handle(ev);
            }
            if (remaining_jobs_ == 0) {
                break;
            }
            scheduling_round(now);
        }
    }

private:
    void push(double time, EventKind kind, int payload) {
        events_.push(Event{time, kind, seq_++, payload});
    }

    [[noreturn]] void throw_overrun(double t) const {
        std::ostringstream os;
        os << "carbon trace overrun: simulation reached t=" << t
           << " s but the trace covers [0, " << trace_.duration() << ")";
        throw SimulationError(os.str());
    }

    void schedule_next_carbon(std::int64_t k) {
        const double next = trace_.step_start(k + 1);
        if (trace_.contains(next)) {
            push(next, EventKind::CarbonChange, static_cast<int>(k + 1));
        }
    }

    void apply_carbon_step(std::int64_t k, double now) {
        carbon_ = trace_.intensity_of_step(k);
        bounds_ = bounds_over_window(trace_, trace_.step_start(k), cluster_.lookahead_s);
        if (record_.carbon_bounds_history.empty() ||
            record_.carbon_bounds_history.back().L != bounds_.L ||
            record_.carbon_bounds_history.back().U != bounds_.U) {
            record_.carbon_bounds_history.push_back({now, bounds_.L, bounds_.U});
        }
        const auto ctx = light_context(now);
        policy_.on_carbon_change(ctx);
    }

    SchedulingContext light_context(double now) const {
        SchedulingContext ctx;
        ctx.now = now;
        ctx.carbon = carbon_;
        ctx.bounds = bounds_;
        ctx.trace = &trace_;
        ctx.K = cluster_.K;
        ctx.busy = busy_;
        ctx.idle = cluster_.K - busy_;
        return ctx;
    }

    void handle(const Event& ev) {
        switch (ev.kind) {
        case EventKind::CarbonChange:
            apply_carbon_step(ev.payload, ev.time);
            schedule_next_carbon(ev.payload);
            break;
        case EventKind::JobArrival: {
            auto& jr = jobs_[static_cast<std::size_t>(ev.payload)];
            jr.arrived = true;
            active_.push_back(ev.payload);
            break;
        }
        case EventKind::TaskCompletion:
            complete_task(ev.payload, ev.time);
            break;
        }
    }

    void complete_task(int executor_id, double now) {
        auto& ex = executors_[static_cast<std::size_t>(executor_id)];
        auto& jr = jobs_[static_cast<std::size_t>(ex.job)];
        const auto s = static_cast<std::size_t>(ex.stage);
        auto& st = jr.stages[s];
        --st.running;
        ++st.done;
        ex.busy = false;
        --busy_;
        --jr.executors;

        const int num_tasks = jr.dag->stages[s].num_tasks();
        if (st.done == num_tasks) {
            ++jr.stages_done;
            for (int c : jr.index.children[s]) {
                --jr.stages[static_cast<std::size_t>(c)].pending_parents;
            }
            if (jr.stages_done == static_cast<int>(jr.stages.size())) {
                jr.complete = true;
                --remaining_jobs_;
                completions_.emplace(ex.job, now);
                active_.erase(std::find(active_.begin(), active_.end(), ex.job));
            }
        }
        if (st.next_task < num_tasks && policy_.may_continue(light_context(now))) {
            start_task(executor_id, ex.job, ex.stage, now);
        }
    }

    void start_task(int executor_id, int job_slot, int stage_index, double now) {
        auto& ex = executors_[static_cast<std::size_t>(executor_id)];
        auto& jr = jobs_[static_cast<std::size_t>(job_slot)];
        const auto s = static_cast<std::size_t>(stage_index);
        auto& st = jr.stages[s];
        const auto& spec = jr.dag->stages[s];
        const int task = st.next_task++;
        ++st.running;
        const double duration = spec.task_durations[static_cast<std::size_t>(task)];
        jr.unstarted_work -= duration;
        ++jr.executors;

        const bool moving = ex.last_job >= 0 && ex.last_job != job_slot;
        const double start = moving ? now + cluster_.executor_move_delay_s : now;
        const double end = start + duration;
        if (!trace_.contains(start) || (!trace_.periodic() && end > trace_.duration())) {
            throw_overrun(end);
        }
        ex.busy = true;
        ex.job = job_slot;
        ex.stage = stage_index;
        ex.task_end = end;
        ex.last_job = job_slot;
        ++busy_;
        record_.assignments.push_back(
            {jr.dag->job_id, spec.stage_id, task, executor_id, start, end});
        push(end, EventKind::TaskCompletion, executor_id);
    }

    void build_views(double now) {
        job_views_.clear();
        available_.clear();
        for (int slot : active_) {
            const auto& jr = jobs_[static_cast<std::size_t>(slot)];
            JobView view;
            view.dag = jr.dag;
            view.job_id = jr.dag->job_id;
            view.arrival = jr.dag->arrival_time;
            view.executors = jr.executors;
            view.downstream_path = &jr.downstream;
            view.remaining_work = std::max(0.0, jr.unstarted_work);
            job_views_.push_back(view);
        }
        for (const auto& ex : executors_) {
            if (ex.busy) {
                for (std::size_t v = 0; v < active_.size(); ++v) {
                    if (active_[v] == ex.job) {
                        job_views_[v].remaining_work += ex.task_end - now;
                        break;
                    }
                }
            }
        }
        const int cap = cluster_.per_job_executor_cap.value_or(cluster_.K);
        for (std::size_t v = 0; v < active_.size(); ++v) {
            const auto& jr = jobs_[static_cast<std::size_t>(active_[v])];
            if (jr.executors >= cap) {
                continue;
            }
            for (int s : jr.stage_order) {
                const auto& st = jr.stages[static_cast<std::size_t>(s)];
                const int n = jr.dag->stages[static_cast<std::size_t>(s)].num_tasks();
                if (st.pending_parents == 0 && st.next_task < n) {
                    available_.push_back({v, s, jr.dag->job_id,
                                          jr.dag->stages[static_cast<std::size_t>(s)].stage_id,
                                          n - st.next_task});
                }
            }
        }
    }

    void scheduling_round(double now) {
        {
            build_views(now);
            SchedulingContext ctx = light_context(now);
            ctx.available = available_;
            ctx.jobs = job_views_;
            const int q = policy_.quota(ctx);
            if (record_.quota_history.empty() || record_.quota_history.back().quota != q) {
                record_.quota_history.push_back({now, q});
            }
        }
        int held = 0;
        while (true) {
            const int idle = cluster_.K - busy_ - held;
            if (idle <= 0) {
                break;
            }
            build_views(now);
            if (available_.empty()) {
                break;
            }
            if (!trace_.contains(now)) {
                throw_overrun(now);
            }
            SchedulingContext ctx = light_context(now);
            ctx.idle = idle;
            ctx.available = available_;
            ctx.jobs = job_views_;
            const Decision d = policy_.decide(ctx);
            if (d.kind == Decision::Kind::Idle) {
                break;
            }
            if (d.choice >= available_.size()) {
                throw SimulationError("policy '" + policy_.name() +
                                      "' chose a stage outside the available set");
            }
            const AvailableStage chosen = available_[d.choice];
            if (d.kind == Decision::Kind::Defer) {
                record_.deferrals.push_back(
                    {now, chosen.job_id, chosen.stage_id, d.relative_importance, carbon_});
                if (cluster_.defer_holds_all_idle) {
                    break;
                }
                ++held;
                continue;
            }
            if (d.parallelism < 1) {
                throw SimulationError("policy '" + policy_.name() +
                                      "' returned parallelism limit < 1");
            }
            const int slot = active_[chosen.job_slot];
            const auto& jr = jobs_[static_cast<std::size_t>(slot)];
            const int headroom = cluster_.per_job_executor_cap.value_or(cluster_.K) - jr.executors;
            const int n = std::min({d.parallelism, idle, chosen.unstarted_tasks, headroom});
            for (int i = 0; i < n; ++i) {
                start_task(pick_executor(slot), slot, chosen.stage_index, now);
            }
        }
    }

    int pick_executor(int job_slot) const {
        int fallback = -1;
        for (std::size_t e = 0; e < executors_.size(); ++e) {
            const auto& ex = executors_[e];
            if (ex.busy) {
                continue;
            }
            if (ex.last_job == job_slot || ex.last_job < 0 || cluster_.executor_move_delay_s == 0.0) {
                return static_cast<int>(e);
            }
            if (fallback < 0) {
                fallback = static_cast<int>(e);
            }
        }
        if (fallback < 0) {
            throw SimulationError("no idle executor available");
        }
        return fallback;
    }

public:
    ScheduleRecord finish() {
        record_.per_job.reserve(jobs_.size());
        for (std::size_t j = 0; j < jobs_.size(); ++j) {
            record_.per_job.push_back({jobs_[j].dag->job_id, jobs_[j].dag->arrival_time,
                                       completions_.at(static_cast<int>(j))});
        }
        return std::move(record_);
    }

private:
    const ClusterConfig& cluster_;
    const CarbonTrace& trace_;
    SchedulingPolicy& policy_;

    std::vector<JobRuntime> jobs_;
    std::vector<Executor> executors_;
    std::vector<int> active_; ///< arrived, incomplete job slots in arrival order
    std::map<int, double> completions_;
    std::priority_queue<Event, std::vector<Event>, EventLater> events_;
    std::uint64_t seq_ = 0;
    int busy_ = 0;
    int remaining_jobs_ = 0;
    double carbon_ = 0.0;
    CarbonBounds bounds_;

    std::vector<JobView> job_views_;
    std::vector<AvailableStage> available_;
    ScheduleRecord record_;
};

} // namespace

ScheduleRecord run_simulation(const ClusterConfig& cluster,
                              const WorkloadSpec& workload,
                              const CarbonTrace& trace,
                              SchedulingPolicy& policy,
                              std::uint64_t seed) {
    cluster.validate();
    validate(workload);
    policy.reset(seed);
    Simulation sim(cluster, workload, trace, policy);
    sim.run();
    return sim.finish();
}

std::vector<BusyInterval> busy_profile(const ScheduleRecord& record) {
    std::vector<std::pair<double, int>> deltas;
    deltas.reserve(record.assignments.size() * 2);
    for (const auto& a : record.assignments) {
        if (a.end > a.start) {
            deltas.emplace_back(a.start, +1);
            deltas.emplace_back(a.end, -1);
        }
    }
    std::sort(deltas.begin(), deltas.end());
    std::vector<BusyInterval> out;
    int count = 0;
    std::size_t i = 0;
    while (i < deltas.size()) {
        const double t = deltas[i].first;
        while (i < deltas.size() && deltas[i].first == t) {
            count += deltas[i].second;
            ++i;
        }
        if (i == deltas.size()) {
            break;
        }
        const double next = deltas[i].first;
        if (count > 0) {
            if (!out.empty() && out.back().end == t &&
                out.back().executors == static_cast<double>(count)) {
                out.back().end = next;
            } else {
                out.push_back({t, next, static_cast<double>(count)});
            }
        }
    }
    return out;
}

void verify_record(const ScheduleRecord& record, const WorkloadSpec& workload) {
    auto fail = [](const std::string& what) { throw SimulationError("record check failed: " + what); };

    std::map<int, std::vector<std::pair<double, double>>> by_executor;
    for (const auto& a : record.assignments) {
        if (a.executor_id < 0 || a.executor_id >= record.K) {
            fail("executor id out of range");
        }
        if (!(a.end >= a.start)) {
            fail("assignment ends before it starts");
        }
        by_executor[a.executor_id].emplace_back(a.start, a.end);
    }
    for (auto& [e, spans] : by_executor) {
        std::sort(spans.begin(), spans.end());
        for (std::size_t i = 1; i < spans.size(); ++i) {
            if (spans[i].first < spans[i - 1].second) {
                fail("executor " + std::to_string(e) + " runs overlapping tasks");
            }
        }
    }
    for (const auto& piece : busy_profile(record)) {
        if (piece.executors > record.K) {
            fail("more than K executors busy");
        }
    }

    std::map<int, const JobDag*> jobs;
    for (const auto& j : workload.jobs) {
        jobs[j.job_id] = &j;
    }
    if (record.per_job.size() != workload.jobs.size()) {
        fail("per-job outcomes do not match the workload");
    }
    // (job, stage) -> [earliest start, latest end, task count, work]
    struct StageSeen {
        double first_start = INFINITY;
        double last_end = -INFINITY;
        int tasks = 0;
        double work = 0.0;
    };
    std::map<std::pair<int, int>, StageSeen> seen;
    for (const auto& a : record.assignments) {
        auto& s = seen[{a.job_id, a.stage_id}];
        s.first_start = std::min(s.first_start, a.start);
        s.last_end = std::max(s.last_end, a.end);
        ++s.tasks;
        s.work += a.end - a.start;
    }
    double assigned = 0.0;
    double expected = 0.0;
    for (const auto& outcome : record.per_job) {
        const auto it = jobs.find(outcome.job_id);
        if (it == jobs.end()) {
            fail("unknown job " + std::to_string(outcome.job_id));
        }
        const JobDag& job = *it->second;
        expected += total_work(job);
        double last_end = job.arrival_time;
        for (const auto& stage : job.stages) {
            const auto s = seen.find({job.job_id, stage.stage_id});
            if (s == seen.end() || s->second.tasks != stage.num_tasks()) {
                fail("job " + std::to_string(job.job_id) + " stage " +
                     std::to_string(stage.stage_id) + " did not run every task exactly once");
            }
            if (s->second.first_start < job.arrival_time) {
                fail("task started before its job arrived");
            }
            assigned += s->second.work;
            last_end = std::max(last_end, s->second.last_end);
        }
        for (const auto& e : job.edges) {
            if (seen[{job.job_id, e.child}].first_start < seen[{job.job_id, e.parent}].last_end) {
                fail("precedence violated on edge " + std::to_string(e.parent) + "->" +
                     std::to_string(e.child) + " of job " + std::to_string(job.job_id));
            }
        }
        if (outcome.completion != last_end) {
            fail("job " + std::to_string(job.job_id) + " completion time mismatch");
        }
    }
    if (std::abs(assigned - expected) > 1e-9 * std::max(1.0, expected)) {
        fail("work conservation violated");
    }
}

} // namespace carbonsim
