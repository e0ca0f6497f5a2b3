#include <carbonsim/analysis.hpp>

#include <carbonsim/error.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>

namespace carbonsim {

MetricsReport compute_metrics(const ScheduleRecord& record, const CarbonTrace& trace,
                              double power_per_executor_kw) {
    MetricsReport m;
    m.K = record.K;
    const auto profile = busy_profile(record);
    m.footprint_g = integrate_emissions(trace, profile, power_per_executor_kw);
    double jct_sum = 0.0;
    for (const auto& job : record.per_job) {
        const double jct = job.completion - job.arrival;
        m.per_job_jct.push_back({job.job_id, jct});
        jct_sum += jct;
    }
    if (!record.per_job.empty()) {
        m.avg_jct = jct_sum / static_cast<double>(record.per_job.size());
    }
    m.ect = record.makespan();
    for (const auto& a : record.assignments) {
        m.busy_executor_seconds += a.end - a.start;
    }
    if (m.ect > 0.0 && record.K > 0) {
        m.utilization = m.busy_executor_seconds / (static_cast<double>(record.K) * m.ect);
    }
    m.deferrals = record.deferrals.size();
    m.min_quota = min_quota(record);
    return m;
}

NormalizedMetrics normalize_metrics(const MetricsReport& report, const MetricsReport& baseline,
                                    const std::string& baseline_name) {
    auto ratio = [](double x, double base) {
        return base == 0.0 ? (x == 0.0 ? 1.0 : std::numeric_limits<double>::infinity()) : x / base;
    };
    return {baseline_name, ratio(report.footprint_g, baseline.footprint_g),
            ratio(report.ect, baseline.ect), ratio(report.avg_jct, baseline.avg_jct)};
}

// ---------------------------------------------------------------------------
// Optimal makespan

namespace {

struct BnbTask {
    double duration = 0.0;
    std::uint32_t preds = 0;
    double tail = 0.0; ///< longest duration path from this task to a sink, inclusive
    int symmetry_class = 0;
};

struct Running {
    int task = 0;
    double end = 0.0;
};

class MakespanSearch {
public:
    MakespanSearch(std::vector<BnbTask> tasks, int K) : tasks_(std::move(tasks)), K_(K) {
        all_ = tasks_.size() == 32 ? ~0u : ((1u << tasks_.size()) - 1u);
    }

    double solve() {
        std::vector<Running> running;
        search(0.0, 0u, 0u, running);
        return best_;
    }

private:
    double lower_bound(double t, std::uint32_t started, const std::vector<Running>& running) const {
        double lb = t;
        double work = 0.0;
        for (const auto& r : running) {
            const auto& task = tasks_[static_cast<std::size_t>(r.task)];
            lb = std::max(lb, r.end + task.tail - task.duration);
            work += r.end - t;
        }
        for (std::size_t i = 0; i < tasks_.size(); ++i) {
            if (!(started & (1u << i))) {
                lb = std::max(lb, t + tasks_[i].tail);
                work += tasks_[i].duration;
            }
        }
        return std::max(lb, t + work / K_);
    }

    void search(double t, std::uint32_t done, std::uint32_t started, std::vector<Running>& running) {
        if (done == all_) {
            best_ = std::min(best_, t);
            return;
        }
        if (lower_bound(t, started, running) >= best_) {
            return;
        }
        std::vector<int> eligible;
        for (std::size_t i = 0; i < tasks_.size(); ++i) {
            if (!(started & (1u << i)) && (tasks_[i].preds & ~done) == 0u) {
                eligible.push_back(static_cast<int>(i));
            }
        }
        const int free = K_ - static_cast<int>(running.size());
        const std::uint32_t subsets = 1u << eligible.size();
        std::vector<std::uint32_t> order;
        for (std::uint32_t s = 0; s < subsets; ++s) {
            if (std::popcount(s) > free || (s == 0 && running.empty()) || !canonical(eligible, s)) {
                continue;
            }
            order.push_back(s);
        }
        std::stable_sort(order.begin(), order.end(), [](std::uint32_t a, std::uint32_t b) {
            return std::popcount(a) > std::popcount(b);
        });
        for (const std::uint32_t s : order) {
            std::vector<Running> next = running;
            std::uint32_t next_started = started;
            for (std::size_t j = 0; j < eligible.size(); ++j) {
                if (s & (1u << j)) {
                    const int task = eligible[j];
                    next.push_back({task, t + tasks_[static_cast<std::size_t>(task)].duration});
                    next_started |= 1u << task;
                }
            }
            double t_next = std::numeric_limits<double>::infinity();
            for (const auto& r : next) {
                t_next = std::min(t_next, r.end);
            }
            std::uint32_t next_done = done;
            std::vector<Running> still;
            for (const auto& r : next) {
                if (r.end == t_next) {
                    next_done |= 1u << r.task;
                } else {
                    still.push_back(r);
                }
            }
            search(t_next, next_done, next_started, still);
        }
    }

    // Interchangeable tasks start in index order.
    bool canonical(const std::vector<int>& eligible, std::uint32_t s) const {
        for (std::size_t j = 0; j < eligible.size(); ++j) {
            if (!(s & (1u << j))) {
                continue;
            }
            for (std::size_t i = 0; i < j; ++i) {
                if (!(s & (1u << i)) &&
                    tasks_[static_cast<std::size_t>(eligible[i])].symmetry_class ==
                        tasks_[static_cast<std::size_t>(eligible[j])].symmetry_class) {
                    return false;
                }
            }
        }
        return true;
    }

    std::vector<BnbTask> tasks_;
    int K_;
    std::uint32_t all_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

} // namespace

double optimal_makespan_bruteforce(const JobDag& job, int K) {
    validate(job);
    if (K < 1 || K > 4) {
        throw AnalysisError("optimal_makespan_bruteforce requires 1 <= K <= 4");
    }
    const std::size_t n = total_tasks(job);
    if (n > 10) {
        throw AnalysisError("optimal_makespan_bruteforce: instance too large (" + std::to_string(n) +
                            " tasks, limit 10)");
    }
    const auto index = index_dag(job);
    std::vector<std::vector<int>> stage_tasks(job.stages.size());
    std::vector<BnbTask> tasks;
    for (std::size_t s = 0; s < job.stages.size(); ++s) {
        for (double d : job.stages[s].task_durations) {
            stage_tasks[s].push_back(static_cast<int>(tasks.size()));
            BnbTask t;
            t.duration = d;
            tasks.push_back(t);
        }
    }
    // symmetry classes: same stage and same duration
    for (std::size_t s = 0; s < job.stages.size(); ++s) {
        for (int a : stage_tasks[s]) {
            auto& ta = tasks[static_cast<std::size_t>(a)];
            ta.symmetry_class = a;
            for (int b : stage_tasks[s]) {
                if (b < a && tasks[static_cast<std::size_t>(b)].duration == ta.duration) {
                    ta.symmetry_class = tasks[static_cast<std::size_t>(b)].symmetry_class;
                    break;
                }
            }
        }
        for (int p : index.parents[s]) {
            for (int t : stage_tasks[s]) {
                for (int pt : stage_tasks[static_cast<std::size_t>(p)]) {
                    tasks[static_cast<std::size_t>(t)].preds |= 1u << pt;
                }
            }
        }
    }
    for (auto it = index.topo_order.rbegin(); it != index.topo_order.rend(); ++it) {
        const auto s = static_cast<std::size_t>(*it);
        double below = 0.0;
        for (int c : index.children[s]) {
            for (int ct : stage_tasks[static_cast<std::size_t>(c)]) {
                below = std::max(below, tasks[static_cast<std::size_t>(ct)].tail);
            }
        }
        for (int t : stage_tasks[s]) {
            tasks[static_cast<std::size_t>(t)].tail = tasks[static_cast<std::size_t>(t)].duration + below;
        }
    }
    if (tasks.empty()) {
        return 0.0;
    }
    return MakespanSearch(std::move(tasks), K).solve();
}

// ---------------------------------------------------------------------------
// Stretch and bounds

namespace {

bool within(double observed, double bound) {
    return observed <= bound + 1e-9 * std::abs(bound);
}

} // namespace

BoundReport compute_csf(const ScheduleRecord& agnostic, const ScheduleRecord& aware,
                        std::optional<double> opt) {
    BoundReport r;
    r.name = "csf";
    r.K = aware.K;
    const double ag = agnostic.makespan();
    const double aw = aware.makespan();
    r.observed = ag > 0.0 ? aw / ag : 1.0;
    r.bound = r.observed;
    if (opt) {
        if (!(*opt > 0.0)) {
            throw AnalysisError("optimal makespan must be positive");
        }
        r.opt = opt;
        r.a = ag / *opt;
        r.b = aw / *opt;
    }
    return r;
}

double deferral_fraction(const ScheduleRecord& record, const WorkloadSpec& workload) {
    std::vector<double> durations;
    for (const auto& job : workload.jobs) {
        for (const auto& stage : job.stages) {
            durations.insert(durations.end(), stage.task_durations.begin(), stage.task_durations.end());
        }
    }
    const double total = std::accumulate(durations.begin(), durations.end(), 0.0);
    if (durations.empty() || total <= 0.0) {
        return 0.0;
    }
    std::sort(durations.begin(), durations.end(), std::greater<>());
    const std::size_t m = std::min(record.deferrals.size(), durations.size() - 1);
    const double deferred = std::accumulate(durations.begin(), durations.begin() + static_cast<std::ptrdiff_t>(m), 0.0);
    return deferred / total;
}

double deferral_fraction(const ScheduleRecord& record, const JobDag& job) {
    WorkloadSpec w;
    w.jobs.push_back(job);
    return deferral_fraction(record, w);
}

int min_quota(const ScheduleRecord& record) {
    int m = record.K;
    for (const auto& q : record.quota_history) {
        m = std::min(m, q.quota);
    }
    return m;
}

BoundReport check_pcaps_bound(const ScheduleRecord& record, double d_hat, int K, double opt) {
    if (K < 1 || !(opt > 0.0)) {
        throw AnalysisError("bound check requires K >= 1 and opt > 0");
    }
    BoundReport r;
    r.name = "pcaps-makespan";
    r.K = K;
    r.opt = opt;
    r.d_hat = d_hat;
    r.observed = record.makespan();
    r.bound = (2.0 - 1.0 / K + d_hat * K) * opt;
    r.pass = within(r.observed, r.bound);
    r.slack = r.bound - r.observed;
    return r;
}

BoundReport check_cap_bound(const ScheduleRecord& record, int M, int K, double opt) {
    if (K < 1 || M < 1 || M > K || !(opt > 0.0)) {
        throw AnalysisError("bound check requires 1 <= M <= K and opt > 0");
    }
    BoundReport r;
    r.name = "cap-makespan";
    r.K = K;
    r.opt = opt;
    r.M = M;
    r.observed = record.makespan();
    const double m = M;
    r.bound = (2.0 * K / m - K / (m * m)) * opt;
    r.pass = within(r.observed, r.bound);
    r.slack = r.bound - r.observed;
    return r;
}

// ---------------------------------------------------------------------------
// Savings

namespace {

/// Executor-seconds per trace step.
std::map<std::int64_t, double> step_usage(const ScheduleRecord& record, const CarbonTrace& trace) {
    std::map<std::int64_t, double> usage;
    for (const auto& piece : busy_profile(record)) {
        if (piece.end <= piece.start) {
            continue;
        }
        for (std::int64_t k = trace.step_index(piece.start);; ++k) {
            const double lo = std::max(piece.start, trace.step_start(k));
            const double hi = std::min(piece.end, trace.step_start(k + 1));
            if (lo >= piece.end) {
                break;
            }
            if (hi > lo) {
                usage[k] += (hi - lo) * piece.executors;
            }
        }
    }
    return usage;
}

std::int64_t last_step(const std::map<std::int64_t, double>& usage) {
    for (auto it = usage.rbegin(); it != usage.rend(); ++it) {
        if (it->second > 0.0) {
            return it->first;
        }
    }
    return -1;
}

double value_at(const std::map<std::int64_t, double>& usage, std::int64_t k) {
    const auto it = usage.find(k);
    return it == usage.end() ? 0.0 : it->second;
}

void check_same_jobs(const ScheduleRecord& a, const ScheduleRecord& b) {
    if (a.per_job.size() != b.per_job.size()) {
        throw AnalysisError("records cover different workloads");
    }
    for (std::size_t i = 0; i < a.per_job.size(); ++i) {
        if (a.per_job[i].job_id != b.per_job[i].job_id || a.per_job[i].arrival != b.per_job[i].arrival) {
            throw AnalysisError("records cover different workloads");
        }
    }
}

SavingsDecomposition decompose(const ScheduleRecord& agnostic, const ScheduleRecord& aware,
                               const CarbonTrace& trace, double power, bool split_by_sign) {
    check_same_jobs(agnostic, aware);
    const auto ag = step_usage(agnostic, trace);
    const auto aw = step_usage(aware, trace);
    const std::int64_t T = last_step(ag);
    const std::int64_t T_prime = last_step(aw);
    SavingsDecomposition d;
    d.T = trace.step_start(T + 1);
    d.T_prime = trace.step_start(T_prime + 1);
    d.direct_g = integrate_emissions(trace, busy_profile(agnostic), power) -
                 integrate_emissions(trace, busy_profile(aware), power);

    double W = 0.0;
    double minus = 0.0;
    double plus = 0.0;
    double after = 0.0;
    double ag_total = 0.0;
    const std::int64_t last = std::max(T, T_prime);
    for (std::int64_t k = 0; k <= last; ++k) {
        const double e_ag = value_at(ag, k);
        const double e_aw = value_at(aw, k);
        const double c = trace.intensity_of_step(k);
        ag_total += e_ag;
        if (k <= T) {
            const double diff = e_ag - e_aw;
            if (split_by_sign) {
                if (diff > 0.0) {
                    W += diff;
                    minus += diff * c;
                } else {
                    plus += -diff * c;
                }
            } else {
                W += diff;
                minus += diff * c;
            }
        } else {
            after += e_aw * c;
        }
    }
    if (std::abs(W) <= 1e-12 * ag_total) {
        d.savings_g = d.direct_g;
        return d;
    }
    d.defined = true;
    d.W = W;
    d.s_minus = minus / W;
    d.s_plus = plus / W;
    d.c_bar = after / W;
    d.savings_g = W * (d.s_minus - d.s_plus - d.c_bar) * power / 3600.0;
    return d;
}

} // namespace

SavingsDecomposition savings_decomposition_cap(const ScheduleRecord& agnostic,
                                               const ScheduleRecord& cap,
                                               const CarbonTrace& trace,
                                               double power_per_executor_kw) {
    return decompose(agnostic, cap, trace, power_per_executor_kw, false);
}

SavingsDecomposition savings_decomposition_pcaps(const ScheduleRecord& pb,
                                                 const ScheduleRecord& pcaps,
                                                 const CarbonTrace& trace,
                                                 double power_per_executor_kw) {
    return decompose(pb, pcaps, trace, power_per_executor_kw, true);
}

namespace {

bool covered(const ScheduleRecord& record, double lo, double hi) {
    std::vector<std::pair<double, double>> spans;
    for (const auto& j : record.per_job) {
        if (j.completion > lo && j.arrival < hi) {
            spans.emplace_back(j.arrival, j.completion);
        }
    }
    std::sort(spans.begin(), spans.end());
    double reach = lo;
    for (const auto& [a, b] : spans) {
        if (a > reach) {
            return false;
        }
        reach = std::max(reach, b);
        if (reach >= hi) {
            return true;
        }
    }
    return reach >= hi;
}

int quota_at(const ScheduleRecord& record, double t) {
    int q = record.K;
    for (const auto& change : record.quota_history) {
        if (change.time > t) {
            break;
        }
        q = change.quota;
    }
    return q;
}

} // namespace

std::vector<BackloggedStep> avg_savings_backlogged(const ScheduleRecord& agnostic,
                                                   const ScheduleRecord& aware,
                                                   const CarbonTrace& trace,
                                                   const std::optional<ThresholdSet>& thresholds) {
    check_same_jobs(agnostic, aware);
    std::vector<BackloggedStep> series;
    if (agnostic.per_job.empty()) {
        return series;
    }
    const auto ag = step_usage(agnostic, trace);
    const auto aw = step_usage(aware, trace);
    const std::int64_t last = std::max(last_step(ag), last_step(aw));
    const double K = agnostic.K;
    const double step = trace.step();
    for (std::int64_t k = 0; k <= last; ++k) {
        const double lo = trace.step_start(k);
        const double hi = trace.step_start(k + 1);
        if (!covered(agnostic, lo, hi) || !covered(aware, lo, hi)) {
            continue;
        }
        BackloggedStep s;
        s.step = k;
        s.time = lo;
        s.carbon = trace.intensity_of_step(k);
        s.rho_agnostic = value_at(ag, k) / (K * step);
        s.rho_aware = value_at(aw, k) / (K * step);
        s.quota = quota_at(aware, lo);
        if (thresholds) {
            const double phi = s.quota >= thresholds->B && s.quota <= thresholds->K
                                   ? thresholds->phi(s.quota)
                                   : thresholds->U;
            s.savings = (s.rho_agnostic * K - s.rho_aware * s.quota) * phi;
        } else {
            s.savings = (s.rho_agnostic - s.rho_aware) * K * s.carbon;
        }
        series.push_back(s);
    }
    return series;
}

} // namespace carbonsim
