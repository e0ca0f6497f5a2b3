#pragma once

#include <carbonsim/carbon.hpp>
#include <carbonsim/engine.hpp>
#include <carbonsim/random.hpp>
#include <carbonsim/workload.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

namespace carbonsim::support {

inline StageSpec stage(int id, std::vector<double> durations) {
    return StageSpec{id, std::move(durations)};
}

inline JobDag job(int id, double arrival, std::vector<StageSpec> stages, std::vector<Edge> edges = {}) {
    return JobDag{id, arrival, std::move(stages), std::move(edges)};
}

inline CarbonTrace constant_trace(double c, std::size_t steps = 1000, double step = 3600.0) {
    return CarbonTrace(0, step, std::vector<double>(steps, c));
}

/// Small random single job: 1-4 stages, 1-3 tasks each, integer durations 1-9,
/// at most `max_tasks` tasks, random forward edges.
inline JobDag random_tiny_job(Rng& rng, int max_tasks = 8) {
    JobDag j;
    j.job_id = 0;
    const int n_stages = static_cast<int>(rng.uniform_int(1, 4));
    int budget = max_tasks;
    for (int s = 0; s < n_stages && budget > 0; ++s) {
        const int remaining_stages = n_stages - s - 1;
        const int most = std::max(1, std::min<int>(3, budget - remaining_stages));
        const int n = static_cast<int>(rng.uniform_int(1, most));
        std::vector<double> d;
        for (int t = 0; t < n; ++t) {
            d.push_back(static_cast<double>(rng.uniform_int(1, 9)));
        }
        budget -= n;
        j.stages.push_back(stage(s, d));
    }
    for (int c = 1; c < static_cast<int>(j.stages.size()); ++c) {
        for (int p = 0; p < c; ++p) {
            if (rng.uniform() < 0.45) {
                j.edges.push_back({p, c});
            }
        }
    }
    return j;
}

/// Small random multi-job workload from the layered generator.
inline WorkloadSpec random_small_workload(std::uint64_t seed, int n_jobs = 6) {
    GeneratorParams p;
    p.n_jobs = n_jobs;
    p.mean_interarrival_s = 900.0;
    p.mean_stages = 4.0;
    p.max_width = 3;
    p.max_tasks_per_stage = 4;
    p.mean_job_work_s = 3000.0;
    return generate_workload(p, seed);
}

/// Exact emissions computed per assignment (no profile merging): each task
/// interval is cut at step boundaries and weighted by the step's intensity.
inline double oracle_emissions(const ScheduleRecord& record, const CarbonTrace& trace, double power_kw) {
    double total = 0.0;
    const double step = trace.step();
    for (const auto& a : record.assignments) {
        double t = a.start;
        while (t < a.end) {
            const auto k = static_cast<std::int64_t>(std::floor(t / step));
            double boundary = static_cast<double>(k + 1) * step;
            if (boundary <= t) {
                boundary = static_cast<double>(k + 2) * step;
            }
            const double hi = std::min(a.end, boundary);
            total += trace.intensity_of_step(k) * (hi - t);
            t = hi;
        }
    }
    return total * power_kw / 3600.0;
}

/// Integral of busy count computed on a fixed grid of `dt` seconds using the
/// midpoint of each cell (exact for schedules whose change points lie on the grid).
inline double counting_integral(const ScheduleRecord& record, double dt) {
    double end = 0.0;
    for (const auto& a : record.assignments) {
        end = std::max(end, a.end);
    }
    double total = 0.0;
    for (double t = 0.0; t < end; t += dt) {
        const double mid = t + dt / 2;
        int busy = 0;
        for (const auto& a : record.assignments) {
            if (a.start <= mid && mid < a.end) {
                ++busy;
            }
        }
        total += busy * dt;
    }
    return total;
}

/// Optimal makespan by the serial schedule-generation scheme over every
/// precedence-feasible task order (the active schedules include an optimum).
inline double ssgs_optimal_makespan(const JobDag& j, int K) {
    const auto index = index_dag(j);
    std::vector<double> dur;
    std::vector<int> stage_of;
    for (std::size_t s = 0; s < j.stages.size(); ++s) {
        for (double d : j.stages[s].task_durations) {
            dur.push_back(d);
            stage_of.push_back(static_cast<int>(s));
        }
    }
    const std::size_t n = dur.size();
    std::vector<std::vector<std::size_t>> preds(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            const auto& parents = index.parents[static_cast<std::size_t>(stage_of[a])];
            if (std::find(parents.begin(), parents.end(), stage_of[b]) != parents.end()) {
                preds[a].push_back(b);
            }
        }
    }
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> start(n, -1.0);
    std::vector<bool> placed(n, false);
    std::function<void(std::size_t)> rec = [&](std::size_t depth) {
        if (depth == n) {
            double mk = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                mk = std::max(mk, start[i] + dur[i]);
            }
            best = std::min(best, mk);
            return;
        }
        for (std::size_t v = 0; v < n; ++v) {
            if (placed[v]) {
                continue;
            }
            bool ready = true;
            double est = 0.0;
            for (auto p : preds[v]) {
                if (!placed[p]) {
                    ready = false;
                    break;
                }
                est = std::max(est, start[p] + dur[p]);
            }
            if (!ready) {
                continue;
            }
            std::vector<double> candidates{est};
            for (std::size_t u = 0; u < n; ++u) {
                if (placed[u] && start[u] + dur[u] > est) {
                    candidates.push_back(start[u] + dur[u]);
                }
            }
            std::sort(candidates.begin(), candidates.end());
            for (double s : candidates) {
                auto usage_at = [&](double t) {
                    int used = 0;
                    for (std::size_t u = 0; u < n; ++u) {
                        if (placed[u] && start[u] <= t && t < start[u] + dur[u]) {
                            ++used;
                        }
                    }
                    return used;
                };
                bool fits = usage_at(s) < K;
                for (std::size_t u = 0; u < n && fits; ++u) {
                    if (placed[u] && start[u] > s && start[u] < s + dur[v]) {
                        fits = usage_at(start[u]) < K;
                    }
                }
                if (fits) {
                    placed[v] = true;
                    start[v] = s;
                    rec(depth + 1);
                    placed[v] = false;
                    start[v] = -1.0;
                    break;
                }
            }
        }
    };
    rec(0);
    return best;
}

inline bool rel_close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

} // namespace carbonsim::support
