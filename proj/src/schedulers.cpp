#include <carbonsim/schedulers.hpp>

#include <carbonsim/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace carbonsim {

Decision fifo_choose(const SchedulingContext& ctx) {
    if (ctx.available.empty()) {
        return Decision::idle();
    }
    // The available set is ordered by job arrival, then stage id.
    return Decision::schedule(0, ctx.available.front().unstarted_tasks);
}

std::vector<int> weighted_fair_shares(std::span<const double> remaining_work, int K,
                                      double exponent) {
    const std::size_t n = remaining_work.size();
    std::vector<int> shares(n, 0);
    if (n == 0 || K <= 0) {
        return shares;
    }
    std::vector<double> weight(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        weight[i] = std::pow(std::max(remaining_work[i], 0.0), exponent);
        total += weight[i];
    }
    if (!(total > 0.0)) {
        std::fill(weight.begin(), weight.end(), 1.0);
        total = static_cast<double>(n);
    }
    // Highest averages with divisors 0, 1, 2, ...: every job gets a first
    // executor before any gets a second. Ties go to the heavier, then earlier, entry.
    for (int seat = 0; seat < K; ++seat) {
        std::size_t best = n;
        double best_quotient = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double quotient = shares[i] == 0 ? std::numeric_limits<double>::infinity()
                                                   : weight[i] / shares[i];
            if (best == n || quotient > best_quotient ||
                (quotient == best_quotient && weight[i] > weight[best])) {
                best = i;
                best_quotient = quotient;
            }
        }
        ++shares[best];
    }
    return shares;
}

Decision weighted_fair_choose(const SchedulingContext& ctx, double exponent) {
    if (ctx.available.empty()) {
        return Decision::idle();
    }
    std::vector<double> work;
    work.reserve(ctx.jobs.size());
    for (const auto& j : ctx.jobs) {
        work.push_back(j.remaining_work);
    }
    const auto shares = weighted_fair_shares(work, ctx.K, exponent);

    std::size_t best = ctx.available.size();
    int best_deficit = 0;
    for (std::size_t i = 0; i < ctx.available.size(); ++i) {
        const std::size_t slot = ctx.available[i].job_slot;
        const int deficit = shares[slot] - ctx.jobs[slot].executors;
        // Only the first available stage of each job competes.
        if (i > 0 && ctx.available[i - 1].job_slot == slot) {
            continue;
        }
        if (best == ctx.available.size() || deficit > best_deficit) {
            best = i;
            best_deficit = deficit;
        }
    }
    return Decision::schedule(best, std::max(1, best_deficit));
}

ScoreDistribution pb_scores(const SchedulingContext& ctx, double temperature) {
    if (ctx.available.empty()) {
        throw SimulationError("probabilistic scheduler invoked with an empty available set");
    }
    if (!(temperature > 0.0)) {
        throw ConfigError("softmax temperature must be > 0");
    }
    std::vector<double> score(ctx.available.size());
    double max_score = 0.0;
    for (std::size_t i = 0; i < ctx.available.size(); ++i) {
        const auto& a = ctx.available[i];
        score[i] = (*ctx.jobs[a.job_slot].downstream_path)[static_cast<std::size_t>(a.stage_index)];
        max_score = std::max(max_score, score[i]);
    }
    ScoreDistribution dist;
    dist.entries.reserve(score.size());
    double total = 0.0;
    for (std::size_t i = 0; i < score.size(); ++i) {
        const double normalized = max_score > 0.0 ? score[i] / max_score : 1.0;
        const double w = std::exp((normalized - 1.0) / temperature);
        total += w;
        dist.entries.push_back({i, ctx.available[i].job_id, ctx.available[i].stage_id, w});
    }
    for (auto& e : dist.entries) {
        e.probability /= total;
    }
    return dist;
}

std::size_t pb_sample_index(const ScoreDistribution& dist, double u) {
    if (dist.entries.empty()) {
        throw SimulationError("cannot sample from an empty distribution");
    }
    double cumulative = 0.0;
    for (std::size_t i = 0; i < dist.entries.size(); ++i) {
        cumulative += dist.entries[i].probability;
        if (u < cumulative) {
            return i;
        }
    }
    return dist.entries.size() - 1;
}

Decision ProbabilisticPolicy::decide(const SchedulingContext& ctx) {
    if (ctx.available.empty()) {
        return Decision::idle();
    }
    const auto dist = distribution(ctx);
    const auto& entry = dist.entries[sample(dist)];
    return Decision::schedule(entry.choice, parallelism(ctx, entry.choice));
}

namespace {

// Executor-seconds of capacity over [t, t + window) with green capacity
// g_k = green_fraction_k * K plus a uniform brown level, capped at K.
// Time past the end of a non-periodic trace has no green supply.
double window_capacity(const CarbonTrace& trace, double t, double window, int K, double brown) {
    const double end = t + window;
    double capacity = 0.0;
    for (std::int64_t k = trace.step_index(t);; ++k) {
        const double lo = std::max(t, trace.step_start(k));
        if (lo >= end) {
            break;
        }
        double hi = std::min(end, trace.step_start(k + 1));
        if (!trace.contains(lo)) {
            capacity += std::min<double>(K, brown) * (end - lo);
            break;
        }
        capacity += std::min<double>(K, trace.green_of_step(k) * K + brown) * (hi - lo);
    }
    return capacity;
}

// Shortest horizon whose cumulative green capacity reaches `work`.
double green_window(const CarbonTrace& trace, double t, int K, double work, double brown_window) {
    double period_green = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        period_green += (*trace.green_fraction())[i];
    }
    if (period_green <= 0.0) {
        return brown_window;
    }
    double cumulative = 0.0;
    for (std::int64_t k = trace.step_index(t);; ++k) {
        const double lo = std::max(t, trace.step_start(k));
        if (!trace.contains(lo)) {
            // Green supply ends with the trace; finish on full capacity.
            return (lo - t) + (work - cumulative) / K;
        }
        const double hi = trace.step_start(k + 1);
        const double rate = trace.green_of_step(k) * K;
        if (rate > 0.0 && cumulative + rate * (hi - lo) >= work) {
            return (lo - t) + (work - cumulative) / rate;
        }
        cumulative += rate * (hi - lo);
    }
}

} // namespace

int greenhadoop_limit(const GreenHadoopState& state, const CarbonTrace& trace, double t, int K,
                      double outstanding_work) {
    if (!trace.has_green_fraction()) {
        throw ConfigError("greenhadoop baseline unavailable: trace has no green_fraction column");
    }
    if (!(state.theta >= 0.0 && state.theta <= 1.0)) {
        throw ConfigError("greenhadoop theta must lie in [0, 1]");
    }
    if (!(outstanding_work > 0.0)) {
        return 0;
    }
    const double brown_window = outstanding_work / K;
    const double green = green_window(trace, t, K, outstanding_work, brown_window);
    const double window = state.theta * green + (1.0 - state.theta) * brown_window;

    double level = 0.0;
    if (window_capacity(trace, t, window, K, 0.0) < outstanding_work) {
        double lo = 0.0;
        double hi = K;
        for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (window_capacity(trace, t, window, K, mid) >= outstanding_work) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        level = hi;
    }
    const double green_now = trace.green_of_step(trace.step_index(t)) * K;
    const int limit = static_cast<int>(std::floor(green_now + 1e-9)) +
                      static_cast<int>(std::ceil(level - 1e-9));
    return std::clamp(limit, 0, K);
}

GreenHadoopPolicy::GreenHadoopPolicy(double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) {
        throw ConfigError("greenhadoop theta must lie in [0, 1]");
    }
    state_.theta = theta;
}

int GreenHadoopPolicy::quota(const SchedulingContext& ctx) const {
    double outstanding = 0.0;
    for (const auto& j : ctx.jobs) {
        outstanding += j.remaining_work;
    }
    return greenhadoop_limit(state_, *ctx.trace, ctx.now, ctx.K, outstanding);
}

Decision GreenHadoopPolicy::decide(const SchedulingContext& ctx) {
    state_.outstanding_work = 0.0;
    for (const auto& j : ctx.jobs) {
        state_.outstanding_work += j.remaining_work;
    }
    state_.limit = greenhadoop_limit(state_, *ctx.trace, ctx.now, ctx.K, state_.outstanding_work);
    const int room = state_.limit - ctx.busy;
    if (room <= 0 || ctx.available.empty()) {
        return Decision::idle();
    }
    Decision d = fifo_choose(ctx);
    d.parallelism = std::min(d.parallelism, room);
    return d;
}

} // namespace carbonsim
