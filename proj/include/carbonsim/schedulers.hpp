#pragma once

#include <carbonsim/engine.hpp>
#include <carbonsim/random.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace carbonsim {

// ---------------------------------------------------------------------------
// FIFO

/// Earliest-arrived job with an available stage; lowest stage id within it;
/// parallelism = the stage's unstarted task count.
Decision fifo_choose(const SchedulingContext& ctx);

class FifoPolicy final : public SchedulingPolicy {
public:
    [[nodiscard]] std::string name() const override { return "fifo"; }
    Decision decide(const SchedulingContext& ctx) override { return fifo_choose(ctx); }
};

// ---------------------------------------------------------------------------
// Weighted fair

/// Integer shares of K proportional to work^exponent, apportioned by highest
/// averages with divisors 0, 1, 2, ... (each job is served once before any twice).
std::vector<int> weighted_fair_shares(std::span<const double> remaining_work, int K,
                                      double exponent = 1.0);

/// Serves the most under-allocated job; parallelism = its unused share.
/// When every job already holds its share, the least over-allocated job
/// receives one more executor so capacity is not left idle.
Decision weighted_fair_choose(const SchedulingContext& ctx, double exponent = 1.0);

class WeightedFairPolicy final : public SchedulingPolicy {
public:
    explicit WeightedFairPolicy(double exponent = 1.0) : exponent_(exponent) {}

    [[nodiscard]] std::string name() const override { return "weighted-fair"; }
    Decision decide(const SchedulingContext& ctx) override {
        return weighted_fair_choose(ctx, exponent_);
    }

private:
    double exponent_;
};

// ---------------------------------------------------------------------------
// Probabilistic scheduler

struct ScoreEntry {
    std::size_t choice = 0; ///< index into SchedulingContext::available
    int job_id = 0;
    int stage_id = 0;
    double probability = 0.0;
};

/// Distribution over the available set, in available-set order.
struct ScoreDistribution {
    std::vector<ScoreEntry> entries;
};

/// Masked softmax over remaining-critical-path scores normalized by the
/// largest score in the available set. Throws SimulationError when empty.
ScoreDistribution pb_scores(const SchedulingContext& ctx, double temperature = 0.25);

/// Inverse-CDF lookup in entry order for a uniform draw u in [0, 1).
std::size_t pb_sample_index(const ScoreDistribution& dist, double u);

/// Carbon-agnostic scheduler that samples one stage per decision from a
/// probability distribution over the available set.
class ProbabilisticPolicy : public SchedulingPolicy {
public:
    explicit ProbabilisticPolicy(double temperature = 0.25) : temperature_(temperature) {}

    [[nodiscard]] std::string name() const override { return "pb"; }
    void reset(std::uint64_t seed) override { rng_.reseed(seed); }

    [[nodiscard]] virtual ScoreDistribution distribution(const SchedulingContext& ctx) const {
        return pb_scores(ctx, temperature_);
    }

    /// Consumes exactly one draw from the policy rng. Returns an entry index.
    std::size_t sample(const ScoreDistribution& dist) { return pb_sample_index(dist, rng_.uniform()); }

    /// Parallelism limit for a chosen stage: its unstarted task count.
    [[nodiscard]] virtual int parallelism(const SchedulingContext& ctx, std::size_t choice) const {
        return ctx.available[choice].unstarted_tasks;
    }

    Decision decide(const SchedulingContext& ctx) override;

    [[nodiscard]] double temperature() const noexcept { return temperature_; }

private:
    double temperature_;
    Rng rng_;
};

// ---------------------------------------------------------------------------
// GreenHadoop-style baseline

struct GreenHadoopState {
    double theta = 0.5;          ///< 0 carbon-agnostic, 1 fully green-seeking
    double outstanding_work = 0; ///< executor-seconds
    int limit = 0;
};

/// Executor limit at time t. The green window is the shortest horizon whose
/// green capacity (green_fraction * K per step) covers the outstanding work;
/// the brown window is outstanding / K; the final window blends them by theta.
/// Brown power is spread as a uniform level b on top of green capacity
/// (capped at K) just large enough to finish within the final window; the
/// limit is floor(green now) + ceil(b), clamped to [0, K].
/// Throws ConfigError when the trace has no green_fraction column.
int greenhadoop_limit(const GreenHadoopState& state, const CarbonTrace& trace, double t, int K,
                      double outstanding_work);

class GreenHadoopPolicy final : public SchedulingPolicy {
public:
    explicit GreenHadoopPolicy(double theta = 0.5);

    [[nodiscard]] std::string name() const override { return "greenhadoop"; }
    Decision decide(const SchedulingContext& ctx) override;
    [[nodiscard]] int quota(const SchedulingContext& ctx) const override;
    bool may_continue(const SchedulingContext& ctx) override { return ctx.busy < state_.limit; }

    [[nodiscard]] const GreenHadoopState& state() const noexcept { return state_; }

private:
    GreenHadoopState state_;
};

} // namespace carbonsim
