#pragma once

#include <carbonsim/schedulers.hpp>

#include <memory>
#include <string>
#include <vector>

namespace carbonsim {

struct ImportanceEntry {
    std::size_t choice = 0;
    int job_id = 0;
    int stage_id = 0;
    double probability = 0.0;
    double importance = 0.0;
};

struct ImportanceDistribution {
    std::vector<ImportanceEntry> entries;
};

/// r = p / max p over the distribution. Throws ConfigError when empty or when
/// a probability is not positive.
ImportanceDistribution relative_importance(const ScoreDistribution& dist);

/// Intensity threshold for relative importance r:
/// base + (U - base) (e^{gamma r} - 1)/(e^gamma - 1), base = gamma L + (1 - gamma) U.
/// gamma = 0 takes the ratio's limit r, so the result is U.
double psi(double gamma, double L, double U, double r);

enum class CarbonScale { Normalized, Raw };

std::string carbon_scale_name(CarbonScale scale);
CarbonScale parse_carbon_scale(const std::string& name);

struct PcapsConfig {
    double gamma = 0.5;
    CarbonScale carbon_scale = CarbonScale::Normalized;
    /// Apply the threshold test to r = 1 stages as well (they can then be
    /// deferred when c exceeds U).
    bool strict_filter = false;

    void validate() const;
};

enum class FilterOutcome { Pass, Defer };

FilterOutcome filter_decision(const PcapsConfig& config, double importance, double c,
                              double L, double U, bool any_busy);

/// max(1, ceil(P * min(exp(-gamma x), 1 - gamma))), with x = (c - L)/(U - L)
/// under normalized scale (0 when U = L) and x = c - L under raw scale.
int pcaps_parallelism(const PcapsConfig& config, int P, double c, double L, double U);

/// Carbon-aware filter over a probabilistic scheduler: one sampled stage per
/// decision, deferred when its threshold falls below the current intensity.
class PcapsPolicy final : public SchedulingPolicy {
public:
    PcapsPolicy(std::unique_ptr<ProbabilisticPolicy> inner, PcapsConfig config);

    [[nodiscard]] std::string name() const override { return "pcaps"; }
    void reset(std::uint64_t seed) override { inner_->reset(seed); }
    void on_carbon_change(const SchedulingContext& ctx) override { inner_->on_carbon_change(ctx); }
    Decision decide(const SchedulingContext& ctx) override;

    [[nodiscard]] const PcapsConfig& config() const noexcept { return config_; }

private:
    std::unique_ptr<ProbabilisticPolicy> inner_;
    PcapsConfig config_;
};

} // namespace carbonsim
