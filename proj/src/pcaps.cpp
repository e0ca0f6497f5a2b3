#include <carbonsim/pcaps.hpp>

#include <carbonsim/error.hpp>

#include <algorithm>
#include <cmath>

namespace carbonsim {

ImportanceDistribution relative_importance(const ScoreDistribution& dist) {
    if (dist.entries.empty()) {
        throw ConfigError("relative importance of an empty distribution");
    }
    double max_p = 0.0;
    for (const auto& e : dist.entries) {
        if (!(e.probability > 0.0)) {
            throw ConfigError("relative importance requires positive probabilities");
        }
        max_p = std::max(max_p, e.probability);
    }
    ImportanceDistribution out;
    out.entries.reserve(dist.entries.size());
    for (const auto& e : dist.entries) {
        out.entries.push_back({e.choice, e.job_id, e.stage_id, e.probability, e.probability / max_p});
    }
    return out;
}

double psi(double gamma, double L, double U, double r) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError("psi: gamma outside [0,1]");
    }
    if (!(L >= 0.0 && L <= U)) {
        throw ConfigError("psi: requires 0 <= L <= U");
    }
    if (!(r >= 0.0 && r <= 1.0)) {
        throw ConfigError("psi: r outside [0,1]");
    }
    if (gamma == 0.0 || r == 1.0) {
        return U;
    }
    const double base = gamma * L + (1.0 - gamma) * U;
    if (r == 0.0) {
        return base;
    }
    return base + (U - base) * (std::expm1(gamma * r) / std::expm1(gamma));
}

std::string carbon_scale_name(CarbonScale scale) {
    return scale == CarbonScale::Raw ? "raw" : "normalized";
}

CarbonScale parse_carbon_scale(const std::string& name) {
    if (name == "normalized") {
        return CarbonScale::Normalized;
    }
    if (name == "raw") {
        return CarbonScale::Raw;
    }
    throw ConfigError("pcaps.carbon_scale must be 'normalized' or 'raw', got '" + name + "'");
}

void PcapsConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError("pcaps.gamma must be in [0,1]");
    }
}

FilterOutcome filter_decision(const PcapsConfig& config, double importance, double c,
                              double L, double U, bool any_busy) {
    if (!any_busy) {
        return FilterOutcome::Pass;
    }
    if (!config.strict_filter && importance == 1.0) {
        return FilterOutcome::Pass;
    }
    return psi(config.gamma, L, U, importance) >= c ? FilterOutcome::Pass : FilterOutcome::Defer;
}

int pcaps_parallelism(const PcapsConfig& config, int P, double c, double L, double U) {
    if (config.gamma == 0.0) {
        return std::max(1, P);
    }
    double x = 0.0;
    if (config.carbon_scale == CarbonScale::Raw) {
        x = c - L;
    } else if (U > L) {
        x = (c - L) / (U - L);
    }
    const double factor = std::min(std::exp(-config.gamma * x), 1.0 - config.gamma);
    const double scaled = std::ceil(static_cast<double>(P) * factor);
    return std::max(1, static_cast<int>(scaled));
}

PcapsPolicy::PcapsPolicy(std::unique_ptr<ProbabilisticPolicy> inner, PcapsConfig config)
    : inner_(std::move(inner)), config_(config) {
    if (!inner_) {
        throw ConfigError("pcaps requires an inner probabilistic scheduler");
    }
    config_.validate();
}

Decision PcapsPolicy::decide(const SchedulingContext& ctx) {
    if (ctx.available.empty()) {
        return Decision::idle();
    }
    const auto dist = inner_->distribution(ctx);
    const std::size_t index = inner_->sample(dist);
    double max_p = 0.0;
    for (const auto& e : dist.entries) {
        max_p = std::max(max_p, e.probability);
    }
    const auto& entry = dist.entries[index];
    const double importance = entry.probability / max_p;
    const auto outcome =
        filter_decision(config_, importance, ctx.carbon, ctx.bounds.L, ctx.bounds.U, ctx.busy > 0);
    if (outcome == FilterOutcome::Defer) {
        return Decision::defer(entry.choice, importance);
    }
    const int P = inner_->parallelism(ctx, entry.choice);
    return Decision::schedule(entry.choice, pcaps_parallelism(config_, P, ctx.carbon, ctx.bounds.L, ctx.bounds.U));
}

} // namespace carbonsim
