#pragma once

#include <carbonsim/engine.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace carbonsim {

/// k-search thresholds for quota levels B..K.
struct ThresholdSet {
    int K = 1;
    int B = 1;
    double L = 0.0; ///< lower bound actually used (after flooring)
    double U = 0.0;
    double alpha = 0.0; ///< NaN when B == K or the range is degenerate
    /// U and L coincide: every threshold is U and the quota is always K.
    bool fluctuation_free = false;
    std::vector<double> phis; ///< phis[i - B] is the threshold of quota level i

    [[nodiscard]] double phi(int level) const { return phis.at(static_cast<std::size_t>(level - B)); }
};

/// Relative gap (LHS - RHS) / RHS of (1 + 1/(k a))^k = (U - L) / (U (1 - 1/a)), k = K - B.
double alpha_residual(int K, int B, double L, double U, double alpha);

/// Unique root in (1, inf) of the k-search equation, k = K - B.
/// Solved by bisection on x = 1 - 1/alpha, where the equation becomes
/// x (1 + (1 - x)/k)^k = (U - L)/U with a strictly increasing left side.
/// Requires K > B >= 1 and 0 < L < U; throws ConfigError otherwise.
double solve_alpha(int K, int B, double L, double U);

/// Phi_B = U and Phi_{B+i} = U - (U - U/alpha)(1 + 1/((K-B) alpha))^(i-1).
/// L is floored at 1e-6 * U before solving. B == K yields {Phi_K = U}.
ThresholdSet compute_thresholds(int K, int B, double L, double U);

/// Smallest level whose threshold is at or below c; K when c is below every
/// threshold or the set is fluctuation-free.
int quota(const ThresholdSet& thresholds, double c);

/// ceil(P * r / K), reduced to `idle` when fewer executors are free.
int cap_parallelism(int P, int r, int K, int idle);

/// Carbon-aware provisioning around any scheduler: new work starts only while
/// fewer than r(t) executors are busy; running tasks are never preempted.
class CapPolicy final : public SchedulingPolicy {
public:
    CapPolicy(std::unique_ptr<SchedulingPolicy> inner, int B);

    [[nodiscard]] std::string name() const override { return "cap-" + inner_->name(); }
    void reset(std::uint64_t seed) override;
    void on_carbon_change(const SchedulingContext& ctx) override;
    Decision decide(const SchedulingContext& ctx) override;
    [[nodiscard]] int quota(const SchedulingContext& ctx) const override;
    bool may_continue(const SchedulingContext& ctx) override;

    [[nodiscard]] int min_quota_level() const noexcept { return B_; }
    [[nodiscard]] const SchedulingPolicy& inner() const noexcept { return *inner_; }

private:
    const ThresholdSet& thresholds_for(const SchedulingContext& ctx) const;

    std::unique_ptr<SchedulingPolicy> inner_;
    int B_;
    mutable std::optional<ThresholdSet> cache_;
    mutable CarbonBounds cache_key_;
    mutable int cache_K_ = 0;
};

} // namespace carbonsim
