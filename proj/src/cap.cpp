#include <carbonsim/cap.hpp>

#include <carbonsim/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace carbonsim {

namespace {

// x (1 + (1 - x)/k)^k
double transformed_lhs(double x, int k) {
    return x * std::exp(k * std::log1p((1.0 - x) / k));
}

} // namespace

double alpha_residual(int K, int B, double L, double U, double alpha) {
    const int k = K - B;
    const double lhs = std::pow(1.0 + 1.0 / (k * alpha), k);
    const double rhs = (U - L) / (U * (1.0 - 1.0 / alpha));
    return (lhs - rhs) / rhs;
}

double solve_alpha(int K, int B, double L, double U) {
    if (B < 1 || K <= B) {
        throw ConfigError("solve_alpha requires K > B >= 1");
    }
    if (!(L < U)) {
        throw ConfigError("degenerate carbon range: L >= U (bypass thresholds instead)");
    }
    if (!(L > 0.0)) {
        throw ConfigError("L must be > 0: the threshold equation has no finite root at L = 0 "
                          "(apply an L floor)");
    }
    const int k = K - B;
    const double target = (U - L) / U;
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 2000; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (transformed_lhs(mid, k) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double x = std::abs(transformed_lhs(lo, k) - target) <= std::abs(transformed_lhs(hi, k) - target)
                         ? lo
                         : hi;
    return 1.0 / (1.0 - x);
}

ThresholdSet compute_thresholds(int K, int B, double L, double U) {
    if (B < 1 || B > K) {
        throw ConfigError("thresholds require 1 <= B <= K");
    }
    if (!(L >= 0.0) || !(L <= U)) {
        throw ConfigError("thresholds require 0 <= L <= U");
    }
    ThresholdSet ts;
    ts.K = K;
    ts.B = B;
    ts.L = L;
    ts.U = U;
    ts.alpha = std::numeric_limits<double>::quiet_NaN();
    const int k = K - B;
    if (!(U - L >= 1e-9 * U) || U <= 0.0) {
        ts.fluctuation_free = true;
        ts.phis.assign(static_cast<std::size_t>(k) + 1, U);
        return ts;
    }
    ts.phis.push_back(U);
    if (k == 0) {
        return ts;
    }
    ts.L = std::max(L, 1e-6 * U);
    ts.alpha = solve_alpha(K, B, ts.L, U);
    const double growth = 1.0 + 1.0 / (k * ts.alpha);
    for (int i = 1; i <= k; ++i) {
        ts.phis.push_back(U - (U - U / ts.alpha) * std::pow(growth, i - 1));
    }
    return ts;
}

int quota(const ThresholdSet& thresholds, double c) {
    if (thresholds.fluctuation_free) {
        return thresholds.K;
    }
    for (int level = thresholds.B; level <= thresholds.K; ++level) {
        if (thresholds.phi(level) <= c) {
            return level;
        }
    }
    return thresholds.K;
}

int cap_parallelism(int P, int r, int K, int idle) {
    const long long scaled = (static_cast<long long>(P) * r + K - 1) / K;
    return static_cast<int>(std::min<long long>(scaled, idle));
}

CapPolicy::CapPolicy(std::unique_ptr<SchedulingPolicy> inner, int B)
    : inner_(std::move(inner)), B_(B) {
    if (!inner_) {
        throw ConfigError("cap requires an inner policy");
    }
    if (B_ < 1) {
        throw ConfigError("cap.B must be >= 1");
    }
}

void CapPolicy::reset(std::uint64_t seed) {
    cache_.reset();
    inner_->reset(seed);
}

const ThresholdSet& CapPolicy::thresholds_for(const SchedulingContext& ctx) const {
    if (B_ > ctx.K) {
        throw ConfigError("cap.B must not exceed K");
    }
    if (!cache_ || cache_key_ != ctx.bounds || cache_K_ != ctx.K) {
        cache_ = compute_thresholds(ctx.K, B_, ctx.bounds.L, ctx.bounds.U);
        cache_key_ = ctx.bounds;
        cache_K_ = ctx.K;
    }
    return *cache_;
}

void CapPolicy::on_carbon_change(const SchedulingContext& ctx) {
    thresholds_for(ctx);
    inner_->on_carbon_change(ctx);
}

int CapPolicy::quota(const SchedulingContext& ctx) const {
    return carbonsim::quota(thresholds_for(ctx), ctx.carbon);
}

Decision CapPolicy::decide(const SchedulingContext& ctx) {
    const int r = quota(ctx);
    const int room = std::min(ctx.idle, r - ctx.busy);
    if (room <= 0) {
        return Decision::idle();
    }
    SchedulingContext inner_ctx = ctx;
    inner_ctx.idle = room;
    Decision d = inner_->decide(inner_ctx);
    if (d.kind == Decision::Kind::Schedule) {
        d.parallelism = cap_parallelism(d.parallelism, r, ctx.K, room);
    }
    return d;
}

bool CapPolicy::may_continue(const SchedulingContext& ctx) {
    return ctx.busy < quota(ctx) && inner_->may_continue(ctx);
}

} // namespace carbonsim
