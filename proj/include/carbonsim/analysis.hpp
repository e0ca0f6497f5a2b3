#pragma once

#include <carbonsim/cap.hpp>
#include <carbonsim/engine.hpp>

#include <optional>
#include <string>
#include <vector>

namespace carbonsim {

struct JobTime {
    int job_id = 0;
    double jct = 0.0;

    bool operator==(const JobTime&) const = default;
};

struct NormalizedMetrics {
    std::string baseline;
    double footprint = 0.0;
    double ect = 0.0;
    double avg_jct = 0.0;

    bool operator==(const NormalizedMetrics&) const = default;
};

struct MetricsReport {
    int K = 0;
    double footprint_g = 0.0;
    std::vector<JobTime> per_job_jct;
    double avg_jct = 0.0;
    double ect = 0.0;          ///< last completion minus first arrival
    double utilization = 0.0;  ///< busy executor-seconds / (K * ect)
    double busy_executor_seconds = 0.0;
    std::size_t deferrals = 0;
    int min_quota = 0;
    std::optional<NormalizedMetrics> normalized;

    bool operator==(const MetricsReport&) const = default;
};

MetricsReport compute_metrics(const ScheduleRecord& record, const CarbonTrace& trace,
                              double power_per_executor_kw = 1.0);

/// Ratios of footprint, ECT and average JCT against a baseline report.
NormalizedMetrics normalize_metrics(const MetricsReport& report, const MetricsReport& baseline,
                                    const std::string& baseline_name);

/// Exact minimum makespan of one job on K identical executors, without
/// preemption. Depth-first branch and bound over the task subsets started at
/// each completion instant. Requires at most 10 tasks and K <= 4.
double optimal_makespan_bruteforce(const JobDag& job, int K);

struct BoundReport {
    std::string name;
    double observed = 0.0;  ///< makespan (bounds) or makespan ratio (CSF)
    double bound = 0.0;
    int K = 0;
    std::optional<int> B;
    std::optional<double> opt;
    std::optional<double> d_hat;
    std::optional<double> M;
    std::optional<double> a; ///< agnostic makespan / opt
    std::optional<double> b; ///< aware makespan / opt
    bool pass = true;
    double slack = 0.0;      ///< bound - observed
};

/// Observed aware/agnostic makespan ratio; with opt, also the certificates.
BoundReport compute_csf(const ScheduleRecord& agnostic, const ScheduleRecord& aware,
                        std::optional<double> opt = std::nullopt);

/// Sum of the min(D, n - 1) largest task durations over total work, where D is
/// the number of deferral events in the record and n the task count.
double deferral_fraction(const ScheduleRecord& record, const WorkloadSpec& workload);
double deferral_fraction(const ScheduleRecord& record, const JobDag& job);

/// Smallest quota in force during the run (K when the history is empty).
int min_quota(const ScheduleRecord& record);

/// makespan <= (2 - 1/K + d_hat K) opt
BoundReport check_pcaps_bound(const ScheduleRecord& record, double d_hat, int K, double opt);

/// makespan <= (2K/M - K/M^2) opt
BoundReport check_cap_bound(const ScheduleRecord& record, int M, int K, double opt);

/// Step-discretized comparison of an agnostic run against a carbon-aware run
/// of the same workload on the same trace. Executor counts per step may be
/// fractional. W is in executor-seconds, intensities in g/kWh.
struct SavingsDecomposition {
    bool defined = false;   ///< false when W = 0 (averages unset)
    double W = 0.0;
    double s_minus = 0.0;
    double s_plus = 0.0;
    double c_bar = 0.0;
    double savings_g = 0.0; ///< from the decomposition (direct_g when undefined)
    double direct_g = 0.0;  ///< agnostic footprint minus aware footprint
    double T = 0.0;         ///< end of the agnostic run's last busy step
    double T_prime = 0.0;   ///< end of the aware run's last busy step
};

/// W = sum over steps up to T of (E_ag - E_cap); s_plus is always 0.
SavingsDecomposition savings_decomposition_cap(const ScheduleRecord& agnostic,
                                               const ScheduleRecord& cap,
                                               const CarbonTrace& trace,
                                               double power_per_executor_kw = 1.0);

/// Steps up to T split by the sign of E_pb - E_pcaps; W = sum of the positive part.
SavingsDecomposition savings_decomposition_pcaps(const ScheduleRecord& pb,
                                                 const ScheduleRecord& pcaps,
                                                 const CarbonTrace& trace,
                                                 double power_per_executor_kw = 1.0);

struct BackloggedStep {
    std::int64_t step = 0;
    double time = 0.0;
    double carbon = 0.0;
    double rho_agnostic = 0.0;
    double rho_aware = 0.0;
    int quota = 0;
    double savings = 0.0; ///< estimated g/kWh-weighted executor difference
};

/// Per-step savings estimate over steps during which both runs have an
/// arrived, incomplete job for the whole step. With thresholds (CAP form)
/// the estimate is (rho_ag K - rho_cap r) Phi_r, r the quota at the step
/// start; otherwise (rho_ag - rho_aware) K c.
std::vector<BackloggedStep> avg_savings_backlogged(const ScheduleRecord& agnostic,
                                                   const ScheduleRecord& aware,
                                                   const CarbonTrace& trace,
                                                   const std::optional<ThresholdSet>& thresholds);

} // namespace carbonsim
