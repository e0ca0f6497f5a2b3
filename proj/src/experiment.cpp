#include <carbonsim/experiment.hpp>

#include <carbonsim/cap.hpp>
#include <carbonsim/error.hpp>
#include <carbonsim/random.hpp>
#include <carbonsim/record_io.hpp>
#include <carbonsim/schedulers.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace carbonsim {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Policies

void PolicySpec::validate(int K) const {
    const auto names = policy_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        throw ConfigError("unknown policy '" + name + "'");
    }
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError("policy.gamma must be in [0,1]");
    }
    if (B < 1 || B > K) {
        throw ConfigError("policy.B must be in [1, K]");
    }
    if (!(theta >= 0.0 && theta <= 1.0)) {
        throw ConfigError("policy.theta must be in [0,1]");
    }
    if (!(tau > 0.0)) {
        throw ConfigError("policy.tau must be > 0");
    }
    if (!std::isfinite(w)) {
        throw ConfigError("policy.w must be finite");
    }
}

std::vector<std::string> policy_names() {
    return {"fifo", "weighted-fair", "pb", "greenhadoop", "pcaps", "cap-fifo", "cap-weighted-fair", "cap-pb"};
}

namespace {

std::unique_ptr<SchedulingPolicy> make_agnostic(const std::string& name, const PolicySpec& spec) {
    if (name == "fifo") {
        return std::make_unique<FifoPolicy>();
    }
    if (name == "weighted-fair") {
        return std::make_unique<WeightedFairPolicy>(spec.w);
    }
    if (name == "pb") {
        return std::make_unique<ProbabilisticPolicy>(spec.tau);
    }
    throw ConfigError("unknown policy '" + name + "'");
}

} // namespace

std::unique_ptr<SchedulingPolicy> make_policy(const PolicySpec& spec) {
    if (spec.name == "greenhadoop") {
        return std::make_unique<GreenHadoopPolicy>(spec.theta);
    }
    if (spec.name == "pcaps") {
        return std::make_unique<PcapsPolicy>(std::make_unique<ProbabilisticPolicy>(spec.tau),
                                             PcapsConfig{spec.gamma, spec.carbon_scale, spec.strict_filter});
    }
    if (spec.name.rfind("cap-", 0) == 0) {
        return std::make_unique<CapPolicy>(make_agnostic(spec.name.substr(4), spec), spec.B);
    }
    return make_agnostic(spec.name, spec);
}

// ---------------------------------------------------------------------------
// Config

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        throw ConfigError(where + " must be an object");
    }
    for (const auto& item : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; })) {
            throw ConfigError("unknown config key '" + where + "." + item.key() + "'");
        }
    }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out, const std::string& where) {
    if (obj.contains(key)) {
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
        }
    }
}

std::string scale_name(TemplateScale s) {
    switch (s) {
    case TemplateScale::Small2GB:
        return "2gb";
    case TemplateScale::Medium10GB:
        return "10gb";
    case TemplateScale::Large50GB:
        return "50gb";
    }
    return "2gb";
}

TemplateScale parse_scale(const std::string& s) {
    if (s == "2gb") {
        return TemplateScale::Small2GB;
    }
    if (s == "10gb") {
        return TemplateScale::Medium10GB;
    }
    if (s == "50gb") {
        return TemplateScale::Large50GB;
    }
    throw ConfigError("workload.generator.template_scale must be 2gb, 10gb or 50gb");
}

fs::path resolve(const fs::path& p, const fs::path& base) {
    return p.is_absolute() || base.empty() ? p : base / p;
}

GeneratorParams generator_from_json(const json& g) {
    const std::string where = "workload.generator";
    check_keys(g, where,
               {"preset", "n_jobs", "mean_interarrival_s", "dag_model", "template_scale",
                "template_duration_factor", "mean_stages", "max_width", "max_tasks_per_stage",
                "mean_job_work_s", "power_law_exponent", "power_law_range", "edge_probability",
                "duration_scale"});
    GeneratorParams p;
    std::string preset;
    read_opt(g, "preset", preset, where);
    if (preset == "alibaba") {
        p = alibaba_like_params(p.n_jobs, p.mean_interarrival_s);
    } else if (!preset.empty() && preset != "default") {
        throw ConfigError("workload.generator.preset must be 'default' or 'alibaba'");
    }
    read_opt(g, "n_jobs", p.n_jobs, where);
    read_opt(g, "mean_interarrival_s", p.mean_interarrival_s, where);
    if (g.contains("dag_model")) {
        p.dag_model = parse_dag_model(g.at("dag_model").get<std::string>());
    }
    if (g.contains("template_scale")) {
        p.template_scale = parse_scale(g.at("template_scale").get<std::string>());
    }
    read_opt(g, "template_duration_factor", p.template_duration_factor, where);
    read_opt(g, "mean_stages", p.mean_stages, where);
    read_opt(g, "max_width", p.max_width, where);
    read_opt(g, "max_tasks_per_stage", p.max_tasks_per_stage, where);
    read_opt(g, "mean_job_work_s", p.mean_job_work_s, where);
    read_opt(g, "power_law_exponent", p.power_law_exponent, where);
    read_opt(g, "power_law_range", p.power_law_range, where);
    read_opt(g, "edge_probability", p.edge_probability, where);
    read_opt(g, "duration_scale", p.duration_scale, where);
    return p;
}

json generator_to_json(const GeneratorParams& p) {
    return {{"n_jobs", p.n_jobs},
            {"mean_interarrival_s", p.mean_interarrival_s},
            {"dag_model", dag_model_name(p.dag_model)},
            {"template_scale", scale_name(p.template_scale)},
            {"template_duration_factor", p.template_duration_factor},
            {"mean_stages", p.mean_stages},
            {"max_width", p.max_width},
            {"max_tasks_per_stage", p.max_tasks_per_stage},
            {"mean_job_work_s", p.mean_job_work_s},
            {"power_law_exponent", p.power_law_exponent},
            {"power_law_range", p.power_law_range},
            {"edge_probability", p.edge_probability},
            {"duration_scale", p.duration_scale}};
}

json policy_to_json(const PolicySpec& p) {
    return {{"name", p.name},   {"gamma", p.gamma}, {"B", p.B},
            {"theta", p.theta}, {"tau", p.tau},     {"w", p.w},
            {"carbon_scale", carbon_scale_name(p.carbon_scale)},
            {"strict_filter", p.strict_filter}};
}

} // namespace

void ExperimentConfig::validate() const {
    cluster.validate();
    policy.validate(cluster.K);
    if (trace_path.empty()) {
        throw ConfigError("config: trace.path is required");
    }
    if (!fs::exists(trace_path)) {
        throw ConfigError("trace file not found: " + trace_path.string());
    }
    if (workload_path && !fs::exists(*workload_path)) {
        throw ConfigError("workload file not found: " + workload_path->string());
    }
    if (!workload_path && generator.n_jobs < 1) {
        throw ConfigError("workload.generator.n_jobs must be >= 1");
    }
    if (trials < 1) {
        throw ConfigError("trials.count must be >= 1");
    }
}

ExperimentConfig config_from_json(const json& doc, const fs::path& base_dir) {
    check_keys(doc, "config",
               {"cluster", "trace", "lookahead_hours", "workload", "policy", "seed", "trials", "output_dir"});
    ExperimentConfig c;
    if (doc.contains("cluster")) {
        const auto& k = doc.at("cluster");
        check_keys(k, "cluster",
                   {"K", "power_per_executor_kw", "executor_move_delay_s", "per_job_executor_cap",
                    "defer_holds_all_idle"});
        read_opt(k, "K", c.cluster.K, "cluster");
        read_opt(k, "power_per_executor_kw", c.cluster.power_per_executor_kw, "cluster");
        read_opt(k, "executor_move_delay_s", c.cluster.executor_move_delay_s, "cluster");
        if (k.contains("per_job_executor_cap") && !k.at("per_job_executor_cap").is_null()) {
            c.cluster.per_job_executor_cap = k.at("per_job_executor_cap").get<int>();
        }
        read_opt(k, "defer_holds_all_idle", c.cluster.defer_holds_all_idle, "cluster");
    }
    if (doc.contains("trace")) {
        const auto& t = doc.at("trace");
        check_keys(t, "trace", {"path", "periodic", "random_offset", "offset_steps"});
        std::string path;
        read_opt(t, "path", path, "trace");
        if (!path.empty()) {
            c.trace_path = resolve(path, base_dir);
        }
        read_opt(t, "periodic", c.trace_periodic, "trace");
        if (t.contains("offset_steps") && !t.at("offset_steps").is_null()) {
            c.trace_offset_steps = t.at("offset_steps").get<std::size_t>();
        }
    }
    double lookahead_hours = c.cluster.lookahead_s / 3600.0;
    read_opt(doc, "lookahead_hours", lookahead_hours, "config");
    c.cluster.lookahead_s = lookahead_hours * 3600.0;
    if (doc.contains("workload")) {
        const auto& w = doc.at("workload");
        check_keys(w, "workload", {"path", "generator"});
        if (w.contains("path")) {
            c.workload_path = resolve(w.at("path").get<std::string>(), base_dir);
        }
        if (w.contains("generator")) {
            c.generator = generator_from_json(w.at("generator"));
        }
    }
    if (doc.contains("policy")) {
        const auto& p = doc.at("policy");
        check_keys(p, "policy", {"name", "gamma", "B", "theta", "tau", "w", "carbon_scale", "strict_filter"});
        read_opt(p, "name", c.policy.name, "policy");
        read_opt(p, "gamma", c.policy.gamma, "policy");
        read_opt(p, "B", c.policy.B, "policy");
        read_opt(p, "theta", c.policy.theta, "policy");
        read_opt(p, "tau", c.policy.tau, "policy");
        read_opt(p, "w", c.policy.w, "policy");
        if (p.contains("carbon_scale")) {
            c.policy.carbon_scale = parse_carbon_scale(p.at("carbon_scale").get<std::string>());
        }
        read_opt(p, "strict_filter", c.policy.strict_filter, "policy");
    }
    read_opt(doc, "seed", c.seed, "config");
    if (doc.contains("trials")) {
        const auto& t = doc.at("trials");
        check_keys(t, "trials", {"count", "random_offset"});
        read_opt(t, "count", c.trials, "trials");
        read_opt(t, "random_offset", c.random_offset, "trials");
    }
    if (doc.contains("output_dir")) {
        c.output_dir = resolve(doc.at("output_dir").get<std::string>(), base_dir);
    }
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json cluster{{"K", c.cluster.K},
                 {"power_per_executor_kw", c.cluster.power_per_executor_kw},
                 {"executor_move_delay_s", c.cluster.executor_move_delay_s},
                 {"per_job_executor_cap", nullptr},
                 {"defer_holds_all_idle", c.cluster.defer_holds_all_idle}};
    if (c.cluster.per_job_executor_cap) {
        cluster["per_job_executor_cap"] = *c.cluster.per_job_executor_cap;
    }
    json trace{{"path", c.trace_path.string()}, {"periodic", c.trace_periodic}, {"offset_steps", nullptr}};
    if (c.trace_offset_steps) {
        trace["offset_steps"] = *c.trace_offset_steps;
    }
    json workload{{"generator", generator_to_json(c.generator)}};
    if (c.workload_path) {
        workload["path"] = c.workload_path->string();
    }
    json doc{{"cluster", cluster},
             {"trace", trace},
             {"lookahead_hours", c.cluster.lookahead_s / 3600.0},
             {"workload", workload},
             {"policy", policy_to_json(c.policy)},
             {"seed", c.seed},
             {"trials", {{"count", c.trials}, {"random_offset", c.random_offset}}}};
    if (!c.output_dir.empty()) {
        doc["output_dir"] = c.output_dir.string();
    }
    return doc;
}

ExperimentConfig load_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return config_from_json(doc, fs::absolute(path).parent_path());
}

fs::path default_output_root() {
    if (const char* env = std::getenv("CARBONSIM_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    return "runs";
}

// ---------------------------------------------------------------------------
// Runs

RunInputs materialize(const ExperimentConfig& config, const CarbonTrace& base_trace, std::uint64_t seed) {
    RunInputs in{config.workload_path ? load_workload_file(*config.workload_path)
                                      : generate_workload(config.generator, seed),
                 base_trace, 0, seed};
    if (config.trace_offset_steps) {
        in.offset_steps = *config.trace_offset_steps % base_trace.size();
    } else if (config.random_offset) {
        Rng rng(Rng::mix(seed, 0x74726163u));
        in.offset_steps = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(base_trace.size()) - 1));
    }
    if (in.offset_steps != 0) {
        in.trace = rotate(base_trace, in.offset_steps);
        if (!config.trace_periodic) {
            in.trace = CarbonTrace(in.trace.start_epoch(), in.trace.step(), in.trace.intensities(),
                                   in.trace.green_fraction(), false);
        }
    } else if (config.trace_periodic && !base_trace.periodic()) {
        in.trace = base_trace.as_periodic();
    }
    return in;
}

RunResult simulate(const ExperimentConfig& config, const RunInputs& inputs, const PolicySpec& policy_spec) {
    policy_spec.validate(config.cluster.K);
    auto policy = make_policy(policy_spec);
    RunResult r;
    r.record = run_simulation(config.cluster, inputs.workload, inputs.trace, *policy, inputs.seed);
    verify_record(r.record, inputs.workload);
    r.metrics = compute_metrics(r.record, inputs.trace, config.cluster.power_per_executor_kw);
    return r;
}

std::string metrics_document(const ExperimentConfig& /*config*/, const RunInputs& inputs,
                             const PolicySpec& policy, const MetricsReport& metrics) {
    json doc = to_json(metrics);
    doc["policy"] = policy.name;
    doc["seed"] = inputs.seed;
    doc["trace_offset_steps"] = inputs.offset_steps;
    return doc.dump(2) + "\n";
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

ExperimentConfig snapshot_config(const ExperimentConfig& config, const RunInputs& inputs) {
    ExperimentConfig snap = config;
    snap.trace_path = fs::absolute(config.trace_path);
    snap.workload_path = "workload.json";
    snap.seed = inputs.seed;
    snap.trials = 1;
    snap.random_offset = false;
    snap.trace_offset_steps = inputs.offset_steps;
    snap.output_dir.clear();
    return snap;
}

} // namespace

void write_run_dir(const fs::path& dir, const ExperimentConfig& config, const RunInputs& inputs,
                   const RunResult& result) {
    fs::create_directories(dir);
    write_text(dir / "config.json", config_to_json(snapshot_config(config, inputs)).dump(2) + "\n");
    save_workload_file(inputs.workload, dir / "workload.json");
    {
        std::ostringstream os;
        write_schedule_csv(result.record, os);
        write_text(dir / "schedule.csv", os.str());
    }
    {
        std::ostringstream os;
        write_events_jsonl(result.record, os);
        write_text(dir / "events.jsonl", os.str());
    }
    write_text(dir / "gantt.json", gantt_json(result.record).dump(1) + "\n");
    write_text(dir / "metrics.json", metrics_document(config, inputs, config.policy, result.metrics));
}

std::vector<fs::path> run_experiment(const ExperimentConfig& config) {
    config.validate();
    const CarbonTrace base = load_trace_file(config.trace_path);
    fs::path root = config.output_dir;
    if (root.empty()) {
        root = default_output_root() / (config.policy.name + "-seed" + std::to_string(config.seed));
    }
    std::vector<fs::path> dirs;
    for (int trial = 0; trial < config.trials; ++trial) {
        const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(trial);
        const RunInputs inputs = materialize(config, base, seed);
        const RunResult result = simulate(config, inputs, config.policy);
        fs::path dir = root;
        if (config.trials > 1) {
            char name[32];
            std::snprintf(name, sizeof(name), "trial-%03d", trial);
            dir /= name;
        }
        write_run_dir(dir, config, inputs, result);
        dirs.push_back(dir);
    }
    return dirs;
}

namespace {

struct LoadedRun {
    ExperimentConfig config;
    RunInputs inputs;
    ScheduleRecord record;
};

LoadedRun load_run_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw Error("run directory not found: " + dir.string());
    }
    ExperimentConfig config = load_config_file(dir / "config.json");
    const CarbonTrace base = load_trace_file(config.trace_path);
    RunInputs inputs = materialize(config, base, config.seed);
    ScheduleRecord record = read_record_files(dir / "schedule.csv", dir / "events.jsonl");
    return {std::move(config), std::move(inputs), std::move(record)};
}

} // namespace

std::string analyze_run_dir(const fs::path& dir) {
    const LoadedRun run = load_run_dir(dir);
    const MetricsReport metrics =
        compute_metrics(run.record, run.inputs.trace, run.config.cluster.power_per_executor_kw);
    return metrics_document(run.config, run.inputs, run.config.policy, metrics);
}

json compare_run_dirs(const fs::path& baseline_dir, const fs::path& aware_dir) {
    const LoadedRun base = load_run_dir(baseline_dir);
    const LoadedRun aware = load_run_dir(aware_dir);
    std::ostringstream wa;
    std::ostringstream wb;
    save_workload(base.inputs.workload, wa);
    save_workload(aware.inputs.workload, wb);
    if (wa.str() != wb.str()) {
        throw AnalysisError("workload mismatch between " + baseline_dir.string() + " and " + aware_dir.string());
    }
    if (!(base.inputs.trace == aware.inputs.trace)) {
        throw AnalysisError("carbon trace mismatch between " + baseline_dir.string() + " and " +
                            aware_dir.string());
    }
    if (base.config.cluster.K != aware.config.cluster.K ||
        base.config.cluster.power_per_executor_kw != aware.config.cluster.power_per_executor_kw) {
        throw AnalysisError("cluster mismatch between " + baseline_dir.string() + " and " + aware_dir.string());
    }
    const double power = base.config.cluster.power_per_executor_kw;
    const auto& trace = base.inputs.trace;
    const MetricsReport mb = compute_metrics(base.record, trace, power);
    MetricsReport ma = compute_metrics(aware.record, trace, power);
    ma.normalized = normalize_metrics(ma, mb, base.config.policy.name);

    const bool pcaps_form = aware.config.policy.name == "pcaps";
    const SavingsDecomposition savings = pcaps_form
                                             ? savings_decomposition_pcaps(base.record, aware.record, trace, power)
                                             : savings_decomposition_cap(base.record, aware.record, trace, power);
    std::optional<double> opt;
    const auto& jobs = base.inputs.workload.jobs;
    const int K = base.config.cluster.K;
    if (jobs.size() == 1 && total_tasks(jobs[0]) <= 10 && K <= 4) {
        opt = optimal_makespan_bruteforce(jobs[0], K);
    }
    json doc{{"baseline", {{"dir", baseline_dir.string()}, {"policy", base.config.policy.name}, {"metrics", to_json(mb)}}},
             {"aware", {{"dir", aware_dir.string()}, {"policy", aware.config.policy.name}, {"metrics", to_json(ma)}}},
             {"csf", to_json(compute_csf(base.record, aware.record, opt))},
             {"savings_form", pcaps_form ? "pcaps" : "cap"},
             {"savings", to_json(savings)}};
    if (opt) {
        json bounds = json::array();
        if (pcaps_form) {
            bounds.push_back(to_json(check_pcaps_bound(aware.record, deferral_fraction(aware.record, jobs[0]), K, *opt)));
        } else if (aware.config.policy.name == "cap-fifo") {
            auto report = check_cap_bound(aware.record, min_quota(aware.record), K, *opt);
            report.B = aware.config.policy.B;
            bounds.push_back(to_json(report));
        }
        doc["bounds"] = std::move(bounds);
    }
    return doc;
}

// ---------------------------------------------------------------------------
// Sweeps

PolicySpec with_axis_value(PolicySpec spec, const std::string& axis, double value) {
    if (axis == "gamma") {
        spec.gamma = value;
    } else if (axis == "B") {
        if (value != std::floor(value)) {
            throw ConfigError("sweep: B values must be integers");
        }
        spec.B = static_cast<int>(value);
    } else if (axis == "theta") {
        spec.theta = value;
    } else {
        throw ConfigError("sweep axis must be gamma, B or theta (got '" + axis + "')");
    }
    return spec;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&]() {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    if (workers <= 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(body);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

SweepStat stat_of(const std::vector<double>& xs) {
    SweepStat s;
    if (xs.empty()) {
        return s;
    }
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) {
            ss += (x - s.mean) * (x - s.mean);
        }
        s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

} // namespace

SweepResult run_sweep(const ExperimentConfig& config, const SweepSpec& spec) {
    config.validate();
    if (spec.values.empty() || spec.seeds.empty()) {
        throw ConfigError("sweep needs at least one value and one seed");
    }
    for (double v : spec.values) {
        with_axis_value(config.policy, spec.axis, v).validate(config.cluster.K);
    }
    if (spec.baseline) {
        spec.baseline->validate(config.cluster.K);
    }
    const CarbonTrace base = load_trace_file(config.trace_path);
    const std::size_t n_seeds = spec.seeds.size();
    std::vector<RunInputs> inputs(n_seeds, RunInputs{{}, base, 0, 0});
    parallel_for(n_seeds, spec.threads, [&](std::size_t i) { inputs[i] = materialize(config, base, spec.seeds[i]); });

    SweepResult result;
    result.axis = spec.axis;
    result.policy = config.policy.name;
    const std::size_t n_points = spec.values.size();
    result.samples.resize(n_points * n_seeds);
    if (spec.baseline) {
        result.baseline.resize(n_seeds);
    }
    const std::size_t n_jobs = result.samples.size() + result.baseline.size();
    parallel_for(n_jobs, spec.threads, [&](std::size_t job) {
        if (job < result.samples.size()) {
            const std::size_t p = job / n_seeds;
            const std::size_t s = job % n_seeds;
            const PolicySpec policy = with_axis_value(config.policy, spec.axis, spec.values[p]);
            result.samples[job] = {spec.values[p], spec.seeds[s], simulate(config, inputs[s], policy).metrics};
        } else {
            const std::size_t s = job - result.samples.size();
            result.baseline[s] = {0.0, spec.seeds[s], simulate(config, inputs[s], *spec.baseline).metrics};
        }
    });
    const std::string baseline_name = spec.baseline ? spec.baseline->name : std::string();
    for (std::size_t p = 0; p < n_points; ++p) {
        SweepRow row;
        row.value = spec.values[p];
        row.seeds = n_seeds;
        std::vector<double> fp, ect, jct, nfp, nect, njct;
        for (std::size_t s = 0; s < n_seeds; ++s) {
            auto& sample = result.samples[p * n_seeds + s];
            fp.push_back(sample.metrics.footprint_g);
            ect.push_back(sample.metrics.ect);
            jct.push_back(sample.metrics.avg_jct);
            if (spec.baseline) {
                sample.metrics.normalized = normalize_metrics(sample.metrics, result.baseline[s].metrics, baseline_name);
                nfp.push_back(sample.metrics.normalized->footprint);
                nect.push_back(sample.metrics.normalized->ect);
                njct.push_back(sample.metrics.normalized->avg_jct);
            }
        }
        row.footprint_g = stat_of(fp);
        row.ect = stat_of(ect);
        row.avg_jct = stat_of(jct);
        if (spec.baseline) {
            row.norm_footprint = stat_of(nfp);
            row.norm_ect = stat_of(nect);
            row.norm_avg_jct = stat_of(njct);
        }
        result.rows.push_back(row);
    }
    return result;
}

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_sweep_summary_csv(const SweepResult& r, std::ostream& out) {
    out << "axis,value,policy,seeds,footprint_g_mean,footprint_g_std,ect_mean,ect_std,avg_jct_mean,avg_jct_std,"
           "norm_footprint_mean,norm_footprint_std,norm_ect_mean,norm_ect_std,norm_avg_jct_mean,norm_avg_jct_std\n";
    auto opt = [](const std::optional<SweepStat>& s) {
        return s ? num(s->mean) + "," + num(s->stddev) : std::string(",");
    };
    for (const auto& row : r.rows) {
        out << r.axis << ',' << num(row.value) << ',' << r.policy << ',' << row.seeds << ','
            << num(row.footprint_g.mean) << ',' << num(row.footprint_g.stddev) << ',' << num(row.ect.mean) << ','
            << num(row.ect.stddev) << ',' << num(row.avg_jct.mean) << ',' << num(row.avg_jct.stddev) << ','
            << opt(row.norm_footprint) << ',' << opt(row.norm_ect) << ',' << opt(row.norm_avg_jct) << '\n';
    }
}

void write_sweep_samples_csv(const SweepResult& r, std::ostream& out) {
    out << "axis,value,seed,footprint_g,ect,avg_jct,deferrals,min_quota,norm_footprint,norm_ect,norm_avg_jct\n";
    for (const auto& s : r.samples) {
        out << r.axis << ',' << num(s.value) << ',' << s.seed << ',' << num(s.metrics.footprint_g) << ','
            << num(s.metrics.ect) << ',' << num(s.metrics.avg_jct) << ',' << s.metrics.deferrals << ','
            << s.metrics.min_quota << ',';
        if (s.metrics.normalized) {
            out << num(s.metrics.normalized->footprint) << ',' << num(s.metrics.normalized->ect) << ','
                << num(s.metrics.normalized->avg_jct);
        } else {
            out << ",,";
        }
        out << '\n';
    }
}

} // namespace carbonsim
