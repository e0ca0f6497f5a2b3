#include <carbonsim/carbon.hpp>
#include <carbonsim/error.hpp>
#include <carbonsim/experiment.hpp>
#include <carbonsim/record_io.hpp>
#include <carbonsim/workload.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace carbonsim;

namespace {

struct Overrides {
    std::optional<int> K;
    std::optional<double> power;
    std::optional<std::string> policy;
    std::optional<double> gamma;
    std::optional<int> B;
    std::optional<double> theta;
    std::optional<double> tau;
    std::optional<double> w;
    std::optional<std::string> carbon_scale;
    bool strict_filter = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> trace;
    std::optional<std::string> workload;
    std::optional<int> trials;
    bool random_offset = false;
    std::optional<double> lookahead_hours;
    std::optional<std::string> out;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--K", o.K, "Number of executors");
    cmd->add_option("--power", o.power, "Power per executor in kW");
    cmd->add_option("--policy", o.policy, "Policy name");
    cmd->add_option("--gamma", o.gamma, "pcaps carbon-awareness in [0,1]");
    cmd->add_option("--B", o.B, "cap minimum quota");
    cmd->add_option("--theta", o.theta, "greenhadoop window blend in [0,1]");
    cmd->add_option("--tau", o.tau, "pb softmax temperature");
    cmd->add_option("--w", o.w, "weighted-fair exponent");
    cmd->add_option("--carbon-scale", o.carbon_scale, "normalized or raw");
    cmd->add_flag("--strict-filter", o.strict_filter, "Apply the threshold test to r = 1 stages");
    cmd->add_option("--seed", o.seed, "Random seed");
    cmd->add_option("--trace", o.trace, "Carbon trace CSV");
    cmd->add_option("--workload", o.workload, "Workload JSON (otherwise generated)");
    cmd->add_option("--trials", o.trials, "Number of trials");
    cmd->add_flag("--random-offset", o.random_offset, "Start each trial at a random trace step");
    cmd->add_option("--lookahead-hours", o.lookahead_hours, "Carbon bounds lookahead");
    cmd->add_option("--out", o.out, "Output directory");
}

ExperimentConfig build_config(const std::string& config_path, const Overrides& o) {
    ExperimentConfig c = config_path.empty() ? config_from_json(nlohmann::json::object(), fs::current_path())
                                             : load_config_file(config_path);
    if (o.K) c.cluster.K = *o.K;
    if (o.power) c.cluster.power_per_executor_kw = *o.power;
    if (o.policy) c.policy.name = *o.policy;
    if (o.gamma) c.policy.gamma = *o.gamma;
    if (o.B) c.policy.B = *o.B;
    if (o.theta) c.policy.theta = *o.theta;
    if (o.tau) c.policy.tau = *o.tau;
    if (o.w) c.policy.w = *o.w;
    if (o.carbon_scale) c.policy.carbon_scale = parse_carbon_scale(*o.carbon_scale);
    if (o.strict_filter) c.policy.strict_filter = true;
    if (o.seed) c.seed = *o.seed;
    if (o.trace) c.trace_path = fs::absolute(*o.trace);
    if (o.workload) c.workload_path = fs::absolute(*o.workload);
    if (o.trials) c.trials = *o.trials;
    if (o.random_offset) c.random_offset = true;
    if (o.lookahead_hours) c.cluster.lookahead_s = *o.lookahead_hours * 3600.0;
    if (o.out) c.output_dir = fs::absolute(*o.out);
    return c;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw ConfigError("bad value list entry '" + item + "'");
        }
    }
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            const auto dash = item.find('-');
            if (dash != std::string::npos) {
                const auto lo = std::stoull(item.substr(0, dash));
                const auto hi = std::stoull(item.substr(dash + 1));
                if (hi < lo) {
                    throw std::invalid_argument(item);
                }
                for (auto s = lo; s <= hi; ++s) {
                    out.push_back(s);
                }
            } else {
                out.push_back(std::stoull(item));
            }
        } catch (const std::exception&) {
            throw ConfigError("bad seed list entry '" + item + "'");
        }
    }
    return out;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Carbon-aware DAG scheduling simulator"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides run_o;
    auto* run = app.add_subcommand("run", "Run one experiment (all trials)");
    run->add_option("--config", config_path, "Experiment config JSON");
    add_overrides(run, run_o);

    std::string sweep_config;
    Overrides sweep_o;
    std::string axis = "gamma";
    std::string values;
    std::string seeds = "1";
    std::string baseline;
    int threads = 0;
    auto* sweep = app.add_subcommand("sweep", "Sweep one policy knob over seeds");
    sweep->add_option("--config", sweep_config, "Experiment config JSON");
    add_overrides(sweep, sweep_o);
    sweep->add_option("--axis", axis, "gamma, B or theta");
    sweep->add_option("--values", values, "Comma-separated knob values")->required();
    sweep->add_option("--seeds", seeds, "Seeds: list and ranges, e.g. 1-20 or 1,5,9");
    sweep->add_option("--baseline", baseline, "Baseline policy for normalization");
    sweep->add_option("--threads", threads, "Worker threads (0 = all cores)");

    std::string base_dir;
    std::string aware_dir;
    std::string compare_out;
    auto* compare = app.add_subcommand("compare", "Compare a baseline run against a carbon-aware run");
    compare->add_option("baseline", base_dir, "Baseline run directory")->required();
    compare->add_option("aware", aware_dir, "Carbon-aware run directory")->required();
    compare->add_option("--out", compare_out, "Write the analysis JSON here instead of stdout");

    std::string analyze_dir;
    bool analyze_check = false;
    auto* analyze = app.add_subcommand("analyze", "Recompute a run directory's metrics");
    analyze->add_option("run_dir", analyze_dir, "Run directory")->required();
    analyze->add_flag("--check", analyze_check, "Fail unless the result equals the stored metrics.json");

    GeneratorParams gen;
    std::string gen_model = dag_model_name(gen.dag_model);
    std::string gen_preset = "default";
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    auto* gen_cmd = app.add_subcommand("gen-workload", "Generate a synthetic workload JSON");
    gen_cmd->add_option("--preset", gen_preset, "default or alibaba");
    gen_cmd->add_option("--n-jobs", gen.n_jobs, "Number of jobs");
    gen_cmd->add_option("--interarrival", gen.mean_interarrival_s, "Mean interarrival seconds");
    gen_cmd->add_option("--model", gen_model, "templates or layered");
    gen_cmd->add_option("--seed", gen_seed, "Random seed");
    gen_cmd->add_option("--out", gen_out, "Output file (default stdout)");

    std::string trace_path;
    bool trace_json = false;
    auto* validate = app.add_subcommand("validate-trace", "Parse a carbon trace and print statistics");
    validate->add_option("path", trace_path, "Trace CSV")->required();
    validate->add_flag("--json", trace_json, "Print statistics as JSON");

    std::string trace_kind = "square";
    double sq_low = 50.0;
    double sq_high = 500.0;
    double sq_period_h = 6.0;
    std::size_t trace_hours = 24 * 365;
    double syn_mean = 300.0;
    double syn_daily = 80.0;
    double syn_seasonal = 40.0;
    double syn_noise = 30.0;
    std::uint64_t trace_seed = 1;
    bool trace_green = false;
    std::string trace_out;
    std::string trace_stats_out;
    auto* gen_trace = app.add_subcommand("gen-trace", "Generate a square-wave or synthetic grid trace CSV");
    gen_trace->add_option("--kind", trace_kind, "square or synthetic");
    gen_trace->add_option("--low", sq_low, "Square wave low intensity");
    gen_trace->add_option("--high", sq_high, "Square wave high intensity");
    gen_trace->add_option("--period-hours", sq_period_h, "Square wave period");
    gen_trace->add_option("--hours", trace_hours, "Number of hourly rows");
    gen_trace->add_option("--mean", syn_mean, "Synthetic mean intensity");
    gen_trace->add_option("--daily-amplitude", syn_daily, "Synthetic daily amplitude");
    gen_trace->add_option("--seasonal-amplitude", syn_seasonal, "Synthetic seasonal amplitude");
    gen_trace->add_option("--noise", syn_noise, "Synthetic noise level");
    gen_trace->add_option("--seed", trace_seed, "Random seed");
    gen_trace->add_flag("--green", trace_green, "Add a green_fraction column derived from intensity");
    gen_trace->add_option("--out", trace_out, "Output CSV")->required();
    gen_trace->add_option("--stats-out", trace_stats_out, "Also write the generated statistics as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const auto config = build_config(config_path, run_o);
            for (const auto& dir : run_experiment(config)) {
                std::cout << dir.string() << '\n';
            }
        } else if (sweep->parsed()) {
            const auto config = build_config(sweep_config, sweep_o);
            SweepSpec spec;
            spec.axis = axis;
            spec.values = parse_values(values);
            spec.seeds = parse_seeds(seeds);
            spec.threads = threads;
            if (!baseline.empty()) {
                PolicySpec b = config.policy;
                b.name = baseline;
                spec.baseline = b;
            }
            const auto result = run_sweep(config, spec);
            fs::path out = config.output_dir.empty()
                               ? default_output_root() / ("sweep-" + config.policy.name + "-" + axis)
                               : config.output_dir;
            std::ostringstream summary;
            write_sweep_summary_csv(result, summary);
            std::ostringstream samples;
            write_sweep_samples_csv(result, samples);
            write_file(out / "summary.csv", summary.str());
            write_file(out / "samples.csv", samples.str());
            write_file(out / "config.json", config_to_json(config).dump(2) + "\n");
            std::cout << summary.str();
        } else if (compare->parsed()) {
            const auto doc = compare_run_dirs(base_dir, aware_dir).dump(2) + "\n";
            if (compare_out.empty()) {
                std::cout << doc;
            } else {
                write_file(compare_out, doc);
            }
        } else if (analyze->parsed()) {
            const auto doc = analyze_run_dir(analyze_dir);
            std::cout << doc;
            if (analyze_check) {
                std::ifstream in(fs::path(analyze_dir) / "metrics.json", std::ios::binary);
                std::stringstream stored;
                stored << in.rdbuf();
                if (stored.str() != doc) {
                    std::cerr << "error: recomputed metrics differ from stored metrics.json\n";
                    return 1;
                }
            }
        } else if (gen_cmd->parsed()) {
            if (gen_preset == "alibaba") {
                const auto n = gen.n_jobs;
                const auto ia = gen.mean_interarrival_s;
                gen = alibaba_like_params(n, ia);
            } else if (gen_preset != "default") {
                throw ConfigError("--preset must be default or alibaba");
            } else {
                gen.dag_model = parse_dag_model(gen_model);
            }
            const auto workload = generate_workload(gen, gen_seed);
            if (gen_out.empty()) {
                save_workload(workload, std::cout);
            } else {
                save_workload_file(workload, gen_out);
            }
        } else if (gen_trace->parsed()) {
            CarbonTrace trace = trace_kind == "synthetic"
                                    ? synthetic_grid_trace(trace_hours, syn_mean, syn_daily, syn_seasonal,
                                                           syn_noise, trace_seed)
                                    : trace_kind == "square"
                                          ? square_wave(sq_low, sq_high, sq_period_h * 3600.0, 3600.0, trace_hours)
                                          : throw ConfigError("--kind must be square or synthetic");
            if (trace_green) {
                trace = with_derived_green_fraction(trace);
            }
            save_trace_file(trace, trace_out);
            if (!trace_stats_out.empty()) {
                write_file(trace_stats_out, to_json(trace_stats(trace)).dump(2) + "\n");
            }
        } else if (validate->parsed()) {
            const auto trace = load_trace_file(trace_path);
            const auto stats = trace_stats(trace);
            if (trace_json) {
                std::cout << to_json(stats).dump(2) << '\n';
            } else {
                std::printf("ok rows=%zu step=%.17g min=%.17g max=%.17g mean=%.17g stddev=%.17g cv=%.17g\n",
                            stats.count, trace.step(), stats.min, stats.max, stats.mean, stats.stddev, stats.cv);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
