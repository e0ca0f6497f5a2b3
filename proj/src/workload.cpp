#include <carbonsim/workload.hpp>

#include <carbonsim/error.hpp>
#include <carbonsim/random.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace carbonsim {

using nlohmann::json;

double StageSpec::max_duration() const {
    return task_durations.empty() ? 0.0
                                  : *std::max_element(task_durations.begin(), task_durations.end());
}

double StageSpec::work() const {
    double sum = 0.0;
    for (double d : task_durations) {
        sum += d;
    }
    return sum;
}

namespace {

std::string job_prefix(const JobDag& job) {
    return "job " + std::to_string(job.job_id) + ": ";
}

std::map<int, int> stage_positions(const JobDag& job) {
    std::map<int, int> pos;
    for (std::size_t i = 0; i < job.stages.size(); ++i) {
        pos.emplace(job.stages[i].stage_id, static_cast<int>(i));
    }
    return pos;
}

} // namespace

void validate(const JobDag& job) {
    if (job.stages.empty()) {
        throw WorkloadError(job_prefix(job) + "has no stages");
    }
    if (!(job.arrival_time >= 0.0) || !std::isfinite(job.arrival_time)) {
        throw WorkloadError(job_prefix(job) + "arrival_time must be a nonnegative number");
    }
    std::map<int, int> pos;
    for (std::size_t i = 0; i < job.stages.size(); ++i) {
        const auto& stage = job.stages[i];
        if (!pos.emplace(stage.stage_id, static_cast<int>(i)).second) {
            throw WorkloadError(job_prefix(job) + "duplicate stage id " +
                                std::to_string(stage.stage_id));
        }
        if (stage.task_durations.empty()) {
            throw WorkloadError(job_prefix(job) + "stage " + std::to_string(stage.stage_id) +
                                " has no tasks");
        }
        for (double d : stage.task_durations) {
            if (!(d > 0.0) || !std::isfinite(d)) {
                throw WorkloadError(job_prefix(job) + "stage " + std::to_string(stage.stage_id) +
                                    " has a non-positive task duration");
            }
        }
    }
    std::set<std::pair<int, int>> seen;
    for (const auto& e : job.edges) {
        for (int end : {e.parent, e.child}) {
            if (!pos.contains(end)) {
                throw WorkloadError(job_prefix(job) + "dangling edge " + std::to_string(e.parent) +
                                    "->" + std::to_string(e.child) + " references unknown stage " +
                                    std::to_string(end));
            }
        }
        if (e.parent == e.child) {
            throw WorkloadError(job_prefix(job) + "self-loop on stage " + std::to_string(e.parent));
        }
        if (!seen.emplace(e.parent, e.child).second) {
            throw WorkloadError(job_prefix(job) + "duplicate edge " + std::to_string(e.parent) +
                                "->" + std::to_string(e.child));
        }
    }

    // Kahn's algorithm; leftovers contain a cycle.
    const auto n = job.stages.size();
    std::vector<std::vector<int>> children(n);
    std::vector<int> indegree(n, 0);
    for (const auto& e : job.edges) {
        children[static_cast<std::size_t>(pos[e.parent])].push_back(pos[e.child]);
        ++indegree[static_cast<std::size_t>(pos[e.child])];
    }
    std::vector<int> queue;
    for (std::size_t i = 0; i < n; ++i) {
        if (indegree[i] == 0) {
            queue.push_back(static_cast<int>(i));
        }
    }
    std::size_t visited = 0;
    while (visited < queue.size()) {
        const int v = queue[visited++];
        for (int c : children[static_cast<std::size_t>(v)]) {
            if (--indegree[static_cast<std::size_t>(c)] == 0) {
                queue.push_back(c);
            }
        }
    }
    if (visited == n) {
        return;
    }
    // Walk parents among the remaining nodes until one repeats.
    std::vector<std::vector<int>> parents(n);
    for (std::size_t v = 0; v < n; ++v) {
        for (int c : children[v]) {
            parents[static_cast<std::size_t>(c)].push_back(static_cast<int>(v));
        }
    }
    int cur = -1;
    for (std::size_t i = 0; i < n; ++i) {
        if (indegree[i] > 0) {
            cur = static_cast<int>(i);
            break;
        }
    }
    std::vector<int> order_seen(n, -1);
    std::vector<int> path;
    while (order_seen[static_cast<std::size_t>(cur)] < 0) {
        order_seen[static_cast<std::size_t>(cur)] = static_cast<int>(path.size());
        path.push_back(cur);
        for (int p : parents[static_cast<std::size_t>(cur)]) {
            if (indegree[static_cast<std::size_t>(p)] > 0) {
                cur = p;
                break;
            }
        }
    }
    std::vector<int> cycle(path.begin() + order_seen[static_cast<std::size_t>(cur)], path.end());
    std::reverse(cycle.begin(), cycle.end());
    std::ostringstream os;
    os << job_prefix(job) << "cycle detected: ";
    for (int v : cycle) {
        os << job.stages[static_cast<std::size_t>(v)].stage_id << "->";
    }
    os << job.stages[static_cast<std::size_t>(cycle.front())].stage_id;
    throw WorkloadError(os.str());
}

void validate(const WorkloadSpec& workload) {
    std::set<int> ids;
    double last_arrival = 0.0;
    for (const auto& job : workload.jobs) {
        validate(job);
        if (!ids.insert(job.job_id).second) {
            throw WorkloadError("duplicate job id " + std::to_string(job.job_id));
        }
        if (job.arrival_time < last_arrival) {
            throw WorkloadError("jobs are not sorted by arrival time");
        }
        last_arrival = job.arrival_time;
    }
}

DagIndex index_dag(const JobDag& job) {
    const auto pos = stage_positions(job);
    const auto n = job.stages.size();
    DagIndex idx;
    idx.parents.resize(n);
    idx.children.resize(n);
    std::vector<int> indegree(n, 0);
    for (const auto& e : job.edges) {
        const int p = pos.at(e.parent);
        const int c = pos.at(e.child);
        idx.children[static_cast<std::size_t>(p)].push_back(c);
        idx.parents[static_cast<std::size_t>(c)].push_back(p);
        ++indegree[static_cast<std::size_t>(c)];
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (indegree[i] == 0) {
            idx.topo_order.push_back(static_cast<int>(i));
        }
    }
    for (std::size_t head = 0; head < idx.topo_order.size(); ++head) {
        const int v = idx.topo_order[head];
        for (int c : idx.children[static_cast<std::size_t>(v)]) {
            if (--indegree[static_cast<std::size_t>(c)] == 0) {
                idx.topo_order.push_back(c);
            }
        }
    }
    if (idx.topo_order.size() != n) {
        throw WorkloadError(job_prefix(job) + "cycle detected");
    }
    return idx;
}

double critical_path(const JobDag& job) {
    const auto idx = index_dag(job);
    std::vector<double> finish(job.stages.size(), 0.0);
    double best = 0.0;
    for (int v : idx.topo_order) {
        double start = 0.0;
        for (int p : idx.parents[static_cast<std::size_t>(v)]) {
            start = std::max(start, finish[static_cast<std::size_t>(p)]);
        }
        finish[static_cast<std::size_t>(v)] = start + job.stages[static_cast<std::size_t>(v)].max_duration();
        best = std::max(best, finish[static_cast<std::size_t>(v)]);
    }
    return best;
}

double total_work(const JobDag& job) {
    double sum = 0.0;
    for (const auto& s : job.stages) {
        sum += s.work();
    }
    return sum;
}

std::size_t total_tasks(const JobDag& job) {
    std::size_t n = 0;
    for (const auto& s : job.stages) {
        n += s.task_durations.size();
    }
    return n;
}

void sort_by_arrival(WorkloadSpec& workload) {
    std::stable_sort(workload.jobs.begin(), workload.jobs.end(), [](const JobDag& a, const JobDag& b) {
        return a.arrival_time != b.arrival_time ? a.arrival_time < b.arrival_time
                                                : a.job_id < b.job_id;
    });
}

double template_scale_mean_seconds(TemplateScale scale) {
    switch (scale) {
    case TemplateScale::Small2GB: return 180.0;
    case TemplateScale::Medium10GB: return 386.0;
    case TemplateScale::Large50GB: return 1261.0;
    }
    return 180.0;
}

GeneratorParams alibaba_like_params(int n_jobs, double mean_interarrival_s) {
    GeneratorParams p;
    p.n_jobs = n_jobs;
    p.mean_interarrival_s = mean_interarrival_s;
    p.dag_model = DagModel::LayeredRandom;
    p.mean_stages = 66.0;
    p.max_width = 8;
    p.max_tasks_per_stage = 16;
    p.mean_job_work_s = 7989.0;
    p.duration_scale = 1.0 / 60.0;
    return p;
}

namespace {

// Truncated continuous power law on [1, range] with density ~ x^-exponent.
double power_law_integral(double p, double range) {
    if (std::abs(p + 1.0) < 1e-12) {
        return std::log(range);
    }
    return (std::pow(range, p + 1.0) - 1.0) / (p + 1.0);
}

double power_law_unit_mean(double exponent, double range) {
    return power_law_integral(1.0 - exponent, range) / power_law_integral(-exponent, range);
}

double sample_power_law_unit(Rng& rng, double exponent, double range) {
    const double u = rng.uniform();
    if (std::abs(exponent - 1.0) < 1e-12) {
        return std::pow(range, u);
    }
    const double q = 1.0 - exponent;
    return std::pow(1.0 + u * (std::pow(range, q) - 1.0), 1.0 / q);
}

double sample_power_law(Rng& rng, double mean, double exponent, double range) {
    const double scale = mean / power_law_unit_mean(exponent, range);
    return scale * sample_power_law_unit(rng, exponent, range);
}

struct Template {
    std::vector<int> tasks;
    std::vector<double> weight; // relative per-task work
    std::vector<Edge> edges;
};

// Representative query-plan shapes: scans feed joins, joins feed
// aggregation, aggregation feeds a final sort.
const std::vector<Template>& template_library() {
    static const std::vector<Template> lib = {
        // Pricing summary: scan -> aggregate -> sort.
        {{8, 4, 1}, {1.0, 0.6, 0.5}, {{0, 1}, {1, 2}}},
        // Shipping priority: three scans, two joins, aggregate, sort.
        {{4, 8, 12, 6, 8, 4, 1}, {0.5, 0.8, 1.0, 0.9, 1.0, 0.6, 0.4},
         {{0, 3}, {1, 3}, {3, 4}, {2, 4}, {4, 5}, {5, 6}}},
        // Local supplier volume: six scans in a left-deep join tree.
        {{2, 2, 4, 8, 12, 4, 4, 6, 8, 8, 6, 2, 1},
         {0.3, 0.3, 0.5, 0.8, 1.0, 0.5, 0.6, 0.8, 0.9, 1.0, 0.8, 0.5, 0.3},
         {{0, 6}, {1, 6}, {6, 7}, {2, 7}, {7, 8}, {3, 8}, {8, 9}, {4, 9}, {9, 10}, {5, 10},
          {10, 11}, {11, 12}}},
        // Revenue forecast: scan -> aggregate.
        {{10, 1}, {1.0, 0.4}, {{0, 1}}},
        // Product type profit: bushy join of five scans.
        {{4, 6, 10, 4, 2, 6, 8, 8, 4, 1},
         {0.6, 0.7, 1.0, 0.6, 0.3, 0.8, 0.9, 1.0, 0.6, 0.4},
         {{0, 5}, {1, 5}, {2, 6}, {3, 6}, {5, 7}, {6, 7}, {4, 7}, {7, 8}, {8, 9}}},
        // Promotion effect: two scans, join, aggregate.
        {{8, 2, 4, 1}, {1.0, 0.4, 0.8, 0.3}, {{0, 2}, {1, 2}, {2, 3}}},
    };
    return lib;
}

JobDag build_template_job(const GeneratorParams& params, Rng& rng, int job_id) {
    const auto& lib = template_library();
    const auto& tpl = lib[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(lib.size()) - 1))];
    const double job_work = template_scale_mean_seconds(params.template_scale) *
                            params.template_duration_factor * rng.uniform(0.6, 1.4) *
                            params.duration_scale;
    double total_weight = 0.0;
    for (std::size_t s = 0; s < tpl.tasks.size(); ++s) {
        total_weight += tpl.weight[s] * tpl.tasks[s];
    }
    JobDag job;
    job.job_id = job_id;
    for (std::size_t s = 0; s < tpl.tasks.size(); ++s) {
        const double per_task = job_work * tpl.weight[s] / total_weight;
        job.stages.push_back({static_cast<int>(s),
                              std::vector<double>(static_cast<std::size_t>(tpl.tasks[s]), per_task)});
    }
    job.edges = tpl.edges;
    return job;
}

JobDag build_layered_job(const GeneratorParams& params, Rng& rng, int job_id) {
    const double stages_raw =
        sample_power_law(rng, params.mean_stages, params.power_law_exponent, params.power_law_range);
    const int n_stages = std::max(1, static_cast<int>(std::lround(stages_raw)));
    const double job_work =
        sample_power_law(rng, params.mean_job_work_s, params.power_law_exponent,
                         params.power_law_range) *
        params.duration_scale;

    // Assign stages to layers left to right.
    std::vector<std::vector<int>> layers;
    for (int placed = 0; placed < n_stages;) {
        const int width = static_cast<int>(rng.uniform_int(1, std::max(1, params.max_width)));
        std::vector<int> layer;
        for (int i = 0; i < width && placed < n_stages; ++i) {
            layer.push_back(placed++);
        }
        layers.push_back(std::move(layer));
    }

    JobDag job;
    job.job_id = job_id;
    std::vector<int> tasks(static_cast<std::size_t>(n_stages));
    std::vector<double> weight(static_cast<std::size_t>(n_stages));
    double total_weight = 0.0;
    for (int s = 0; s < n_stages; ++s) {
        tasks[static_cast<std::size_t>(s)] =
            static_cast<int>(rng.uniform_int(1, std::max(1, params.max_tasks_per_stage)));
        weight[static_cast<std::size_t>(s)] = rng.uniform(0.2, 1.0);
        total_weight += weight[static_cast<std::size_t>(s)];
    }
    for (int s = 0; s < n_stages; ++s) {
        const double stage_work = job_work * weight[static_cast<std::size_t>(s)] / total_weight;
        const auto n = static_cast<std::size_t>(tasks[static_cast<std::size_t>(s)]);
        job.stages.push_back({s, std::vector<double>(n, stage_work / static_cast<double>(n))});
    }
    for (std::size_t l = 1; l < layers.size(); ++l) {
        const auto& prev = layers[l - 1];
        for (int child : layers[l]) {
            const auto anchor = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(prev.size()) - 1));
            for (std::size_t i = 0; i < prev.size(); ++i) {
                if (i == anchor || rng.uniform() < params.edge_probability) {
                    job.edges.push_back({prev[i], child});
                }
            }
        }
    }
    return job;
}

void check_params(const GeneratorParams& p) {
    if (p.n_jobs < 1) {
        throw WorkloadError("n_jobs must be >= 1");
    }
    if (!(p.mean_interarrival_s > 0.0)) {
        throw WorkloadError("mean_interarrival_s must be > 0");
    }
    if (!(p.duration_scale > 0.0) || !(p.template_duration_factor > 0.0)) {
        throw WorkloadError("duration scales must be > 0");
    }
    if (p.dag_model == DagModel::LayeredRandom) {
        if (!(p.mean_stages >= 1.0) || p.max_width < 1 || p.max_tasks_per_stage < 1 ||
            !(p.mean_job_work_s > 0.0) || !(p.power_law_range > 1.0) ||
            !(p.edge_probability >= 0.0 && p.edge_probability <= 1.0)) {
            throw WorkloadError("invalid layered-random parameters");
        }
    }
}

} // namespace

WorkloadSpec generate_workload(const GeneratorParams& params, std::uint64_t seed) {
    check_params(params);
    Rng arrivals(Rng::mix(seed, 1));
    Rng shapes(Rng::mix(seed, 2));
    WorkloadSpec spec;
    double t = 0.0;
    for (int j = 0; j < params.n_jobs; ++j) {
        JobDag job = params.dag_model == DagModel::TemplateLibrary
                         ? build_template_job(params, shapes, j)
                         : build_layered_job(params, shapes, j);
        job.arrival_time = t;
        spec.jobs.push_back(std::move(job));
        t += arrivals.exponential(params.mean_interarrival_s);
    }
    return spec;
}

std::string dag_model_name(DagModel model) {
    return model == DagModel::TemplateLibrary ? "template-library" : "layered-random";
}

DagModel parse_dag_model(const std::string& name) {
    if (name == "template-library" || name == "templates" || name == "tpch") {
        return DagModel::TemplateLibrary;
    }
    if (name == "layered-random" || name == "layered" || name == "alibaba") {
        return DagModel::LayeredRandom;
    }
    throw WorkloadError("unknown dag_model '" + name + "'");
}

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw WorkloadError("workload schema error: " + where + " missing field '" + key + "'");
    }
    return obj.at(key);
}

} // namespace

WorkloadSpec load_workload(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw WorkloadError(std::string("workload is not valid JSON: ") + e.what());
    }
    WorkloadSpec spec;
    try {
        for (const auto& jj : require(doc, "jobs", "document")) {
            JobDag job;
            job.job_id = require(jj, "job_id", "job").get<int>();
            const std::string where = "job " + std::to_string(job.job_id);
            job.arrival_time = require(jj, "arrival_time", where).get<double>();
            for (const auto& sj : require(jj, "stages", where)) {
                StageSpec stage;
                stage.stage_id = require(sj, "stage_id", where + " stage").get<int>();
                const std::string swhere = where + " stage " + std::to_string(stage.stage_id);
                if (sj.contains("task_durations")) {
                    stage.task_durations = sj.at("task_durations").get<std::vector<double>>();
                    if (sj.contains("num_tasks") &&
                        sj.at("num_tasks").get<int>() != stage.num_tasks()) {
                        throw WorkloadError("workload schema error: " + swhere +
                                            " num_tasks does not match task_durations");
                    }
                } else {
                    const int n = require(sj, "num_tasks", swhere).get<int>();
                    const double d = require(sj, "duration", swhere).get<double>();
                    if (n < 1) {
                        throw WorkloadError("workload schema error: " + swhere + " num_tasks < 1");
                    }
                    stage.task_durations.assign(static_cast<std::size_t>(n), d);
                }
                job.stages.push_back(std::move(stage));
            }
            if (jj.contains("edges")) {
                for (const auto& ej : jj.at("edges")) {
                    if (!ej.is_array() || ej.size() != 2) {
                        throw WorkloadError("workload schema error: " + where +
                                            " edge must be [parent, child]");
                    }
                    job.edges.push_back({ej[0].get<int>(), ej[1].get<int>()});
                }
            }
            spec.jobs.push_back(std::move(job));
        }
    } catch (const json::exception& e) {
        throw WorkloadError(std::string("workload schema error: ") + e.what());
    }
    sort_by_arrival(spec);
    validate(spec);
    return spec;
}

WorkloadSpec load_workload_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw WorkloadError("cannot open workload file: " + path.string());
    }
    return load_workload(in);
}

void save_workload(const WorkloadSpec& workload, std::ostream& out) {
    json jobs = json::array();
    for (const auto& job : workload.jobs) {
        json stages = json::array();
        for (const auto& s : job.stages) {
            stages.push_back({{"stage_id", s.stage_id},
                              {"num_tasks", s.num_tasks()},
                              {"task_durations", s.task_durations}});
        }
        json edges = json::array();
        for (const auto& e : job.edges) {
            edges.push_back({e.parent, e.child});
        }
        jobs.push_back({{"job_id", job.job_id},
                        {"arrival_time", job.arrival_time},
                        {"stages", std::move(stages)},
                        {"edges", std::move(edges)}});
    }
    out << json{{"jobs", std::move(jobs)}}.dump(1) << '\n';
}

void save_workload_file(const WorkloadSpec& workload, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw WorkloadError("cannot write workload file: " + path.string());
    }
    save_workload(workload, out);
}

} // namespace carbonsim
