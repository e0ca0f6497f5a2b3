#include <carbonsim/analysis.hpp>
#include <carbonsim/cap.hpp>
#include <carbonsim/carbon.hpp>
#include <carbonsim/error.hpp>
#include <carbonsim/experiment.hpp>
#include <carbonsim/pcaps.hpp>
#include <carbonsim/record_io.hpp>
#include <carbonsim/workload.hpp>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace carbonsim;

namespace {

std::string run_config_file(const std::string& path, std::optional<std::string> out) {
    auto config = load_config_file(path);
    if (out) {
        config.output_dir = *out;
    }
    const auto dirs = run_experiment(config);
    return dirs.front().string();
}

std::vector<std::string> run_config_json(const std::string& doc, const std::string& base_dir) {
    const auto config = config_from_json(nlohmann::json::parse(doc), base_dir);
    std::vector<std::string> out;
    for (const auto& d : run_experiment(config)) {
        out.push_back(d.string());
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_carbonsim, m) {
    m.doc() = "Carbon-aware DAG scheduling simulator";

    py::register_exception<Error>(m, "CarbonsimError");

    py::class_<TraceStats>(m, "TraceStats")
        .def_readonly("count", &TraceStats::count)
        .def_readonly("min", &TraceStats::min)
        .def_readonly("max", &TraceStats::max)
        .def_readonly("mean", &TraceStats::mean)
        .def_readonly("stddev", &TraceStats::stddev)
        .def_readonly("cv", &TraceStats::cv);

    py::class_<CarbonTrace>(m, "CarbonTrace")
        .def(py::init([](std::vector<double> values, double step, bool periodic) {
                 return CarbonTrace(0, step, std::move(values), std::nullopt, periodic);
             }),
             py::arg("intensities"), py::arg("step") = 3600.0, py::arg("periodic") = false)
        .def_property_readonly("step", &CarbonTrace::step)
        .def_property_readonly("intensities", &CarbonTrace::intensities)
        .def_property_readonly("periodic", &CarbonTrace::periodic)
        .def("__len__", &CarbonTrace::size)
        .def("intensity_at", [](const CarbonTrace& t, double s) { return intensity_at(t, s); })
        .def("bounds", [](const CarbonTrace& t, double s, double horizon) {
            const auto b = bounds_over_window(t, s, horizon);
            return py::make_tuple(b.L, b.U);
        })
        .def("emissions", [](const CarbonTrace& t, const std::vector<std::tuple<double, double, double>>& profile,
                             double power) {
            std::vector<BusyInterval> p;
            for (const auto& [s, e, k] : profile) {
                p.push_back({s, e, k});
            }
            return integrate_emissions(t, p, power);
        }, py::arg("profile"), py::arg("power_per_executor_kw") = 1.0)
        .def("stats", [](const CarbonTrace& t) { return trace_stats(t); });

    m.def("load_trace", [](const std::string& path) { return load_trace_file(path); });
    m.def("square_wave", &square_wave, py::arg("low"), py::arg("high"), py::arg("period_seconds"),
          py::arg("step_seconds"), py::arg("steps"), py::arg("periodic") = false);

    m.def("solve_alpha", &solve_alpha, py::arg("K"), py::arg("B"), py::arg("L"), py::arg("U"));
    m.def("thresholds", [](int K, int B, double L, double U) { return compute_thresholds(K, B, L, U).phis; },
          py::arg("K"), py::arg("B"), py::arg("L"), py::arg("U"));
    m.def("quota", [](int K, int B, double L, double U, double c) { return quota(compute_thresholds(K, B, L, U), c); },
          py::arg("K"), py::arg("B"), py::arg("L"), py::arg("U"), py::arg("c"));
    m.def("cap_parallelism", &cap_parallelism, py::arg("P"), py::arg("r"), py::arg("K"), py::arg("idle"));
    m.def("psi", &psi, py::arg("gamma"), py::arg("L"), py::arg("U"), py::arg("r"));
    m.def("pcaps_parallelism",
          [](double gamma, int P, double c, double L, double U, const std::string& scale) {
              PcapsConfig config;
              config.gamma = gamma;
              config.carbon_scale = parse_carbon_scale(scale);
              return pcaps_parallelism(config, P, c, L, U);
          },
          py::arg("gamma"), py::arg("P"), py::arg("c"), py::arg("L"), py::arg("U"),
          py::arg("carbon_scale") = "normalized");

    m.def("generate_workload_json",
          [](int n_jobs, double mean_interarrival_s, std::uint64_t seed) {
              GeneratorParams p;
              p.n_jobs = n_jobs;
              p.mean_interarrival_s = mean_interarrival_s;
              std::ostringstream out;
              save_workload(generate_workload(p, seed), out);
              return out.str();
          },
          py::arg("n_jobs"), py::arg("mean_interarrival_s") = 1800.0, py::arg("seed") = 1);

    m.def("policy_names", &policy_names);
    m.def("run_config_file", &run_config_file, py::arg("path"), py::arg("out") = std::nullopt);
    m.def("run_config_json", &run_config_json, py::arg("document"), py::arg("base_dir") = ".");
    m.def("analyze", [](const std::string& dir) { return analyze_run_dir(dir); });
    m.def("compare", [](const std::string& base, const std::string& aware) {
        return compare_run_dirs(base, aware).dump(2);
    });
}
