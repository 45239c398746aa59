#include "nbrepro/compare/compare.hpp"
#include "nbrepro/containerize/recipe.hpp"
#include "nbrepro/containerize/runtime.hpp"
#include "nbrepro/depinfer/imports.hpp"
#include "nbrepro/depinfer/requirements.hpp"
#include "nbrepro/depinfer/synthesize.hpp"
#include "nbrepro/executor/execution.hpp"
#include "nbrepro/notebook/notebook.hpp"
#include "nbrepro/outcomes/outcomes.hpp"
#include "nbrepro/pipeline/pipeline.hpp"
#include "nbrepro/util/error.hpp"
#include "nbrepro/util/text.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace nbrepro;
using nlohmann::json;

namespace {

// Structured results cross the boundary as JSON text; the Python package
// decodes them.

struct Session {
    pipeline::PipelineConfig config;
    std::unique_ptr<containerize::ContainerRuntime> runtime;
    std::unique_ptr<store::Store> store;
    std::unique_ptr<pipeline::EventLog> events;
    std::unique_ptr<pipeline::Pipeline> pipeline;
};

Session open_session(const std::string& config_text, bool with_runtime) {
    auto j = json::parse(config_text);
    Session s;
    auto& c = s.config;
    if (j.contains("inputs")) c.inputs = pipeline::expand_inputs(j["inputs"].get<std::vector<std::string>>());
    c.store_path = j.value("store", c.store_path.string());
    c.log_dir = j.value("logdir", c.log_dir.string());
    c.artifacts_dir = j.value("artifacts", c.artifacts_dir.string());
    c.report_dir = j.value("report_dir", c.report_dir.string());
    c.jobs = j.value("jobs", c.jobs);
    c.build_timeout = std::chrono::seconds(j.value("build_timeout", static_cast<long>(c.build_timeout.count())));
    c.exec_timeout = std::chrono::seconds(j.value("exec_timeout", static_cast<long>(c.exec_timeout.count())));
    c.base_image = j.value("base_image", c.base_image);
    c.scan_magic_installs = j.value("scan_magic_installs", c.scan_magic_installs);
    c.keep_images = j.value("keep_images", c.keep_images);
    if (j.contains("alias_table") && !j["alias_table"].is_null()) c.alias_table = j["alias_table"].get<std::string>();
    if (j.contains("baseline") && !j["baseline"].is_null()) c.baseline = j["baseline"].get<std::string>();

    if (with_runtime) {
        const auto which = j.value("runtime", std::string("auto"));
        if (which == "auto") {
            s.runtime = containerize::detect_container_runtime();
        } else if (which == "docker" || which == "podman") {
            s.runtime = std::make_unique<containerize::CliContainerRuntime>(which);
            if (!s.runtime->probe().ok()) throw PrerequisiteError("container runtime '" + which + "' is not usable");
        } else if (which != "none") {
            throw ConfigError("runtime must be auto, docker, podman or none");
        }
    }
    s.store = std::make_unique<store::Store>(c.store_path);
    s.events = std::make_unique<pipeline::EventLog>(c.log_dir / "events.jsonl");
    s.pipeline = std::make_unique<pipeline::Pipeline>(c, *s.store, s.runtime.get(), *s.events);
    return s;
}

json stage_json(const pipeline::StageReport& r) {
    json runs = json::array();
    for (const auto& run : r.runs)
        runs.push_back({{"run_id", run.run_id},
                        {"repository_id", run.repository_id},
                        {"stage", corpus::to_string(run.stage)},
                        {"provisioning_status",
                         run.provisioning_status ? json(corpus::to_string(*run.provisioning_status)) : json(nullptr)},
                        {"status_reason", run.status_reason}});
    return {{"invocation_id", r.invocation_id}, {"exit_code", static_cast<int>(r.exit_code())}, {"runs", runs},
            {"incomplete", r.incomplete},       {"failed", r.failed},                            {"messages", r.messages}};
}

std::string run_stage(const std::string& stage, const std::string& config_text) {
    const bool needs_runtime = stage == "run" || stage == "execute";
    if (stage != "run" && stage != "infer" && stage != "execute" && stage != "compare")
        throw ConfigError("unknown stage '" + stage + "'");
    py::gil_scoped_release release;
    auto s = open_session(config_text, needs_runtime);
    auto& p = *s.pipeline;
    auto r = stage == "run" ? p.run() : stage == "infer" ? p.infer() : stage == "execute" ? p.execute() : p.compare();
    return stage_json(r).dump();
}

std::string write_report(const std::string& config_text) {
    py::gil_scoped_release release;
    auto s = open_session(config_text, false);
    return report::to_json(s.pipeline->report()).dump();
}

std::string classify(const std::string& config_text, const std::string& baseline) {
    py::gil_scoped_release release;
    auto s = open_session(config_text, false);
    auto r = s.pipeline->classify(baseline);
    json assignments = json::array();
    for (const auto& a : r.assignments)
        assignments.push_back({{"notebook_id", a.notebook_id},
                               {"run_id", a.run_id},
                               {"outcome_class", outcomes::to_string(a.outcome)},
                               {"baseline_dependency_failure", a.baseline_dependency_failure},
                               {"rationale", a.rationale}});
    return json{{"baseline_rows", r.baseline_rows},
                {"unmatched_rows", r.unmatched_rows},
                {"assignments", assignments},
                {"warnings", r.warnings},
                {"resolution_rate_pct", r.resolution_rate_pct ? json(*r.resolution_rate_pct) : json(nullptr)}}
        .dump();
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of the nbrepro notebook reproducibility pipeline";

    auto& base = py::register_exception<Error>(m, "NbreproError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<PrerequisiteError>(m, "PrerequisiteError", base.ptr());

    m.def("version", [] { return std::string(containerize::pipeline_version()); });

    m.def("extract_imports", [](const std::string& source) { return depinfer::extract_imports(source); },
          py::arg("source"), "Top-level module names imported by a Python code cell.");
    m.def("filter_standard_library", &depinfer::filter_standard_library, py::arg("names"));
    m.def("is_stdlib_module", [](const std::string& name) { return depinfer::is_stdlib_module(name); }, py::arg("name"));
    m.def(
        "map_import_to_distribution",
        [](const std::string& name, std::optional<std::string> alias_file) {
            if (!alias_file) return depinfer::map_import_to_distribution(name);
            auto table = depinfer::AliasTable::builtin();
            table.load_file(*alias_file);
            return depinfer::map_import_to_distribution(name, table);
        },
        py::arg("name"), py::arg("alias_file") = py::none());
    m.def("normalize_distribution_name", [](const std::string& n) { return depinfer::normalize_distribution_name(n); });

    m.def("detect_nondeterminism", [](const std::string& source) { return compare::detect_nondeterminism(source).patterns; },
          py::arg("source"));
    m.def("nondeterminism_patterns", &compare::nondeterminism_patterns);
    m.def(
        "compare_notebooks",
        [](const std::string& original, const std::string& executed) {
            auto metrics = compare::compute_metrics(notebook::parse_notebook(original), notebook::parse_notebook(executed));
            return compare::comparison_to_json(metrics).dump();
        },
        py::arg("original"), py::arg("executed"));
    m.def("roundtrip_notebook", [](const std::string& text) { return notebook::serialize_notebook(notebook::parse_notebook(text)); },
          py::arg("text"));

    m.def(
        "classify_error",
        [](const std::string& error_type) {
            auto c = executor::classify_error(error_type);
            return py::make_tuple(std::string(executor::to_string(c.category)), c.recognized);
        },
        py::arg("error_type"));

    m.def(
        "generate_dockerfile",
        [](const std::string& manifest, const std::string& base_image) {
            depinfer::DependencySpec spec;
            spec.synthesized_manifest = manifest;
            for (const auto& line : util::split_lines(manifest))
                if (auto r = depinfer::parse_requirement_spec(line, depinfer::RequirementOrigin::DeclaredRequirements))
                    spec.requirements.push_back(*r);
            containerize::RecipeOptions o;
            o.base_image = base_image;
            return containerize::generate_dockerfile(spec, o);
        },
        py::arg("manifest"), py::arg("base_image") = "python:3.10-slim");

    m.def("resolution_rate", py::overload_cast<std::size_t, std::size_t>(&outcomes::resolution_rate), py::arg("resolved"),
          py::arg("baseline_failures"));

    m.def("run_stage", &run_stage, py::arg("stage"), py::arg("config"));
    m.def("write_report", &write_report, py::arg("config"));
    m.def("classify", &classify, py::arg("config"), py::arg("baseline"));
}
