#include "nbrepro/containerize/runtime.hpp"
#include "nbrepro/containerize/recipe.hpp"
#include "nbrepro/pipeline/pipeline.hpp"
#include "nbrepro/util/error.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>

namespace fs = std::filesystem;
using namespace nbrepro;

namespace {

struct Options {
    pipeline::PipelineConfig config;
    std::vector<std::string> inputs;
    int build_timeout = 1200;
    int exec_timeout = 600;
    std::string alias_table;
    std::string baseline;
    std::string runtime = "auto";
    bool scan_magic_installs = true;
};

void add_store_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--store", o.config.store_path, "SQLite results store")->capture_default_str();
    cmd->add_option("--logdir", o.config.log_dir, "Directory for build/execution logs and events.jsonl")->capture_default_str();
    cmd->add_option("--artifacts", o.config.artifacts_dir, "Directory for clones, manifests and executed notebooks")
        ->capture_default_str();
    cmd->add_option("--report-dir", o.config.report_dir, "Directory for report.json, summary.csv, summary.md")
        ->capture_default_str();
}

void add_pipeline_options(CLI::App* cmd, Options& o, bool with_inputs) {
    add_store_options(cmd, o);
    if (with_inputs)
        cmd->add_option("--input", o.inputs, "Repository URL, local directory, or a file listing one per line")
            ->required();
    cmd->add_option("--jobs", o.config.jobs, "Repositories processed in parallel")->capture_default_str();
    cmd->add_option("--build-timeout", o.build_timeout, "Image build timeout in seconds")->capture_default_str();
    cmd->add_option("--exec-timeout", o.exec_timeout, "Per-notebook execution timeout in seconds")->capture_default_str();
    cmd->add_option("--base-image", o.config.base_image, "Base image for generated Dockerfiles")->capture_default_str();
    cmd->add_option("--alias-table", o.alias_table, "Extra import-to-distribution aliases (\"module distribution\" per line)");
    cmd->add_flag("--scan-magic-installs,!--no-scan-magic-installs", o.scan_magic_installs,
                  "Honour !pip / %pip install lines inside notebooks")
        ->capture_default_str();
    cmd->add_option("--runtime", o.runtime, "Container engine")
        ->check(CLI::IsMember({"auto", "docker", "podman", "none"}))
        ->capture_default_str();
    cmd->add_flag("--keep-images", o.config.keep_images, "Keep built images after execution");
}

std::unique_ptr<containerize::ContainerRuntime> open_runtime(const std::string& which) {
    if (which == "none") return nullptr;
    if (which == "auto") return containerize::detect_container_runtime();
    auto rt = std::make_unique<containerize::CliContainerRuntime>(which);
    auto probe = rt->probe();
    if (!probe.ok()) throw PrerequisiteError("container runtime '" + which + "' is not usable: " + probe.output);
    return rt;
}

void print_stage(const pipeline::StageReport& r) {
    std::cout << "invocation " << r.invocation_id << ": " << r.runs.size() << " repositories\n";
    for (const auto& run : r.runs) {
        std::cout << "  " << run.repository_id << "  " << corpus::to_string(run.stage) << "  "
                  << (run.provisioning_status ? std::string(corpus::to_string(*run.provisioning_status)) : "-");
        if (!run.status_reason.empty()) std::cout << "  (" << run.status_reason << ")";
        std::cout << '\n';
    }
    for (const auto& m : r.messages) std::cerr << "warning: " << m << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Measure computational reproducibility of Jupyter notebook repositories"};
    app.set_version_flag("--version", containerize::pipeline_version());
    app.set_config("--config", "", "TOML/INI file with option values");
    app.require_subcommand(1);

    Options o;
    auto* run = app.add_subcommand("run", "Acquire, infer, build, execute and compare, then report");
    add_pipeline_options(run, o, true);
    run->add_option("--baseline", o.baseline, "Baseline CSV; classifies outcomes after the run")->check(CLI::ExistingFile);

    auto* infer = app.add_subcommand("infer", "Acquire repositories and synthesize dependency specs");
    add_pipeline_options(infer, o, true);

    auto* execute = app.add_subcommand("execute", "Build images and execute notebooks for the latest inferred runs");
    add_pipeline_options(execute, o, false);

    auto* compare = app.add_subcommand("compare", "Compare executed notebooks against their committed outputs");
    add_pipeline_options(compare, o, false);

    auto* report = app.add_subcommand("report", "Write corpus-level reports from the store");
    add_store_options(report, o);

    auto* classify = app.add_subcommand("classify", "Assign outcome classes against a baseline CSV");
    add_store_options(classify, o);
    classify->add_option("--baseline", o.baseline, "Baseline CSV (notebook_id,baseline_status,...)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(pipeline::ExitCode::Fatal);
    }

    try {
        auto& c = o.config;
        c.inputs = pipeline::expand_inputs(o.inputs);
        c.build_timeout = std::chrono::seconds(o.build_timeout);
        c.exec_timeout = std::chrono::seconds(o.exec_timeout);
        c.scan_magic_installs = o.scan_magic_installs;
        if (!o.alias_table.empty()) c.alias_table = fs::path(o.alias_table);
        if (!o.baseline.empty()) c.baseline = fs::path(o.baseline);
        if ((run->parsed() || infer->parsed()) && c.inputs.empty()) throw ConfigError("--input named no repositories");

        const bool consumes_state = execute->parsed() || compare->parsed() || report->parsed() || classify->parsed();
        std::error_code ec;
        if (consumes_state && !fs::exists(c.store_path, ec))
            throw PrerequisiteError("store " + c.store_path.string() + " does not exist; run `nbrepro infer` first");

        std::unique_ptr<containerize::ContainerRuntime> runtime;
        if (run->parsed() || execute->parsed()) {
            runtime = open_runtime(o.runtime);
            if (!runtime) std::cerr << "warning: no container runtime available; build and execution are skipped\n";
        }

        store::Store store(c.store_path);
        pipeline::EventLog events(c.log_dir / "events.jsonl");
        pipeline::Pipeline p(c, store, runtime.get(), events);

        if (classify->parsed()) {
            auto r = p.classify(*c.baseline);
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
            std::cout << r.assignments.size() << " notebooks classified (" << r.unmatched_rows
                      << " baseline rows unmatched); outcomes written to " << (c.report_dir / "outcomes.csv").string() << '\n';
            if (r.resolution_rate_pct) std::printf("resolution rate: %.1f%%\n", *r.resolution_rate_pct);
            return 0;
        }
        if (report->parsed()) {
            auto s = p.report();
            std::cout << "report for " << s.repositories << " repositories / " << s.notebooks << " notebooks written to "
                      << c.report_dir.string() << '\n';
            return 0;
        }
        pipeline::StageReport r = run->parsed() ? p.run() : infer->parsed() ? p.infer() : execute->parsed() ? p.execute() : p.compare();
        print_stage(r);
        return static_cast<int>(r.exit_code());
    } catch (const PrerequisiteError& e) {
        std::cerr << "error: " << e.what() << '\n';
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return static_cast<int>(pipeline::ExitCode::Fatal);
}
