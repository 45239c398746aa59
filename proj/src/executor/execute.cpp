#include "nbrepro/executor/execute.hpp"

#include "nbrepro/util/text.hpp"

#include <regex>

namespace nbrepro::executor {

namespace fs = std::filesystem;

std::vector<std::string> nbconvert_command(const std::string& notebook_file,
                                           const std::optional<std::string>& kernel_override) {
    std::vector<std::string> cmd{"jupyter",
                                 "nbconvert",
                                 "--to",
                                 "notebook",
                                 "--execute",
                                 "--allow-errors",
                                 "--ExecutePreprocessor.timeout=-1",
                                 "--output-dir",
                                 kContainerOutputDir,
                                 "--output",
                                 kContainerOutputStem};
    if (kernel_override) cmd.push_back("--ExecutePreprocessor.kernel_name=" + *kernel_override);
    cmd.push_back(notebook_file);
    return cmd;
}

bool log_reports_missing_kernel(std::string_view log) {
    return log.find("NoSuchKernel") != std::string_view::npos || log.find("No such kernel") != std::string_view::npos;
}

bool log_reports_missing_notebook(std::string_view log) {
    return log.find("matched no files") != std::string_view::npos;
}

namespace {

bool kernel_failed_to_start(std::string_view log) {
    return log_reports_missing_kernel(log) || log.find("Kernel didn't respond") != std::string_view::npos ||
           log.find("Kernel died before replying to kernel_info") != std::string_view::npos;
}

} // namespace

std::optional<ExecutionError> crash_error_from_log(std::string_view log) {
    static const std::regex exc_line(R"(^([A-Za-z_][\w.]*(?:Error|Exception|Exit|Interrupt))(?::\s*(.*))?$)");
    std::optional<ExecutionError> last;
    for (const auto& raw : util::split_lines(log)) {
        std::string line(util::trim(raw));
        std::smatch m;
        if (!std::regex_match(line, m, exc_line)) continue;
        std::string name = m[1].str();
        if (auto dot = name.rfind('.'); dot != std::string::npos) name = name.substr(dot + 1);
        ExecutionError e;
        e.error_type = name;
        e.message = m[2].matched ? m[2].str() : std::string();
        auto cls = classify_error(name);
        e.category = cls.category;
        e.unrecognized = !cls.recognized;
        last = std::move(e);
    }
    return last;
}

fs::path artifact_path(const ExecuteOptions& options, const std::string& run_id, const corpus::NotebookDescriptor& nb) {
    return options.artifacts_root / run_id / fs::path(nb.relative_path);
}

fs::path execution_log_path(const ExecuteOptions& options, const std::string& run_id,
                            const corpus::NotebookDescriptor& nb) {
    return options.log_root / run_id / (nb.notebook_id + ".execution.log");
}

namespace {

void fill_structure(ExecutionRecord& rec, const notebook::ParsedNotebook* original) {
    if (!original) return;
    rec.code_cell_count = static_cast<int>(notebook::count_cells(*original, notebook::CellKind::Code));
    rec.markdown_code_ratio = notebook::markdown_code_ratio(*original);
}

struct Attempt {
    util::ProcessResult result;
    bool artifact = false;
};

} // namespace

ExecutionRecord skipped_record(const corpus::NotebookDescriptor& nb, const notebook::ParsedNotebook* original,
                               const std::string& run_id, std::string reason) {
    ExecutionRecord rec;
    rec.notebook_id = nb.notebook_id;
    rec.run_id = run_id;
    rec.status = ExecutionStatus::Skipped;
    rec.status_reason = std::move(reason);
    fill_structure(rec, original);
    return rec;
}

ExecutionRecord execute_notebook(containerize::ContainerRuntime& runtime, const containerize::ImageRef& image,
                                 const corpus::NotebookDescriptor& nb, const notebook::ParsedNotebook* original,
                                 const std::string& run_id, const ExecuteOptions& options) {
    ExecutionRecord rec;
    rec.notebook_id = nb.notebook_id;
    rec.run_id = run_id;
    fill_structure(rec, original);

    const fs::path rel(nb.relative_path);
    const std::string in_image = std::string(containerize::kImageWorkdir) + "/" + nb.relative_path;
    const std::string workdir = fs::path(in_image).parent_path().generic_string();
    const auto log_file = execution_log_path(options, run_id, nb);
    const auto artifact = artifact_path(options, run_id, nb);
    util::write_file(log_file, "");
    std::error_code ec;
    fs::remove(artifact, ec);

    const std::string container = "nbrepro-" + run_id + "-" + nb.notebook_id;
    auto attempt = [&](const std::optional<std::string>& kernel) {
        containerize::ContainerSpec spec;
        spec.name = container;
        spec.image = image.tag;
        spec.workdir = workdir;
        spec.command = nbconvert_command(rel.filename().string(), kernel);
        spec.labels = {{containerize::kRepositoryLabel, nb.repository_id}, {containerize::kRunLabel, run_id}};
        spec.cpus = options.cpus;
        spec.memory = options.memory;

        runtime.remove_container(container);
        auto created = runtime.create(spec);
        if (!created.ok())
            throw containerize::RuntimeError("cannot create container " + container + ": " +
                                             std::string(util::trim(created.output)));
        Attempt a;
        a.result = runtime.start_attached(container, log_file, options.timeout);
        if (!a.result.timed_out) {
            auto copied = runtime.copy_from(container, std::string(kContainerOutputDir) + "/" + kContainerOutputStem + ".ipynb",
                                            artifact);
            a.artifact = copied.ok() && fs::exists(artifact, ec);
        }
        runtime.remove_container(container);
        return a;
    };

    auto first = attempt(std::nullopt);
    double elapsed = first.result.elapsed_s;
    Attempt final_attempt = first;
    bool kernel_retry = false;
    if (!first.result.timed_out && !first.artifact && log_reports_missing_kernel(first.result.output)) {
        kernel_retry = true;
        final_attempt = attempt(options.fallback_kernel);
        elapsed += final_attempt.result.elapsed_s;
    }
    rec.duration_s = elapsed;
    const auto& out = final_attempt.result.output;

    if (final_attempt.result.timed_out) {
        rec.status = ExecutionStatus::Timeout;
        rec.status_reason = "execution exceeded " + std::to_string(options.timeout.count()) + " s";
        return rec;
    }
    if (!final_attempt.artifact) {
        if (log_reports_missing_notebook(out)) {
            rec.status = ExecutionStatus::NotebookNotFound;
            rec.status_reason = "notebook path missing in image: " + in_image;
        } else if (kernel_retry && kernel_failed_to_start(out)) {
            rec.status = ExecutionStatus::KernelNotFound;
            rec.status_reason = "kernel '" + nb.kernel_name + "' unavailable; fallback '" + options.fallback_kernel +
                                "' did not start";
        } else {
            rec.status = ExecutionStatus::ErroredButCompleted;
            rec.status_reason = "no executed notebook produced (exit code " +
                                std::to_string(final_attempt.result.exit_code) + ")";
            auto crash = crash_error_from_log(out);
            if (!crash) {
                crash = ExecutionError{};
                crash->error_type = "ExecutionFailure";
                crash->unrecognized = true;
                crash->message = containerize::log_tail(out, 1);
            }
            rec.errors.push_back(std::move(*crash));
        }
        return rec;
    }

    rec.executed_notebook_path = artifact.string();
    if (kernel_retry) rec.status_reason = "kernel '" + nb.kernel_name + "' replaced by '" + options.fallback_kernel + "'";
    try {
        auto executed = notebook::parse_notebook(util::read_file(artifact));
        rec.errors = extract_errors(executed);
    } catch (const std::exception& e) {
        ExecutionError err;
        err.error_type = "ArtifactParseError";
        err.unrecognized = true;
        err.message = e.what();
        rec.errors.push_back(std::move(err));
    }
    rec.status = rec.errors.empty() ? ExecutionStatus::Success : ExecutionStatus::ErroredButCompleted;
    return rec;
}

} // namespace nbrepro::executor
