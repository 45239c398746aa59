#pragma once

#include "nbrepro/containerize/build.hpp"
#include "nbrepro/containerize/runtime.hpp"
#include "nbrepro/corpus/types.hpp"
#include "nbrepro/executor/execution.hpp"
#include "nbrepro/notebook/notebook.hpp"

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nbrepro::executor {

struct ExecuteOptions {
    std::chrono::seconds timeout{600};
    std::optional<double> cpus = 2.0;
    std::optional<std::string> memory = std::string("4g");
    std::string fallback_kernel = "python3";
    std::filesystem::path artifacts_root; // artifacts land in <root>/<run_id>/<relative_path>
    std::filesystem::path log_root;       // logs land in <root>/<run_id>/<notebook_id>.execution.log
};

inline constexpr const char* kContainerOutputDir = "/tmp/nbrepro-out";
inline constexpr const char* kContainerOutputStem = "executed";

// nbconvert invocation executed inside the container from the notebook's directory.
std::vector<std::string> nbconvert_command(const std::string& notebook_file,
                                           const std::optional<std::string>& kernel_override);

bool log_reports_missing_kernel(std::string_view log);
bool log_reports_missing_notebook(std::string_view log);
// Exception name of the last "pkg.module.SomeError: message" line, if any.
std::optional<ExecutionError> crash_error_from_log(std::string_view log);

std::filesystem::path artifact_path(const ExecuteOptions& options, const std::string& run_id,
                                    const corpus::NotebookDescriptor& nb);
std::filesystem::path execution_log_path(const ExecuteOptions& options, const std::string& run_id,
                                         const corpus::NotebookDescriptor& nb);

// Runs one notebook in a fresh container of `image`, copies the executed
// notebook out and derives status and errors. `original` supplies the
// structural counts. Throws containerize::RuntimeError when the runtime
// refuses to create containers.
ExecutionRecord execute_notebook(containerize::ContainerRuntime& runtime, const containerize::ImageRef& image,
                                 const corpus::NotebookDescriptor& nb, const notebook::ParsedNotebook* original,
                                 const std::string& run_id, const ExecuteOptions& options);

ExecutionRecord skipped_record(const corpus::NotebookDescriptor& nb, const notebook::ParsedNotebook* original,
                               const std::string& run_id, std::string reason);

} // namespace nbrepro::executor
