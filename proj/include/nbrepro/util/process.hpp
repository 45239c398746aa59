#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nbrepro::util {

struct ProcessOptions {
    std::optional<std::filesystem::path> working_dir;
    // Combined stdout/stderr is appended here as it arrives, in addition to
    // being returned in ProcessResult::output.
    std::optional<std::filesystem::path> log_file;
    // Zero disables the wall-clock bound.
    std::chrono::milliseconds timeout{0};
    std::vector<std::pair<std::string, std::string>> extra_env;
};

struct ProcessResult {
    int exit_code = -1; // -1 when killed by a signal or never started
    bool timed_out = false;
    bool launch_failed = false;
    std::string output;
    double elapsed_s = 0.0;

    bool ok() const { return !launch_failed && !timed_out && exit_code == 0; }
};

// Runs argv[0] (resolved via PATH) with stdin closed. On timeout the whole
// process group is killed.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options = {});

bool executable_on_path(const std::string& name);

// Injection point for code that shells out, so tests can script the responses.
using CommandRunner = std::function<ProcessResult(const std::vector<std::string>&, const ProcessOptions&)>;

} // namespace nbrepro::util
