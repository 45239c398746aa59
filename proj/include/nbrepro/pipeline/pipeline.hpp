#pragma once

#include "nbrepro/containerize/runtime.hpp"
#include "nbrepro/corpus/types.hpp"
#include "nbrepro/depinfer/imports.hpp"
#include "nbrepro/report/report.hpp"
#include "nbrepro/store/store.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace nbrepro::pipeline {

struct PipelineConfig {
    std::vector<std::string> inputs; // URLs or local directories
    std::filesystem::path store_path = "nbrepro.sqlite";
    std::filesystem::path log_dir = "nbrepro-logs";
    std::filesystem::path artifacts_dir = "nbrepro-artifacts";
    std::filesystem::path report_dir = "nbrepro-report";
    int jobs = 1;
    std::chrono::seconds build_timeout{1200};
    std::chrono::seconds exec_timeout{600};
    std::chrono::seconds probe_timeout{30};
    int probe_attempts = 3;
    std::string base_image = "python:3.10-slim";
    std::optional<std::filesystem::path> alias_table;
    std::optional<std::filesystem::path> baseline;
    bool scan_magic_installs = true;
    std::optional<double> cpus = 2.0;
    std::optional<std::string> memory = std::string("4g");
    bool keep_images = false;
};

// Throws ConfigError describing the first invalid field.
void validate_config(const PipelineConfig& config);

// Expands --input values: a regular file is read as a list (one entry per
// line, '#' comments); anything else is taken verbatim.
std::vector<std::string> expand_inputs(const std::vector<std::string>& values);

// Line-delimited JSON event records, one object per line.
class EventLog {
public:
    explicit EventLog(const std::filesystem::path& file);
    void emit(const std::string& event, nlohmann::json fields = nlohmann::json::object());

private:
    std::mutex mutex_;
    std::ofstream out_;
};

enum class ExitCode : int { Complete = 0, Fatal = 1, Partial = 2 };

struct StageReport {
    std::string invocation_id;
    std::vector<corpus::RunRecord> runs;
    // Repositories whose later stages were skipped (no container runtime,
    // probe or clone failing transiently).
    std::vector<std::string> incomplete;
    // Repositories aborted by an internal error.
    std::vector<std::string> failed;
    std::vector<std::string> messages;

    ExitCode exit_code() const;
};

struct ClassifyReport {
    std::size_t baseline_rows = 0;
    std::size_t unmatched_rows = 0;
    std::vector<outcomes::Assignment> assignments;
    std::vector<std::string> warnings;
    std::optional<double> resolution_rate_pct;
};

class Pipeline {
public:
    // `runtime` may be null: stages 3 and 4 are then skipped with an explicit status.
    Pipeline(PipelineConfig config, store::Store& store, containerize::ContainerRuntime* runtime, EventLog& events);

    StageReport run();
    StageReport infer();
    // Consume the latest invocation's state. Throw PrerequisiteError naming
    // the subcommand that has to run first.
    StageReport execute();
    StageReport compare();
    ClassifyReport classify(const std::filesystem::path& baseline_file);
    report::CorpusSummary report();

private:
    enum class Through { Inferred, Compared };

    StageReport over_inputs(Through through);
    StageReport over_runs(corpus::RunStage wanted, bool compare_stage);
    corpus::RunRecord process_input(const std::string& input, const std::string& invocation, Through through,
                                    StageReport& report, std::mutex& report_mutex);
    void do_infer(corpus::RunRecord& run, const corpus::Repository& repo);
    bool do_execute(corpus::RunRecord& run);
    void do_compare(corpus::RunRecord& run);
    void finish(corpus::RunRecord& run);
    void emit(const corpus::RunRecord& run, const std::string& event, nlohmann::json fields = nlohmann::json::object());

    PipelineConfig config_;
    store::Store& store_;
    containerize::ContainerRuntime* runtime_;
    EventLog& events_;
    depinfer::AliasTable aliases_;
};

} // namespace nbrepro::pipeline
