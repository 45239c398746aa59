#pragma once

#include "nbrepro/compare/compare.hpp"
#include "nbrepro/corpus/types.hpp"
#include "nbrepro/depinfer/requirements.hpp"
#include "nbrepro/executor/execution.hpp"
#include "nbrepro/outcomes/outcomes.hpp"
#include "nbrepro/util/error.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

struct sqlite3;

// Single-file relational tracking store. Every public member is serialized
// through one mutex, so a Store may be shared by the worker pool.
namespace nbrepro::store {

class StoreError : public Error {
public:
    using Error::Error;
};

struct NotebookRow {
    corpus::NotebookDescriptor descriptor;
    int code_cells = 0;
    int markdown_cells = 0;
    int raw_cells = 0;
    // Static: at least one code cell matches a non-determinism pattern.
    bool nondeterministic = false;
    std::vector<std::string> nondeterminism_patterns;

    bool operator==(const NotebookRow&) const = default;
};

struct StoredSpec {
    std::string synthesized_manifest;
    std::string dockerfile;
    std::vector<depinfer::PackageRequirement> requirements;
    std::vector<std::string> warnings;

    bool operator==(const StoredSpec&) const = default;
};

inline constexpr int kSchemaVersion = 1;

class Store {
public:
    explicit Store(const std::filesystem::path& file);
    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    const std::filesystem::path& path() const { return path_; }

    void upsert_repository(const corpus::Repository& repo);
    // Makes the notebook set of a repository equal to `rows` (rows for
    // vanished files are removed with their results) and updates
    // notebook_count accordingly.
    void replace_notebooks(const std::string& repository_id, const std::vector<NotebookRow>& rows);
    // Insert or update by run_id. Throws StoreError when another run of the
    // same repository already exists for the invocation.
    void save_run(const corpus::RunRecord& run);
    void save_dependency_spec(const std::string& run_id, const StoredSpec& spec);
    void save_execution(const executor::ExecutionRecord& record);
    void save_metrics(const compare::ReproducibilityMetrics& metrics);
    void replace_baseline(const std::vector<outcomes::BaselineRecord>& records);
    void save_assignments(const std::vector<outcomes::Assignment>& assignments);

    std::optional<corpus::Repository> repository(const std::string& repository_id);
    std::vector<corpus::Repository> repositories();
    std::vector<NotebookRow> notebooks(const std::string& repository_id);
    std::optional<NotebookRow> notebook(const std::string& notebook_id);

    std::optional<corpus::RunRecord> run(const std::string& run_id);
    std::vector<corpus::RunRecord> runs_for_invocation(const std::string& invocation_id);
    std::optional<std::string> latest_invocation();
    // Most recent run per repository.
    std::vector<corpus::RunRecord> latest_runs();
    std::size_t run_count();

    std::optional<StoredSpec> dependency_spec(const std::string& run_id);
    std::vector<executor::ExecutionRecord> executions(const std::string& run_id);
    std::optional<executor::ExecutionRecord> execution(const std::string& notebook_id, const std::string& run_id);
    std::optional<compare::ReproducibilityMetrics> metrics(const std::string& notebook_id, const std::string& run_id);
    std::vector<compare::ReproducibilityMetrics> metrics_for_run(const std::string& run_id);
    std::vector<outcomes::BaselineRecord> baseline();
    std::vector<outcomes::Assignment> assignments(const std::string& run_id);

    // Rows violating referential integrity across all tables (0 when consistent).
    std::size_t integrity_violations();

private:
    void exec(const char* sql);

    std::filesystem::path path_;
    sqlite3* db_ = nullptr;
    std::mutex mutex_;
};

} // namespace nbrepro::store
