#pragma once

#include "nbrepro/compare/compare.hpp"
#include "nbrepro/corpus/types.hpp"
#include "nbrepro/executor/execution.hpp"
#include "nbrepro/outcomes/outcomes.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nbrepro::store {
class Store;
}

namespace nbrepro::report {

inline constexpr const char* kSchemaVersion = "nbrepro.report/1";
// Provisioning bucket for repositories whose latest run never reached a provisioning decision.
inline constexpr const char* kPending = "Pending";

struct RepositoryFacts {
    corpus::Repository repository;
    std::optional<corpus::RunRecord> run; // latest run
};

struct NotebookFacts {
    std::string notebook_id;
    std::string repository_id;
    bool nondeterministic = false;
    std::optional<executor::ExecutionRecord> execution; // from the repository's latest run
    std::optional<compare::ReproducibilityMetrics> metrics;
};

// Everything aggregation reads, detached from the store.
struct CorpusSnapshot {
    std::vector<RepositoryFacts> repositories;
    std::vector<NotebookFacts> notebooks;
    std::vector<outcomes::BaselineRecord> baseline;
    std::vector<outcomes::Assignment> assignments;
};

struct StratumRate {
    long long notebooks = 0;
    long long successes = 0;
    std::optional<double> rate_pct; // unset for an empty stratum

    bool operator==(const StratumRate&) const = default;
};

struct RequirementsSplit {
    StratumRate with_req;
    StratumRate without_req;

    bool operator==(const RequirementsSplit&) const = default;
};

struct StratumScore {
    long long notebooks = 0;
    long long scored = 0;
    std::optional<double> mean_scored;   // over scored notebooks
    std::optional<double> mean_all;      // unscored notebooks count as 0

    bool operator==(const StratumScore&) const = default;
};

using Histogram = std::map<std::string, long long>;

struct CorpusSummary {
    std::string schema_version = kSchemaVersion;
    std::string generated_at;

    long long repositories = 0;
    long long repositories_with_requirements = 0;
    long long repositories_without_requirements = 0;
    Histogram provisioning; // every ProvisioningStatus plus Pending; sums to repositories

    long long notebooks = 0;
    long long notebooks_zero_errors = 0;   // status Success
    long long notebooks_with_errors = 0;   // everything else
    Histogram execution_status;            // sums to notebooks
    Histogram error_types;                 // first error (or status) per non-success notebook; sums to notebooks_with_errors
    Histogram error_categories;            // category of that first error; sums to notebooks_with_errors

    long long baseline_records = 0;
    long long baseline_unmatched = 0;
    long long baseline_errored = 0;
    Histogram baseline_error_types; // sums to baseline_errored

    RequirementsSplit success_containerized;
    RequirementsSplit success_baseline;
    StratumScore score_with_req;
    StratumScore score_without_req;

    Histogram score_categories; // every ScoreCategory; sums to notebooks
    long long nondeterministic_notebooks = 0;
    std::optional<double> nondeterminism_prevalence;

    Histogram outcome_classes; // every OutcomeClass; sums to classified_notebooks
    long long classified_notebooks = 0;
    long long resolution_resolved = 0;
    long long resolution_denominator = 0;
    std::optional<double> resolution_rate_pct;

    bool operator==(const CorpusSummary&) const = default;
};

CorpusSnapshot snapshot_store(store::Store& store);

CorpusSummary aggregate(const CorpusSnapshot& snapshot);
CorpusSummary aggregate_corpus(store::Store& store);

std::map<std::string, RequirementsSplit> success_rate_by_requirements(const CorpusSnapshot& snapshot);
std::optional<double> nondeterminism_prevalence(const CorpusSnapshot& snapshot);

// Human-readable list of violated sum invariants; empty when consistent.
std::vector<std::string> check_invariants(const CorpusSummary& summary);

nlohmann::json to_json(const CorpusSummary& summary);
// Throws ConfigError on an unknown schema_version.
CorpusSummary summary_from_json(const nlohmann::json& document);

std::string render_csv(const CorpusSummary& summary);
std::string render_markdown(const CorpusSummary& summary);

// Writes report.json, summary.csv and summary.md into dir. Throws Error when
// the directory cannot be written.
void emit_reports(const CorpusSummary& summary, const std::filesystem::path& dir);

} // namespace nbrepro::report
