#pragma once

#include "nbrepro/compare/compare.hpp"
#include "nbrepro/corpus/types.hpp"
#include "nbrepro/executor/execution.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nbrepro::outcomes {

enum class DependencyInstall { Success, Fail };

struct BaselineRecord {
    std::string notebook_id;
    DependencyInstall prev_dependency_install = DependencyInstall::Success;
    std::string prev_execution_status; // free text: "Success", an exception name, "<Skipping notebook>", ...
    std::optional<int> prev_diff_cells;
    std::optional<double> prev_duration_s;

    bool operator==(const BaselineRecord&) const = default;
};

struct BaselineParse {
    std::vector<BaselineRecord> records;
    std::vector<std::string> warnings; // rejected rows, with line numbers
};

inline constexpr const char* kBaselineHeader =
    "notebook_id,prev_dependency_install,prev_execution_status,prev_diff_cells,prev_duration_s";

// Comma-delimited UTF-8 with the fixed header row; fields may be double-quoted.
// Throws ConfigError when the header does not match.
BaselineParse parse_baseline_csv(std::string_view text);

enum class OutcomeClass { A_EnvironmentResolved, B_PersistentError, C_ReproducibilityDrift, D_Regression, Unclassified };

inline constexpr OutcomeClass kAllOutcomeClasses[] = {
    OutcomeClass::A_EnvironmentResolved, OutcomeClass::B_PersistentError, OutcomeClass::C_ReproducibilityDrift,
    OutcomeClass::D_Regression, OutcomeClass::Unclassified};

std::string_view to_string(OutcomeClass c);
std::optional<OutcomeClass> outcome_class_from_string(std::string_view text);

// What the current run knows about one notebook. Absent execution means the
// notebook never ran (invalid URL, failed build, ...).
struct CurrentResult {
    std::optional<corpus::ProvisioningStatus> provisioning;
    std::optional<executor::ExecutionRecord> execution;
    std::optional<compare::ReproducibilityMetrics> metrics;
};

struct Assignment {
    std::string notebook_id;
    std::string run_id;
    OutcomeClass outcome = OutcomeClass::Unclassified;
    bool baseline_dependency_failure = false;
    std::string rationale;
};

// How far a pipeline got: 0 nothing usable, 1 skipped, 2 ran with errors, 3 success.
int baseline_reach(const BaselineRecord& baseline);
int current_reach(const CurrentResult& current);

// Precedence D > A > B > C. D: the current run got less far than the
// baseline, or a fully reproduced baseline now reproduces no cell. A: the
// baseline failed at dependency installation and the current run executed.
// B: both runs executed with errors. C: the residual for current successes.
Assignment assign_outcome_class(const std::optional<BaselineRecord>& baseline, const CurrentResult& current);

// 100 * |A| / |baseline dependency failures|; nullopt on an empty denominator.
std::optional<double> resolution_rate(std::size_t resolved, std::size_t baseline_failures);
std::optional<double> resolution_rate(const std::vector<Assignment>& assignments);

} // namespace nbrepro::outcomes
