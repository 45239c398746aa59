#pragma once

#include "nbrepro/notebook/notebook.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nbrepro::executor {

enum class ExecutionStatus { Success, ErroredButCompleted, KernelNotFound, NotebookNotFound, Timeout, Skipped };
enum class ErrorCategory { Dependency, Data, Code, Logic };

inline constexpr ExecutionStatus kAllExecutionStatuses[] = {
    ExecutionStatus::Success,          ExecutionStatus::ErroredButCompleted, ExecutionStatus::KernelNotFound,
    ExecutionStatus::NotebookNotFound, ExecutionStatus::Timeout,             ExecutionStatus::Skipped};
inline constexpr ErrorCategory kAllErrorCategories[] = {ErrorCategory::Dependency, ErrorCategory::Data,
                                                        ErrorCategory::Code, ErrorCategory::Logic};

std::string_view to_string(ExecutionStatus s);
std::string_view to_string(ErrorCategory c);
std::optional<ExecutionStatus> execution_status_from_string(std::string_view text);
std::optional<ErrorCategory> error_category_from_string(std::string_view text);

struct ExecutionError {
    std::string error_type;
    ErrorCategory category = ErrorCategory::Logic;
    std::string message; // first line of the error value
    // Code-cell position; unset for failures outside any cell (kernel death, crash).
    std::optional<int> cell_index;
    int count = 1;
    bool unrecognized = false; // error_type not in the classification table

    bool operator==(const ExecutionError&) const = default;
};

struct ExecutionRecord {
    std::string notebook_id;
    std::string run_id;
    ExecutionStatus status = ExecutionStatus::Skipped;
    std::string status_reason;
    std::optional<double> duration_s; // absent only for Skipped
    int code_cell_count = 0;
    std::optional<double> markdown_code_ratio;
    std::vector<ExecutionError> errors;
    std::string executed_notebook_path; // empty when no artifact was captured

    bool operator==(const ExecutionRecord&) const = default;
};

struct ErrorClassification {
    ErrorCategory category = ErrorCategory::Logic;
    bool recognized = true;
};

// Table lookup on the exception name; spaces are ignored so labels such as
// "File Not Found Error" resolve too. Unknown names fall back to Logic
// (recognized = false).
ErrorClassification classify_error(std::string_view error_type, std::string_view message = {});

// One entry per (error_type, code-cell index) with an Error output; count
// sums repeats. Ordered by cell, then by first appearance.
std::vector<ExecutionError> extract_errors(const notebook::ParsedNotebook& executed);

} // namespace nbrepro::executor
