#include "nbrepro/executor/execution.hpp"

#include <algorithm>
#include <map>

namespace nbrepro::executor {

std::string_view to_string(ExecutionStatus s) {
    switch (s) {
    case ExecutionStatus::Success: return "Success";
    case ExecutionStatus::ErroredButCompleted: return "ErroredButCompleted";
    case ExecutionStatus::KernelNotFound: return "KernelNotFound";
    case ExecutionStatus::NotebookNotFound: return "NotebookNotFound";
    case ExecutionStatus::Timeout: return "Timeout";
    case ExecutionStatus::Skipped: return "Skipped";
    }
    return "Skipped";
}

std::string_view to_string(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::Dependency: return "Dependency";
    case ErrorCategory::Data: return "Data";
    case ErrorCategory::Code: return "Code";
    case ErrorCategory::Logic: return "Logic";
    }
    return "Logic";
}

std::optional<ExecutionStatus> execution_status_from_string(std::string_view text) {
    for (auto s : kAllExecutionStatuses)
        if (to_string(s) == text) return s;
    return std::nullopt;
}

std::optional<ErrorCategory> error_category_from_string(std::string_view text) {
    for (auto c : kAllErrorCategories)
        if (to_string(c) == text) return c;
    return std::nullopt;
}

ErrorClassification classify_error(std::string_view error_type, std::string_view /*message*/) {
    static const std::map<std::string, ErrorCategory, std::less<>> table{
        {"ModuleNotFoundError", ErrorCategory::Dependency},
        {"ImportError", ErrorCategory::Dependency},
        {"InstallDependencyError", ErrorCategory::Dependency},
        {"FileNotFoundError", ErrorCategory::Data},
        {"PermissionError", ErrorCategory::Data},
        {"SyntaxError", ErrorCategory::Code},
        {"TypeError", ErrorCategory::Code},
        {"AttributeError", ErrorCategory::Code},
        {"NameError", ErrorCategory::Logic},
        {"ValueError", ErrorCategory::Logic},
        {"KeyError", ErrorCategory::Logic},
    };
    std::string key;
    for (char c : error_type)
        if (c != ' ' && c != '\t') key.push_back(c);
    // Qualified names such as "requests.exceptions.HTTPError" match on their last component.
    if (auto dot = key.rfind('.'); dot != std::string::npos && !table.count(key)) key = key.substr(dot + 1);
    if (auto it = table.find(key); it != table.end()) return {it->second, true};
    return {ErrorCategory::Logic, false};
}

namespace {

std::string first_line(const std::string& text) {
    auto nl = text.find('\n');
    std::string line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

} // namespace

std::vector<ExecutionError> extract_errors(const notebook::ParsedNotebook& executed) {
    std::vector<ExecutionError> out;
    int code_index = -1;
    for (const auto& cell : executed.cells) {
        if (cell.kind != notebook::CellKind::Code) continue;
        ++code_index;
        const std::size_t cell_start = out.size();
        for (const auto& o : cell.outputs) {
            if (o.output_type != notebook::OutputType::Error) continue;
            auto dup = std::find_if(out.begin() + static_cast<std::ptrdiff_t>(cell_start), out.end(),
                                    [&](const ExecutionError& e) { return e.error_type == o.error_name; });
            if (dup != out.end()) {
                ++dup->count;
                continue;
            }
            ExecutionError e;
            e.error_type = o.error_name;
            auto cls = classify_error(o.error_name, o.error_value);
            e.category = cls.category;
            e.unrecognized = !cls.recognized;
            e.message = first_line(o.error_value);
            e.cell_index = code_index;
            out.push_back(std::move(e));
        }
    }
    return out;
}

} // namespace nbrepro::executor
