#include "nbrepro/outcomes/outcomes.hpp"

#include "nbrepro/util/error.hpp"
#include "nbrepro/util/text.hpp"

#include <charconv>

namespace nbrepro::outcomes {

namespace {

// Lowercase with spaces, underscores and angle brackets removed.
std::string squash(std::string_view text) {
    std::string out;
    for (char c : util::to_lower(util::trim(text)))
        if (c != ' ' && c != '_' && c != '<' && c != '>' && c != '\t') out.push_back(c);
    return out;
}

bool is_success_label(std::string_view text) {
    auto s = squash(text);
    return s == "success" || s == "sucess" || s == "succeeded" || s == "ok";
}

std::optional<DependencyInstall> parse_install(std::string_view text) {
    auto s = squash(text);
    if (s == "success" || s == "sucess" || s == "succeeded" || s == "true" || s == "1") return DependencyInstall::Success;
    if (s == "fail" || s == "failed" || s == "failure" || s == "false" || s == "0") return DependencyInstall::Fail;
    return std::nullopt;
}

// RFC 4180 fields of one record; `pos` advances past the record terminator.
std::vector<std::string> read_record(std::string_view text, std::size_t& pos, bool& malformed) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false, in_quotes = false;
    malformed = false;
    while (pos < text.size()) {
        char c = text[pos];
        if (in_quotes) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field.push_back('"');
                    pos += 2;
                    continue;
                }
                in_quotes = false;
                ++pos;
                continue;
            }
            field.push_back(c);
            ++pos;
            continue;
        }
        if (c == '"' && field.empty() && !quoted) {
            quoted = in_quotes = true;
            ++pos;
            continue;
        }
        if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            quoted = false;
            ++pos;
            continue;
        }
        if (c == '\r' || c == '\n') {
            if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
            ++pos;
            fields.push_back(std::move(field));
            return fields;
        }
        if (quoted) malformed = true;
        field.push_back(c);
        ++pos;
    }
    if (in_quotes) malformed = true;
    fields.push_back(std::move(field));
    return fields;
}

} // namespace

BaselineParse parse_baseline_csv(std::string_view text) {
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    BaselineParse out;
    std::size_t pos = 0;
    bool malformed = false;
    auto header = read_record(text, pos, malformed);
    std::string joined;
    for (std::size_t i = 0; i < header.size(); ++i) joined += (i ? "," : "") + std::string(util::trim(header[i]));
    if (joined != kBaselineHeader) throw ConfigError("baseline header must be '" + std::string(kBaselineHeader) + "'");

    int line = 1;
    while (pos < text.size()) {
        ++line;
        auto fields = read_record(text, pos, malformed);
        if (fields.size() == 1 && util::trim(fields[0]).empty()) continue;
        auto reject = [&](const std::string& why) {
            out.warnings.push_back("baseline line " + std::to_string(line) + ": " + why);
        };
        if (malformed) {
            reject("malformed quoting");
            continue;
        }
        if (fields.size() != 5) {
            reject("expected 5 fields, got " + std::to_string(fields.size()));
            continue;
        }
        BaselineRecord r;
        r.notebook_id = std::string(util::trim(fields[0]));
        if (r.notebook_id.empty()) {
            reject("empty notebook_id");
            continue;
        }
        auto install = parse_install(fields[1]);
        if (!install) {
            reject("unrecognized prev_dependency_install '" + fields[1] + "'");
            continue;
        }
        r.prev_dependency_install = *install;
        r.prev_execution_status = std::string(util::trim(fields[2]));
        // "-" marks a missing value, as in the published tables.
        auto diff = util::trim(fields[3]);
        if (!diff.empty() && diff != "-") {
            int v = 0;
            auto [p, ec] = std::from_chars(diff.data(), diff.data() + diff.size(), v);
            if (ec != std::errc() || p != diff.data() + diff.size() || v < 0) {
                reject("invalid prev_diff_cells '" + std::string(diff) + "'");
                continue;
            }
            r.prev_diff_cells = v;
        }
        auto dur = std::string(util::trim(fields[4]));
        if (!dur.empty() && dur != "-") {
            try {
                std::size_t used = 0;
                double v = std::stod(dur, &used);
                if (used != dur.size() || v < 0) throw std::invalid_argument(dur);
                r.prev_duration_s = v;
            } catch (const std::exception&) {
                reject("invalid prev_duration_s '" + dur + "'");
                continue;
            }
        }
        out.records.push_back(std::move(r));
    }
    return out;
}

std::string_view to_string(OutcomeClass c) {
    switch (c) {
    case OutcomeClass::A_EnvironmentResolved: return "A_EnvironmentResolved";
    case OutcomeClass::B_PersistentError: return "B_PersistentError";
    case OutcomeClass::C_ReproducibilityDrift: return "C_ReproducibilityDrift";
    case OutcomeClass::D_Regression: return "D_Regression";
    case OutcomeClass::Unclassified: return "Unclassified";
    }
    return "Unclassified";
}

std::optional<OutcomeClass> outcome_class_from_string(std::string_view text) {
    for (auto c : kAllOutcomeClasses)
        if (to_string(c) == text) return c;
    return std::nullopt;
}

int baseline_reach(const BaselineRecord& b) {
    const auto status = squash(b.prev_execution_status);
    if (b.prev_dependency_install == DependencyInstall::Fail || status == "installdependencyerror") return 0;
    if (status.find("skip") != std::string::npos) return 1;
    if (is_success_label(b.prev_execution_status)) return 3;
    return 2;
}

int current_reach(const CurrentResult& c) {
    if (c.provisioning && *c.provisioning != corpus::ProvisioningStatus::EnvironmentBuilt) return 0;
    if (!c.execution) return 0;
    switch (c.execution->status) {
    case executor::ExecutionStatus::Success: return 3;
    case executor::ExecutionStatus::ErroredButCompleted: return 2;
    default: return 0;
    }
}

Assignment assign_outcome_class(const std::optional<BaselineRecord>& baseline, const CurrentResult& current) {
    Assignment a;
    if (current.execution) {
        a.notebook_id = current.execution->notebook_id;
        a.run_id = current.execution->run_id;
    }
    if (!baseline) {
        a.rationale = "no baseline record";
        return a;
    }
    a.notebook_id = baseline->notebook_id;
    const int prev = baseline_reach(*baseline);
    const int now = current_reach(current);
    a.baseline_dependency_failure = prev == 0;

    if (now == 0) {
        a.outcome = OutcomeClass::D_Regression;
        a.rationale = "current run produced no executed notebook";
        return a;
    }
    if (now == 2 && (prev == 1 || prev == 3)) {
        a.outcome = OutcomeClass::D_Regression;
        a.rationale = "current run raises errors the baseline did not";
        return a;
    }
    const bool collapsed = prev == 3 && baseline->prev_diff_cells == 0 && now == 3 && current.metrics &&
                           current.metrics->score && *current.metrics->score == 0.0;
    if (collapsed) {
        a.outcome = OutcomeClass::D_Regression;
        a.rationale = "fully reproduced baseline now matches no cell";
        return a;
    }
    if (prev == 0) {
        a.outcome = OutcomeClass::A_EnvironmentResolved;
        a.rationale = "baseline dependency installation failed; current run executed";
        return a;
    }
    if (now == 2) {
        a.outcome = OutcomeClass::B_PersistentError;
        bool same = false;
        const auto prev_type = squash(baseline->prev_execution_status);
        for (const auto& e : current.execution->errors) same = same || squash(e.error_type) == prev_type;
        a.rationale = same ? "same error type in both runs" : "errors in both runs with differing types";
        return a;
    }
    a.outcome = OutcomeClass::C_ReproducibilityDrift;
    if (current.metrics && current.metrics->score)
        a.rationale = "executed successfully; " + std::to_string(current.metrics->different_count + current.metrics->nondeterministic_count) +
                      " differing cells";
    else
        a.rationale = "executed successfully; outputs not scored";
    return a;
}

std::optional<double> resolution_rate(std::size_t resolved, std::size_t baseline_failures) {
    if (baseline_failures == 0) return std::nullopt;
    return 100.0 * static_cast<double>(resolved) / static_cast<double>(baseline_failures);
}

std::optional<double> resolution_rate(const std::vector<Assignment>& assignments) {
    std::size_t resolved = 0, failures = 0;
    for (const auto& a : assignments) {
        if (!a.baseline_dependency_failure) continue;
        ++failures;
        if (a.outcome == OutcomeClass::A_EnvironmentResolved) ++resolved;
    }
    return resolution_rate(resolved, failures);
}

} // namespace nbrepro::outcomes
