#pragma once

#include "nbrepro/notebook/notebook.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Cell-level comparison of committed notebook outputs against re-executed ones.
namespace nbrepro::compare {

enum class Verdict { Identical, Different, NonDeterministic };

// Poor [0,0.2) Low [0.2,0.4) Moderate [0.4,0.6) Good [0.6,0.8) High [0.8,1) Perfect {1}
enum class ScoreCategory { Poor, Low, Moderate, Good, High, Perfect, Unscored };

inline constexpr ScoreCategory kAllScoreCategories[] = {ScoreCategory::Poor,     ScoreCategory::Low,
                                                        ScoreCategory::Moderate, ScoreCategory::Good,
                                                        ScoreCategory::High,     ScoreCategory::Perfect,
                                                        ScoreCategory::Unscored};

std::string_view to_string(Verdict v);
std::string_view to_string(ScoreCategory c);

struct NondeterminismMatch {
    bool detected = false;
    std::vector<std::string> patterns; // names from nondeterminism_patterns(), in that order
};

struct CellComparison {
    std::size_t cell_index = 0; // code-cell position
    Verdict verdict = Verdict::Identical;
    std::vector<std::string> matched_patterns; // non-empty iff NonDeterministic

    bool operator==(const CellComparison&) const = default;
};

struct ReproducibilityMetrics {
    std::string notebook_id;
    std::string run_id;
    int identical_count = 0;
    int different_count = 0;
    int nondeterministic_count = 0;
    std::vector<int> identical_indices;
    std::vector<int> different_indices;
    std::vector<int> nondeterministic_indices;
    int total_code_cells = 0;
    // identical_count / total_code_cells; unset for zero code cells or a
    // structural mismatch.
    std::optional<double> score;
    // Code-cell counts of the two artifacts differ; no cells were compared.
    bool structural_mismatch = false;
    std::vector<CellComparison> cells;

    bool operator==(const ReproducibilityMetrics&) const = default;
};

// The fixed static pattern list: random.*, uuid.*, np.random, numpy.random,
// time.time, datetime.now, os.environ.
const std::vector<std::string>& nondeterminism_patterns();

// Strips terminal escape sequences, normalizes CRLF / CR to LF and drops
// trailing whitespace on each line.
std::string normalize_text(std::string_view text);

// Canonical comparison text of one output. Execution counts and metadata are
// excluded; binary payloads are kept byte-exact; errors reduce to name + value.
std::string normalize_output(const notebook::CellOutput& out);

// Canonical texts of a cell's outputs, with consecutive same-stream chunks merged first.
std::vector<std::string> normalize_outputs(const std::vector<notebook::CellOutput>& outputs);

NondeterminismMatch detect_nondeterminism(std::string_view source);

// Identical iff normalized outputs match element-wise; otherwise
// NonDeterministic when the original source matches a pattern, else Different.
CellComparison compare_cell(const notebook::Cell& original, const notebook::Cell& executed, std::size_t code_index);

ReproducibilityMetrics compute_metrics(const notebook::ParsedNotebook& original, const notebook::ParsedNotebook& executed);

ScoreCategory categorize_score(std::optional<double> score);

// Per-notebook comparison document written next to the execution logs.
nlohmann::json comparison_to_json(const ReproducibilityMetrics& metrics);

} // namespace nbrepro::compare
