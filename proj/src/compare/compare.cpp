#include "nbrepro/compare/compare.hpp"

#include "nbrepro/depinfer/python_lexer.hpp"

#include <algorithm>

namespace nbrepro::compare {

using notebook::Cell;
using notebook::CellKind;
using notebook::CellOutput;
using notebook::OutputType;

std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::Identical: return "Identical";
    case Verdict::Different: return "Different";
    case Verdict::NonDeterministic: return "NonDeterministic";
    }
    return "Identical";
}

std::string_view to_string(ScoreCategory c) {
    switch (c) {
    case ScoreCategory::Poor: return "Poor";
    case ScoreCategory::Low: return "Low";
    case ScoreCategory::Moderate: return "Moderate";
    case ScoreCategory::Good: return "Good";
    case ScoreCategory::High: return "High";
    case ScoreCategory::Perfect: return "Perfect";
    case ScoreCategory::Unscored: return "Unscored";
    }
    return "Unscored";
}

const std::vector<std::string>& nondeterminism_patterns() {
    static const std::vector<std::string> names{"random.*",  "uuid.*",       "np.random", "numpy.random",
                                                "time.time", "datetime.now", "os.environ"};
    return names;
}

std::string normalize_text(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\x1b') {
            if (i + 1 < text.size() && text[i + 1] == '[') {
                // CSI: parameters/intermediates then one final byte in @..~
                std::size_t j = i + 2;
                while (j < text.size() && !(text[j] >= '@' && text[j] <= '~')) ++j;
                i = j;
            } else if (i + 1 < text.size() && text[i + 1] == ']') {
                // OSC: terminated by BEL or ESC '\'
                std::size_t j = i + 2;
                while (j < text.size() && text[j] != '\x07' && !(text[j] == '\x1b' && j + 1 < text.size() && text[j + 1] == '\\'))
                    ++j;
                i = (j < text.size() && text[j] == '\x1b') ? j + 1 : j;
            } else {
                ++i;
            }
            continue;
        }
        if (c == '\r') {
            cleaned.push_back('\n');
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            continue;
        }
        cleaned.push_back(c);
    }

    std::string out;
    out.reserve(cleaned.size());
    std::size_t pos = 0;
    while (pos <= cleaned.size()) {
        auto nl = cleaned.find('\n', pos);
        auto line = std::string_view(cleaned).substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
        out += line;
        if (nl == std::string::npos) break;
        out.push_back('\n');
        pos = nl + 1;
    }
    return out;
}

namespace {

bool text_like(const std::string& mime, bool structured) {
    if (structured) return true;
    if (mime.rfind("text/", 0) == 0) return true;
    if (mime == "application/json" || mime == "application/javascript" || mime == "image/svg+xml") return true;
    auto ends_with = [&](std::string_view s) {
        return mime.size() >= s.size() && mime.compare(mime.size() - s.size(), s.size(), s) == 0;
    };
    return ends_with("+json") || ends_with("+xml");
}

} // namespace

std::string normalize_output(const CellOutput& out) {
    std::string canonical;
    switch (out.output_type) {
    case OutputType::Stream: {
        canonical = "stream:" + out.stream_name + "\n";
        auto it = out.payload.find("text/plain");
        if (it != out.payload.end()) canonical += normalize_text(it->second);
        break;
    }
    case OutputType::ExecuteResult:
    case OutputType::DisplayData:
        canonical = std::string(notebook::to_string(out.output_type)) + "\n";
        for (const auto& [mime, content] : out.payload) {
            canonical += "--- " + mime + "\n";
            canonical += text_like(mime, out.structured_payloads.count(mime) > 0) ? normalize_text(content) : content;
            canonical += "\n";
        }
        break;
    case OutputType::Error:
        canonical = "error:" + out.error_name + "\n" + normalize_text(out.error_value);
        break;
    }
    return canonical;
}

std::vector<std::string> normalize_outputs(const std::vector<CellOutput>& outputs) {
    std::vector<CellOutput> merged;
    for (const auto& o : outputs) {
        if (o.output_type == OutputType::Stream && !merged.empty() && merged.back().output_type == OutputType::Stream &&
            merged.back().stream_name == o.stream_name) {
            auto it = o.payload.find("text/plain");
            if (it != o.payload.end()) merged.back().payload["text/plain"] += it->second;
            continue;
        }
        merged.push_back(o);
    }
    std::vector<std::string> canonical;
    canonical.reserve(merged.size());
    for (const auto& o : merged) canonical.push_back(normalize_output(o));
    return canonical;
}

NondeterminismMatch detect_nondeterminism(std::string_view source) {
    using pysrc::TokenKind;
    struct Pattern {
        const char* name;
        const char* head;
        const char* attr; // nullptr: any attribute
        bool allow_qualified_head;
    };
    static constexpr Pattern table[] = {
        {"random.*", "random", nullptr, false},   {"uuid.*", "uuid", nullptr, false},
        {"np.random", "np", "random", false},     {"numpy.random", "numpy", "random", false},
        {"time.time", "time", "time", false},     {"datetime.now", "datetime", "now", true},
        {"os.environ", "os", "environ", false},
    };

    const auto tokens = pysrc::tokenize(source);
    std::vector<bool> hit(std::size(table), false);
    for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
        const auto& head = tokens[i];
        if (head.kind != TokenKind::Name || !tokens[i + 1].is_op(".") || tokens[i + 2].kind != TokenKind::Name) continue;
        const bool qualified = i > 0 && tokens[i - 1].is_op(".");
        for (std::size_t p = 0; p < std::size(table); ++p) {
            const auto& pat = table[p];
            if (head.text != pat.head) continue;
            if (qualified && !pat.allow_qualified_head) continue;
            if (pat.attr && tokens[i + 2].text != pat.attr) continue;
            hit[p] = true;
        }
    }

    NondeterminismMatch match;
    for (std::size_t p = 0; p < std::size(table); ++p)
        if (hit[p]) match.patterns.emplace_back(table[p].name);
    match.detected = !match.patterns.empty();
    return match;
}

CellComparison compare_cell(const Cell& original, const Cell& executed, std::size_t code_index) {
    CellComparison result;
    result.cell_index = code_index;
    if (normalize_outputs(original.outputs) == normalize_outputs(executed.outputs)) {
        result.verdict = Verdict::Identical;
        return result;
    }
    auto nd = detect_nondeterminism(original.source);
    if (nd.detected) {
        result.verdict = Verdict::NonDeterministic;
        result.matched_patterns = std::move(nd.patterns);
    } else {
        result.verdict = Verdict::Different;
    }
    return result;
}

ReproducibilityMetrics compute_metrics(const notebook::ParsedNotebook& original, const notebook::ParsedNotebook& executed) {
    ReproducibilityMetrics m;
    const auto lhs = notebook::code_cells(original);
    const auto rhs = notebook::code_cells(executed);
    m.total_code_cells = static_cast<int>(lhs.size());
    if (lhs.size() != rhs.size()) {
        m.structural_mismatch = true;
        return m;
    }
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        auto cmp = compare_cell(lhs[i], rhs[i], i);
        const int idx = static_cast<int>(i);
        switch (cmp.verdict) {
        case Verdict::Identical:
            ++m.identical_count;
            m.identical_indices.push_back(idx);
            break;
        case Verdict::Different:
            ++m.different_count;
            m.different_indices.push_back(idx);
            break;
        case Verdict::NonDeterministic:
            ++m.nondeterministic_count;
            m.nondeterministic_indices.push_back(idx);
            break;
        }
        m.cells.push_back(std::move(cmp));
    }
    if (m.total_code_cells > 0) m.score = static_cast<double>(m.identical_count) / static_cast<double>(m.total_code_cells);
    return m;
}

ScoreCategory categorize_score(std::optional<double> score) {
    if (!score || *score < 0.0 || *score > 1.0) return ScoreCategory::Unscored;
    const double s = *score;
    if (s == 1.0) return ScoreCategory::Perfect;
    if (s >= 0.8) return ScoreCategory::High;
    if (s >= 0.6) return ScoreCategory::Good;
    if (s >= 0.4) return ScoreCategory::Moderate;
    if (s >= 0.2) return ScoreCategory::Low;
    return ScoreCategory::Poor;
}

nlohmann::json comparison_to_json(const ReproducibilityMetrics& m) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : m.cells)
        cells.push_back({{"cell_index", c.cell_index}, {"verdict", to_string(c.verdict)}, {"matched_patterns", c.matched_patterns}});
    return {
        {"notebook_id", m.notebook_id},
        {"run_id", m.run_id},
        {"total_code_cells", m.total_code_cells},
        {"identical_count", m.identical_count},
        {"different_count", m.different_count},
        {"nondeterministic_count", m.nondeterministic_count},
        {"identical_indices", m.identical_indices},
        {"different_indices", m.different_indices},
        {"nondeterministic_indices", m.nondeterministic_indices},
        {"score", m.score ? nlohmann::json(*m.score) : nlohmann::json(nullptr)},
        {"score_category", to_string(categorize_score(m.score))},
        {"structural_mismatch", m.structural_mismatch},
        {"cells", std::move(cells)},
    };
}

} // namespace nbrepro::compare
