#pragma once

#include "nbrepro/util/error.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

// In-memory model of nbformat v4 notebook documents.
namespace nbrepro::notebook {

enum class CellKind { Code, Markdown, Raw };
enum class OutputType { Stream, ExecuteResult, DisplayData, Error };

std::string_view to_string(CellKind kind);
std::string_view to_string(OutputType type);

struct CellOutput {
    OutputType output_type = OutputType::Stream;
    std::string stream_name; // "stdout" / "stderr"; Stream only
    // Media type -> content. Stream text is stored under "text/plain".
    std::map<std::string, std::string> payload;
    // Media types whose on-disk value was structured JSON rather than text.
    // Their payload entry holds the compact JSON dump.
    std::set<std::string> structured_payloads;
    std::string error_name;
    std::string error_value;
    std::vector<std::string> traceback;
    std::optional<long long> execution_count;
    nlohmann::json extra = nlohmann::json::object();

    bool operator==(const CellOutput&) const = default;
};

struct Cell {
    std::size_t index = 0;
    CellKind kind = CellKind::Code;
    std::string source;
    std::vector<CellOutput> outputs;
    std::optional<long long> execution_count;
    // Unmodeled cell fields (metadata, id, attachments, ...), kept for round-trips.
    nlohmann::json extra = nlohmann::json::object();

    bool operator==(const Cell&) const = default;
};

struct NbformatVersion {
    int major = 4;
    int minor = 0;

    bool operator==(const NbformatVersion&) const = default;
};

struct ParsedNotebook {
    std::vector<Cell> cells;
    std::string kernel_name;
    std::string kernel_language;
    NbformatVersion nbformat;
    nlohmann::json metadata = nlohmann::json::object();
    nlohmann::json extra = nlohmann::json::object();

    bool operator==(const ParsedNotebook&) const = default;
};

class ParseError : public Error {
public:
    ParseError(std::string reason, std::string field_path, std::optional<std::size_t> byte_offset = {});

    const std::string& reason() const { return reason_; }
    // JSON-pointer-ish location, e.g. "cells[3].outputs[0].ename"; empty for
    // document-level syntax errors.
    const std::string& field_path() const { return field_path_; }
    std::optional<std::size_t> byte_offset() const { return byte_offset_; }

private:
    std::string reason_;
    std::string field_path_;
    std::optional<std::size_t> byte_offset_;
};

ParsedNotebook parse_notebook(std::string_view bytes);
inline ParsedNotebook parse_notebook(const std::string& bytes) { return parse_notebook(std::string_view(bytes)); }
inline ParsedNotebook parse_notebook(const char* bytes) { return parse_notebook(std::string_view(bytes)); }
ParsedNotebook parse_notebook(const nlohmann::json& document);

nlohmann::json to_json(const ParsedNotebook& nb);
// nbformat-style text: one-space indent, sorted keys, multiline strings as line lists.
std::string serialize_notebook(const ParsedNotebook& nb);

std::vector<Cell> code_cells(const ParsedNotebook& nb);
std::size_t count_cells(const ParsedNotebook& nb, CellKind kind);

// count(Markdown) / count(Code); nullopt when there are no code cells.
std::optional<double> markdown_code_ratio(const ParsedNotebook& nb);

} // namespace nbrepro::notebook
