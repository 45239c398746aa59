#include "nbrepro/notebook/notebook.hpp"

#include <algorithm>

namespace nbrepro::notebook {

using nlohmann::json;

std::string_view to_string(CellKind kind) {
    switch (kind) {
    case CellKind::Code: return "code";
    case CellKind::Markdown: return "markdown";
    case CellKind::Raw: return "raw";
    }
    return "code";
}

std::string_view to_string(OutputType type) {
    switch (type) {
    case OutputType::Stream: return "stream";
    case OutputType::ExecuteResult: return "execute_result";
    case OutputType::DisplayData: return "display_data";
    case OutputType::Error: return "error";
    }
    return "stream";
}

ParseError::ParseError(std::string reason, std::string field_path, std::optional<std::size_t> byte_offset)
    : Error(field_path.empty() ? reason : field_path + ": " + reason),
      reason_(std::move(reason)),
      field_path_(std::move(field_path)),
      byte_offset_(byte_offset) {}

namespace {

std::string at_index(const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

// nbformat multiline strings are either a string or a list of strings.
std::string multiline(const json& value, const std::string& path) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_array()) {
        std::string out;
        for (std::size_t i = 0; i < value.size(); ++i) {
            if (!value[i].is_string()) throw ParseError("expected string", at_index(path, i));
            out += value[i].get_ref<const std::string&>();
        }
        return out;
    }
    throw ParseError("expected string or list of strings", path);
}

// Same boundaries as Python's str.splitlines(keepends=True), which nbformat uses.
json as_line_list(const std::string& text) {
    json lines = json::array();
    std::size_t start = 0;
    std::size_t i = 0;
    auto cut = [&](std::size_t end) {
        lines.push_back(text.substr(start, end - start));
        start = end;
    };
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (c == '\r') {
            i += (i + 1 < text.size() && text[i + 1] == '\n') ? 2 : 1;
            cut(i);
        } else if (c == '\n' || c == '\v' || c == '\f' || c == 0x1c || c == 0x1d || c == 0x1e) {
            cut(++i);
        } else if (c == 0xc2 && i + 1 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x85) {
            i += 2;
            cut(i);
        } else if (c == 0xe2 && i + 2 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x80 &&
                   (static_cast<unsigned char>(text[i + 2]) == 0xa8 || static_cast<unsigned char>(text[i + 2]) == 0xa9)) {
            i += 3;
            cut(i);
        } else {
            ++i;
        }
    }
    if (start < text.size()) cut(text.size());
    return lines;
}

// Mirrors nbformat's writer: only textual bundles are stored as line lists.
bool split_on_write(const std::string& mime) {
    return mime.rfind("text/", 0) == 0 || mime == "application/javascript" || mime == "image/svg+xml";
}

std::optional<long long> optional_count(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer()) throw ParseError("expected integer or null", path + "." + key);
    return it->get<long long>();
}

const json& require(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError("missing required field", path.empty() ? key : path + "." + key);
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_string()) throw ParseError("expected string", path + "." + key);
    return v.get<std::string>();
}

json without(const json& obj, std::initializer_list<const char*> keys) {
    json rest = obj;
    for (const char* k : keys) rest.erase(k);
    return rest;
}

CellOutput parse_output(const json& raw, const std::string& path) {
    if (!raw.is_object()) throw ParseError("expected object", path);
    CellOutput out;
    const auto type = require_string(raw, "output_type", path);
    if (type == "stream") {
        out.output_type = OutputType::Stream;
        out.stream_name = require_string(raw, "name", path);
        out.payload["text/plain"] = multiline(require(raw, "text", path), path + ".text");
        out.extra = without(raw, {"output_type", "name", "text"});
    } else if (type == "execute_result" || type == "display_data") {
        out.output_type = type == "execute_result" ? OutputType::ExecuteResult : OutputType::DisplayData;
        const auto& data = require(raw, "data", path);
        if (!data.is_object()) throw ParseError("expected object", path + ".data");
        for (const auto& [mime, value] : data.items()) {
            if (value.is_string() || value.is_array()) {
                bool all_strings = value.is_string() ||
                                   std::all_of(value.begin(), value.end(), [](const json& v) { return v.is_string(); });
                if (all_strings) {
                    out.payload[mime] = multiline(value, path + ".data." + mime);
                    continue;
                }
            }
            out.payload[mime] = value.dump();
            out.structured_payloads.insert(mime);
        }
        if (out.output_type == OutputType::ExecuteResult) out.execution_count = optional_count(raw, "execution_count", path);
        out.extra = without(raw, {"output_type", "data", "execution_count"});
    } else if (type == "error") {
        out.output_type = OutputType::Error;
        out.error_name = require_string(raw, "ename", path);
        if (out.error_name.empty()) throw ParseError("error output with empty ename", path + ".ename");
        out.error_value = require_string(raw, "evalue", path);
        auto tb = raw.find("traceback");
        if (tb != raw.end()) {
            if (!tb->is_array()) throw ParseError("expected list of strings", path + ".traceback");
            for (std::size_t i = 0; i < tb->size(); ++i) {
                if (!(*tb)[i].is_string()) throw ParseError("expected string", at_index(path + ".traceback", i));
                out.traceback.push_back((*tb)[i].get<std::string>());
            }
        }
        out.extra = without(raw, {"output_type", "ename", "evalue", "traceback"});
    } else {
        throw ParseError("unknown output_type '" + type + "'", path + ".output_type");
    }
    return out;
}

json output_to_json(const CellOutput& out) {
    json j = out.extra;
    j["output_type"] = std::string(to_string(out.output_type));
    switch (out.output_type) {
    case OutputType::Stream: {
        j["name"] = out.stream_name;
        auto it = out.payload.find("text/plain");
        j["text"] = as_line_list(it == out.payload.end() ? std::string() : it->second);
        break;
    }
    case OutputType::ExecuteResult:
    case OutputType::DisplayData: {
        json data = json::object();
        for (const auto& [mime, content] : out.payload) {
            if (out.structured_payloads.count(mime)) data[mime] = json::parse(content);
            else if (split_on_write(mime)) data[mime] = as_line_list(content);
            else data[mime] = content;
        }
        j["data"] = std::move(data);
        if (out.output_type == OutputType::ExecuteResult)
            j["execution_count"] = out.execution_count ? json(*out.execution_count) : json(nullptr);
        break;
    }
    case OutputType::Error:
        j["ename"] = out.error_name;
        j["evalue"] = out.error_value;
        j["traceback"] = out.traceback;
        break;
    }
    return j;
}

} // namespace

ParsedNotebook parse_notebook(std::string_view bytes) {
    json document;
    try {
        document = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), "", e.byte);
    }
    return parse_notebook(document);
}

ParsedNotebook parse_notebook(const json& document) {
    if (!document.is_object()) throw ParseError("notebook root must be an object", "");

    ParsedNotebook nb;
    const auto& major = require(document, "nbformat", "");
    if (!major.is_number_integer()) throw ParseError("expected integer", "nbformat");
    nb.nbformat.major = major.get<int>();
    if (nb.nbformat.major != 4)
        throw ParseError("unsupported nbformat " + std::to_string(nb.nbformat.major), "nbformat");
    if (auto it = document.find("nbformat_minor"); it != document.end()) {
        if (!it->is_number_integer()) throw ParseError("expected integer", "nbformat_minor");
        nb.nbformat.minor = it->get<int>();
    }

    if (auto it = document.find("metadata"); it != document.end()) {
        if (!it->is_object()) throw ParseError("expected object", "metadata");
        nb.metadata = *it;
        if (auto ks = it->find("kernelspec"); ks != it->end() && ks->is_object()) {
            if (auto name = ks->find("name"); name != ks->end() && name->is_string()) nb.kernel_name = name->get<std::string>();
            if (auto lang = ks->find("language"); lang != ks->end() && lang->is_string())
                nb.kernel_language = lang->get<std::string>();
        }
        if (nb.kernel_language.empty()) {
            if (auto li = it->find("language_info"); li != it->end() && li->is_object()) {
                if (auto name = li->find("name"); name != li->end() && name->is_string())
                    nb.kernel_language = name->get<std::string>();
            }
        }
    }

    const auto& cells = require(document, "cells", "");
    if (!cells.is_array()) throw ParseError("expected list", "cells");
    nb.cells.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto path = at_index("cells", i);
        const auto& raw = cells[i];
        if (!raw.is_object()) throw ParseError("expected object", path);
        Cell cell;
        cell.index = i;
        const auto type = require_string(raw, "cell_type", path);
        if (type == "code") cell.kind = CellKind::Code;
        else if (type == "markdown") cell.kind = CellKind::Markdown;
        else if (type == "raw") cell.kind = CellKind::Raw;
        else throw ParseError("unknown cell_type '" + type + "'", path + ".cell_type");
        cell.source = multiline(require(raw, "source", path), path + ".source");

        if (cell.kind == CellKind::Code) {
            cell.execution_count = optional_count(raw, "execution_count", path);
            if (auto outs = raw.find("outputs"); outs != raw.end()) {
                if (!outs->is_array()) throw ParseError("expected list", path + ".outputs");
                for (std::size_t k = 0; k < outs->size(); ++k)
                    cell.outputs.push_back(parse_output((*outs)[k], at_index(path + ".outputs", k)));
            }
            cell.extra = without(raw, {"cell_type", "source", "outputs", "execution_count"});
        } else {
            cell.extra = without(raw, {"cell_type", "source"});
        }
        nb.cells.push_back(std::move(cell));
    }

    nb.extra = without(document, {"nbformat", "nbformat_minor", "metadata", "cells"});
    return nb;
}

json to_json(const ParsedNotebook& nb) {
    json doc = nb.extra;
    doc["nbformat"] = nb.nbformat.major;
    doc["nbformat_minor"] = nb.nbformat.minor;
    doc["metadata"] = nb.metadata;
    json cells = json::array();
    for (const auto& cell : nb.cells) {
        json c = cell.extra;
        c["cell_type"] = std::string(to_string(cell.kind));
        c["source"] = as_line_list(cell.source);
        if (cell.kind == CellKind::Code) {
            c["execution_count"] = cell.execution_count ? json(*cell.execution_count) : json(nullptr);
            json outs = json::array();
            for (const auto& o : cell.outputs) outs.push_back(output_to_json(o));
            c["outputs"] = std::move(outs);
        }
        cells.push_back(std::move(c));
    }
    doc["cells"] = std::move(cells);
    return doc;
}

std::string serialize_notebook(const ParsedNotebook& nb) {
    return to_json(nb).dump(1, ' ', false, json::error_handler_t::replace) + "\n";
}

std::vector<Cell> code_cells(const ParsedNotebook& nb) {
    std::vector<Cell> out;
    for (const auto& cell : nb.cells)
        if (cell.kind == CellKind::Code) out.push_back(cell);
    return out;
}

std::size_t count_cells(const ParsedNotebook& nb, CellKind kind) {
    return static_cast<std::size_t>(
        std::count_if(nb.cells.begin(), nb.cells.end(), [kind](const Cell& c) { return c.kind == kind; }));
}

std::optional<double> markdown_code_ratio(const ParsedNotebook& nb) {
    const auto code = count_cells(nb, CellKind::Code);
    if (code == 0) return std::nullopt;
    return static_cast<double>(count_cells(nb, CellKind::Markdown)) / static_cast<double>(code);
}

} // namespace nbrepro::notebook
