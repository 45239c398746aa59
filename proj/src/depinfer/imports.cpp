#include "nbrepro/depinfer/imports.hpp"

#include "embedded_data.hpp"
#include "nbrepro/depinfer/python_lexer.hpp"
#include "nbrepro/util/error.hpp"
#include "nbrepro/util/text.hpp"

#include <array>
#include <regex>

namespace nbrepro::depinfer {

using pysrc::Token;
using pysrc::TokenKind;

namespace {

bool valid_module_name(const std::string& name) {
    static const std::regex re("^[A-Za-z_][A-Za-z0-9_]*$");
    return std::regex_match(name, re);
}

bool compound_keyword(const Token& t) {
    static constexpr std::array<std::string_view, 12> words{"if", "elif", "else", "try", "except", "finally",
                                                            "with", "for", "while", "def", "class", "async"};
    if (t.kind != TokenKind::Name) return false;
    for (auto w : words)
        if (t.text == w) return true;
    return false;
}

using Span = std::vector<Token>;

void scan_statement(const Span& stmt, std::size_t begin, std::set<std::string>& out) {
    if (begin >= stmt.size()) return;
    const auto& head = stmt[begin];

    if (head.is_name("import")) {
        bool expect_module = true;
        for (std::size_t i = begin + 1; i < stmt.size(); ++i) {
            const auto& t = stmt[i];
            if (t.is_op(",")) {
                expect_module = true;
            } else if (expect_module && t.kind == TokenKind::Name) {
                if (valid_module_name(t.text)) out.insert(t.text);
                expect_module = false;
            }
        }
        return;
    }

    if (head.is_name("from")) {
        if (begin + 1 >= stmt.size()) return;
        const auto& first = stmt[begin + 1];
        if (first.kind != TokenKind::Name || first.is_name("import")) return; // relative or malformed
        bool has_import = false;
        for (std::size_t i = begin + 2; i < stmt.size(); ++i) has_import = has_import || stmt[i].is_name("import");
        if (has_import && valid_module_name(first.text)) out.insert(first.text);
        return;
    }

    if (compound_keyword(head)) {
        int depth = 0;
        for (std::size_t i = begin + 1; i < stmt.size(); ++i) {
            const auto& t = stmt[i];
            if (t.is_op("(") || t.is_op("[") || t.is_op("{")) ++depth;
            else if ((t.is_op(")") || t.is_op("]") || t.is_op("}")) && depth > 0) --depth;
            else if (t.is_op(":") && depth == 0) {
                scan_statement(stmt, i + 1, out);
                return;
            } else if (t.is_name("lambda")) {
                return; // a ':' after lambda is not the suite separator; give up on this line
            }
        }
    }
}

} // namespace

std::set<std::string> extract_imports(std::string_view source) {
    std::set<std::string> modules;
    for (const auto& line : pysrc::logical_lines(pysrc::tokenize(source))) {
        Span stmt;
        for (const auto& t : line) {
            if (t.is_op(";")) {
                scan_statement(stmt, 0, modules);
                stmt.clear();
            } else {
                stmt.push_back(t);
            }
        }
        scan_statement(stmt, 0, modules);
    }
    return modules;
}

const std::set<std::string>& python_stdlib_modules() {
    static const std::set<std::string> names = [] {
        std::set<std::string> out;
        for (const auto& line : util::split_lines(embedded::python310_stdlib)) {
            auto name = util::trim(line);
            if (!name.empty() && name.front() != '#') out.emplace(name);
        }
        return out;
    }();
    return names;
}

bool is_stdlib_module(std::string_view name) {
    return python_stdlib_modules().count(std::string(name)) > 0;
}

std::set<std::string> filter_standard_library(const std::set<std::string>& names) {
    std::set<std::string> out;
    for (const auto& n : names)
        if (!is_stdlib_module(n)) out.insert(n);
    return out;
}

const AliasTable& AliasTable::builtin() {
    static const AliasTable table = [] {
        AliasTable t;
        t.load(embedded::import_aliases);
        return t;
    }();
    return table;
}

void AliasTable::load(std::string_view text) {
    for (const auto& raw : util::split_lines(text)) {
        auto line = util::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto split = line.find_first_of(" \t");
        if (split == std::string_view::npos) throw ConfigError("alias table line without distribution: " + std::string(line));
        auto module = line.substr(0, split);
        auto dist = util::trim(line.substr(split));
        entries_[std::string(module)] = std::string(dist);
    }
}

void AliasTable::load_file(const std::filesystem::path& path) {
    load(util::read_file(path));
}

std::string AliasTable::map(std::string_view module_name) const {
    auto it = entries_.find(std::string(module_name));
    return it == entries_.end() ? std::string(module_name) : it->second;
}

std::string map_import_to_distribution(std::string_view module_name, const AliasTable& table) {
    return table.map(module_name);
}

} // namespace nbrepro::depinfer
