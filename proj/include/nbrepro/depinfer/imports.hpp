#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

namespace nbrepro::depinfer {

// Top-level module names imported by a code cell. Handles `import a.b as c`,
// comma lists, `from a.b import c` and imports nested under compound
// statements on the same line; relative imports, comments and string
// literals are ignored.
std::set<std::string> extract_imports(std::string_view source);

// CPython 3.10 standard-library top-level module names.
const std::set<std::string>& python_stdlib_modules();
bool is_stdlib_module(std::string_view name);
std::set<std::string> filter_standard_library(const std::set<std::string>& names);

// Import-name -> distribution-name table, loaded from the bundled data file
// and optionally extended by user files.
class AliasTable {
public:
    static const AliasTable& builtin();

    AliasTable() = default;

    // "<module> <distribution>" per line; '#' comments. Later entries win.
    void load(std::string_view text);
    void load_file(const std::filesystem::path& path);

    // Alias when present, else the module name unchanged.
    std::string map(std::string_view module_name) const;
    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

std::string map_import_to_distribution(std::string_view module_name, const AliasTable& table = AliasTable::builtin());

} // namespace nbrepro::depinfer
