#pragma once

#include "nbrepro/corpus/types.hpp"
#include "nbrepro/depinfer/imports.hpp"
#include "nbrepro/depinfer/requirements.hpp"
#include "nbrepro/notebook/notebook.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace nbrepro::depinfer {

struct DependencySpec {
    std::string repository_id;
    std::vector<PackageRequirement> requirements; // sorted by distribution_name
    std::string synthesized_manifest;
    std::optional<std::string> authoritative_requirements; // repo-relative path
    std::optional<std::string> authoritative_setup;
    std::vector<std::string> warnings;

    bool operator==(const DependencySpec&) const = default;
};

struct InferenceOptions {
    bool scan_notebook_installs = true;
    const AliasTable* aliases = &AliasTable::builtin();
};

struct NotebookSource {
    std::string relative_path;
    notebook::ParsedNotebook notebook;
};

// Names a notebook import could resolve to inside the repository itself:
// top-level directories, package directories, *.py module stems, and
// directories next to a notebook.
std::set<std::string> repository_internal_modules(const std::filesystem::path& root);

// Union of declared and inferred requirements. Declared sources win on name
// collisions in the order requirements manifest, setup manifest, notebook
// install lines; inferred imports fill in the rest. Standard-library names
// are dropped from every source.
std::vector<PackageRequirement> merge_requirements(const std::vector<std::vector<PackageRequirement>>& declared,
                                                   const std::set<std::string>& inferred_distributions,
                                                   std::vector<std::string>* warnings = nullptr);

// One line per requirement, LF-terminated, ascending by distribution name.
std::string render_manifest(const std::vector<PackageRequirement>& requirements);

DependencySpec synthesize_dependency_spec(const corpus::Repository& repo, const std::vector<NotebookSource>& notebooks,
                                          const InferenceOptions& options = {});

} // namespace nbrepro::depinfer
