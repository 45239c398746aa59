#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nbrepro::depinfer {

enum class RequirementOrigin {
    DeclaredRequirements,
    DeclaredSetup,
    DeclaredNotebookInstall, // `!pip install` / `%pip install` lines in code cells
    InferredImport,
};

std::string_view to_string(RequirementOrigin origin);
std::optional<RequirementOrigin> origin_from_string(std::string_view text);

struct PackageRequirement {
    std::string distribution_name; // PEP 503 normalized, lowercase
    std::string extras;            // "[a,b]" or empty
    std::optional<std::string> version_constraint;
    std::string marker; // environment marker without the leading ';'
    // Editable, VCS, URL and local-path requirements are emitted verbatim.
    std::optional<std::string> opaque_line;
    RequirementOrigin origin = RequirementOrigin::InferredImport;
    std::string source; // manifest path or notebook path the entry came from

    // One line of requirements-file syntax.
    std::string to_line() const;

    bool operator==(const PackageRequirement&) const = default;
};

struct ManifestParse {
    std::vector<PackageRequirement> requirements;
    std::vector<std::string> warnings;
};

// Lowercase, runs of [-_.] collapsed to '-'.
std::string normalize_distribution_name(std::string_view name);

// Parses one requirement specifier ("pandas>=1.0", "git+https://...#egg=x",
// "name @ url"). Returns nullopt for text that is not a requirement.
std::optional<PackageRequirement> parse_requirement_spec(std::string_view spec, RequirementOrigin origin,
                                                         std::string_view source = {});

ManifestParse parse_requirements_manifest(std::string_view text, std::string_view source = "requirements.txt");

// Static read of install_requires=[...] in a setup.py. The manifest is never executed.
ManifestParse parse_setup_manifest(std::string_view text, std::string_view source = "setup.py");

// pip install commands issued from `!` / `%` lines of a code cell.
ManifestParse parse_notebook_installs(std::string_view cell_source, std::string_view source = {});

} // namespace nbrepro::depinfer
