#include "nbrepro/depinfer/synthesize.hpp"

#include "nbrepro/util/text.hpp"

#include <algorithm>
#include <map>

namespace nbrepro::depinfer {

namespace fs = std::filesystem;

namespace {

bool hidden(const fs::path& p) {
    auto name = p.filename().string();
    return !name.empty() && name.front() == '.';
}

bool stdlib_distribution(const std::string& normalized) {
    std::string underscored = normalized;
    std::replace(underscored.begin(), underscored.end(), '-', '_');
    return is_stdlib_module(normalized) || is_stdlib_module(underscored);
}

// Shallowest path first, then lexicographic, so a root manifest beats nested ones.
std::optional<std::string> pick_authoritative(std::vector<std::string> paths) {
    if (paths.empty()) return std::nullopt;
    std::sort(paths.begin(), paths.end(), [](const std::string& a, const std::string& b) {
        auto da = std::count(a.begin(), a.end(), '/');
        auto db = std::count(b.begin(), b.end(), '/');
        return da != db ? da < db : a < b;
    });
    return paths.front();
}

} // namespace

std::set<std::string> repository_internal_modules(const fs::path& root) {
    std::set<std::string> names;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) return names;

    for (const auto& entry : fs::directory_iterator(root, ec))
        if (entry.is_directory() && !hidden(entry.path())) names.insert(entry.path().filename().string());

    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec), end;
    for (; it != end; it.increment(ec)) {
        if (ec) break;
        const auto& path = it->path();
        if (hidden(path)) {
            if (it->is_directory()) it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file()) {
            if (path.extension() == ".py") {
                names.insert(path.stem().string());
                if (path.filename() == "__init__.py") names.insert(path.parent_path().filename().string());
            } else if (path.extension() == ".ipynb") {
                for (const auto& sibling : fs::directory_iterator(path.parent_path(), ec))
                    if (sibling.is_directory() && !hidden(sibling.path()))
                        names.insert(sibling.path().filename().string());
            }
        }
    }
    return names;
}

std::vector<PackageRequirement> merge_requirements(const std::vector<std::vector<PackageRequirement>>& declared,
                                                   const std::set<std::string>& inferred_distributions,
                                                   std::vector<std::string>* warnings) {
    std::map<std::string, PackageRequirement> merged;
    auto warn = [&](std::string msg) {
        if (warnings) warnings->push_back(std::move(msg));
    };

    for (const auto& source : declared) {
        for (const auto& req : source) {
            if (req.distribution_name.empty()) continue;
            if (stdlib_distribution(req.distribution_name)) {
                warn("dropped standard-library name '" + req.distribution_name + "' declared in " + req.source);
                continue;
            }
            auto [it, inserted] = merged.emplace(req.distribution_name, req);
            if (!inserted && it->second.to_line() != req.to_line())
                warn("duplicate requirement '" + req.to_line() + "' from " + req.source + " ignored; keeping '" +
                     it->second.to_line() + "'");
        }
    }
    for (const auto& name : inferred_distributions) {
        auto normalized = normalize_distribution_name(name);
        if (normalized.empty() || stdlib_distribution(normalized) || merged.count(normalized)) continue;
        PackageRequirement req;
        req.distribution_name = normalized;
        req.origin = RequirementOrigin::InferredImport;
        req.source = "imports";
        merged.emplace(normalized, std::move(req));
    }

    std::vector<PackageRequirement> out;
    out.reserve(merged.size());
    for (auto& [name, req] : merged) out.push_back(std::move(req));
    return out;
}

std::string render_manifest(const std::vector<PackageRequirement>& requirements) {
    std::vector<const PackageRequirement*> sorted;
    for (const auto& r : requirements) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto* a, const auto* b) { return a->distribution_name < b->distribution_name; });
    std::string text;
    for (const auto* r : sorted) text += r->to_line() + "\n";
    return text;
}

DependencySpec synthesize_dependency_spec(const corpus::Repository& repo, const std::vector<NotebookSource>& notebooks,
                                          const InferenceOptions& options) {
    DependencySpec spec;
    spec.repository_id = repo.repository_id;
    const AliasTable& aliases = options.aliases ? *options.aliases : AliasTable::builtin();

    std::vector<std::vector<PackageRequirement>> declared;

    spec.authoritative_requirements = pick_authoritative(repo.requirements_manifests);
    for (const auto& path : repo.requirements_manifests)
        if (path != spec.authoritative_requirements) spec.warnings.push_back("requirements manifest not used: " + path);
    if (spec.authoritative_requirements) {
        auto parsed = parse_requirements_manifest(util::read_file(repo.local_path / *spec.authoritative_requirements),
                                                  *spec.authoritative_requirements);
        spec.warnings.insert(spec.warnings.end(), parsed.warnings.begin(), parsed.warnings.end());
        declared.push_back(std::move(parsed.requirements));
    }

    spec.authoritative_setup = pick_authoritative(repo.setup_manifests);
    for (const auto& path : repo.setup_manifests)
        if (path != spec.authoritative_setup) spec.warnings.push_back("setup manifest not used: " + path);
    if (spec.authoritative_setup) {
        auto parsed = parse_setup_manifest(util::read_file(repo.local_path / *spec.authoritative_setup), *spec.authoritative_setup);
        spec.warnings.insert(spec.warnings.end(), parsed.warnings.begin(), parsed.warnings.end());
        declared.push_back(std::move(parsed.requirements));
    }

    std::vector<const NotebookSource*> ordered;
    for (const auto& nb : notebooks) ordered.push_back(&nb);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->relative_path < b->relative_path; });

    std::set<std::string> imported;
    std::vector<PackageRequirement> installs;
    for (const auto* nb : ordered) {
        for (const auto& cell : nb->notebook.cells) {
            if (cell.kind != notebook::CellKind::Code) continue;
            auto names = extract_imports(cell.source);
            imported.insert(names.begin(), names.end());
            if (options.scan_notebook_installs) {
                auto parsed = parse_notebook_installs(cell.source, nb->relative_path);
                spec.warnings.insert(spec.warnings.end(), parsed.warnings.begin(), parsed.warnings.end());
                installs.insert(installs.end(), parsed.requirements.begin(), parsed.requirements.end());
            }
        }
    }
    if (!installs.empty()) declared.push_back(std::move(installs));

    const auto internal = repository_internal_modules(repo.local_path);
    std::set<std::string> inferred;
    for (const auto& module : filter_standard_library(imported)) {
        if (internal.count(module)) continue;
        inferred.insert(map_import_to_distribution(module, aliases));
    }

    spec.requirements = merge_requirements(declared, inferred, &spec.warnings);
    spec.synthesized_manifest = render_manifest(spec.requirements);
    return spec;
}

} // namespace nbrepro::depinfer
