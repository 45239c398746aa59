#pragma once

#include "nbrepro/corpus/types.hpp"
#include "nbrepro/notebook/notebook.hpp"
#include "nbrepro/util/process.hpp"

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace nbrepro::corpus {

struct ProbeOptions {
    std::chrono::seconds timeout{30};
    util::CommandRunner runner; // defaults to util::run_process
};

// Read-only, unauthenticated existence probe (remote refs listing; a
// directory check for file:// sources). Throws TransientError on timeouts
// and network-level failures.
ValidationResult validate_repository(std::string_view url, const ProbeOptions& options = {});

// Interprets the output of a failed refs listing. Returns nullopt when the
// failure looks transient (DNS, connect, TLS, timeout).
std::optional<ValidationResult> classify_probe_failure(std::string_view output);

struct AcquireOptions {
    std::chrono::seconds timeout{600};
    util::CommandRunner runner;
};

struct Acquisition {
    Repository repository;
    std::string revision; // commit id, or "unversioned" for plain directories
};

// Shallow clone (or copy of a local directory) into workdir/<repository_id>.
// Fills manifests, has_requirements_file and notebook_count. Throws
// TransientError when the clone fails.
Acquisition acquire_repository(std::string_view url, const std::filesystem::path& workdir,
                               const AcquireOptions& options = {});

// Repo-relative generic paths of every file with `file_name`, sorted; hidden
// directories are skipped.
std::vector<std::string> find_files_named(const std::filesystem::path& root, std::string_view file_name);

// One descriptor per *.ipynb below the working tree, sorted by relative path.
// Hidden directories (including .ipynb_checkpoints) are skipped. Unparseable
// files yield a descriptor with parse_failed set.
std::vector<NotebookDescriptor> discover_notebooks(const Repository& repo);

notebook::ParsedNotebook load_notebook(const Repository& repo, const NotebookDescriptor& descriptor);

// Python by declared language, or by kernel name when no language is declared.
bool is_python_notebook(const NotebookDescriptor& descriptor);

} // namespace nbrepro::corpus
