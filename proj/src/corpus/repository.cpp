#include "nbrepro/corpus/repository.hpp"

#include "nbrepro/corpus/identity.hpp"
#include "nbrepro/util/error.hpp"
#include "nbrepro/util/text.hpp"

#include <algorithm>
#include <regex>

namespace nbrepro::corpus {

namespace fs = std::filesystem;

namespace {

util::CommandRunner runner_or_default(const util::CommandRunner& r) {
    return r ? r : util::CommandRunner(util::run_process);
}

util::ProcessOptions git_options(std::chrono::seconds timeout) {
    util::ProcessOptions o;
    o.timeout = timeout;
    o.extra_env = {{"GIT_TERMINAL_PROMPT", "0"}, {"GIT_ASKPASS", "true"}, {"SSH_ASKPASS", "true"}};
    return o;
}

bool hidden(const fs::path& p) {
    auto name = p.filename().string();
    return name.size() > 1 && name.front() == '.';
}

} // namespace

std::optional<ValidationResult> classify_probe_failure(std::string_view output) {
    static const std::regex transient(
        R"(Could not resolve host|Temporary failure in name resolution|Connection timed out|Connection refused|Failed to connect|Operation timed out|Network is unreachable|gnutls_handshake|SSL_connect|SSL_ERROR|RPC failed|early EOF|The remote end hung up unexpectedly|returned error: 5\d\d)",
        std::regex::icase);
    const std::string text(output);
    if (std::regex_search(text, transient)) return std::nullopt;
    return ValidationResult::RemovedOrPrivate;
}

ValidationResult validate_repository(std::string_view url, const ProbeOptions& options) {
    auto normalized = normalize_url(url);
    if (!normalized) return ValidationResult::Malformed;
    if (is_file_url(*normalized)) {
        std::error_code ec;
        return fs::is_directory(file_url_path(*normalized), ec) ? ValidationResult::Accessible
                                                                : ValidationResult::RemovedOrPrivate;
    }
    auto run = runner_or_default(options.runner);
    auto result = run({"git", "-c", "credential.helper=", "ls-remote", "--quiet", *normalized, "HEAD"},
                      git_options(options.timeout));
    if (result.timed_out) throw TransientError("repository probe timed out after " +
                                               std::to_string(options.timeout.count()) + " s: " + *normalized);
    if (result.launch_failed) throw PrerequisiteError("git is not available: " + result.output);
    if (result.exit_code == 0) return ValidationResult::Accessible;
    auto verdict = classify_probe_failure(result.output);
    if (!verdict)
        throw TransientError("repository probe failed: " + std::string(util::trim(result.output)));
    return *verdict;
}

std::vector<std::string> find_files_named(const fs::path& root, std::string_view file_name) {
    std::vector<std::string> found;
    std::error_code ec;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec), end;
    for (; !ec && it != end; it.increment(ec)) {
        if (hidden(it->path())) {
            if (it->is_directory()) it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file() && it->path().filename() == file_name)
            found.push_back(fs::relative(it->path(), root).generic_string());
    }
    std::sort(found.begin(), found.end());
    return found;
}

namespace {

std::vector<std::string> find_notebook_paths(const fs::path& root) {
    std::vector<std::string> found;
    std::error_code ec;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec), end;
    for (; !ec && it != end; it.increment(ec)) {
        if (hidden(it->path())) {
            if (it->is_directory()) it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file() && it->path().extension() == ".ipynb")
            found.push_back(fs::relative(it->path(), root).generic_string());
    }
    std::sort(found.begin(), found.end());
    return found;
}

void copy_tree(const fs::path& from, const fs::path& to) {
    std::error_code ec;
    fs::create_directories(to, ec);
    fs::recursive_directory_iterator it(from, fs::directory_options::skip_permission_denied, ec), end;
    if (ec) throw TransientError("cannot read " + from.string() + ": " + ec.message());
    for (; it != end; it.increment(ec)) {
        if (ec) throw TransientError("cannot read " + from.string() + ": " + ec.message());
        auto rel = fs::relative(it->path(), from);
        if (rel.begin()->string() == ".git") {
            if (it->is_directory()) it.disable_recursion_pending();
            continue;
        }
        if (it->is_symlink()) fs::copy_symlink(it->path(), to / rel, ec);
        else if (it->is_directory()) fs::create_directories(to / rel, ec);
        else if (it->is_regular_file()) fs::copy_file(it->path(), to / rel, fs::copy_options::overwrite_existing, ec);
        if (ec) throw TransientError("cannot copy " + rel.string() + ": " + ec.message());
    }
}

std::string read_revision(const util::CommandRunner& run, const fs::path& dir) {
    std::error_code ec;
    if (!fs::exists(dir / ".git", ec)) return "unversioned";
    util::ProcessOptions o = git_options(std::chrono::seconds(30));
    auto r = run({"git", "-C", dir.string(), "rev-parse", "HEAD"}, o);
    auto rev = std::string(util::trim(r.output));
    return r.ok() && !rev.empty() ? rev : "unversioned";
}

} // namespace

Acquisition acquire_repository(std::string_view url, const fs::path& workdir, const AcquireOptions& options) {
    auto normalized = normalize_url(url);
    if (!normalized) throw Error("malformed repository URL: " + std::string(url));
    auto run = runner_or_default(options.runner);

    Acquisition acq;
    Repository& repo = acq.repository;
    repo.url = *normalized;
    repo.repository_id = repository_id_for(*normalized);
    repo.local_path = fs::absolute(workdir / repo.repository_id);

    std::error_code ec;
    fs::remove_all(repo.local_path, ec);
    fs::create_directories(workdir, ec);

    if (is_file_url(*normalized)) {
        const fs::path source = file_url_path(*normalized);
        copy_tree(source, repo.local_path);
        acq.revision = read_revision(run, source);
    } else {
        auto result = run({"git", "-c", "credential.helper=", "clone", "--depth", "1", "--quiet", *normalized,
                           repo.local_path.string()},
                          git_options(options.timeout));
        if (!result.ok()) {
            fs::remove_all(repo.local_path, ec);
            throw TransientError(result.timed_out ? "clone timed out" : "clone failed: " + std::string(util::trim(result.output)));
        }
        acq.revision = read_revision(run, repo.local_path);
    }

    repo.accessible = true;
    repo.requirements_manifests = find_files_named(repo.local_path, "requirements.txt");
    repo.setup_manifests = find_files_named(repo.local_path, "setup.py");
    repo.has_requirements_file = !repo.requirements_manifests.empty();
    repo.notebook_count = static_cast<int>(find_notebook_paths(repo.local_path).size());
    return acq;
}

std::vector<NotebookDescriptor> discover_notebooks(const Repository& repo) {
    std::vector<NotebookDescriptor> out;
    for (const auto& rel : find_notebook_paths(repo.local_path)) {
        NotebookDescriptor d;
        d.repository_id = repo.repository_id;
        d.relative_path = rel;
        d.notebook_id = notebook_id_for(repo.repository_id, rel);
        try {
            auto nb = notebook::parse_notebook(util::read_file(repo.local_path / rel));
            d.kernel_name = nb.kernel_name;
            d.kernel_language = nb.kernel_language;
            d.nbformat_major = nb.nbformat.major;
            d.nbformat_minor = nb.nbformat.minor;
        } catch (const std::exception& e) {
            d.parse_failed = true;
            d.parse_error = e.what();
        }
        out.push_back(std::move(d));
    }
    return out;
}

notebook::ParsedNotebook load_notebook(const Repository& repo, const NotebookDescriptor& descriptor) {
    return notebook::parse_notebook(util::read_file(repo.local_path / descriptor.relative_path));
}

bool is_python_notebook(const NotebookDescriptor& d) {
    if (d.parse_failed) return false;
    const auto lang = util::to_lower(d.kernel_language);
    if (!lang.empty()) return lang == "python" || lang == "python3" || lang == "python2";
    const auto kernel = util::to_lower(d.kernel_name);
    return kernel.empty() || kernel.find("python") != std::string::npos;
}

} // namespace nbrepro::corpus
