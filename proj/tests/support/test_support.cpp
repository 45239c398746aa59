#include "test_support.hpp"

#include "nbrepro/containerize/recipe.hpp"
#include "nbrepro/depinfer/requirements.hpp"
#include "nbrepro/executor/execute.hpp"
#include "nbrepro/util/hash.hpp"
#include "nbrepro/util/process.hpp"
#include "nbrepro/util/text.hpp"

#include <algorithm>

namespace nbrepro::testing {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path fixtures_dir() { return NBREPRO_FIXTURES_DIR; }
fs::path nbrepro_binary() { return NBREPRO_CLI_PATH; }

TempDir::TempDir() {
    path_ = fs::temp_directory_path() / ("nbrepro-test-" + util::random_hex_token(12));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

json make_notebook(const std::vector<CellSpec>& cells, const std::string& kernel, const std::string& language) {
    json nb = {{"nbformat", 4}, {"nbformat_minor", 5}, {"cells", json::array()}};
    nb["metadata"] = {{"kernelspec", {{"name", kernel}, {"display_name", kernel}, {"language", language}}}};
    int n = 0;
    for (const auto& c : cells) {
        json cell = {{"cell_type", c.kind}, {"id", "cell-" + std::to_string(n++)}, {"metadata", json::object()},
                     {"source", c.source}};
        if (c.kind == "code") {
            cell["outputs"] = c.outputs;
            cell["execution_count"] = c.outputs.empty() ? json(nullptr) : json(n);
        }
        nb["cells"].push_back(cell);
    }
    return nb;
}

json stream_output(const std::string& text, const std::string& name) {
    return {{"output_type", "stream"}, {"name", name}, {"text", text}};
}

json error_output(const std::string& ename, const std::string& evalue) {
    return {{"output_type", "error"}, {"ename", ename}, {"evalue", evalue}, {"traceback", json::array()}};
}

void copy_tree(const fs::path& from, const fs::path& to) {
    fs::create_directories(to);
    fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
}

bool jupyter_available() {
    static const bool ok = util::run_process({"jupyter", "nbconvert", "--version"}).ok();
    return ok;
}

util::ProcessResult HostRuntime::probe() {
    util::ProcessResult r;
    r.exit_code = 0;
    r.output = "host";
    return r;
}

std::vector<std::string> HostRuntime::containers_with_label(const std::string& key, const std::string& value) {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, c] : containers_) {
        auto it = c.spec.labels.find(key);
        if (it != c.spec.labels.end() && it->second == value) out.push_back(id);
    }
    return out;
}

std::vector<std::string> HostRuntime::images_for(const std::string& repository, const std::string& label_key,
                                                 const std::string& label_value) {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [tag, image] : images_) {
        auto it = image.labels.find(label_key);
        if (tag.rfind(repository + ":", 0) == 0 || (it != image.labels.end() && it->second == label_value))
            out.push_back(tag);
    }
    return out;
}

void HostRuntime::remove_containers(const std::vector<std::string>& ids) {
    for (const auto& id : ids) remove_container(id);
}

void HostRuntime::remove_images(const std::vector<std::string>& ids) {
    std::lock_guard lock(mutex_);
    for (const auto& id : ids) images_.erase(id);
}

util::ProcessResult HostRuntime::build(const fs::path& context_dir, const std::string& tag,
                                       const std::map<std::string, std::string>& labels, const fs::path& log_file,
                                       std::chrono::seconds) {
    std::vector<std::string> names;
    const auto manifest = context_dir / containerize::kManifestFileName;
    if (fs::exists(manifest)) {
        for (const auto& line : util::split_lines(util::read_file(manifest))) {
            auto req = depinfer::parse_requirement_spec(line, depinfer::RequirementOrigin::DeclaredRequirements);
            if (req && !req->opaque_line) names.push_back(req->distribution_name);
        }
    }
    std::string script = "import importlib.metadata as m, sys\nfor n in sys.argv[1:]:\n"
                         "    try:\n        m.distribution(n)\n    except m.PackageNotFoundError:\n        print(n)\n";
    std::vector<std::string> argv{"python3", "-c", script};
    argv.insert(argv.end(), names.begin(), names.end());
    auto check = util::run_process(argv);

    util::ProcessResult r;
    r.exit_code = 0;
    r.output = "#1 [1/6] FROM host\n#2 [4/6] RUN pip install -r " + std::string(containerize::kImageManifestPath) + "\n";
    const auto missing = util::split_lines(util::trim(check.output));
    if (!check.ok() || !missing.empty()) {
        for (const auto& m : missing) r.output += "#2 ERROR: No matching distribution found for " + m + "\n";
        r.output += "ERROR: process \"/bin/sh -c pip install -r " + std::string(containerize::kImageManifestPath) +
                    "\" did not complete successfully: exit code: 1\n";
        r.exit_code = 1;
    } else {
        std::lock_guard lock(mutex_);
        images_[tag] = {context_dir, labels};
        contexts_.push_back(context_dir.string());
        r.output += "#3 naming to " + tag + " done\n";
    }
    util::write_file(log_file, r.output);
    return r;
}

util::ProcessResult HostRuntime::create(const containerize::ContainerSpec& spec) {
    std::lock_guard lock(mutex_);
    util::ProcessResult r;
    auto image = images_.find(spec.image);
    if (image == images_.end()) {
        r.exit_code = 125;
        r.output = "Unable to find image '" + spec.image + "' locally";
        return r;
    }
    if (containers_.count(spec.name)) {
        r.exit_code = 125;
        r.output = "Conflict. The container name \"" + spec.name + "\" is already in use";
        return r;
    }
    Container c{spec, scratch_.path() / ("c" + std::to_string(next_++))};
    copy_tree(image->second.context / "repo", c.sandbox / "work");
    fs::create_directories(c.sandbox / "out");
    containers_[spec.name] = c;
    r.exit_code = 0;
    r.output = spec.name;
    return r;
}

fs::path HostRuntime::map_path(const Container& c, const std::string& container_path) const {
    const std::string out_dir = executor::kContainerOutputDir;
    const std::string work_dir = containerize::kImageWorkdir;
    if (container_path.rfind(out_dir, 0) == 0) return c.sandbox / "out" / container_path.substr(std::min(container_path.size(), out_dir.size() + 1));
    if (container_path.rfind(work_dir, 0) == 0) return c.sandbox / "work" / container_path.substr(std::min(container_path.size(), work_dir.size() + 1));
    return c.sandbox / "root" / container_path;
}

util::ProcessResult HostRuntime::start_attached(const std::string& container, const fs::path& log_file,
                                                std::chrono::seconds timeout) {
    Container c;
    {
        std::lock_guard lock(mutex_);
        auto it = containers_.find(container);
        if (it == containers_.end()) {
            util::ProcessResult r;
            r.exit_code = 1;
            r.output = "Error: No such container: " + container;
            return r;
        }
        c = it->second;
    }
    std::vector<std::string> argv;
    for (const auto& arg : c.spec.command) {
        auto pos = arg.find(executor::kContainerOutputDir);
        argv.push_back(pos == std::string::npos ? arg
                                                : arg.substr(0, pos) + (c.sandbox / "out").string() +
                                                      arg.substr(pos + std::string(executor::kContainerOutputDir).size()));
    }
    util::ProcessOptions options;
    options.working_dir = map_path(c, c.spec.workdir);
    options.log_file = log_file;
    options.timeout = timeout;
    return util::run_process(argv, options);
}

util::ProcessResult HostRuntime::copy_from(const std::string& container, const std::string& container_path,
                                           const fs::path& host_path) {
    util::ProcessResult r;
    std::lock_guard lock(mutex_);
    auto it = containers_.find(container);
    if (it == containers_.end()) {
        r.exit_code = 1;
        r.output = "Error: No such container: " + container;
        return r;
    }
    const auto source = map_path(it->second, container_path);
    std::error_code ec;
    if (!fs::is_regular_file(source, ec)) {
        r.exit_code = 1;
        r.output = "Error: Could not find the file " + container_path + " in container " + container;
        return r;
    }
    if (host_path.has_parent_path()) fs::create_directories(host_path.parent_path());
    fs::copy_file(source, host_path, fs::copy_options::overwrite_existing, ec);
    r.exit_code = ec ? 1 : 0;
    r.output = ec ? ec.message() : "";
    return r;
}

void HostRuntime::remove_container(const std::string& container) {
    std::lock_guard lock(mutex_);
    auto it = containers_.find(container);
    if (it == containers_.end()) return;
    std::error_code ec;
    fs::remove_all(it->second.sandbox, ec);
    containers_.erase(it);
}

std::size_t HostRuntime::images() const {
    std::lock_guard lock(mutex_);
    return images_.size();
}

std::size_t HostRuntime::containers() const {
    std::lock_guard lock(mutex_);
    return containers_.size();
}

std::vector<std::string> HostRuntime::build_contexts() const {
    std::lock_guard lock(mutex_);
    return contexts_;
}

} // namespace nbrepro::testing
