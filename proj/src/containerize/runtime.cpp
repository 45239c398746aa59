#include "nbrepro/containerize/runtime.hpp"

#include "nbrepro/util/text.hpp"

#include <set>

namespace nbrepro::containerize {

using namespace std::chrono_literals;

CliContainerRuntime::CliContainerRuntime(std::string binary, CommandRunner runner)
    : binary_(std::move(binary)), runner_(runner ? std::move(runner) : CommandRunner(util::run_process)) {}

util::ProcessResult CliContainerRuntime::invoke(std::vector<std::string> args, util::ProcessOptions options) {
    args.insert(args.begin(), binary_);
    return runner_(args, options);
}

std::vector<std::string> CliContainerRuntime::list(std::vector<std::string> args) {
    util::ProcessOptions options;
    options.timeout = 60s;
    auto result = invoke(std::move(args), options);
    if (!result.ok()) throw RuntimeError(binary_ + " query failed: " + std::string(util::trim(result.output)));
    std::vector<std::string> ids;
    std::set<std::string> seen;
    for (const auto& line : util::split_lines(result.output)) {
        auto id = std::string(util::trim(line));
        if (!id.empty() && seen.insert(id).second) ids.push_back(id);
    }
    return ids;
}

util::ProcessResult CliContainerRuntime::probe() {
    util::ProcessOptions options;
    options.timeout = 30s;
    return invoke({"version", "--format", "{{.Server.Version}}"}, options);
}

std::vector<std::string> CliContainerRuntime::containers_with_label(const std::string& key, const std::string& value) {
    return list({"ps", "-a", "-q", "--no-trunc", "--filter", "label=" + key + "=" + value});
}

std::vector<std::string> CliContainerRuntime::images_for(const std::string& repository, const std::string& label_key,
                                                         const std::string& label_value) {
    auto by_name = list({"images", "-q", "--no-trunc", repository});
    auto by_label = list({"images", "-q", "--no-trunc", "--filter", "label=" + label_key + "=" + label_value});
    std::set<std::string> seen(by_name.begin(), by_name.end());
    for (auto& id : by_label)
        if (seen.insert(id).second) by_name.push_back(std::move(id));
    return by_name;
}

void CliContainerRuntime::remove_containers(const std::vector<std::string>& ids) {
    if (ids.empty()) return;
    std::vector<std::string> args{"rm", "-f"};
    args.insert(args.end(), ids.begin(), ids.end());
    util::ProcessOptions options;
    options.timeout = 120s;
    auto result = invoke(std::move(args), options);
    if (!result.ok()) throw RuntimeError(binary_ + " rm failed: " + std::string(util::trim(result.output)));
}

void CliContainerRuntime::remove_images(const std::vector<std::string>& ids) {
    if (ids.empty()) return;
    std::vector<std::string> args{"rmi", "-f"};
    args.insert(args.end(), ids.begin(), ids.end());
    util::ProcessOptions options;
    options.timeout = 120s;
    auto result = invoke(std::move(args), options);
    if (!result.ok()) throw RuntimeError(binary_ + " rmi failed: " + std::string(util::trim(result.output)));
}

util::ProcessResult CliContainerRuntime::build(const std::filesystem::path& context_dir, const std::string& tag,
                                               const std::map<std::string, std::string>& labels,
                                               const std::filesystem::path& log_file, std::chrono::seconds timeout) {
    std::vector<std::string> args{"build", "--no-cache", "-t", tag};
    if (binary_ == "docker") args.insert(args.begin() + 1, "--progress=plain");
    for (const auto& [k, v] : labels) {
        args.push_back("--label");
        args.push_back(k + "=" + v);
    }
    args.push_back("-f");
    args.push_back((context_dir / "Dockerfile").string());
    args.push_back(context_dir.string());
    util::ProcessOptions options;
    options.timeout = timeout;
    options.log_file = log_file;
    return invoke(std::move(args), options);
}

util::ProcessResult CliContainerRuntime::create(const ContainerSpec& spec) {
    std::vector<std::string> args{"create", "--name", spec.name};
    for (const auto& [k, v] : spec.labels) {
        args.push_back("--label");
        args.push_back(k + "=" + v);
    }
    if (spec.cpus) {
        args.push_back("--cpus");
        args.push_back(std::to_string(*spec.cpus));
    }
    if (spec.memory) {
        args.push_back("--memory");
        args.push_back(*spec.memory);
    }
    if (!spec.workdir.empty()) {
        args.push_back("-w");
        args.push_back(spec.workdir);
    }
    args.push_back(spec.image);
    args.insert(args.end(), spec.command.begin(), spec.command.end());
    util::ProcessOptions options;
    options.timeout = 120s;
    return invoke(std::move(args), options);
}

util::ProcessResult CliContainerRuntime::start_attached(const std::string& container, const std::filesystem::path& log_file,
                                                        std::chrono::seconds timeout) {
    util::ProcessOptions options;
    options.timeout = timeout;
    options.log_file = log_file;
    return invoke({"start", "-a", container}, options);
}

util::ProcessResult CliContainerRuntime::copy_from(const std::string& container, const std::string& container_path,
                                                   const std::filesystem::path& host_path) {
    std::error_code ec;
    std::filesystem::create_directories(host_path.parent_path(), ec);
    util::ProcessOptions options;
    options.timeout = 120s;
    return invoke({"cp", container + ":" + container_path, host_path.string()}, options);
}

void CliContainerRuntime::remove_container(const std::string& container) {
    util::ProcessOptions options;
    options.timeout = 120s;
    invoke({"rm", "-f", container}, options);
}

std::unique_ptr<ContainerRuntime> detect_container_runtime() {
    for (const char* binary : {"docker", "podman"}) {
        if (!util::executable_on_path(binary)) continue;
        auto runtime = std::make_unique<CliContainerRuntime>(binary);
        if (runtime->probe().ok()) return runtime;
    }
    return nullptr;
}

} // namespace nbrepro::containerize
