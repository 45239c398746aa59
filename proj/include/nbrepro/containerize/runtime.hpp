#pragma once

#include "nbrepro/util/error.hpp"
#include "nbrepro/util/process.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nbrepro::containerize {

// The runtime could not be reached or refused a management command.
class RuntimeError : public Error {
public:
    using Error::Error;
};

inline constexpr const char* kRepositoryLabel = "nbrepro.repository";
inline constexpr const char* kRunLabel = "nbrepro.run";

struct ContainerSpec {
    std::string name;
    std::string image;
    std::string workdir;
    std::vector<std::string> command;
    std::map<std::string, std::string> labels;
    std::optional<double> cpus;
    std::optional<std::string> memory;
};

// Operations the pipeline needs from a container engine.
class ContainerRuntime {
public:
    virtual ~ContainerRuntime() = default;

    virtual std::string name() const = 0;
    virtual util::ProcessResult probe() = 0;

    virtual std::vector<std::string> containers_with_label(const std::string& key, const std::string& value) = 0;
    virtual std::vector<std::string> images_for(const std::string& repository, const std::string& label_key,
                                                const std::string& label_value) = 0;
    virtual void remove_containers(const std::vector<std::string>& ids) = 0;
    virtual void remove_images(const std::vector<std::string>& ids) = 0;

    virtual util::ProcessResult build(const std::filesystem::path& context_dir, const std::string& tag,
                                      const std::map<std::string, std::string>& labels,
                                      const std::filesystem::path& log_file, std::chrono::seconds timeout) = 0;

    virtual util::ProcessResult create(const ContainerSpec& spec) = 0;
    virtual util::ProcessResult start_attached(const std::string& container, const std::filesystem::path& log_file,
                                               std::chrono::seconds timeout) = 0;
    virtual util::ProcessResult copy_from(const std::string& container, const std::string& container_path,
                                          const std::filesystem::path& host_path) = 0;
    virtual void remove_container(const std::string& container) = 0;
};

using util::CommandRunner;

// Drives docker (or a CLI-compatible engine such as podman) through its
// command line only.
class CliContainerRuntime final : public ContainerRuntime {
public:
    explicit CliContainerRuntime(std::string binary = "docker", CommandRunner runner = {});

    std::string name() const override { return binary_; }
    util::ProcessResult probe() override;

    std::vector<std::string> containers_with_label(const std::string& key, const std::string& value) override;
    std::vector<std::string> images_for(const std::string& repository, const std::string& label_key,
                                        const std::string& label_value) override;
    void remove_containers(const std::vector<std::string>& ids) override;
    void remove_images(const std::vector<std::string>& ids) override;

    util::ProcessResult build(const std::filesystem::path& context_dir, const std::string& tag,
                              const std::map<std::string, std::string>& labels, const std::filesystem::path& log_file,
                              std::chrono::seconds timeout) override;
    util::ProcessResult create(const ContainerSpec& spec) override;
    util::ProcessResult start_attached(const std::string& container, const std::filesystem::path& log_file,
                                       std::chrono::seconds timeout) override;
    util::ProcessResult copy_from(const std::string& container, const std::string& container_path,
                                  const std::filesystem::path& host_path) override;
    void remove_container(const std::string& container) override;

private:
    util::ProcessResult invoke(std::vector<std::string> args, util::ProcessOptions options = {});
    std::vector<std::string> list(std::vector<std::string> args);

    std::string binary_;
    CommandRunner runner_;
};

// First CLI engine on PATH (docker, then podman) that answers a probe.
std::unique_ptr<ContainerRuntime> detect_container_runtime();

} // namespace nbrepro::containerize
