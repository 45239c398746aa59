#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nbrepro::corpus {

enum class ValidationResult { Accessible, RemovedOrPrivate, Malformed };

enum class ProvisioningStatus { EnvironmentBuilt, BuildFailed, KernelNotFound, NoPythonNotebooks, InvalidUrl };

// Last pipeline stage a run completed; drives which subcommand may consume it.
enum class RunStage { Acquired, Inferred, Built, Executed, Compared };

std::string_view to_string(ValidationResult v);
std::string_view to_string(ProvisioningStatus s);
std::string_view to_string(RunStage s);
std::optional<ProvisioningStatus> provisioning_status_from_string(std::string_view text);
std::optional<RunStage> run_stage_from_string(std::string_view text);

inline constexpr ProvisioningStatus kAllProvisioningStatuses[] = {
    ProvisioningStatus::EnvironmentBuilt, ProvisioningStatus::BuildFailed, ProvisioningStatus::KernelNotFound,
    ProvisioningStatus::NoPythonNotebooks, ProvisioningStatus::InvalidUrl};

struct Repository {
    std::string repository_id;
    std::string url; // normalized
    std::filesystem::path local_path;
    bool accessible = false;
    bool has_requirements_file = false;
    int notebook_count = 0;
    // Every requirements manifest / setup manifest found, repo-relative, sorted.
    std::vector<std::string> requirements_manifests;
    std::vector<std::string> setup_manifests;

    bool operator==(const Repository&) const = default;
};

struct RunRecord {
    std::string run_id;
    std::string repository_id;
    std::string invocation_id;
    std::string started_at;
    std::string finished_at;
    std::optional<ProvisioningStatus> provisioning_status; // unset until provisioning is decided
    std::string status_reason;
    std::optional<std::string> image_reference;
    std::string revision;
    RunStage stage = RunStage::Acquired;

    bool operator==(const RunRecord&) const = default;
};

struct NotebookDescriptor {
    std::string notebook_id;
    std::string repository_id;
    std::string relative_path; // generic '/' separators
    std::string kernel_name;
    std::string kernel_language;
    int nbformat_major = 0;
    int nbformat_minor = 0;
    bool parse_failed = false;
    std::string parse_error;

    bool operator==(const NotebookDescriptor&) const = default;
};

} // namespace nbrepro::corpus
