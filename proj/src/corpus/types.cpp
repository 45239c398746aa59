#include "nbrepro/corpus/types.hpp"

namespace nbrepro::corpus {

std::string_view to_string(ValidationResult v) {
    switch (v) {
    case ValidationResult::Accessible: return "accessible";
    case ValidationResult::RemovedOrPrivate: return "removed_or_private";
    case ValidationResult::Malformed: return "malformed";
    }
    return "malformed";
}

std::string_view to_string(ProvisioningStatus s) {
    switch (s) {
    case ProvisioningStatus::EnvironmentBuilt: return "EnvironmentBuilt";
    case ProvisioningStatus::BuildFailed: return "BuildFailed";
    case ProvisioningStatus::KernelNotFound: return "KernelNotFound";
    case ProvisioningStatus::NoPythonNotebooks: return "NoPythonNotebooks";
    case ProvisioningStatus::InvalidUrl: return "InvalidUrl";
    }
    return "InvalidUrl";
}

std::string_view to_string(RunStage s) {
    switch (s) {
    case RunStage::Acquired: return "Acquired";
    case RunStage::Inferred: return "Inferred";
    case RunStage::Built: return "Built";
    case RunStage::Executed: return "Executed";
    case RunStage::Compared: return "Compared";
    }
    return "Acquired";
}

std::optional<ProvisioningStatus> provisioning_status_from_string(std::string_view text) {
    for (auto s : kAllProvisioningStatuses)
        if (to_string(s) == text) return s;
    return std::nullopt;
}

std::optional<RunStage> run_stage_from_string(std::string_view text) {
    for (auto s : {RunStage::Acquired, RunStage::Inferred, RunStage::Built, RunStage::Executed, RunStage::Compared})
        if (to_string(s) == text) return s;
    return std::nullopt;
}

} // namespace nbrepro::corpus
