#pragma once

#include "nbrepro/containerize/recipe.hpp"
#include "nbrepro/containerize/runtime.hpp"

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

namespace nbrepro::containerize {

enum class BuildPhase { BaseImage, SystemPackages, DependencyInstall, Toolchain, CopyContext, Timeout, Runtime, Unknown };

std::string_view to_string(BuildPhase p);

struct ImageRef {
    std::string tag;
};

struct BuildFailure {
    BuildPhase phase = BuildPhase::Unknown;
    std::string log_excerpt;
};

using BuildOutcome = std::variant<ImageRef, BuildFailure>;

// Force-removes every container and image labelled or tagged for the
// repository, then checks that none remain. Throws RuntimeError.
void cleanup_previous(ContainerRuntime& runtime, const std::string& repository_id);

// Locates the failing Dockerfile step in a build log.
BuildPhase classify_build_failure(std::string_view log, bool timed_out);

// Last `lines` lines of text.
std::string log_tail(std::string_view text, std::size_t lines);

// The full log is always written to log_file, success or failure.
BuildOutcome build_image(ContainerRuntime& runtime, const BuildRecipe& recipe, std::chrono::seconds timeout,
                         const std::filesystem::path& log_file);

} // namespace nbrepro::containerize
