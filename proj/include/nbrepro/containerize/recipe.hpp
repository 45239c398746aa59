#pragma once

#include "nbrepro/depinfer/synthesize.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace nbrepro::containerize {

inline constexpr const char* kDefaultBaseImage = "python:3.10-slim";
inline constexpr const char* kManifestFileName = "nbrepro-requirements.txt";
inline constexpr const char* kImageManifestPath = "/opt/nbrepro/requirements.txt";
inline constexpr const char* kImageWorkdir = "/home/repro/work";

struct RecipeOptions {
    std::string base_image = kDefaultBaseImage;
    std::vector<std::string> system_packages{"build-essential", "git",         "pkg-config",
                                             "libffi-dev",      "libssl-dev",  "zlib1g-dev"};
    std::vector<std::string> toolchain{"nbconvert==7.16.4", "nbformat==5.10.4", "ipykernel==6.29.5"};
};

struct BuildRecipe {
    std::string repository_id;
    std::string dockerfile_text;
    std::string manifest_text;
    std::filesystem::path context_dir;
    std::string image_tag;
};

const char* pipeline_version();

std::string image_repository(const std::string& repository_id); // repro/<repository_id>
std::string image_tag(const std::string& repository_id, const std::string& run_id);

// Pure: depends only on the spec, the options and the pipeline version.
std::string generate_dockerfile(const depinfer::DependencySpec& spec, const RecipeOptions& options = {});

BuildRecipe generate_build_recipe(const depinfer::DependencySpec& spec, const std::string& run_id,
                                  const std::filesystem::path& context_dir, const RecipeOptions& options = {});

// Writes Dockerfile + manifest into recipe.context_dir and copies the
// repository tree (without VCS metadata) to context_dir/repo.
void stage_build_context(const BuildRecipe& recipe, const std::filesystem::path& repository_root);

} // namespace nbrepro::containerize
