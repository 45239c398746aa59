#include "nbrepro/containerize/build.hpp"

#include "nbrepro/util/text.hpp"

#include <regex>

namespace nbrepro::containerize {

std::string_view to_string(BuildPhase p) {
    switch (p) {
    case BuildPhase::BaseImage: return "BaseImage";
    case BuildPhase::SystemPackages: return "SystemPackages";
    case BuildPhase::DependencyInstall: return "DependencyInstall";
    case BuildPhase::Toolchain: return "Toolchain";
    case BuildPhase::CopyContext: return "CopyContext";
    case BuildPhase::Timeout: return "Timeout";
    case BuildPhase::Runtime: return "Runtime";
    case BuildPhase::Unknown: return "Unknown";
    }
    return "Unknown";
}

void cleanup_previous(ContainerRuntime& runtime, const std::string& repository_id) {
    const auto repo = image_repository(repository_id);
    runtime.remove_containers(runtime.containers_with_label(kRepositoryLabel, repository_id));
    runtime.remove_images(runtime.images_for(repo, kRepositoryLabel, repository_id));
    if (!runtime.containers_with_label(kRepositoryLabel, repository_id).empty() ||
        !runtime.images_for(repo, kRepositoryLabel, repository_id).empty())
        throw RuntimeError("stale containers or images remain for " + repo);
}

namespace {

BuildPhase phase_of_step(const std::string& step) {
    if (step.find("apt-get") != std::string::npos) return BuildPhase::SystemPackages;
    if (step.find(kImageManifestPath) != std::string::npos) return BuildPhase::DependencyInstall;
    if (step.find("pip install") != std::string::npos) return BuildPhase::Toolchain;
    if (step.rfind("COPY", 0) == 0 || step.find(" COPY ") != std::string::npos) return BuildPhase::CopyContext;
    if (step.rfind("FROM", 0) == 0) return BuildPhase::BaseImage;
    return BuildPhase::Unknown;
}

} // namespace

BuildPhase classify_build_failure(std::string_view log, bool timed_out) {
    if (timed_out) return BuildPhase::Timeout;

    static const std::regex failed_cmd(
        R"rx(process "/bin/sh -c (.*)" did not complete successfully|The command '/bin/sh -c (.*)' returned a non-zero code|building at STEP "(.*)")rx");
    static const std::regex step_line(R"rx(^#\d+ \[[^\]]*\d+/\d+\] (.*)$|^Step \d+/\d+ : (.*)$|^STEP \d+/\d+: (.*)$)rx");
    static const std::regex base_image(
        R"rx(failed to resolve source metadata|pull access denied|manifest unknown|not found: manifest|error pulling image|failed to resolve reference|repository does not exist|initializing source docker://)rx",
        std::regex::icase);
    static const std::regex copy_failed(R"rx(COPY failed|failed to compute cache key|failed to calculate checksum)rx");

    std::string last_failed, last_step;
    bool base_failure = false, copy_failure = false;
    for (const auto& line : util::split_lines(log)) {
        std::smatch m;
        if (std::regex_search(line, m, failed_cmd)) {
            for (std::size_t g = 1; g < m.size(); ++g)
                if (m[g].matched) last_failed = m[g].str();
        }
        if (std::regex_search(line, m, step_line)) {
            for (std::size_t g = 1; g < m.size(); ++g)
                if (m[g].matched) last_step = m[g].str();
        }
        if (std::regex_search(line, base_image)) base_failure = true;
        if (std::regex_search(line, copy_failed)) copy_failure = true;
    }

    if (!last_failed.empty()) {
        auto phase = phase_of_step(last_failed);
        if (phase == BuildPhase::Unknown && last_failed.find("pip") != std::string::npos) return BuildPhase::DependencyInstall;
        if (phase != BuildPhase::Unknown) return phase;
    }
    if (base_failure) return BuildPhase::BaseImage;
    if (copy_failure) return BuildPhase::CopyContext;
    if (!last_step.empty()) return phase_of_step(last_step);
    return BuildPhase::Unknown;
}

std::string log_tail(std::string_view text, std::size_t lines) {
    auto all = util::split_lines(text);
    while (!all.empty() && util::trim(all.back()).empty()) all.pop_back();
    const std::size_t start = all.size() > lines ? all.size() - lines : 0;
    std::vector<std::string> tail(all.begin() + static_cast<std::ptrdiff_t>(start), all.end());
    return util::join(tail, "\n");
}

BuildOutcome build_image(ContainerRuntime& runtime, const BuildRecipe& recipe, std::chrono::seconds timeout,
                         const std::filesystem::path& log_file) {
    util::write_file(log_file, "");
    const std::map<std::string, std::string> labels{{kRepositoryLabel, recipe.repository_id},
                                                    {kRunLabel, recipe.image_tag.substr(recipe.image_tag.rfind(':') + 1)}};
    auto result = runtime.build(recipe.context_dir, recipe.image_tag, labels, log_file, timeout);
    if (result.ok()) return ImageRef{recipe.image_tag};

    BuildFailure failure;
    failure.log_excerpt = log_tail(result.output, 40);
    if (result.launch_failed) {
        failure.phase = BuildPhase::Runtime;
        if (failure.log_excerpt.empty()) failure.log_excerpt = "container runtime could not be launched";
    } else {
        failure.phase = classify_build_failure(result.output, result.timed_out);
    }
    return failure;
}

} // namespace nbrepro::containerize
