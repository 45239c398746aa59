#include "nbrepro/containerize/recipe.hpp"

#include "nbrepro/util/error.hpp"
#include "nbrepro/util/hash.hpp"
#include "nbrepro/util/text.hpp"

#ifndef NBREPRO_VERSION
#define NBREPRO_VERSION "0.0.0"
#endif

namespace nbrepro::containerize {

namespace fs = std::filesystem;

const char* pipeline_version() { return NBREPRO_VERSION; }

std::string image_repository(const std::string& repository_id) { return "repro/" + repository_id; }

std::string image_tag(const std::string& repository_id, const std::string& run_id) {
    return image_repository(repository_id) + ":" + run_id;
}

std::string generate_dockerfile(const depinfer::DependencySpec& spec, const RecipeOptions& options) {
    const std::string manifest = spec.synthesized_manifest;
    std::string d;
    d += "# nbrepro build recipe " + std::string(pipeline_version()) + "\n";
    d += "# repository " + spec.repository_id + "\n";
    d += "# requirements sha256 " + util::sha256_hex(manifest) + "\n";
    d += "FROM " + options.base_image + "\n";
    d += "ENV DEBIAN_FRONTEND=noninteractive \\\n"
         "    PIP_NO_CACHE_DIR=1 \\\n"
         "    PIP_DISABLE_PIP_VERSION_CHECK=1 \\\n"
         "    PYTHONDONTWRITEBYTECODE=1\n";
    if (!options.system_packages.empty()) {
        d += "RUN apt-get update \\\n    && apt-get install -y --no-install-recommends";
        for (const auto& p : options.system_packages) d += " " + p;
        d += " \\\n    && rm -rf /var/lib/apt/lists/*\n";
    }
    if (!manifest.empty()) {
        d += "COPY " + std::string(kManifestFileName) + " " + kImageManifestPath + "\n";
        d += "RUN pip install -r " + std::string(kImageManifestPath) + "\n";
    }
    d += "RUN pip install";
    for (const auto& t : options.toolchain) d += " " + t;
    d += "\n";
    d += "COPY repo/ " + std::string(kImageWorkdir) + "/\n";
    d += "WORKDIR " + std::string(kImageWorkdir) + "\n";
    return d;
}

BuildRecipe generate_build_recipe(const depinfer::DependencySpec& spec, const std::string& run_id,
                                  const fs::path& context_dir, const RecipeOptions& options) {
    BuildRecipe r;
    r.repository_id = spec.repository_id;
    r.dockerfile_text = generate_dockerfile(spec, options);
    r.manifest_text = spec.synthesized_manifest;
    r.context_dir = context_dir;
    r.image_tag = image_tag(spec.repository_id, run_id);
    return r;
}

void stage_build_context(const BuildRecipe& recipe, const fs::path& repository_root) {
    std::error_code ec;
    fs::remove_all(recipe.context_dir, ec);
    util::write_file(recipe.context_dir / "Dockerfile", recipe.dockerfile_text);
    util::write_file(recipe.context_dir / kManifestFileName, recipe.manifest_text);

    const fs::path dest = recipe.context_dir / "repo";
    fs::create_directories(dest, ec);
    if (ec) throw Error("cannot create build context " + dest.string() + ": " + ec.message());

    fs::recursive_directory_iterator it(repository_root, fs::directory_options::skip_permission_denied, ec), end;
    if (ec) throw Error("cannot read repository tree " + repository_root.string() + ": " + ec.message());
    for (; it != end; it.increment(ec)) {
        if (ec) throw Error("cannot read repository tree: " + ec.message());
        const auto rel = fs::relative(it->path(), repository_root);
        if (rel.begin()->string() == ".git") {
            if (it->is_directory()) it.disable_recursion_pending();
            continue;
        }
        const auto target = dest / rel;
        if (it->is_symlink()) {
            fs::copy_symlink(it->path(), target, ec);
        } else if (it->is_directory()) {
            fs::create_directories(target, ec);
        } else if (it->is_regular_file()) {
            fs::copy_file(it->path(), target, fs::copy_options::overwrite_existing, ec);
        }
        if (ec) throw Error("cannot stage " + rel.string() + ": " + ec.message());
    }
}

} // namespace nbrepro::containerize
