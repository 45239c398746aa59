#include "nbrepro/containerize/build.hpp"
#include "nbrepro/corpus/repository.hpp"
#include "nbrepro/executor/execute.hpp"
#include "nbrepro/executor/execution.hpp"
#include "nbrepro/util/text.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace nbrepro;
using namespace nbrepro::executor;
using nbrepro::testing::TempDir;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A repository "built" into a HostRuntime image.
struct Staged {
    TempDir work;
    nbrepro::testing::HostRuntime runtime;
    corpus::Repository repo;
    std::vector<corpus::NotebookDescriptor> notebooks;
    containerize::ImageRef image;
    ExecuteOptions options;

    explicit Staged(const fs::path& source) {
        repo = corpus::acquire_repository(source.string(), work / "repos").repository;
        notebooks = corpus::discover_notebooks(repo);
        depinfer::DependencySpec spec;
        spec.repository_id = repo.repository_id;
        auto recipe = containerize::generate_build_recipe(spec, "run", work / "ctx");
        containerize::stage_build_context(recipe, repo.local_path);
        auto built = containerize::build_image(runtime, recipe, std::chrono::seconds(60), work / "build.log");
        image = std::get<containerize::ImageRef>(built);
        options.timeout = std::chrono::seconds(120);
        options.artifacts_root = work / "artifacts";
        options.log_root = work / "logs";
    }

    ExecutionRecord run(std::size_t i) {
        auto original = corpus::load_notebook(repo, notebooks.at(i));
        return execute_notebook(runtime, image, notebooks.at(i), &original, "run", options);
    }
};

} // namespace

TEST_CASE("error taxonomy") {
    CHECK(classify_error("ModuleNotFoundError").category == ErrorCategory::Dependency);
    CHECK(classify_error("ImportError").category == ErrorCategory::Dependency);
    CHECK(classify_error("FileNotFoundError").category == ErrorCategory::Data);
    CHECK(classify_error("File Not Found Error").category == ErrorCategory::Data);
    CHECK(classify_error("PermissionError").category == ErrorCategory::Data);
    CHECK(classify_error("SyntaxError").category == ErrorCategory::Code);
    CHECK(classify_error("TypeError").category == ErrorCategory::Code);
    CHECK(classify_error("AttributeError").category == ErrorCategory::Code);
    CHECK(classify_error("NameError").category == ErrorCategory::Logic);
    CHECK(classify_error("ValueError").category == ErrorCategory::Logic);
    CHECK(classify_error("KeyError").category == ErrorCategory::Logic);
    CHECK(classify_error("pandas.errors.ParserError").recognized == false);
    CHECK(classify_error("requests.exceptions.FileNotFoundError").category == ErrorCategory::Data);
    auto unknown = classify_error("WeirdCustomError");
    CHECK(unknown.category == ErrorCategory::Logic);
    CHECK_FALSE(unknown.recognized);
    for (auto c : kAllErrorCategories) CHECK(error_category_from_string(to_string(c)) == c);
    for (auto s : kAllExecutionStatuses) CHECK(execution_status_from_string(to_string(s)) == s);
}

TEST_CASE("errors are extracted per code cell with their category") {
    auto nb = notebook::parse_notebook(util::read_file(nbrepro::testing::fixtures_dir() / "notebooks/errors.ipynb"));
    auto errors = extract_errors(nb);
    REQUIRE(errors.size() == 2);
    CHECK(errors[0].error_type == "ZeroDivisionError");
    CHECK(errors[0].cell_index == 1);
    CHECK(errors[0].message == "division by zero");
    CHECK(errors[1].error_type == "NameError");
    CHECK(errors[1].cell_index == 2);
    CHECK(errors[1].category == ErrorCategory::Logic);
}

TEST_CASE("repeated errors in one cell aggregate into a count") {
    using nbrepro::testing::error_output;
    auto doc = nbrepro::testing::make_notebook(
        {{"markdown", "m"}, {"code", "x", json::array({error_output("KeyError", "'a'"), error_output("KeyError", "'b'")})}});
    auto errors = extract_errors(notebook::parse_notebook(doc));
    REQUIRE(errors.size() == 1);
    CHECK(errors[0].count == 2);
    CHECK(errors[0].cell_index == 0);
}

TEST_CASE("nbconvert command and log heuristics") {
    auto cmd = nbconvert_command("a b.ipynb", std::nullopt);
    CHECK(cmd.at(0) == "jupyter");
    CHECK(std::find(cmd.begin(), cmd.end(), "--allow-errors") != cmd.end());
    CHECK(std::find(cmd.begin(), cmd.end(), "--execute") != cmd.end());
    CHECK(cmd.back() == "a b.ipynb");
    auto with_kernel = nbconvert_command("n.ipynb", std::string("python3"));
    CHECK(std::find(with_kernel.begin(), with_kernel.end(), "--ExecutePreprocessor.kernel_name=python3") != with_kernel.end());

    CHECK(log_reports_missing_kernel("jupyter_client.kernelspec.NoSuchKernel: No such kernel named py38"));
    CHECK(log_reports_missing_notebook("[NbConvertApp] WARNING | pattern 'x.ipynb' matched no files"));
    auto crash = crash_error_from_log("Traceback...\nnbclient.exceptions.DeadKernelError: Kernel died\n");
    REQUIRE(crash);
    CHECK(crash->error_type == "DeadKernelError");
    CHECK_FALSE(crash->cell_index.has_value());
}

TEST_CASE("skipped records carry structure but no duration") {
    corpus::NotebookDescriptor d;
    d.notebook_id = "n1";
    auto nb = notebook::parse_notebook(nbrepro::testing::make_notebook({{"code", "x"}, {"markdown", "m"}}));
    auto r = skipped_record(d, &nb, "run", "environment not built");
    CHECK(r.status == ExecutionStatus::Skipped);
    CHECK_FALSE(r.duration_s.has_value());
    CHECK(r.code_cell_count == 1);
    CHECK(r.markdown_code_ratio == doctest::Approx(1.0));
    CHECK(r.status_reason == "environment not built");
}

TEST_CASE("execution in a (host-simulated) container") {
    if (!nbrepro::testing::jupyter_available()) {
        MESSAGE("jupyter not available; skipping");
        return;
    }
    TempDir src;
    util::write_file(src / "ok.ipynb", nbrepro::testing::make_notebook({{"code", "print(6 * 7)"}}).dump());
    util::write_file(src / "sub/err.ipynb",
                     nbrepro::testing::make_notebook({{"code", "import os"}, {"code", "open('/nonexistent/data.csv')"}}).dump());
    util::write_file(src / "slow.ipynb", nbrepro::testing::make_notebook({{"code", "import time\ntime.sleep(60)"}}).dump());
    util::write_file(src / "odd_kernel.ipynb",
                     nbrepro::testing::make_notebook({{"code", "print(1)"}}, "conda-env-old-py").dump());
    Staged s(src.path());
    REQUIRE(s.notebooks.size() == 4);
    // Sorted: odd_kernel, ok, slow, sub/err

    auto ok = s.run(1);
    CHECK(ok.status == ExecutionStatus::Success);
    CHECK(ok.errors.empty());
    REQUIRE(ok.duration_s);
    CHECK(*ok.duration_s > 0);
    CHECK(ok.code_cell_count == 1);
    CHECK(ok.executed_notebook_path == (s.options.artifacts_root / "run/ok.ipynb").string());
    auto executed = notebook::parse_notebook(util::read_file(ok.executed_notebook_path));
    CHECK(executed.cells[0].outputs.at(0).payload.at("text/plain") == "42\n");
    CHECK(fs::exists(execution_log_path(s.options, "run", s.notebooks[1])));
    CHECK(s.runtime.containers() == 0);

    auto err = s.run(3);
    CHECK(err.status == ExecutionStatus::ErroredButCompleted);
    REQUIRE(err.errors.size() == 1);
    CHECK(err.errors[0].error_type == "FileNotFoundError");
    CHECK(err.errors[0].category == ErrorCategory::Data);
    CHECK(err.errors[0].cell_index == 1);

    auto odd = s.run(0);
    CHECK(odd.status == ExecutionStatus::Success);

    s.options.timeout = std::chrono::seconds(8);
    auto slow = s.run(2);
    CHECK(slow.status == ExecutionStatus::Timeout);
    CHECK(slow.errors.empty());
    REQUIRE(slow.duration_s);
}

TEST_CASE("missing kernels and vanished notebooks") {
    if (!nbrepro::testing::jupyter_available()) return;
    TempDir src;
    util::write_file(src / "a.ipynb", nbrepro::testing::make_notebook({{"code", "1"}}, "no-such-kernel-zz").dump());
    util::write_file(src / "b.ipynb", nbrepro::testing::make_notebook({{"code", "1"}}).dump());
    Staged s(src.path());
    s.options.fallback_kernel = "also-missing-kernel";
    auto a = s.run(0);
    CHECK(a.status == ExecutionStatus::KernelNotFound);
    CHECK_FALSE(a.status_reason.empty());

    auto ghost = s.notebooks[1];
    ghost.relative_path = "ghost.ipynb";
    auto original = corpus::load_notebook(s.repo, s.notebooks[1]);
    auto rec = execute_notebook(s.runtime, s.image, ghost, &original, "run", s.options);
    CHECK(rec.status == ExecutionStatus::NotebookNotFound);
}
