#include "nbrepro/corpus/repository.hpp"
#include "nbrepro/depinfer/imports.hpp"
#include "nbrepro/depinfer/python_lexer.hpp"
#include "nbrepro/depinfer/requirements.hpp"
#include "nbrepro/depinfer/synthesize.hpp"
#include "nbrepro/util/text.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace nbrepro;
using namespace nbrepro::depinfer;
using nbrepro::testing::TempDir;
using nlohmann::json;

namespace {

using Set = std::set<std::string>;

NotebookSource source_of(const std::string& path, const std::vector<std::string>& code) {
    std::vector<nbrepro::testing::CellSpec> cells;
    for (const auto& c : code) cells.push_back({"code", c});
    return {path, notebook::parse_notebook(nbrepro::testing::make_notebook(cells))};
}

corpus::Repository repo_from(const TempDir& src, const TempDir& work) {
    return corpus::acquire_repository(src.path().string(), work.path()).repository;
}

} // namespace

TEST_CASE("import oracle: 30 hand-labeled notebooks") {
    auto labels = json::parse(util::read_file(nbrepro::testing::fixtures_dir() / "oracles/import_labels.json"));
    REQUIRE(labels.size() == 30);
    for (const auto& entry : labels) {
        CAPTURE(entry["name"].get<std::string>());
        Set found;
        for (const auto& cell : entry["code_cells"]) {
            auto names = extract_imports(cell.get<std::string>());
            found.insert(names.begin(), names.end());
        }
        CHECK(filter_standard_library(found) == entry["expected_imports"].get<Set>());
    }
}

TEST_CASE("stdlib table covers CPython 3.10 top-level modules") {
    for (const char* name : {"os", "sys", "json", "re", "asyncio", "tkinter", "distutils", "__future__", "typing",
                             "dataclasses", "zoneinfo", "graphlib", "sqlite3", "xml", "urllib", "concurrent"})
        CHECK_MESSAGE(is_stdlib_module(name), name);
    for (const char* name : {"numpy", "pandas", "tomllib", "requests", "IPython"}) CHECK_FALSE_MESSAGE(is_stdlib_module(name), name);
    CHECK(python_stdlib_modules().size() > 200);
}

TEST_CASE("alias table maps import names to distributions") {
    CHECK(map_import_to_distribution("sklearn") == "scikit-learn");
    CHECK(map_import_to_distribution("cv2") == "opencv-python");
    CHECK(map_import_to_distribution("PIL") == "Pillow");
    CHECK(map_import_to_distribution("yaml") == "PyYAML");
    CHECK(map_import_to_distribution("bs4") == "beautifulsoup4");
    CHECK(map_import_to_distribution("numpy") == "numpy");

    AliasTable t;
    t.load("# comment\nfoo   foo-dist\n\nbar bar-dist\nfoo foo-override\n");
    CHECK(t.size() == 2);
    CHECK(t.map("foo") == "foo-override");
    CHECK(t.map("unknown") == "unknown");
}

TEST_CASE("lexer survives broken input") {
    auto toks = pysrc::tokenize("x = 'unterminated\nprint((1, 2]\n\"\"\"open");
    CHECK_FALSE(toks.empty());
    auto lines = pysrc::logical_lines(pysrc::tokenize("a = (1,\n 2)\nb = 3\n"));
    CHECK(lines.size() == 2);
    auto magic = pysrc::tokenize("!pip install x\n%time y = 1\n");
    CHECK(magic.at(0).kind == pysrc::TokenKind::Magic);
}

TEST_CASE("requirement specifiers") {
    auto r = parse_requirement_spec("Pandas[excel,plot] >= 1.3, <2 ; python_version >= '3.8'", RequirementOrigin::DeclaredRequirements);
    REQUIRE(r);
    CHECK(r->distribution_name == "pandas");
    CHECK(r->extras == "[excel,plot]");
    CHECK(r->version_constraint == ">=1.3,<2");
    CHECK(r->marker == "python_version >= '3.8'");
    CHECK(r->to_line() == "pandas[excel,plot]>=1.3,<2; python_version >= '3.8'");

    CHECK(normalize_distribution_name("Foo__Bar.baz") == "foo-bar-baz");
    auto vcs = parse_requirement_spec("git+https://github.com/a/b.git#egg=b", RequirementOrigin::DeclaredRequirements);
    REQUIRE(vcs);
    CHECK(vcs->opaque_line == "git+https://github.com/a/b.git#egg=b");
    CHECK(vcs->distribution_name == "b");
    auto direct = parse_requirement_spec("pkg @ https://example.org/pkg-1.0.tar.gz", RequirementOrigin::DeclaredRequirements);
    REQUIRE(direct);
    CHECK(direct->distribution_name == "pkg");
    CHECK_FALSE(parse_requirement_spec("   ", RequirementOrigin::DeclaredRequirements).has_value());
}

TEST_CASE("requirements manifests: comments, continuations, options and bad lines") {
    auto m = parse_requirements_manifest(
        "# header\nnumpy==1.21.0  # pinned\n--index-url https://example.org/simple\nscipy>=1.7,\\\n <2\n"
        "-r other.txt\n-e git+https://github.com/x/y.git#egg=y\n@@@ not a spec\nmatplotlib\n");
    std::vector<std::string> names;
    for (const auto& r : m.requirements) names.push_back(r.distribution_name);
    CHECK(names == std::vector<std::string>{"numpy", "scipy", "y", "matplotlib"});
    CHECK(m.requirements[0].version_constraint == "==1.21.0");
    CHECK(m.requirements[1].version_constraint == ">=1.7,<2");
    CHECK(m.requirements[2].opaque_line == "-e git+https://github.com/x/y.git#egg=y");
    CHECK(m.warnings.size() >= 2); // -r include and the malformed line
}

TEST_CASE("setup.py install_requires is read statically") {
    auto m = parse_setup_manifest(
        "from setuptools import setup\nsetup(name='x',\n      install_requires=[\n        'requests>=2',  # net\n"
        "        \"tqdm\",\n      ],\n      extras_require={'dev': ['pytest']})\n");
    REQUIRE(m.requirements.size() == 2);
    CHECK(m.requirements[0].distribution_name == "requests");
    CHECK(m.requirements[1].distribution_name == "tqdm");
    CHECK(m.requirements[0].origin == RequirementOrigin::DeclaredSetup);

    auto dynamic = parse_setup_manifest("setup(install_requires=open('req.txt').read().split())");
    CHECK(dynamic.requirements.empty());
    CHECK_FALSE(dynamic.warnings.empty());
}

TEST_CASE("notebook install lines") {
    auto m = parse_notebook_installs("!pip install -q seaborn==0.11 'plotly>=5'\n%pip install --upgrade xgboost\n!pip install -r req.txt\n!conda install foo\nimport os");
    std::vector<std::string> names;
    for (const auto& r : m.requirements) names.push_back(r.distribution_name);
    CHECK(names == std::vector<std::string>{"seaborn", "plotly", "xgboost"});
    CHECK(m.requirements[0].origin == RequirementOrigin::DeclaredNotebookInstall);
}

TEST_CASE("merge: declared wins, stdlib dropped, sorted output") {
    std::vector<std::string> warnings;
    auto numpy = *parse_requirement_spec("numpy==1.20", RequirementOrigin::DeclaredRequirements, "requirements.txt");
    auto json_pkg = *parse_requirement_spec("json", RequirementOrigin::DeclaredRequirements, "requirements.txt");
    auto merged = merge_requirements({{numpy, json_pkg}}, {"numpy", "pandas", "os"}, &warnings);
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].distribution_name == "numpy");
    CHECK(merged[0].version_constraint == "==1.20");
    CHECK(merged[1].distribution_name == "pandas");
    CHECK(merged[1].origin == RequirementOrigin::InferredImport);
    CHECK(render_manifest(merged) == "numpy==1.20\npandas\n");
}

TEST_CASE("synthesis for a repository without manifests infers from imports") {
    TempDir src, work;
    util::write_file(src / "helpers.py", "def f(): pass\n");
    util::write_file(src / "pkg/__init__.py", "");
    auto repo = repo_from(src, work);
    auto spec = synthesize_dependency_spec(
        repo, {source_of("a.ipynb", {"import numpy as np\nimport helpers\nimport pkg.sub\nimport os",
                                     "from sklearn import svm\nimport cv2"})});
    CHECK(spec.synthesized_manifest == "numpy\nopencv-python\nscikit-learn\n");
    CHECK_FALSE(spec.authoritative_requirements.has_value());
    for (const auto& r : spec.requirements) CHECK(r.origin == RequirementOrigin::InferredImport);
}

TEST_CASE("synthesis with a declared manifest keeps pins and adds missing imports") {
    TempDir src, work;
    util::write_file(src / "requirements.txt", "pandas==1.3.5\n");
    util::write_file(src / "nested/requirements.txt", "flask\n");
    auto repo = repo_from(src, work);
    auto spec = synthesize_dependency_spec(repo, {source_of("n.ipynb", {"import pandas\nimport matplotlib.pyplot as plt"})});
    CHECK(spec.authoritative_requirements == "requirements.txt");
    CHECK(spec.synthesized_manifest == "matplotlib\npandas==1.3.5\n");
}

TEST_CASE("notebook install scanning can be disabled") {
    TempDir src, work;
    auto repo = repo_from(src, work);
    auto nb = source_of("n.ipynb", {"!pip install lightgbm==3.3.2\nimport lightgbm"});
    CHECK(synthesize_dependency_spec(repo, {nb}).synthesized_manifest == "lightgbm==3.3.2\n");
    InferenceOptions off;
    off.scan_notebook_installs = false;
    CHECK(synthesize_dependency_spec(repo, {nb}, off).synthesized_manifest == "lightgbm\n");
}

TEST_CASE("custom alias tables extend the builtin one") {
    TempDir src, work;
    auto repo = repo_from(src, work);
    AliasTable table = AliasTable::builtin();
    table.load("internal_sdk acme-sdk\n");
    InferenceOptions o;
    o.aliases = &table;
    auto spec = synthesize_dependency_spec(repo, {source_of("n.ipynb", {"import internal_sdk\nimport sklearn"})}, o);
    CHECK(spec.synthesized_manifest == "acme-sdk\nscikit-learn\n");
}

TEST_CASE("synthesis is deterministic and never emits stdlib names") {
    TempDir src, work;
    util::write_file(src / "requirements.txt", "os\nsys\nrequests\n");
    auto repo = repo_from(src, work);
    auto nbs = std::vector{source_of("a.ipynb", {"import json, re, yaml"}), source_of("b.ipynb", {"import collections"})};
    auto first = synthesize_dependency_spec(repo, nbs);
    for (int i = 0; i < 20; ++i) CHECK(synthesize_dependency_spec(repo, nbs) == first);
    for (const auto& r : first.requirements) CHECK_FALSE(is_stdlib_module(r.distribution_name));
    CHECK(first.synthesized_manifest == "pyyaml\nrequests\n");
}
