#include "nbrepro/corpus/identity.hpp"
#include "nbrepro/store/store.hpp"
#include "nbrepro/util/text.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <sqlite3.h>

#include <thread>

using namespace nbrepro;
using nbrepro::testing::TempDir;

namespace {

corpus::Repository repo(const std::string& url, int notebooks = 0) {
    corpus::Repository r;
    r.url = url;
    r.repository_id = corpus::repository_id_for(url);
    r.local_path = "/tmp/" + r.repository_id;
    r.accessible = true;
    r.has_requirements_file = true;
    r.notebook_count = notebooks;
    r.requirements_manifests = {"requirements.txt"};
    return r;
}

store::NotebookRow nb_row(const corpus::Repository& r, const std::string& path) {
    store::NotebookRow row;
    row.descriptor.repository_id = r.repository_id;
    row.descriptor.relative_path = path;
    row.descriptor.notebook_id = corpus::notebook_id_for(r.repository_id, path);
    row.descriptor.kernel_name = "python3";
    row.descriptor.kernel_language = "python";
    row.descriptor.nbformat_major = 4;
    row.descriptor.nbformat_minor = 5;
    row.code_cells = 3;
    row.markdown_cells = 1;
    row.nondeterministic = true;
    row.nondeterminism_patterns = {"random.*"};
    return row;
}

corpus::RunRecord run(const corpus::Repository& r, const std::string& invocation, const std::string& started) {
    corpus::RunRecord run;
    run.run_id = corpus::new_run_id();
    run.repository_id = r.repository_id;
    run.invocation_id = invocation;
    run.started_at = started;
    run.finished_at = started;
    run.revision = "abc";
    run.stage = corpus::RunStage::Compared;
    run.provisioning_status = corpus::ProvisioningStatus::EnvironmentBuilt;
    run.image_reference = "repro/x:y";
    return run;
}

executor::ExecutionRecord execution(const std::string& nid, const std::string& run_id) {
    executor::ExecutionRecord e;
    e.notebook_id = nid;
    e.run_id = run_id;
    e.status = executor::ExecutionStatus::ErroredButCompleted;
    e.duration_s = 2.5;
    e.code_cell_count = 3;
    e.markdown_code_ratio = 1.0 / 3;
    e.executed_notebook_path = "/a/b.ipynb";
    e.errors = {{"KeyError", executor::ErrorCategory::Logic, "'x'", 2, 1, false},
                {"DeadKernelError", executor::ErrorCategory::Logic, "died", std::nullopt, 1, true}};
    return e;
}

compare::ReproducibilityMetrics metrics(const std::string& nid, const std::string& run_id) {
    compare::ReproducibilityMetrics m;
    m.notebook_id = nid;
    m.run_id = run_id;
    m.identical_count = 1;
    m.different_count = 1;
    m.nondeterministic_count = 1;
    m.identical_indices = {0};
    m.different_indices = {1};
    m.nondeterministic_indices = {2};
    m.total_code_cells = 3;
    m.score = 1.0 / 3;
    m.cells = {{0, compare::Verdict::Identical, {}},
               {1, compare::Verdict::Different, {}},
               {2, compare::Verdict::NonDeterministic, {"random.*"}}};
    return m;
}

} // namespace

TEST_CASE("entities round-trip through the store") {
    TempDir dir;
    store::Store s(dir / "db.sqlite");
    auto r = repo("https://github.com/a/b");
    s.upsert_repository(r);
    auto nb = nb_row(r, "x.ipynb");
    s.replace_notebooks(r.repository_id, std::vector<store::NotebookRow>{nb});
    auto stored_repo = s.repository(r.repository_id);
    REQUIRE(stored_repo);
    r.notebook_count = 1;
    CHECK(*stored_repo == r);
    CHECK(s.notebook(nb.descriptor.notebook_id) == nb);

    auto ru = run(r, "inv1", "2024-01-01T00:00:00.000Z");
    s.save_run(ru);
    CHECK(s.run(ru.run_id) == ru);

    store::StoredSpec spec;
    spec.synthesized_manifest = "numpy\n";
    spec.dockerfile = "FROM x\n";
    spec.requirements = {*depinfer::parse_requirement_spec("numpy", depinfer::RequirementOrigin::InferredImport, "x.ipynb")};
    spec.warnings = {"w"};
    s.save_dependency_spec(ru.run_id, spec);
    CHECK(s.dependency_spec(ru.run_id) == spec);

    auto e = execution(nb.descriptor.notebook_id, ru.run_id);
    s.save_execution(e);
    CHECK(s.execution(e.notebook_id, ru.run_id) == e);
    CHECK(s.executions(ru.run_id) == std::vector<executor::ExecutionRecord>{e});

    auto m = metrics(nb.descriptor.notebook_id, ru.run_id);
    s.save_metrics(m);
    CHECK(s.metrics(m.notebook_id, ru.run_id) == m);
    CHECK(s.metrics_for_run(ru.run_id).size() == 1);

    outcomes::BaselineRecord b{nb.descriptor.notebook_id, outcomes::DependencyInstall::Fail, "Install Dependency Error",
                               std::nullopt, 1.5};
    s.replace_baseline({b});
    CHECK(s.baseline() == std::vector<outcomes::BaselineRecord>{b});

    outcomes::Assignment a{nb.descriptor.notebook_id, ru.run_id, outcomes::OutcomeClass::A_EnvironmentResolved, true, "why"};
    s.save_assignments({a});
    auto as = s.assignments(ru.run_id);
    REQUIRE(as.size() == 1);
    CHECK(as[0].outcome == outcomes::OutcomeClass::A_EnvironmentResolved);
    CHECK(as[0].baseline_dependency_failure);
    CHECK(s.integrity_violations() == 0);
}

TEST_CASE("state persists across reopen") {
    TempDir dir;
    auto r = repo("https://github.com/a/b");
    {
        store::Store s(dir / "db.sqlite");
        s.upsert_repository(r);
        s.save_run(run(r, "inv", "2024-01-01T00:00:00.000Z"));
    }
    store::Store again(dir / "db.sqlite");
    CHECK(again.repositories().size() == 1);
    CHECK(again.run_count() == 1);
}

TEST_CASE("one run per repository per invocation") {
    TempDir dir;
    store::Store s(dir / "db.sqlite");
    auto r = repo("https://github.com/a/b");
    s.upsert_repository(r);
    s.save_run(run(r, "inv", "2024-01-01T00:00:00.000Z"));
    CHECK_THROWS_AS(s.save_run(run(r, "inv", "2024-01-01T00:00:01.000Z")), store::StoreError);
    s.save_run(run(r, "inv2", "2024-01-02T00:00:00.000Z"));
    CHECK(s.run_count() == 2);
}

TEST_CASE("constraint violations are rejected") {
    TempDir dir;
    store::Store s(dir / "db.sqlite");
    auto r = repo("https://github.com/a/b");
    s.upsert_repository(r);
    auto bad = run(r, "inv", "2024-01-02T00:00:00.000Z");
    bad.finished_at = "2024-01-01T00:00:00.000Z";
    CHECK_THROWS_AS(s.save_run(bad), store::StoreError);

    auto ok = run(r, "inv", "2024-01-02T00:00:00.000Z");
    s.save_run(ok);
    auto nb = nb_row(r, "x.ipynb");
    s.replace_notebooks(r.repository_id, std::vector<store::NotebookRow>{nb});
    auto e = execution(nb.descriptor.notebook_id, ok.run_id);
    e.duration_s.reset();
    CHECK_THROWS_AS(s.save_execution(e), store::StoreError);

    auto orphan = execution("no-such-notebook", ok.run_id);
    CHECK_THROWS_AS(s.save_execution(orphan), store::StoreError);
    CHECK(s.integrity_violations() == 0);
}

TEST_CASE("replacing notebooks removes vanished ones with their results") {
    TempDir dir;
    store::Store s(dir / "db.sqlite");
    auto r = repo("https://github.com/a/b");
    s.upsert_repository(r);
    auto a = nb_row(r, "a.ipynb");
    auto b = nb_row(r, "b.ipynb");
    s.replace_notebooks(r.repository_id, std::vector<store::NotebookRow>{a, b});
    CHECK(s.repository(r.repository_id)->notebook_count == 2);
    auto ru = run(r, "inv", "2024-01-01T00:00:00.000Z");
    s.save_run(ru);
    s.save_execution(execution(b.descriptor.notebook_id, ru.run_id));
    s.save_metrics(metrics(b.descriptor.notebook_id, ru.run_id));

    s.replace_notebooks(r.repository_id, std::vector<store::NotebookRow>{a});
    CHECK(s.notebooks(r.repository_id).size() == 1);
    CHECK(s.repository(r.repository_id)->notebook_count == 1);
    CHECK(s.executions(ru.run_id).empty());
    CHECK(s.metrics_for_run(ru.run_id).empty());
    CHECK(s.integrity_violations() == 0);
}

TEST_CASE("latest runs and invocations") {
    TempDir dir;
    store::Store s(dir / "db.sqlite");
    auto r1 = repo("https://github.com/a/one");
    auto r2 = repo("https://github.com/a/two");
    s.upsert_repository(r1);
    s.upsert_repository(r2);
    s.save_run(run(r1, "old", "2024-01-01T00:00:00.000Z"));
    s.save_run(run(r2, "old", "2024-01-01T00:00:00.000Z"));
    auto newest = run(r1, "new", "2024-02-01T00:00:00.000Z");
    s.save_run(newest);
    CHECK(s.latest_invocation() == "new");
    auto latest = s.latest_runs();
    REQUIRE(latest.size() == 2);
    for (const auto& l : latest)
        if (l.repository_id == r1.repository_id) CHECK(l.run_id == newest.run_id);
    CHECK(s.runs_for_invocation("old").size() == 2);
}

TEST_CASE("foreign schema versions are refused") {
    TempDir dir;
    { store::Store s(dir / "db.sqlite"); }
    sqlite3* db = nullptr;
    REQUIRE(sqlite3_open((dir / "db.sqlite").c_str(), &db) == SQLITE_OK);
    sqlite3_exec(db, "UPDATE schema_info SET version = 99", nullptr, nullptr, nullptr);
    sqlite3_close(db);
    CHECK_THROWS_AS(store::Store(dir / "db.sqlite"), store::StoreError);
}

TEST_CASE("an unopenable path is a StoreError") {
    CHECK_THROWS_AS(store::Store("/proc/nbrepro/definitely/not/here.sqlite"), store::StoreError);
}

TEST_CASE("concurrent writers from a worker pool") {
    TempDir dir;
    store::Store s(dir / "db.sqlite");
    std::vector<std::thread> pool;
    for (int t = 0; t < 8; ++t)
        pool.emplace_back([&, t] {
            for (int i = 0; i < 10; ++i) {
                auto r = repo("https://github.com/t" + std::to_string(t) + "/r" + std::to_string(i));
                s.upsert_repository(r);
                auto nb = nb_row(r, "n.ipynb");
                s.replace_notebooks(r.repository_id, std::vector<store::NotebookRow>{nb});
                auto ru = run(r, "inv", "2024-01-01T00:00:00.000Z");
                s.save_run(ru);
                s.save_execution(execution(nb.descriptor.notebook_id, ru.run_id));
            }
        });
    for (auto& th : pool) th.join();
    CHECK(s.repositories().size() == 80);
    CHECK(s.runs_for_invocation("inv").size() == 80);
    CHECK(s.integrity_violations() == 0);
}
