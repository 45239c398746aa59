#include "random_store.hpp"

#include "nbrepro/corpus/identity.hpp"
#include "nbrepro/outcomes/outcomes.hpp"

namespace nbrepro::testing {

namespace {

template <class T, std::size_t N>
T pick(std::mt19937& rng, const T (&items)[N]) {
    return items[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

bool coin(std::mt19937& rng, double p) { return std::bernoulli_distribution(p)(rng); }

int between(std::mt19937& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

} // namespace

RandomStoreShape populate_random_store(store::Store& store, std::mt19937& rng) {
    static const char* kErrors[] = {"ModuleNotFoundError", "FileNotFoundError", "KeyError", "SyntaxError",
                                    "TypeError",           "NameError",         "CustomError"};
    static const char* kBaselineStatus[] = {"Success", "Sucess", "KeyError", "<Skipping notebook>",
                                            "Install Dependency Error", "File Not Found Error", ""};
    static const corpus::RunStage kStages[] = {corpus::RunStage::Acquired, corpus::RunStage::Inferred,
                                               corpus::RunStage::Built, corpus::RunStage::Executed,
                                               corpus::RunStage::Compared};
    RandomStoreShape shape;
    std::vector<std::pair<std::string, std::string>> notebook_runs; // notebook id, run id (may be empty)
    const int repos = between(rng, 0, 8);
    for (int r = 0; r < repos; ++r) {
        corpus::Repository repo;
        repo.url = "https://github.com/rand/r" + std::to_string(r) + "-" + std::to_string(rng());
        repo.repository_id = corpus::repository_id_for(repo.url);
        repo.local_path = "/tmp/" + repo.repository_id;
        repo.accessible = coin(rng, 0.9);
        repo.has_requirements_file = coin(rng, 0.5);
        if (repo.has_requirements_file) repo.requirements_manifests = {"requirements.txt"};
        store.upsert_repository(repo);
        ++shape.repositories;

        std::vector<store::NotebookRow> rows;
        const int nbs = between(rng, 0, 6);
        for (int n = 0; n < nbs; ++n) {
            store::NotebookRow row;
            row.descriptor.repository_id = repo.repository_id;
            row.descriptor.relative_path = "nb" + std::to_string(n) + ".ipynb";
            row.descriptor.notebook_id = corpus::notebook_id_for(repo.repository_id, row.descriptor.relative_path);
            row.descriptor.kernel_language = "python";
            row.code_cells = between(rng, 0, 10);
            row.nondeterministic = coin(rng, 0.25);
            if (row.nondeterministic) row.nondeterminism_patterns = {"random.*"};
            rows.push_back(row);
        }
        store.replace_notebooks(repo.repository_id, rows);
        shape.notebooks += nbs;

        std::string run_id;
        if (coin(rng, 0.8)) {
            corpus::RunRecord run;
            run.run_id = corpus::new_run_id();
            run.repository_id = repo.repository_id;
            run.invocation_id = "inv";
            run.started_at = "2024-01-01T00:00:00.000Z";
            run.finished_at = "2024-01-01T00:01:00.000Z";
            run.stage = pick(rng, kStages);
            if (coin(rng, 0.85)) run.provisioning_status = pick(rng, corpus::kAllProvisioningStatuses);
            store.save_run(run);
            run_id = run.run_id;
        }

        for (const auto& row : rows) {
            notebook_runs.emplace_back(row.descriptor.notebook_id, run_id);
            if (run_id.empty() || !coin(rng, 0.8)) continue;
            executor::ExecutionRecord e;
            e.notebook_id = row.descriptor.notebook_id;
            e.run_id = run_id;
            e.status = pick(rng, executor::kAllExecutionStatuses);
            if (e.status != executor::ExecutionStatus::Skipped) e.duration_s = between(rng, 1, 100) / 10.0;
            e.code_cell_count = row.code_cells;
            if (e.status == executor::ExecutionStatus::ErroredButCompleted || coin(rng, 0.1)) {
                const int k = between(rng, e.status == executor::ExecutionStatus::ErroredButCompleted ? 1 : 0, 3);
                for (int i = 0; i < k; ++i) {
                    executor::ExecutionError err;
                    err.error_type = pick(rng, kErrors);
                    err.category = executor::classify_error(err.error_type).category;
                    err.cell_index = i;
                    e.errors.push_back(err);
                }
            }
            store.save_execution(e);
            if (row.code_cells > 0 && coin(rng, 0.7)) {
                compare::ReproducibilityMetrics m;
                m.notebook_id = e.notebook_id;
                m.run_id = run_id;
                m.total_code_cells = row.code_cells;
                m.identical_count = between(rng, 0, row.code_cells);
                m.different_count = row.code_cells - m.identical_count;
                for (int i = 0; i < m.identical_count; ++i) m.identical_indices.push_back(i);
                for (int i = m.identical_count; i < row.code_cells; ++i) m.different_indices.push_back(i);
                m.score = static_cast<double>(m.identical_count) / row.code_cells;
                store.save_metrics(m);
            }
        }
    }

    std::vector<outcomes::BaselineRecord> baseline;
    for (const auto& [nid, run] : notebook_runs) {
        if (!coin(rng, 0.7)) continue;
        outcomes::BaselineRecord b;
        b.notebook_id = nid;
        b.prev_dependency_install = coin(rng, 0.3) ? outcomes::DependencyInstall::Fail : outcomes::DependencyInstall::Success;
        b.prev_execution_status = pick(rng, kBaselineStatus);
        if (coin(rng, 0.5)) b.prev_diff_cells = between(rng, 0, 5);
        baseline.push_back(b);
    }
    const int unmatched = between(rng, 0, 3);
    for (int i = 0; i < unmatched; ++i)
        baseline.push_back({"unmatched-" + std::to_string(i), outcomes::DependencyInstall::Fail, "", std::nullopt, std::nullopt});
    store.replace_baseline(baseline);
    shape.baseline_rows = static_cast<int>(baseline.size());

    std::vector<outcomes::Assignment> assignments;
    for (const auto& b : baseline) {
        for (const auto& [nid, run] : notebook_runs) {
            if (nid != b.notebook_id || run.empty()) continue;
            outcomes::CurrentResult current;
            current.execution = store.execution(nid, run);
            current.metrics = store.metrics(nid, run);
            current.provisioning = store.run(run)->provisioning_status;
            auto a = outcomes::assign_outcome_class(b, current);
            a.notebook_id = nid;
            a.run_id = run;
            assignments.push_back(a);
        }
    }
    store.save_assignments(assignments);
    shape.assignments = static_cast<int>(assignments.size());
    return shape;
}

} // namespace nbrepro::testing
