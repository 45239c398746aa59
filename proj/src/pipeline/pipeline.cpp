#include "nbrepro/pipeline/pipeline.hpp"

#include "nbrepro/compare/compare.hpp"
#include "nbrepro/containerize/build.hpp"
#include "nbrepro/containerize/recipe.hpp"
#include "nbrepro/corpus/identity.hpp"
#include "nbrepro/corpus/repository.hpp"
#include "nbrepro/depinfer/synthesize.hpp"
#include "nbrepro/executor/execute.hpp"
#include "nbrepro/util/error.hpp"
#include "nbrepro/util/hash.hpp"
#include "nbrepro/util/text.hpp"

#include <atomic>
#include <set>
#include <thread>
#include <unordered_map>

namespace nbrepro::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

void validate_config(const PipelineConfig& c) {
    if (c.jobs < 1) throw ConfigError("--jobs must be at least 1");
    if (c.build_timeout.count() <= 0) throw ConfigError("--build-timeout must be positive");
    if (c.exec_timeout.count() <= 0) throw ConfigError("--exec-timeout must be positive");
    if (c.probe_timeout.count() <= 0) throw ConfigError("probe timeout must be positive");
    if (c.probe_attempts < 1) throw ConfigError("probe attempts must be at least 1");
    if (c.base_image.empty()) throw ConfigError("--base-image must not be empty");
    if (c.cpus && *c.cpus <= 0) throw ConfigError("cpu limit must be positive");
    if (c.alias_table) {
        std::error_code ec;
        if (!fs::is_regular_file(*c.alias_table, ec)) throw ConfigError("--alias-table file not found: " + c.alias_table->string());
    }
}

std::vector<std::string> expand_inputs(const std::vector<std::string>& values) {
    std::vector<std::string> out;
    for (const auto& v : values) {
        std::error_code ec;
        if (fs::is_regular_file(v, ec)) {
            for (const auto& raw : util::split_lines(util::read_file(v))) {
                auto line = util::trim(raw);
                if (!line.empty() && line.front() != '#') out.emplace_back(line);
            }
        } else if (!util::trim(v).empty()) {
            out.emplace_back(util::trim(v));
        }
    }
    return out;
}

EventLog::EventLog(const fs::path& file) {
    std::error_code ec;
    if (file.has_parent_path()) fs::create_directories(file.parent_path(), ec);
    out_.open(file, std::ios::app);
    if (!out_) throw Error("cannot open event log " + file.string());
}

void EventLog::emit(const std::string& event, json fields) {
    json record = {{"ts", util::utc_timestamp()}, {"event", event}};
    for (auto& [k, v] : fields.items()) record[k] = v;
    std::lock_guard lock(mutex_);
    out_ << record.dump() << '\n';
    out_.flush();
}

ExitCode StageReport::exit_code() const {
    if (!failed.empty() && failed.size() >= runs.size()) return ExitCode::Fatal;
    if (!failed.empty() || !incomplete.empty()) return ExitCode::Partial;
    return ExitCode::Complete;
}

namespace {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    for (auto& t : pool) t.join();
}

store::NotebookRow describe(const corpus::Repository& repo, const corpus::NotebookDescriptor& d) {
    store::NotebookRow row;
    row.descriptor = d;
    if (d.parse_failed) return row;
    auto nb = corpus::load_notebook(repo, d);
    row.code_cells = static_cast<int>(notebook::count_cells(nb, notebook::CellKind::Code));
    row.markdown_cells = static_cast<int>(notebook::count_cells(nb, notebook::CellKind::Markdown));
    row.raw_cells = static_cast<int>(notebook::count_cells(nb, notebook::CellKind::Raw));
    std::set<std::string> patterns;
    for (const auto& cell : notebook::code_cells(nb)) {
        auto m = compare::detect_nondeterminism(cell.source);
        patterns.insert(m.patterns.begin(), m.patterns.end());
    }
    row.nondeterministic = !patterns.empty();
    for (const auto& name : compare::nondeterminism_patterns())
        if (patterns.count(name)) row.nondeterminism_patterns.push_back(name);
    return row;
}

std::string first_line(std::string_view text) {
    auto t = util::trim(text);
    return std::string(t.substr(0, t.find('\n')));
}

} // namespace

Pipeline::Pipeline(PipelineConfig config, store::Store& store, containerize::ContainerRuntime* runtime, EventLog& events)
    : config_(std::move(config)), store_(store), runtime_(runtime), events_(events), aliases_(depinfer::AliasTable::builtin()) {
    validate_config(config_);
    if (config_.alias_table) aliases_.load_file(*config_.alias_table);
}

void Pipeline::emit(const corpus::RunRecord& run, const std::string& event, json fields) {
    fields["run_id"] = run.run_id;
    fields["repository_id"] = run.repository_id;
    fields["invocation_id"] = run.invocation_id;
    events_.emit(event, std::move(fields));
}

void Pipeline::finish(corpus::RunRecord& run) {
    run.finished_at = util::utc_timestamp();
    if (run.finished_at < run.started_at) run.finished_at = run.started_at;
    store_.save_run(run);
    json f = {{"stage", corpus::to_string(run.stage)}, {"status_reason", run.status_reason}};
    f["provisioning_status"] = run.provisioning_status ? json(corpus::to_string(*run.provisioning_status)) : json(nullptr);
    emit(run, "run_finished", f);
}

corpus::RunRecord Pipeline::process_input(const std::string& input, const std::string& invocation, Through through,
                                          StageReport& report, std::mutex& report_mutex) {
    corpus::RunRecord run;
    run.run_id = corpus::new_run_id();
    run.invocation_id = invocation;
    run.started_at = util::utc_timestamp();

    corpus::Repository repo;
    auto normalized = corpus::normalize_url(input);
    repo.url = normalized.value_or(std::string(util::trim(input)));
    repo.repository_id = corpus::repository_id_for(repo.url);
    run.repository_id = repo.repository_id;

    auto note = [&](std::vector<std::string>& list, const std::string& msg) {
        std::lock_guard lock(report_mutex);
        list.push_back(repo.url);
        report.messages.push_back(repo.url + ": " + msg);
    };
    auto invalid = [&](std::string reason) {
        run.provisioning_status = corpus::ProvisioningStatus::InvalidUrl;
        run.status_reason = std::move(reason);
        store_.upsert_repository(repo);
        finish(run);
        return run;
    };

    try {
        emit(run, "validate_started", {{"url", repo.url}});
        std::optional<corpus::ValidationResult> verdict;
        std::string transient;
        for (int attempt = 1; attempt <= config_.probe_attempts && !verdict; ++attempt) {
            try {
                verdict = corpus::validate_repository(input, {config_.probe_timeout, {}});
            } catch (const TransientError& e) {
                transient = e.what();
                emit(run, "validate_retry", {{"attempt", attempt}, {"error", transient}});
                if (attempt < config_.probe_attempts) std::this_thread::sleep_for(std::chrono::seconds(attempt));
            }
        }
        if (!verdict) {
            note(report.incomplete, "probe failed: " + transient);
            return invalid("probe failed after " + std::to_string(config_.probe_attempts) + " attempts: " + transient);
        }
        emit(run, "validated", {{"result", corpus::to_string(*verdict)}});
        if (*verdict == corpus::ValidationResult::Malformed) return invalid("malformed repository URL");
        if (*verdict == corpus::ValidationResult::RemovedOrPrivate) return invalid("repository removed or private");

        std::optional<corpus::Acquisition> acq;
        std::string clone_error;
        for (int attempt = 1; attempt <= 2 && !acq; ++attempt) {
            try {
                acq = corpus::acquire_repository(input, config_.artifacts_dir / "repos");
            } catch (const TransientError& e) {
                clone_error = e.what();
                emit(run, "acquire_retry", {{"attempt", attempt}, {"error", clone_error}});
            }
        }
        if (!acq) {
            note(report.incomplete, "acquisition failed: " + clone_error);
            return invalid("acquisition failed: " + clone_error);
        }
        repo = acq->repository;
        run.revision = acq->revision;
        store_.upsert_repository(repo);

        std::vector<store::NotebookRow> rows;
        bool any_python = false;
        for (const auto& d : corpus::discover_notebooks(repo)) {
            rows.push_back(describe(repo, d));
            any_python = any_python || corpus::is_python_notebook(d);
        }
        store_.replace_notebooks(repo.repository_id, rows);
        run.stage = corpus::RunStage::Acquired;
        store_.save_run(run);
        emit(run, "acquired", {{"revision", run.revision}, {"notebooks", rows.size()},
                               {"has_requirements_file", repo.has_requirements_file}});

        if (!any_python) {
            run.provisioning_status = corpus::ProvisioningStatus::NoPythonNotebooks;
            run.status_reason = rows.empty() ? "repository contains no notebooks" : "no notebook declares a python kernel";
            for (const auto& row : rows)
                store_.save_execution(executor::skipped_record(row.descriptor, nullptr, run.run_id, run.status_reason));
            finish(run);
            return run;
        }

        do_infer(run, repo);
        if (through == Through::Inferred) {
            finish(run);
            return run;
        }
        if (!runtime_) {
            run.status_reason = "container runtime unavailable; execution stages skipped";
            note(report.incomplete, run.status_reason);
            finish(run);
            return run;
        }
        do_execute(run);
        do_compare(run);
        finish(run);
    } catch (const std::exception& e) {
        run.status_reason = std::string("internal error: ") + e.what();
        note(report.failed, run.status_reason);
        try {
            store_.upsert_repository(repo);
            finish(run);
        } catch (const std::exception& inner) {
            events_.emit("store_error", {{"run_id", run.run_id}, {"error", inner.what()}});
        }
    }
    return run;
}

void Pipeline::do_infer(corpus::RunRecord& run, const corpus::Repository& repo) {
    std::vector<depinfer::NotebookSource> sources;
    for (const auto& row : store_.notebooks(repo.repository_id)) {
        if (!corpus::is_python_notebook(row.descriptor)) continue;
        sources.push_back({row.descriptor.relative_path, corpus::load_notebook(repo, row.descriptor)});
    }
    depinfer::InferenceOptions options;
    options.scan_notebook_installs = config_.scan_magic_installs;
    options.aliases = &aliases_;
    auto spec = depinfer::synthesize_dependency_spec(repo, sources, options);

    containerize::RecipeOptions recipe_options;
    recipe_options.base_image = config_.base_image;
    const auto dockerfile = containerize::generate_dockerfile(spec, recipe_options);
    const auto dir = config_.artifacts_dir / run.run_id;
    util::write_file(dir / containerize::kManifestFileName, spec.synthesized_manifest);
    util::write_file(dir / "Dockerfile", dockerfile);

    store_.save_dependency_spec(run.run_id, {spec.synthesized_manifest, dockerfile, spec.requirements, spec.warnings});
    run.stage = corpus::RunStage::Inferred;
    store_.save_run(run);
    emit(run, "inferred", {{"requirements", spec.requirements.size()},
                           {"manifest_sha256", util::sha256_hex(spec.synthesized_manifest)},
                           {"warnings", spec.warnings}});
}

bool Pipeline::do_execute(corpus::RunRecord& run) {
    auto repo = store_.repository(run.repository_id);
    auto spec = store_.dependency_spec(run.run_id);
    if (!repo || !spec) throw PrerequisiteError("run " + run.run_id + " has no inferred dependency spec; run `nbrepro infer` first");
    const auto rows = store_.notebooks(repo->repository_id);

    auto skip_all = [&](const std::string& reason) {
        for (const auto& row : rows)
            store_.save_execution(executor::skipped_record(row.descriptor, nullptr, run.run_id, reason));
    };

    containerize::BuildRecipe recipe;
    recipe.repository_id = repo->repository_id;
    recipe.dockerfile_text = spec->dockerfile;
    recipe.manifest_text = spec->synthesized_manifest;
    recipe.context_dir = config_.artifacts_dir / run.run_id / "context";
    recipe.image_tag = containerize::image_tag(repo->repository_id, run.run_id);
    containerize::stage_build_context(recipe, repo->local_path);

    try {
        containerize::cleanup_previous(*runtime_, repo->repository_id);
    } catch (const containerize::RuntimeError& e) {
        run.provisioning_status = corpus::ProvisioningStatus::BuildFailed;
        run.status_reason = std::string("container runtime: ") + e.what();
        skip_all("environment not built");
        run.stage = corpus::RunStage::Executed;
        return false;
    }
    emit(run, "cleaned", {{"image", containerize::image_repository(repo->repository_id)}});

    const auto build_log = config_.log_dir / run.run_id / "build.log";
    emit(run, "build_started", {{"tag", recipe.image_tag}});
    auto outcome = containerize::build_image(*runtime_, recipe, config_.build_timeout, build_log);
    if (auto* failure = std::get_if<containerize::BuildFailure>(&outcome)) {
        run.provisioning_status = corpus::ProvisioningStatus::BuildFailed;
        run.status_reason = "build failed in " + std::string(containerize::to_string(failure->phase)) + ": " +
                            first_line(containerize::log_tail(failure->log_excerpt, 1));
        emit(run, "build_failed", {{"phase", containerize::to_string(failure->phase)}, {"log", build_log.string()}});
        skip_all("environment not built");
        run.stage = corpus::RunStage::Executed;
        return false;
    }
    const auto image = std::get<containerize::ImageRef>(outcome);
    run.image_reference = image.tag;
    run.provisioning_status = corpus::ProvisioningStatus::EnvironmentBuilt;
    run.stage = corpus::RunStage::Built;
    store_.save_run(run);
    emit(run, "built", {{"tag", image.tag}, {"log", build_log.string()}});

    executor::ExecuteOptions eo;
    eo.timeout = config_.exec_timeout;
    eo.cpus = config_.cpus;
    eo.memory = config_.memory;
    eo.artifacts_root = config_.artifacts_dir;
    eo.log_root = config_.log_dir;

    int python = 0, kernel_missing = 0;
    for (const auto& row : rows) {
        const auto& d = row.descriptor;
        executor::ExecutionRecord rec;
        if (d.parse_failed) {
            rec = executor::skipped_record(d, nullptr, run.run_id, "notebook could not be parsed: " + d.parse_error);
        } else if (!corpus::is_python_notebook(d)) {
            auto original = corpus::load_notebook(*repo, d);
            rec = executor::skipped_record(d, &original, run.run_id,
                                           "non-python kernel '" + (d.kernel_language.empty() ? d.kernel_name : d.kernel_language) + "'");
        } else {
            ++python;
            auto original = corpus::load_notebook(*repo, d);
            rec = executor::execute_notebook(*runtime_, image, d, &original, run.run_id, eo);
            if (rec.status == executor::ExecutionStatus::KernelNotFound) ++kernel_missing;
        }
        store_.save_execution(rec);
        json errs = json::array();
        for (const auto& e : rec.errors)
            errs.push_back({{"type", e.error_type}, {"category", executor::to_string(e.category)},
                            {"cell_index", e.cell_index ? json(*e.cell_index) : json(nullptr)}, {"count", e.count}});
        emit(run, "executed", {{"notebook_id", d.notebook_id}, {"path", d.relative_path},
                               {"status", executor::to_string(rec.status)}, {"duration_s", rec.duration_s ? json(*rec.duration_s) : json(nullptr)},
                               {"errors", errs}});
    }
    if (python > 0 && kernel_missing == python) {
        run.provisioning_status = corpus::ProvisioningStatus::KernelNotFound;
        run.status_reason = "no notebook kernel could be started in the image";
    }
    if (!config_.keep_images) {
        try {
            containerize::cleanup_previous(*runtime_, repo->repository_id);
        } catch (const containerize::RuntimeError& e) {
            emit(run, "cleanup_failed", {{"error", e.what()}});
        }
    }
    run.stage = corpus::RunStage::Executed;
    store_.save_run(run);
    return true;
}

void Pipeline::do_compare(corpus::RunRecord& run) {
    auto repo = store_.repository(run.repository_id);
    if (!repo) throw PrerequisiteError("repository of run " + run.run_id + " is missing from the store");
    for (const auto& e : store_.executions(run.run_id)) {
        if (e.executed_notebook_path.empty()) continue;
        auto row = store_.notebook(e.notebook_id);
        if (!row) continue;
        try {
            auto original = corpus::load_notebook(*repo, row->descriptor);
            auto executed = notebook::parse_notebook(util::read_file(e.executed_notebook_path));
            auto m = compare::compute_metrics(original, executed);
            m.notebook_id = e.notebook_id;
            m.run_id = run.run_id;
            store_.save_metrics(m);
            util::write_file(config_.log_dir / run.run_id / (e.notebook_id + ".comparison.json"),
                             compare::comparison_to_json(m).dump(2) + "\n");
            emit(run, "compared", {{"notebook_id", e.notebook_id},
                                   {"score", m.score ? json(*m.score) : json(nullptr)},
                                   {"structural_mismatch", m.structural_mismatch}});
        } catch (const std::exception& ex) {
            emit(run, "compare_failed", {{"notebook_id", e.notebook_id}, {"error", ex.what()}});
        }
    }
    run.stage = corpus::RunStage::Compared;
    store_.save_run(run);
}

StageReport Pipeline::over_inputs(Through through) {
    StageReport report;
    report.invocation_id = util::random_hex_token(16);
    events_.emit("invocation_started", {{"invocation_id", report.invocation_id},
                                        {"stages", through == Through::Inferred ? "infer" : "run"},
                                        {"inputs", config_.inputs.size()}});

    std::vector<std::string> inputs;
    std::set<std::string> seen;
    for (const auto& in : config_.inputs) {
        auto key = corpus::normalize_url(in).value_or(std::string(util::trim(in)));
        if (seen.insert(key).second) inputs.push_back(in);
        else report.messages.push_back("duplicate input ignored: " + in);
    }

    std::vector<corpus::RunRecord> runs(inputs.size());
    std::mutex report_mutex;
    parallel_for(inputs.size(), config_.jobs, [&](std::size_t i) {
        runs[i] = process_input(inputs[i], report.invocation_id, through, report, report_mutex);
    });
    report.runs = std::move(runs);
    events_.emit("invocation_finished", {{"invocation_id", report.invocation_id}, {"runs", report.runs.size()},
                                         {"incomplete", report.incomplete.size()}, {"failed", report.failed.size()}});
    return report;
}

StageReport Pipeline::over_runs(corpus::RunStage wanted, bool compare_stage) {
    auto invocation = store_.latest_invocation();
    if (!invocation) throw PrerequisiteError("the store holds no runs; run `nbrepro infer` first");
    StageReport report;
    report.invocation_id = *invocation;
    std::vector<corpus::RunRecord> pending;
    std::vector<corpus::RunRecord> others;
    for (auto& r : store_.runs_for_invocation(*invocation)) {
        const bool eligible = r.stage == wanted && (compare_stage || !r.provisioning_status);
        (eligible ? pending : others).push_back(std::move(r));
    }
    if (pending.empty()) {
        if (compare_stage)
            throw PrerequisiteError("no executed artifacts for run(s) of invocation " + *invocation +
                                    "; run `nbrepro execute` first");
        throw PrerequisiteError("no inferred runs awaiting execution in invocation " + *invocation +
                                "; run `nbrepro infer` first");
    }
    if (!compare_stage && !runtime_) throw PrerequisiteError("no container runtime (docker or podman) is available");

    std::mutex report_mutex;
    parallel_for(pending.size(), config_.jobs, [&](std::size_t i) {
        auto& run = pending[i];
        try {
            if (compare_stage) {
                do_compare(run);
            } else if (do_execute(run)) {
                store_.save_run(run);
            }
            finish(run);
        } catch (const std::exception& e) {
            run.status_reason = std::string("internal error: ") + e.what();
            std::lock_guard lock(report_mutex);
            report.failed.push_back(run.repository_id);
            report.messages.push_back(run.repository_id + ": " + run.status_reason);
            try {
                finish(run);
            } catch (const std::exception&) {
            }
        }
    });
    report.runs = std::move(pending);
    report.runs.insert(report.runs.end(), others.begin(), others.end());
    return report;
}

StageReport Pipeline::infer() { return over_inputs(Through::Inferred); }
StageReport Pipeline::execute() { return over_runs(corpus::RunStage::Inferred, false); }
StageReport Pipeline::compare() { return over_runs(corpus::RunStage::Executed, true); }

StageReport Pipeline::run() {
    auto report = over_inputs(Through::Compared);
    if (config_.baseline) {
        auto cls = classify(*config_.baseline);
        report.messages.insert(report.messages.end(), cls.warnings.begin(), cls.warnings.end());
    }
    this->report();
    return report;
}

ClassifyReport Pipeline::classify(const fs::path& baseline_file) {
    std::error_code ec;
    if (!fs::is_regular_file(baseline_file, ec))
        throw ConfigError("baseline file not found: " + baseline_file.string() + " (--baseline)");
    auto parsed = outcomes::parse_baseline_csv(util::read_file(baseline_file));

    ClassifyReport out;
    out.warnings = parsed.warnings;
    out.baseline_rows = parsed.records.size();

    struct Target {
        corpus::RunRecord run;
    };
    std::unordered_map<std::string, corpus::RunRecord> latest;
    for (auto& r : store_.latest_runs()) latest.emplace(r.repository_id, r);
    std::unordered_map<std::string, std::string> notebook_repo;
    std::unordered_map<std::string, std::string> by_url_path;
    for (const auto& repo : store_.repositories())
        for (const auto& row : store_.notebooks(repo.repository_id)) {
            notebook_repo[row.descriptor.notebook_id] = repo.repository_id;
            by_url_path[repo.url + "::" + row.descriptor.relative_path] = row.descriptor.notebook_id;
        }

    std::vector<outcomes::BaselineRecord> resolved;
    for (auto rec : parsed.records) {
        if (!notebook_repo.count(rec.notebook_id)) {
            auto sep = rec.notebook_id.rfind("::");
            if (sep != std::string::npos) {
                auto url = corpus::normalize_url(rec.notebook_id.substr(0, sep));
                auto it = by_url_path.find(url.value_or("") + "::" + rec.notebook_id.substr(sep + 2));
                if (it != by_url_path.end()) rec.notebook_id = it->second;
            }
        }
        if (!notebook_repo.count(rec.notebook_id)) {
            ++out.unmatched_rows;
            out.warnings.push_back("baseline row for unknown notebook '" + rec.notebook_id + "'");
        }
        resolved.push_back(std::move(rec));
    }
    store_.replace_baseline(resolved);

    for (const auto& rec : resolved) {
        auto repo_it = notebook_repo.find(rec.notebook_id);
        if (repo_it == notebook_repo.end()) continue;
        auto run_it = latest.find(repo_it->second);
        if (run_it == latest.end()) continue;
        const auto& run = run_it->second;
        outcomes::CurrentResult current;
        current.provisioning = run.provisioning_status;
        current.execution = store_.execution(rec.notebook_id, run.run_id);
        current.metrics = store_.metrics(rec.notebook_id, run.run_id);
        auto a = outcomes::assign_outcome_class(rec, current);
        a.notebook_id = rec.notebook_id;
        a.run_id = run.run_id;
        out.assignments.push_back(std::move(a));
    }
    store_.save_assignments(out.assignments);
    out.resolution_rate_pct = outcomes::resolution_rate(out.assignments);

    std::string csv = "notebook_id,run_id,outcome_class,baseline_dependency_failure,rationale\n";
    for (const auto& a : out.assignments) {
        std::string rationale;
        for (char c : a.rationale) rationale += c == '"' ? std::string("\"\"") : std::string(1, c);
        csv += a.notebook_id + "," + a.run_id + "," + std::string(outcomes::to_string(a.outcome)) + "," +
               (a.baseline_dependency_failure ? "true" : "false") + ",\"" + rationale + "\"\n";
    }
    util::write_file(config_.report_dir / "outcomes.csv", csv);
    for (const auto& w : out.warnings) events_.emit("baseline_warning", {{"message", w}});
    events_.emit("classified", {{"assignments", out.assignments.size()}, {"unmatched", out.unmatched_rows}});
    return out;
}

report::CorpusSummary Pipeline::report() {
    auto summary = report::aggregate_corpus(store_);
    report::emit_reports(summary, config_.report_dir);
    events_.emit("report_written", {{"dir", config_.report_dir.string()}});
    return summary;
}

} // namespace nbrepro::pipeline
