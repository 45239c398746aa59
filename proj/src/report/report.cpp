#include "nbrepro/report/report.hpp"

#include "nbrepro/store/store.hpp"
#include "nbrepro/util/error.hpp"
#include "nbrepro/util/text.hpp"

#include <cstdio>
#include <set>
#include <unordered_map>

namespace nbrepro::report {

using nlohmann::json;

namespace {

constexpr const char* kNotExecuted = "NotExecuted";
constexpr const char* kUnattributed = "Unattributed";

std::optional<double> pct(long long part, long long whole) {
    if (whole <= 0) return std::nullopt;
    return 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

void finish(StratumRate& s) { s.rate_pct = pct(s.successes, s.notebooks); }

std::string baseline_label(const outcomes::BaselineRecord& b) {
    auto status = std::string(util::trim(b.prev_execution_status));
    if (status.empty()) return b.prev_dependency_install == outcomes::DependencyInstall::Fail ? "Install Dependency Error" : "Unknown";
    return status;
}

} // namespace

CorpusSnapshot snapshot_store(store::Store& store) {
    CorpusSnapshot snap;
    std::unordered_map<std::string, corpus::RunRecord> latest;
    for (auto& run : store.latest_runs()) latest.emplace(run.repository_id, run);
    for (auto& repo : store.repositories()) {
        RepositoryFacts facts;
        facts.repository = repo;
        if (auto it = latest.find(repo.repository_id); it != latest.end()) facts.run = it->second;
        for (auto& row : store.notebooks(repo.repository_id)) {
            NotebookFacts nb;
            nb.notebook_id = row.descriptor.notebook_id;
            nb.repository_id = repo.repository_id;
            nb.nondeterministic = row.nondeterministic;
            if (facts.run) {
                nb.execution = store.execution(nb.notebook_id, facts.run->run_id);
                nb.metrics = store.metrics(nb.notebook_id, facts.run->run_id);
            }
            snap.notebooks.push_back(std::move(nb));
        }
        if (facts.run) {
            auto a = store.assignments(facts.run->run_id);
            snap.assignments.insert(snap.assignments.end(), a.begin(), a.end());
        }
        snap.repositories.push_back(std::move(facts));
    }
    snap.baseline = store.baseline();
    return snap;
}

std::map<std::string, RequirementsSplit> success_rate_by_requirements(const CorpusSnapshot& snap) {
    std::unordered_map<std::string, bool> has_req;
    for (const auto& r : snap.repositories) has_req[r.repository.repository_id] = r.repository.has_requirements_file;
    std::unordered_map<std::string, const NotebookFacts*> by_id;
    for (const auto& n : snap.notebooks) by_id[n.notebook_id] = &n;

    RequirementsSplit current, baseline;
    for (const auto& n : snap.notebooks) {
        auto& s = has_req[n.repository_id] ? current.with_req : current.without_req;
        ++s.notebooks;
        if (n.execution && n.execution->status == executor::ExecutionStatus::Success) ++s.successes;
    }
    for (const auto& b : snap.baseline) {
        auto it = by_id.find(b.notebook_id);
        if (it == by_id.end()) continue;
        auto& s = has_req[it->second->repository_id] ? baseline.with_req : baseline.without_req;
        ++s.notebooks;
        if (outcomes::baseline_reach(b) == 3) ++s.successes;
    }
    for (auto* s : {&current.with_req, &current.without_req, &baseline.with_req, &baseline.without_req}) finish(*s);
    return {{"containerized", current}, {"baseline", baseline}};
}

std::optional<double> nondeterminism_prevalence(const CorpusSnapshot& snap) {
    if (snap.notebooks.empty()) return std::nullopt;
    long long flagged = 0;
    for (const auto& n : snap.notebooks) flagged += n.nondeterministic ? 1 : 0;
    return static_cast<double>(flagged) / static_cast<double>(snap.notebooks.size());
}

CorpusSummary aggregate(const CorpusSnapshot& snap) {
    CorpusSummary s;
    s.generated_at = util::utc_timestamp();

    for (auto st : corpus::kAllProvisioningStatuses) s.provisioning[std::string(corpus::to_string(st))] = 0;
    s.provisioning[kPending] = 0;
    std::unordered_map<std::string, bool> has_req;
    for (const auto& r : snap.repositories) {
        ++s.repositories;
        has_req[r.repository.repository_id] = r.repository.has_requirements_file;
        ++(r.repository.has_requirements_file ? s.repositories_with_requirements : s.repositories_without_requirements);
        const bool decided = r.run && r.run->provisioning_status;
        ++s.provisioning[decided ? std::string(corpus::to_string(*r.run->provisioning_status)) : kPending];
    }

    for (auto st : executor::kAllExecutionStatuses) s.execution_status[std::string(executor::to_string(st))] = 0;
    s.execution_status[kNotExecuted] = 0;
    for (auto c : executor::kAllErrorCategories) s.error_categories[std::string(executor::to_string(c))] = 0;
    s.error_categories[kUnattributed] = 0;
    for (auto c : compare::kAllScoreCategories) s.score_categories[std::string(compare::to_string(c))] = 0;

    double sum_with = 0, sum_without = 0, sum_all_with = 0, sum_all_without = 0;
    for (const auto& n : snap.notebooks) {
        ++s.notebooks;
        const bool success = n.execution && n.execution->status == executor::ExecutionStatus::Success;
        const std::string status = n.execution ? std::string(executor::to_string(n.execution->status)) : kNotExecuted;
        ++s.execution_status[status];
        if (success) {
            ++s.notebooks_zero_errors;
        } else {
            ++s.notebooks_with_errors;
            if (n.execution && !n.execution->errors.empty()) {
                const auto& first = n.execution->errors.front();
                ++s.error_types[first.error_type];
                ++s.error_categories[std::string(executor::to_string(first.category))];
            } else {
                ++s.error_types[status];
                ++s.error_categories[kUnattributed];
            }
        }

        const std::optional<double> score = n.metrics ? n.metrics->score : std::nullopt;
        ++s.score_categories[std::string(compare::to_string(compare::categorize_score(score)))];
        const bool req = has_req[n.repository_id];
        auto& stratum = req ? s.score_with_req : s.score_without_req;
        ++stratum.notebooks;
        if (score) {
            ++stratum.scored;
            (req ? sum_with : sum_without) += *score;
            (req ? sum_all_with : sum_all_without) += *score;
        }
        if (n.nondeterministic) ++s.nondeterministic_notebooks;
    }
    auto means = [](StratumScore& st, double scored_sum, double all_sum) {
        if (st.scored > 0) st.mean_scored = scored_sum / static_cast<double>(st.scored);
        if (st.notebooks > 0) st.mean_all = all_sum / static_cast<double>(st.notebooks);
    };
    means(s.score_with_req, sum_with, sum_all_with);
    means(s.score_without_req, sum_without, sum_all_without);
    s.nondeterminism_prevalence = nondeterminism_prevalence(snap);

    std::set<std::string> known;
    for (const auto& n : snap.notebooks) known.insert(n.notebook_id);
    for (const auto& b : snap.baseline) {
        ++s.baseline_records;
        if (!known.count(b.notebook_id)) ++s.baseline_unmatched;
        if (outcomes::baseline_reach(b) != 3) {
            ++s.baseline_errored;
            ++s.baseline_error_types[baseline_label(b)];
        }
    }
    auto rates = success_rate_by_requirements(snap);
    s.success_containerized = rates["containerized"];
    s.success_baseline = rates["baseline"];

    for (auto c : outcomes::kAllOutcomeClasses) s.outcome_classes[std::string(outcomes::to_string(c))] = 0;
    for (const auto& a : snap.assignments) {
        ++s.classified_notebooks;
        ++s.outcome_classes[std::string(outcomes::to_string(a.outcome))];
        if (a.baseline_dependency_failure) {
            ++s.resolution_denominator;
            if (a.outcome == outcomes::OutcomeClass::A_EnvironmentResolved) ++s.resolution_resolved;
        }
    }
    s.resolution_rate_pct = outcomes::resolution_rate(static_cast<std::size_t>(s.resolution_resolved),
                                                      static_cast<std::size_t>(s.resolution_denominator));
    return s;
}

CorpusSummary aggregate_corpus(store::Store& store) { return aggregate(snapshot_store(store)); }

std::vector<std::string> check_invariants(const CorpusSummary& s) {
    std::vector<std::string> bad;
    auto sum = [](const Histogram& h) {
        long long t = 0;
        for (const auto& [k, v] : h) t += v;
        return t;
    };
    auto expect = [&](const char* what, long long got, long long want) {
        if (got != want)
            bad.push_back(std::string(what) + " sums to " + std::to_string(got) + ", expected " + std::to_string(want));
    };
    expect("provisioning", sum(s.provisioning), s.repositories);
    expect("repositories by requirements", s.repositories_with_requirements + s.repositories_without_requirements,
           s.repositories);
    expect("zero/with errors", s.notebooks_zero_errors + s.notebooks_with_errors, s.notebooks);
    expect("execution_status", sum(s.execution_status), s.notebooks);
    expect("error_types", sum(s.error_types), s.notebooks_with_errors);
    expect("error_categories", sum(s.error_categories), s.notebooks_with_errors);
    expect("baseline_error_types", sum(s.baseline_error_types), s.baseline_errored);
    expect("score_categories", sum(s.score_categories), s.notebooks);
    expect("outcome_classes", sum(s.outcome_classes), s.classified_notebooks);
    expect("containerized success strata", s.success_containerized.with_req.notebooks + s.success_containerized.without_req.notebooks,
           s.notebooks);
    expect("score strata", s.score_with_req.notebooks + s.score_without_req.notebooks, s.notebooks);
    expect("baseline success strata", s.success_baseline.with_req.notebooks + s.success_baseline.without_req.notebooks,
           s.baseline_records - s.baseline_unmatched);
    if (s.resolution_resolved > s.resolution_denominator) bad.push_back("resolution numerator exceeds denominator");
    return bad;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> get_opt(const json& j, const char* key) {
    const auto& v = j.at(key);
    return v.is_null() ? std::nullopt : std::optional(v.get<double>());
}

json rate_json(const StratumRate& r) {
    return {{"notebooks", r.notebooks}, {"successes", r.successes}, {"rate_pct", opt(r.rate_pct)}};
}
StratumRate rate_from(const json& j) {
    return {j.at("notebooks").get<long long>(), j.at("successes").get<long long>(), get_opt(j, "rate_pct")};
}
json split_json(const RequirementsSplit& s) { return {{"with_req", rate_json(s.with_req)}, {"without_req", rate_json(s.without_req)}}; }
RequirementsSplit split_from(const json& j) { return {rate_from(j.at("with_req")), rate_from(j.at("without_req"))}; }
json score_json(const StratumScore& s) {
    return {{"notebooks", s.notebooks}, {"scored", s.scored}, {"mean_scored", opt(s.mean_scored)}, {"mean_all", opt(s.mean_all)}};
}
StratumScore score_from(const json& j) {
    return {j.at("notebooks").get<long long>(), j.at("scored").get<long long>(), get_opt(j, "mean_scored"),
            get_opt(j, "mean_all")};
}

} // namespace

json to_json(const CorpusSummary& s) {
    return {
        {"schema_version", s.schema_version},
        {"generated_at", s.generated_at},
        {"repositories",
         {{"total", s.repositories},
          {"with_requirements", s.repositories_with_requirements},
          {"without_requirements", s.repositories_without_requirements},
          {"provisioning", s.provisioning}}},
        {"notebooks",
         {{"total", s.notebooks},
          {"zero_errors", s.notebooks_zero_errors},
          {"with_errors", s.notebooks_with_errors},
          {"execution_status", s.execution_status},
          {"error_types", s.error_types},
          {"error_categories", s.error_categories}}},
        {"baseline",
         {{"records", s.baseline_records},
          {"unmatched", s.baseline_unmatched},
          {"errored", s.baseline_errored},
          {"error_types", s.baseline_error_types}}},
        {"success_rate_by_requirements",
         {{"containerized", split_json(s.success_containerized)}, {"baseline", split_json(s.success_baseline)}}},
        {"mean_score_by_requirements", {{"with_req", score_json(s.score_with_req)}, {"without_req", score_json(s.score_without_req)}}},
        {"score_categories", s.score_categories},
        {"nondeterminism", {{"notebooks", s.nondeterministic_notebooks}, {"prevalence", opt(s.nondeterminism_prevalence)}}},
        {"outcomes",
         {{"classified", s.classified_notebooks},
          {"classes", s.outcome_classes},
          {"resolution", {{"resolved", s.resolution_resolved}, {"denominator", s.resolution_denominator}, {"rate_pct", opt(s.resolution_rate_pct)}}}}},
    };
}

CorpusSummary summary_from_json(const json& j) {
    CorpusSummary s;
    s.schema_version = j.at("schema_version").get<std::string>();
    if (s.schema_version != kSchemaVersion)
        throw ConfigError("unsupported report schema '" + s.schema_version + "' (expected " + kSchemaVersion + ")");
    s.generated_at = j.at("generated_at").get<std::string>();
    const auto& r = j.at("repositories");
    s.repositories = r.at("total").get<long long>();
    s.repositories_with_requirements = r.at("with_requirements").get<long long>();
    s.repositories_without_requirements = r.at("without_requirements").get<long long>();
    s.provisioning = r.at("provisioning").get<Histogram>();
    const auto& n = j.at("notebooks");
    s.notebooks = n.at("total").get<long long>();
    s.notebooks_zero_errors = n.at("zero_errors").get<long long>();
    s.notebooks_with_errors = n.at("with_errors").get<long long>();
    s.execution_status = n.at("execution_status").get<Histogram>();
    s.error_types = n.at("error_types").get<Histogram>();
    s.error_categories = n.at("error_categories").get<Histogram>();
    const auto& b = j.at("baseline");
    s.baseline_records = b.at("records").get<long long>();
    s.baseline_unmatched = b.at("unmatched").get<long long>();
    s.baseline_errored = b.at("errored").get<long long>();
    s.baseline_error_types = b.at("error_types").get<Histogram>();
    const auto& sr = j.at("success_rate_by_requirements");
    s.success_containerized = split_from(sr.at("containerized"));
    s.success_baseline = split_from(sr.at("baseline"));
    const auto& ms = j.at("mean_score_by_requirements");
    s.score_with_req = score_from(ms.at("with_req"));
    s.score_without_req = score_from(ms.at("without_req"));
    s.score_categories = j.at("score_categories").get<Histogram>();
    const auto& nd = j.at("nondeterminism");
    s.nondeterministic_notebooks = nd.at("notebooks").get<long long>();
    s.nondeterminism_prevalence = get_opt(nd, "prevalence");
    const auto& o = j.at("outcomes");
    s.classified_notebooks = o.at("classified").get<long long>();
    s.outcome_classes = o.at("classes").get<Histogram>();
    const auto& res = o.at("resolution");
    s.resolution_resolved = res.at("resolved").get<long long>();
    s.resolution_denominator = res.at("denominator").get<long long>();
    s.resolution_rate_pct = get_opt(res, "rate_pct");
    return s;
}

namespace {

std::string fmt(std::optional<double> v, int decimals) {
    if (!v) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
    return buf;
}

std::string csv_field(const std::string& v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string render_csv(const CorpusSummary& s) {
    std::string out = "section,key,value\n";
    auto row = [&](const std::string& section, const std::string& key, const std::string& value) {
        out += csv_field(section) + "," + csv_field(key) + "," + csv_field(value) + "\n";
    };
    auto num = [](long long v) { return std::to_string(v); };
    row("meta", "schema_version", s.schema_version);
    row("meta", "generated_at", s.generated_at);
    row("repositories", "total", num(s.repositories));
    row("repositories", "with_requirements", num(s.repositories_with_requirements));
    row("repositories", "without_requirements", num(s.repositories_without_requirements));
    for (const auto& [k, v] : s.provisioning) row("provisioning", k, num(v));
    row("notebooks", "total", num(s.notebooks));
    row("notebooks", "zero_errors", num(s.notebooks_zero_errors));
    row("notebooks", "with_errors", num(s.notebooks_with_errors));
    for (const auto& [k, v] : s.execution_status) row("execution_status", k, num(v));
    for (const auto& [k, v] : s.error_types) row("error_types.containerized", k, num(v));
    for (const auto& [k, v] : s.error_categories) row("error_categories.containerized", k, num(v));
    for (const auto& [k, v] : s.baseline_error_types) row("error_types.baseline", k, num(v));
    row("success_rate_pct.containerized", "with_req", fmt(s.success_containerized.with_req.rate_pct, 4));
    row("success_rate_pct.containerized", "without_req", fmt(s.success_containerized.without_req.rate_pct, 4));
    row("success_rate_pct.baseline", "with_req", fmt(s.success_baseline.with_req.rate_pct, 4));
    row("success_rate_pct.baseline", "without_req", fmt(s.success_baseline.without_req.rate_pct, 4));
    row("mean_score", "with_req", fmt(s.score_with_req.mean_scored, 6));
    row("mean_score", "without_req", fmt(s.score_without_req.mean_scored, 6));
    for (const auto& [k, v] : s.score_categories) row("score_categories", k, num(v));
    row("nondeterminism", "notebooks", num(s.nondeterministic_notebooks));
    row("nondeterminism", "prevalence", fmt(s.nondeterminism_prevalence, 6));
    for (const auto& [k, v] : s.outcome_classes) row("outcome_classes", k, num(v));
    row("resolution", "resolved", num(s.resolution_resolved));
    row("resolution", "denominator", num(s.resolution_denominator));
    row("resolution", "rate_pct", fmt(s.resolution_rate_pct, 4));
    return out;
}

std::string render_markdown(const CorpusSummary& s) {
    std::string md;
    auto line = [&](const std::string& t) { md += t + "\n"; };
    auto share = [](long long part, long long whole) {
        return whole > 0 ? " (" + fmt(100.0 * static_cast<double>(part) / static_cast<double>(whole), 1) + "%)" : std::string();
    };
    line("# Reproducibility summary");
    line("");
    line("Generated: " + s.generated_at + "  ");
    line("Schema: " + s.schema_version);
    line("");
    line("## Corpus");
    line("");
    line("| Metric | Count |");
    line("|---|---:|");
    line("| Repositories | " + std::to_string(s.repositories) + " |");
    line("| With requirements file | " + std::to_string(s.repositories_with_requirements) + " |");
    line("| Without requirements file | " + std::to_string(s.repositories_without_requirements) + " |");
    for (const auto& [k, v] : s.provisioning) line("| Provisioning: " + k + " | " + std::to_string(v) + " |");
    line("| Notebooks | " + std::to_string(s.notebooks) + " |");
    line("| Reproducible (zero errors) | " + std::to_string(s.notebooks_zero_errors) + share(s.notebooks_zero_errors, s.notebooks) + " |");
    line("| With errors | " + std::to_string(s.notebooks_with_errors) + share(s.notebooks_with_errors, s.notebooks) + " |");
    line("");
    line("## Error types");
    line("");
    line("| Pipeline | Error | Notebooks |");
    line("|---|---|---:|");
    for (const auto& [k, v] : s.error_types) line("| containerized | " + k + " | " + std::to_string(v) + share(v, s.notebooks_with_errors) + " |");
    for (const auto& [k, v] : s.baseline_error_types) line("| baseline | " + k + " | " + std::to_string(v) + share(v, s.baseline_errored) + " |");
    line("");
    line("## Success rate by requirements");
    line("");
    line("| Pipeline | With req | Without req |");
    line("|---|---:|---:|");
    line("| containerized | " + fmt(s.success_containerized.with_req.rate_pct, 1) + " | " +
         fmt(s.success_containerized.without_req.rate_pct, 1) + " |");
    line("| baseline | " + fmt(s.success_baseline.with_req.rate_pct, 1) + " | " + fmt(s.success_baseline.without_req.rate_pct, 1) + " |");
    line("");
    line("Mean reproducibility score: with req " + fmt(s.score_with_req.mean_scored, 3) + " (n=" +
         std::to_string(s.score_with_req.scored) + "), without req " + fmt(s.score_without_req.mean_scored, 3) +
         " (n=" + std::to_string(s.score_without_req.scored) + ")");
    line("");
    line("## Score categories");
    line("");
    line("| Category | Notebooks |");
    line("|---|---:|");
    for (auto c : compare::kAllScoreCategories) {
        auto key = std::string(compare::to_string(c));
        auto it = s.score_categories.find(key);
        long long v = it == s.score_categories.end() ? 0 : it->second;
        line("| " + key + " | " + std::to_string(v) + share(v, s.notebooks) + " |");
    }
    line("");
    line("Non-deterministic notebooks: " + std::to_string(s.nondeterministic_notebooks) + " of " +
         std::to_string(s.notebooks) + " (" + fmt(s.nondeterminism_prevalence ? std::optional(*s.nondeterminism_prevalence * 100) : std::nullopt, 1) + "%)");
    line("");
    line("## Outcome classes");
    line("");
    line("| Class | Notebooks |");
    line("|---|---:|");
    for (const auto& [k, v] : s.outcome_classes) line("| " + k + " | " + std::to_string(v) + " |");
    line("");
    line("Dependency failures resolved: " + std::to_string(s.resolution_resolved) + " of " +
         std::to_string(s.resolution_denominator) + " (" + fmt(s.resolution_rate_pct, 1) + "%)");
    if (s.outcome_classes.count("D_Regression") && s.outcome_classes.at("D_Regression") > 0)
        line("\nClass D includes successful executions whose outputs no longer match a fully reproduced baseline; "
             "this placement is an interpretation.");
    return md;
}

void emit_reports(const CorpusSummary& summary, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create report directory " + dir.string() + ": " + ec.message());
    util::write_file(dir / "report.json", to_json(summary).dump(2) + "\n");
    util::write_file(dir / "summary.csv", render_csv(summary));
    util::write_file(dir / "summary.md", render_markdown(summary));
}

} // namespace nbrepro::report
