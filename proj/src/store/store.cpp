#include "nbrepro/store/store.hpp"

#include <nlohmann/json.hpp>
#include <sqlite3.h>

namespace nbrepro::store {

namespace {

using nlohmann::json;

const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS schema_info (version INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS repositories (
    repository_id TEXT PRIMARY KEY,
    url TEXT NOT NULL UNIQUE,
    local_path TEXT NOT NULL,
    accessible INTEGER NOT NULL,
    has_requirements_file INTEGER NOT NULL,
    notebook_count INTEGER NOT NULL CHECK (notebook_count >= 0),
    requirements_manifests TEXT NOT NULL,
    setup_manifests TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS notebooks (
    notebook_id TEXT PRIMARY KEY,
    repository_id TEXT NOT NULL REFERENCES repositories(repository_id) ON DELETE CASCADE,
    relative_path TEXT NOT NULL CHECK (relative_path LIKE '%.ipynb'),
    kernel_name TEXT NOT NULL,
    kernel_language TEXT NOT NULL,
    nbformat_major INTEGER NOT NULL,
    nbformat_minor INTEGER NOT NULL,
    parse_failed INTEGER NOT NULL,
    parse_error TEXT NOT NULL,
    code_cells INTEGER NOT NULL,
    markdown_cells INTEGER NOT NULL,
    raw_cells INTEGER NOT NULL,
    nondeterministic INTEGER NOT NULL,
    nondeterminism_patterns TEXT NOT NULL,
    UNIQUE (repository_id, relative_path)
);
CREATE TABLE IF NOT EXISTS repository_runs (
    run_id TEXT PRIMARY KEY,
    repository_id TEXT NOT NULL REFERENCES repositories(repository_id) ON DELETE CASCADE,
    invocation_id TEXT NOT NULL,
    started_at TEXT NOT NULL,
    finished_at TEXT NOT NULL,
    provisioning_status TEXT,
    status_reason TEXT NOT NULL,
    image_reference TEXT,
    revision TEXT NOT NULL,
    stage TEXT NOT NULL,
    UNIQUE (repository_id, invocation_id),
    CHECK (finished_at = '' OR finished_at >= started_at)
);
CREATE TABLE IF NOT EXISTS dependency_specs (
    run_id TEXT PRIMARY KEY REFERENCES repository_runs(run_id) ON DELETE CASCADE,
    synthesized_manifest TEXT NOT NULL,
    dockerfile TEXT NOT NULL,
    warnings TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS dependency_requirements (
    run_id TEXT NOT NULL REFERENCES dependency_specs(run_id) ON DELETE CASCADE,
    position INTEGER NOT NULL,
    distribution_name TEXT NOT NULL,
    extras TEXT NOT NULL,
    version_constraint TEXT,
    marker TEXT NOT NULL,
    opaque_line TEXT,
    origin TEXT NOT NULL,
    source TEXT NOT NULL,
    PRIMARY KEY (run_id, distribution_name)
);
CREATE TABLE IF NOT EXISTS notebook_executions (
    notebook_id TEXT NOT NULL REFERENCES notebooks(notebook_id) ON DELETE CASCADE,
    run_id TEXT NOT NULL REFERENCES repository_runs(run_id) ON DELETE CASCADE,
    status TEXT NOT NULL,
    status_reason TEXT NOT NULL,
    duration_s REAL CHECK (duration_s IS NULL OR duration_s >= 0),
    code_cell_count INTEGER NOT NULL,
    markdown_code_ratio REAL,
    executed_notebook_path TEXT NOT NULL,
    PRIMARY KEY (notebook_id, run_id),
    CHECK (status = 'Skipped' OR duration_s IS NOT NULL)
);
CREATE TABLE IF NOT EXISTS execution_errors (
    notebook_id TEXT NOT NULL,
    run_id TEXT NOT NULL,
    position INTEGER NOT NULL,
    error_type TEXT NOT NULL,
    category TEXT NOT NULL,
    message TEXT NOT NULL,
    cell_index INTEGER,
    count INTEGER NOT NULL CHECK (count >= 1),
    unrecognized INTEGER NOT NULL,
    PRIMARY KEY (notebook_id, run_id, position),
    FOREIGN KEY (notebook_id, run_id) REFERENCES notebook_executions(notebook_id, run_id) ON DELETE CASCADE
);
CREATE TABLE IF NOT EXISTS reproducibility_metrics (
    notebook_id TEXT NOT NULL,
    run_id TEXT NOT NULL,
    identical_count INTEGER NOT NULL,
    different_count INTEGER NOT NULL,
    nondeterministic_count INTEGER NOT NULL,
    identical_indices TEXT NOT NULL,
    different_indices TEXT NOT NULL,
    nondeterministic_indices TEXT NOT NULL,
    total_code_cells INTEGER NOT NULL,
    score REAL CHECK (score IS NULL OR (score >= 0 AND score <= 1)),
    structural_mismatch INTEGER NOT NULL,
    cells TEXT NOT NULL,
    PRIMARY KEY (notebook_id, run_id),
    FOREIGN KEY (notebook_id, run_id) REFERENCES notebook_executions(notebook_id, run_id) ON DELETE CASCADE
);
CREATE TABLE IF NOT EXISTS baseline_records (
    notebook_id TEXT PRIMARY KEY,
    prev_dependency_install TEXT NOT NULL,
    prev_execution_status TEXT NOT NULL,
    prev_diff_cells INTEGER,
    prev_duration_s REAL
);
CREATE TABLE IF NOT EXISTS outcome_assignments (
    notebook_id TEXT NOT NULL REFERENCES notebooks(notebook_id) ON DELETE CASCADE,
    run_id TEXT NOT NULL REFERENCES repository_runs(run_id) ON DELETE CASCADE,
    outcome TEXT NOT NULL,
    baseline_dependency_failure INTEGER NOT NULL,
    rationale TEXT NOT NULL,
    PRIMARY KEY (notebook_id, run_id)
);
CREATE INDEX IF NOT EXISTS runs_by_invocation ON repository_runs(invocation_id);
CREATE INDEX IF NOT EXISTS executions_by_run ON notebook_executions(run_id);
)sql";

class Stmt {
public:
    Stmt(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
            throw StoreError(std::string("prepare failed: ") + sqlite3_errmsg(db) + " in: " + sql);
    }
    ~Stmt() { sqlite3_finalize(stmt_); }
    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;

    Stmt& bind(int i, const std::string& v) {
        check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
        return *this;
    }
    Stmt& bind(int i, const char* v) { return bind(i, std::string(v)); }
    Stmt& bind(int i, std::string_view v) { return bind(i, std::string(v)); }
    Stmt& bind(int i, long long v) {
        check(sqlite3_bind_int64(stmt_, i, v));
        return *this;
    }
    Stmt& bind(int i, int v) { return bind(i, static_cast<long long>(v)); }
    Stmt& bind(int i, bool v) { return bind(i, static_cast<long long>(v ? 1 : 0)); }
    Stmt& bind(int i, double v) {
        check(sqlite3_bind_double(stmt_, i, v));
        return *this;
    }
    template <class T>
    Stmt& bind(int i, const std::optional<T>& v) {
        if (!v) {
            check(sqlite3_bind_null(stmt_, i));
            return *this;
        }
        return bind(i, *v);
    }

    // true while a row is available
    bool step() {
        int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw StoreError(std::string("statement failed: ") + sqlite3_errmsg(db_));
    }
    void run() {
        while (step()) {
        }
    }
    void reset() {
        sqlite3_reset(stmt_);
        sqlite3_clear_bindings(stmt_);
    }

    bool null(int c) const { return sqlite3_column_type(stmt_, c) == SQLITE_NULL; }
    std::string text(int c) const {
        auto p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, c));
        return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, c))) : std::string();
    }
    long long integer(int c) const { return sqlite3_column_int64(stmt_, c); }
    double real(int c) const { return sqlite3_column_double(stmt_, c); }
    std::optional<std::string> opt_text(int c) const { return null(c) ? std::nullopt : std::optional(text(c)); }
    std::optional<double> opt_real(int c) const { return null(c) ? std::nullopt : std::optional(real(c)); }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) throw StoreError(std::string("bind failed: ") + sqlite3_errmsg(db_));
    }
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

class Transaction {
public:
    explicit Transaction(sqlite3* db) : db_(db) { exec("BEGIN IMMEDIATE"); }
    ~Transaction() {
        if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    }
    void commit() {
        exec("COMMIT");
        done_ = true;
    }

private:
    void exec(const char* sql) {
        char* err = nullptr;
        if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err ? err : "unknown";
            sqlite3_free(err);
            throw StoreError(std::string(sql) + " failed: " + msg);
        }
    }
    sqlite3* db_;
    bool done_ = false;
};

template <class T>
std::vector<T> json_list(const std::string& text) {
    if (text.empty()) return {};
    return json::parse(text).get<std::vector<T>>();
}

corpus::Repository read_repository(const Stmt& s) {
    corpus::Repository r;
    r.repository_id = s.text(0);
    r.url = s.text(1);
    r.local_path = s.text(2);
    r.accessible = s.integer(3) != 0;
    r.has_requirements_file = s.integer(4) != 0;
    r.notebook_count = static_cast<int>(s.integer(5));
    r.requirements_manifests = json_list<std::string>(s.text(6));
    r.setup_manifests = json_list<std::string>(s.text(7));
    return r;
}

const char* kRepoColumns =
    "repository_id, url, local_path, accessible, has_requirements_file, notebook_count, requirements_manifests, "
    "setup_manifests";

NotebookRow read_notebook(const Stmt& s) {
    NotebookRow n;
    auto& d = n.descriptor;
    d.notebook_id = s.text(0);
    d.repository_id = s.text(1);
    d.relative_path = s.text(2);
    d.kernel_name = s.text(3);
    d.kernel_language = s.text(4);
    d.nbformat_major = static_cast<int>(s.integer(5));
    d.nbformat_minor = static_cast<int>(s.integer(6));
    d.parse_failed = s.integer(7) != 0;
    d.parse_error = s.text(8);
    n.code_cells = static_cast<int>(s.integer(9));
    n.markdown_cells = static_cast<int>(s.integer(10));
    n.raw_cells = static_cast<int>(s.integer(11));
    n.nondeterministic = s.integer(12) != 0;
    n.nondeterminism_patterns = json_list<std::string>(s.text(13));
    return n;
}

const char* kNotebookColumns =
    "notebook_id, repository_id, relative_path, kernel_name, kernel_language, nbformat_major, nbformat_minor, "
    "parse_failed, parse_error, code_cells, markdown_cells, raw_cells, nondeterministic, nondeterminism_patterns";

corpus::RunRecord read_run(const Stmt& s) {
    corpus::RunRecord r;
    r.run_id = s.text(0);
    r.repository_id = s.text(1);
    r.invocation_id = s.text(2);
    r.started_at = s.text(3);
    r.finished_at = s.text(4);
    if (auto p = s.opt_text(5)) r.provisioning_status = corpus::provisioning_status_from_string(*p);
    r.status_reason = s.text(6);
    r.image_reference = s.opt_text(7);
    r.revision = s.text(8);
    r.stage = corpus::run_stage_from_string(s.text(9)).value_or(corpus::RunStage::Acquired);
    return r;
}

const char* kRunColumns = "run_id, repository_id, invocation_id, started_at, finished_at, provisioning_status, "
                          "status_reason, image_reference, revision, stage";

executor::ExecutionRecord read_execution(const Stmt& s) {
    executor::ExecutionRecord e;
    e.notebook_id = s.text(0);
    e.run_id = s.text(1);
    e.status = executor::execution_status_from_string(s.text(2)).value_or(executor::ExecutionStatus::Skipped);
    e.status_reason = s.text(3);
    e.duration_s = s.opt_real(4);
    e.code_cell_count = static_cast<int>(s.integer(5));
    e.markdown_code_ratio = s.opt_real(6);
    e.executed_notebook_path = s.text(7);
    return e;
}

const char* kExecutionColumns = "notebook_id, run_id, status, status_reason, duration_s, code_cell_count, "
                                "markdown_code_ratio, executed_notebook_path";

compare::ReproducibilityMetrics read_metrics(const Stmt& s) {
    compare::ReproducibilityMetrics m;
    m.notebook_id = s.text(0);
    m.run_id = s.text(1);
    m.identical_count = static_cast<int>(s.integer(2));
    m.different_count = static_cast<int>(s.integer(3));
    m.nondeterministic_count = static_cast<int>(s.integer(4));
    m.identical_indices = json_list<int>(s.text(5));
    m.different_indices = json_list<int>(s.text(6));
    m.nondeterministic_indices = json_list<int>(s.text(7));
    m.total_code_cells = static_cast<int>(s.integer(8));
    m.score = s.opt_real(9);
    m.structural_mismatch = s.integer(10) != 0;
    for (const auto& c : json::parse(s.text(11))) {
        compare::CellComparison cc;
        cc.cell_index = c.at("cell_index").get<std::size_t>();
        auto v = c.at("verdict").get<std::string>();
        cc.verdict = v == "Different"          ? compare::Verdict::Different
                     : v == "NonDeterministic" ? compare::Verdict::NonDeterministic
                                               : compare::Verdict::Identical;
        cc.matched_patterns = c.at("matched_patterns").get<std::vector<std::string>>();
        m.cells.push_back(std::move(cc));
    }
    return m;
}

const char* kMetricsColumns = "notebook_id, run_id, identical_count, different_count, nondeterministic_count, "
                              "identical_indices, different_indices, nondeterministic_indices, total_code_cells, "
                              "score, structural_mismatch, cells";

std::string select(const char* columns, const char* rest) { return std::string("SELECT ") + columns + " " + rest; }

} // namespace

Store::Store(const std::filesystem::path& file) : path_(file) {
    std::error_code ec;
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path(), ec);
    if (sqlite3_open_v2(file.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                        nullptr) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        db_ = nullptr;
        throw StoreError("cannot open store " + file.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 10000);
    exec("PRAGMA foreign_keys = ON");
    exec("PRAGMA journal_mode = WAL");
    exec(kSchema);
    Stmt count(db_, "SELECT COUNT(*), MAX(version) FROM schema_info");
    count.step();
    if (count.integer(0) == 0) {
        Stmt ins(db_, "INSERT INTO schema_info(version) VALUES (?)");
        ins.bind(1, kSchemaVersion).run();
    } else if (count.integer(1) != kSchemaVersion) {
        throw StoreError("store schema version " + std::to_string(count.integer(1)) + " is not supported (expected " +
                         std::to_string(kSchemaVersion) + ")");
    }
}

Store::~Store() {
    if (db_) sqlite3_close(db_);
}

void Store::exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown";
        sqlite3_free(err);
        throw StoreError("store statement failed: " + msg);
    }
}

void Store::upsert_repository(const corpus::Repository& r) {
    std::lock_guard lock(mutex_);
    Stmt s(db_, R"sql(
        INSERT INTO repositories(repository_id, url, local_path, accessible, has_requirements_file, notebook_count,
                                 requirements_manifests, setup_manifests)
        VALUES (?1, ?2, ?3, ?4, ?5, (SELECT COUNT(*) FROM notebooks WHERE repository_id = ?1), ?6, ?7)
        ON CONFLICT(repository_id) DO UPDATE SET url = excluded.url, local_path = excluded.local_path,
            accessible = excluded.accessible, has_requirements_file = excluded.has_requirements_file,
            requirements_manifests = excluded.requirements_manifests, setup_manifests = excluded.setup_manifests)sql");
    s.bind(1, r.repository_id)
        .bind(2, r.url)
        .bind(3, r.local_path.string())
        .bind(4, r.accessible)
        .bind(5, r.has_requirements_file)
        .bind(6, json(r.requirements_manifests).dump())
        .bind(7, json(r.setup_manifests).dump())
        .run();
}

void Store::replace_notebooks(const std::string& repository_id, const std::vector<NotebookRow>& rows) {
    std::lock_guard lock(mutex_);
    Transaction tx(db_);
    {
        json keep = json::array();
        for (const auto& r : rows) keep.push_back(r.descriptor.notebook_id);
        Stmt del(db_, "DELETE FROM notebooks WHERE repository_id = ?1 AND notebook_id NOT IN (SELECT value FROM json_each(?2))");
        del.bind(1, repository_id).bind(2, keep.dump()).run();
    }
    Stmt ins(db_, R"sql(
        INSERT INTO notebooks(notebook_id, repository_id, relative_path, kernel_name, kernel_language, nbformat_major,
                              nbformat_minor, parse_failed, parse_error, code_cells, markdown_cells, raw_cells,
                              nondeterministic, nondeterminism_patterns)
        VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12, ?13, ?14)
        ON CONFLICT(notebook_id) DO UPDATE SET kernel_name = excluded.kernel_name,
            kernel_language = excluded.kernel_language, nbformat_major = excluded.nbformat_major,
            nbformat_minor = excluded.nbformat_minor, parse_failed = excluded.parse_failed,
            parse_error = excluded.parse_error, code_cells = excluded.code_cells,
            markdown_cells = excluded.markdown_cells, raw_cells = excluded.raw_cells,
            nondeterministic = excluded.nondeterministic, nondeterminism_patterns = excluded.nondeterminism_patterns)sql");
    for (const auto& r : rows) {
        const auto& d = r.descriptor;
        if (d.repository_id != repository_id) throw StoreError("notebook " + d.notebook_id + " belongs to another repository");
        ins.bind(1, d.notebook_id)
            .bind(2, d.repository_id)
            .bind(3, d.relative_path)
            .bind(4, d.kernel_name)
            .bind(5, d.kernel_language)
            .bind(6, d.nbformat_major)
            .bind(7, d.nbformat_minor)
            .bind(8, d.parse_failed)
            .bind(9, d.parse_error)
            .bind(10, r.code_cells)
            .bind(11, r.markdown_cells)
            .bind(12, r.raw_cells)
            .bind(13, r.nondeterministic)
            .bind(14, json(r.nondeterminism_patterns).dump())
            .run();
        ins.reset();
    }
    Stmt upd(db_, "UPDATE repositories SET notebook_count = (SELECT COUNT(*) FROM notebooks WHERE repository_id = ?1) "
                  "WHERE repository_id = ?1");
    upd.bind(1, repository_id).run();
    tx.commit();
}

void Store::save_run(const corpus::RunRecord& r) {
    std::lock_guard lock(mutex_);
    Stmt s(db_, R"sql(
        INSERT INTO repository_runs(run_id, repository_id, invocation_id, started_at, finished_at, provisioning_status,
                                    status_reason, image_reference, revision, stage)
        VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10)
        ON CONFLICT(run_id) DO UPDATE SET finished_at = excluded.finished_at,
            provisioning_status = excluded.provisioning_status, status_reason = excluded.status_reason,
            image_reference = excluded.image_reference, revision = excluded.revision, stage = excluded.stage)sql");
    std::optional<std::string> status;
    if (r.provisioning_status) status = std::string(corpus::to_string(*r.provisioning_status));
    s.bind(1, r.run_id)
        .bind(2, r.repository_id)
        .bind(3, r.invocation_id)
        .bind(4, r.started_at)
        .bind(5, r.finished_at)
        .bind(6, status)
        .bind(7, r.status_reason)
        .bind(8, r.image_reference)
        .bind(9, r.revision)
        .bind(10, std::string(corpus::to_string(r.stage)))
        .run();
}

void Store::save_dependency_spec(const std::string& run_id, const StoredSpec& spec) {
    std::lock_guard lock(mutex_);
    Transaction tx(db_);
    {
        Stmt del(db_, "DELETE FROM dependency_specs WHERE run_id = ?1");
        del.bind(1, run_id).run();
    }
    {
        Stmt s(db_, "INSERT INTO dependency_specs(run_id, synthesized_manifest, dockerfile, warnings) VALUES (?1, ?2, ?3, ?4)");
        s.bind(1, run_id).bind(2, spec.synthesized_manifest).bind(3, spec.dockerfile).bind(4, json(spec.warnings).dump()).run();
    }
    Stmt ins(db_, R"sql(
        INSERT INTO dependency_requirements(run_id, position, distribution_name, extras, version_constraint, marker,
                                            opaque_line, origin, source)
        VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9))sql");
    int pos = 0;
    for (const auto& r : spec.requirements) {
        ins.bind(1, run_id)
            .bind(2, pos++)
            .bind(3, r.distribution_name)
            .bind(4, r.extras)
            .bind(5, r.version_constraint)
            .bind(6, r.marker)
            .bind(7, r.opaque_line)
            .bind(8, std::string(depinfer::to_string(r.origin)))
            .bind(9, r.source)
            .run();
        ins.reset();
    }
    tx.commit();
}

void Store::save_execution(const executor::ExecutionRecord& e) {
    std::lock_guard lock(mutex_);
    Transaction tx(db_);
    {
        Stmt del(db_, "DELETE FROM notebook_executions WHERE notebook_id = ?1 AND run_id = ?2");
        del.bind(1, e.notebook_id).bind(2, e.run_id).run();
    }
    {
        Stmt s(db_, R"sql(
            INSERT INTO notebook_executions(notebook_id, run_id, status, status_reason, duration_s, code_cell_count,
                                            markdown_code_ratio, executed_notebook_path)
            VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8))sql");
        s.bind(1, e.notebook_id)
            .bind(2, e.run_id)
            .bind(3, std::string(executor::to_string(e.status)))
            .bind(4, e.status_reason)
            .bind(5, e.duration_s)
            .bind(6, e.code_cell_count)
            .bind(7, e.markdown_code_ratio)
            .bind(8, e.executed_notebook_path)
            .run();
    }
    Stmt ins(db_, R"sql(
        INSERT INTO execution_errors(notebook_id, run_id, position, error_type, category, message, cell_index, count,
                                     unrecognized)
        VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9))sql");
    int pos = 0;
    for (const auto& err : e.errors) {
        ins.bind(1, e.notebook_id)
            .bind(2, e.run_id)
            .bind(3, pos++)
            .bind(4, err.error_type)
            .bind(5, std::string(executor::to_string(err.category)))
            .bind(6, err.message)
            .bind(7, err.cell_index)
            .bind(8, err.count)
            .bind(9, err.unrecognized)
            .run();
        ins.reset();
    }
    tx.commit();
}

void Store::save_metrics(const compare::ReproducibilityMetrics& m) {
    std::lock_guard lock(mutex_);
    json cells = json::array();
    for (const auto& c : m.cells)
        cells.push_back({{"cell_index", c.cell_index}, {"verdict", compare::to_string(c.verdict)}, {"matched_patterns", c.matched_patterns}});
    Stmt s(db_, R"sql(
        INSERT OR REPLACE INTO reproducibility_metrics(notebook_id, run_id, identical_count, different_count,
            nondeterministic_count, identical_indices, different_indices, nondeterministic_indices, total_code_cells,
            score, structural_mismatch, cells)
        VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12))sql");
    s.bind(1, m.notebook_id)
        .bind(2, m.run_id)
        .bind(3, m.identical_count)
        .bind(4, m.different_count)
        .bind(5, m.nondeterministic_count)
        .bind(6, json(m.identical_indices).dump())
        .bind(7, json(m.different_indices).dump())
        .bind(8, json(m.nondeterministic_indices).dump())
        .bind(9, m.total_code_cells)
        .bind(10, m.score)
        .bind(11, m.structural_mismatch)
        .bind(12, cells.dump())
        .run();
}

void Store::replace_baseline(const std::vector<outcomes::BaselineRecord>& records) {
    std::lock_guard lock(mutex_);
    Transaction tx(db_);
    exec("DELETE FROM baseline_records");
    Stmt ins(db_, R"sql(
        INSERT OR REPLACE INTO baseline_records(notebook_id, prev_dependency_install, prev_execution_status,
                                                prev_diff_cells, prev_duration_s)
        VALUES (?1, ?2, ?3, ?4, ?5))sql");
    for (const auto& r : records) {
        ins.bind(1, r.notebook_id)
            .bind(2, r.prev_dependency_install == outcomes::DependencyInstall::Success ? "Success" : "Fail")
            .bind(3, r.prev_execution_status)
            .bind(4, r.prev_diff_cells)
            .bind(5, r.prev_duration_s)
            .run();
        ins.reset();
    }
    tx.commit();
}

void Store::save_assignments(const std::vector<outcomes::Assignment>& assignments) {
    std::lock_guard lock(mutex_);
    Transaction tx(db_);
    Stmt ins(db_, R"sql(
        INSERT OR REPLACE INTO outcome_assignments(notebook_id, run_id, outcome, baseline_dependency_failure, rationale)
        VALUES (?1, ?2, ?3, ?4, ?5))sql");
    for (const auto& a : assignments) {
        ins.bind(1, a.notebook_id)
            .bind(2, a.run_id)
            .bind(3, std::string(outcomes::to_string(a.outcome)))
            .bind(4, a.baseline_dependency_failure)
            .bind(5, a.rationale)
            .run();
        ins.reset();
    }
    tx.commit();
}

std::optional<corpus::Repository> Store::repository(const std::string& id) {
    std::lock_guard lock(mutex_);
    Stmt s(db_, select(kRepoColumns, "FROM repositories WHERE repository_id = ?1").c_str());
    s.bind(1, id);
    if (!s.step()) return std::nullopt;
    return read_repository(s);
}

std::vector<corpus::Repository> Store::repositories() {
    std::lock_guard lock(mutex_);
    Stmt s(db_, select(kRepoColumns, "FROM repositories ORDER BY repository_id").c_str());
    std::vector<corpus::Repository> out;
    while (s.step()) out.push_back(read_repository(s));
    return out;
}

std::vector<NotebookRow> Store::notebooks(const std::string& repository_id) {
    std::lock_guard lock(mutex_);
    Stmt s(db_, select(kNotebookColumns, "FROM notebooks WHERE repository_id = ?1 ORDER BY relative_path").c_str());
    s.bind(1, repository_id);
    std::vector<NotebookRow> out;
    while (s.step()) out.push_back(read_notebook(s));
    return out;
}

std::optional<NotebookRow> Store::notebook(const std::string& notebook_id) {
    std::lock_guard lock(mutex_);
    Stmt s(db_, select(kNotebookColumns, "FROM notebooks WHERE notebook_id = ?1").c_str());
    s.bind(1, notebook_id);
    if (!s.step()) return std::nullopt;
    return read_notebook(s);
}

std::optional<corpus::RunRecord> Store::run(const std::string& run_id) {
    std::lock_guard lock(mutex_);
    Stmt s(db_, select(kRunColumns, "FROM repository_runs WHERE run_id = ?1").c_str());
    s.bind(1, run_id);
    if (!s.step()) return std::nullopt;
    return read_run(s);
}

std::vector<corpus::RunRecord> Store::runs_for_invocation(const std::string& invocation_id) {
    std::lock_guard lock(mutex_);
    Stmt s(db_, select(kRunColumns, "FROM repository_runs WHERE invocation_id = ?1 ORDER BY repository_id").c_str());
    s.bind(1, invocation_id);
    std::vector<corpus::RunRecord> out;
    while (s.step()) out.push_back(read_run(s));
    return out;
}

std::optional<std::string> Store::latest_invocation() {
    std::lock_guard lock(mutex_);
    Stmt s(db_, "SELECT invocation_id FROM repository_runs ORDER BY started_at DESC, rowid DESC LIMIT 1");
    if (!s.step()) return std::nullopt;
    return s.text(0);
}

std::vector<corpus::RunRecord> Store::latest_runs() {
    std::lock_guard lock(mutex_);
    Stmt s(db_, select(kRunColumns, R"sql(
        FROM repository_runs r
        WHERE r.rowid = (SELECT r2.rowid FROM repository_runs r2 WHERE r2.repository_id = r.repository_id
                         ORDER BY r2.started_at DESC, r2.rowid DESC LIMIT 1)
        ORDER BY r.repository_id)sql")
                    .c_str());
    std::vector<corpus::RunRecord> out;
    while (s.step()) out.push_back(read_run(s));
    return out;
}

std::size_t Store::run_count() {
    std::lock_guard lock(mutex_);
    Stmt s(db_, "SELECT COUNT(*) FROM repository_runs");
    s.step();
    return static_cast<std::size_t>(s.integer(0));
}

std::optional<StoredSpec> Store::dependency_spec(const std::string& run_id) {
    std::lock_guard lock(mutex_);
    Stmt s(db_, "SELECT synthesized_manifest, dockerfile, warnings FROM dependency_specs WHERE run_id = ?1");
    s.bind(1, run_id);
    if (!s.step()) return std::nullopt;
    StoredSpec spec;
    spec.synthesized_manifest = s.text(0);
    spec.dockerfile = s.text(1);
    spec.warnings = json_list<std::string>(s.text(2));
    Stmt r(db_, R"sql(
        SELECT distribution_name, extras, version_constraint, marker, opaque_line, origin, source
        FROM dependency_requirements WHERE run_id = ?1 ORDER BY position)sql");
    r.bind(1, run_id);
    while (r.step()) {
        depinfer::PackageRequirement req;
        req.distribution_name = r.text(0);
        req.extras = r.text(1);
        req.version_constraint = r.opt_text(2);
        req.marker = r.text(3);
        req.opaque_line = r.opt_text(4);
        req.origin = depinfer::origin_from_string(r.text(5)).value_or(depinfer::RequirementOrigin::InferredImport);
        req.source = r.text(6);
        spec.requirements.push_back(std::move(req));
    }
    return spec;
}

namespace {

void load_errors(sqlite3* db, executor::ExecutionRecord& e) {
    Stmt s(db, R"sql(
        SELECT error_type, category, message, cell_index, count, unrecognized
        FROM execution_errors WHERE notebook_id = ?1 AND run_id = ?2 ORDER BY position)sql");
    s.bind(1, e.notebook_id).bind(2, e.run_id);
    while (s.step()) {
        executor::ExecutionError err;
        err.error_type = s.text(0);
        err.category = executor::error_category_from_string(s.text(1)).value_or(executor::ErrorCategory::Logic);
        err.message = s.text(2);
        if (!s.null(3)) err.cell_index = static_cast<int>(s.integer(3));
        err.count = static_cast<int>(s.integer(4));
        err.unrecognized = s.integer(5) != 0;
        e.errors.push_back(std::move(err));
    }
}

} // namespace

std::vector<executor::ExecutionRecord> Store::executions(const std::string& run_id) {
    std::lock_guard lock(mutex_);
    Stmt s(db_, select(kExecutionColumns, R"sql(
        FROM notebook_executions e WHERE run_id = ?1
        ORDER BY (SELECT relative_path FROM notebooks n WHERE n.notebook_id = e.notebook_id))sql")
                    .c_str());
    s.bind(1, run_id);
    std::vector<executor::ExecutionRecord> out;
    while (s.step()) out.push_back(read_execution(s));
    for (auto& e : out) load_errors(db_, e);
    return out;
}

std::optional<executor::ExecutionRecord> Store::execution(const std::string& notebook_id, const std::string& run_id) {
    std::lock_guard lock(mutex_);
    Stmt s(db_, select(kExecutionColumns, "FROM notebook_executions WHERE notebook_id = ?1 AND run_id = ?2").c_str());
    s.bind(1, notebook_id).bind(2, run_id);
    if (!s.step()) return std::nullopt;
    auto e = read_execution(s);
    load_errors(db_, e);
    return e;
}

std::optional<compare::ReproducibilityMetrics> Store::metrics(const std::string& notebook_id, const std::string& run_id) {
    std::lock_guard lock(mutex_);
    Stmt s(db_, select(kMetricsColumns, "FROM reproducibility_metrics WHERE notebook_id = ?1 AND run_id = ?2").c_str());
    s.bind(1, notebook_id).bind(2, run_id);
    if (!s.step()) return std::nullopt;
    return read_metrics(s);
}

std::vector<compare::ReproducibilityMetrics> Store::metrics_for_run(const std::string& run_id) {
    std::lock_guard lock(mutex_);
    Stmt s(db_, select(kMetricsColumns, "FROM reproducibility_metrics WHERE run_id = ?1 ORDER BY notebook_id").c_str());
    s.bind(1, run_id);
    std::vector<compare::ReproducibilityMetrics> out;
    while (s.step()) out.push_back(read_metrics(s));
    return out;
}

std::vector<outcomes::BaselineRecord> Store::baseline() {
    std::lock_guard lock(mutex_);
    Stmt s(db_, R"sql(
        SELECT notebook_id, prev_dependency_install, prev_execution_status, prev_diff_cells, prev_duration_s
        FROM baseline_records ORDER BY notebook_id)sql");
    std::vector<outcomes::BaselineRecord> out;
    while (s.step()) {
        outcomes::BaselineRecord r;
        r.notebook_id = s.text(0);
        r.prev_dependency_install =
            s.text(1) == "Success" ? outcomes::DependencyInstall::Success : outcomes::DependencyInstall::Fail;
        r.prev_execution_status = s.text(2);
        if (!s.null(3)) r.prev_diff_cells = static_cast<int>(s.integer(3));
        r.prev_duration_s = s.opt_real(4);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<outcomes::Assignment> Store::assignments(const std::string& run_id) {
    std::lock_guard lock(mutex_);
    Stmt s(db_, R"sql(
        SELECT notebook_id, run_id, outcome, baseline_dependency_failure, rationale
        FROM outcome_assignments WHERE run_id = ?1 ORDER BY notebook_id)sql");
    s.bind(1, run_id);
    std::vector<outcomes::Assignment> out;
    while (s.step()) {
        outcomes::Assignment a;
        a.notebook_id = s.text(0);
        a.run_id = s.text(1);
        a.outcome = outcomes::outcome_class_from_string(s.text(2)).value_or(outcomes::OutcomeClass::Unclassified);
        a.baseline_dependency_failure = s.integer(3) != 0;
        a.rationale = s.text(4);
        out.push_back(std::move(a));
    }
    return out;
}

std::size_t Store::integrity_violations() {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    {
        Stmt s(db_, "PRAGMA foreign_key_check");
        while (s.step()) ++n;
    }
    Stmt counts(db_, R"sql(
        SELECT COUNT(*) FROM repositories r
        WHERE r.notebook_count != (SELECT COUNT(*) FROM notebooks n WHERE n.repository_id = r.repository_id))sql");
    counts.step();
    n += static_cast<std::size_t>(counts.integer(0));
    Stmt partition(db_, R"sql(
        SELECT COUNT(*) FROM reproducibility_metrics
        WHERE structural_mismatch = 0
          AND identical_count + different_count + nondeterministic_count != total_code_cells)sql");
    partition.step();
    n += static_cast<std::size_t>(partition.integer(0));
    return n;
}

} // namespace nbrepro::store
