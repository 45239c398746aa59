#include "nbrepro/outcomes/outcomes.hpp"
#include "outcome_table.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace nbrepro;
using namespace nbrepro::outcomes;

TEST_CASE("Published outcome-table rows reproduce their printed classes") {
    auto parsed = parse_baseline_csv(nbrepro::testing::kOutcomeTableBaselineCsv);
    CHECK(parsed.warnings.empty());
    auto rows = nbrepro::testing::outcome_table_rows();
    REQUIRE(parsed.records.size() == rows.size());
    std::vector<Assignment> assignments;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CAPTURE(rows[i].notebook_id);
        REQUIRE(parsed.records[i].notebook_id == rows[i].notebook_id);
        auto a = assign_outcome_class(parsed.records[i], rows[i].current);
        CHECK(a.outcome == rows[i].expected);
        CHECK_FALSE(a.rationale.empty());
        assignments.push_back(a);
    }
    // A1..A4 resolved; D2 and D5 also failed at baseline installation but regressed.
    CHECK(resolution_rate(assignments) == doctest::Approx(100.0 * 4 / 6));
}

TEST_CASE("resolution rate over 96 baseline dependency failures") {
    auto rate = resolution_rate(64, 96);
    REQUIRE(rate);
    CHECK(std::abs(*rate - 66.7) <= 0.05);
    CHECK_FALSE(resolution_rate(0, 0).has_value());
    CHECK(resolution_rate(0, 5) == 0.0);
}

TEST_CASE("baseline CSV parsing") {
    auto p = parse_baseline_csv(
        "\xEF\xBB\xBFnotebook_id,prev_dependency_install,prev_execution_status,prev_diff_cells,prev_duration_s\r\n"
        "n1,Success,\"Error, with comma\",3,1.5\r\n"
        "n2,Maybe,Success,,\r\n"
        "n3,Fail,Install Dependency Error,-,-\r\n"
        "n4,Success,Success,abc,\r\n"
        "n5,Success\r\n");
    REQUIRE(p.records.size() == 2);
    CHECK(p.records[0].prev_execution_status == "Error, with comma");
    CHECK(p.records[0].prev_diff_cells == 3);
    CHECK(p.records[0].prev_duration_s == 1.5);
    CHECK(p.records[1].prev_dependency_install == DependencyInstall::Fail);
    CHECK_FALSE(p.records[1].prev_diff_cells.has_value());
    CHECK(p.warnings.size() == 3);
    CHECK(p.warnings[0].find("line 3") != std::string::npos);

    CHECK_THROWS_AS(parse_baseline_csv("id,status\nx,y\n"), ConfigError);
}

TEST_CASE("reach levels") {
    BaselineRecord b;
    b.prev_execution_status = "Sucess";
    CHECK(baseline_reach(b) == 3);
    b.prev_execution_status = "<Skipping notebook>";
    CHECK(baseline_reach(b) == 1);
    b.prev_execution_status = "KeyError";
    CHECK(baseline_reach(b) == 2);
    b.prev_dependency_install = DependencyInstall::Fail;
    CHECK(baseline_reach(b) == 0);

    CurrentResult none;
    CHECK(current_reach(none) == 0);
}

TEST_CASE("no baseline means unclassified; string forms round-trip") {
    CurrentResult c;
    CHECK(assign_outcome_class(std::nullopt, c).outcome == OutcomeClass::Unclassified);
    for (auto k : kAllOutcomeClasses) CHECK(outcome_class_from_string(to_string(k)) == k);
}

TEST_CASE("B rationale notes whether error types match") {
    BaselineRecord b;
    b.prev_execution_status = "File Not Found Error";
    auto same = assign_outcome_class(
        b, nbrepro::testing::current_result(corpus::ProvisioningStatus::EnvironmentBuilt,
                                            executor::ExecutionStatus::ErroredButCompleted, "FileNotFoundError", 1, 2, 1));
    CHECK(same.outcome == OutcomeClass::B_PersistentError);
    CHECK(same.rationale.find("same") != std::string::npos);
    auto other = assign_outcome_class(
        b, nbrepro::testing::current_result(corpus::ProvisioningStatus::EnvironmentBuilt,
                                            executor::ExecutionStatus::ErroredButCompleted, "KeyError", 1, 2, 1));
    CHECK(other.outcome == OutcomeClass::B_PersistentError);
    CHECK(other.rationale.find("differing") != std::string::npos);
}

TEST_CASE("baseline errors fixed by the current run count as drift, not regression") {
    BaselineRecord b;
    b.prev_execution_status = "ModuleNotFoundError";
    auto a = assign_outcome_class(
        b, nbrepro::testing::current_result(corpus::ProvisioningStatus::EnvironmentBuilt, executor::ExecutionStatus::Success,
                                            "", 0, 3, 1));
    CHECK(a.outcome == OutcomeClass::C_ReproducibilityDrift);
}
