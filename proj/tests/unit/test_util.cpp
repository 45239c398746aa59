#include "nbrepro/util/hash.hpp"
#include "nbrepro/util/process.hpp"
#include "nbrepro/util/text.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <regex>

using namespace nbrepro;
using nbrepro::testing::TempDir;

TEST_CASE("sha256 matches the FIPS 180-2 test vectors") {
    CHECK(util::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(util::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("random tokens are lowercase hex of the requested length and differ") {
    auto a = util::random_hex_token(16);
    auto b = util::random_hex_token(16);
    CHECK(a.size() == 16);
    CHECK(std::regex_match(a, std::regex("[0-9a-f]{16}")));
    CHECK(a != b);
    CHECK(util::random_hex_token(7).size() == 7);
}

TEST_CASE("text helpers") {
    CHECK(util::trim("  a b \t\n") == "a b");
    CHECK(util::trim("") == "");
    CHECK(util::to_lower("NumPy") == "numpy");
    CHECK(util::split_lines("a\nb\r\nc") == std::vector<std::string>{"a", "b", "c"});
    CHECK(util::join({"x", "y", "z"}, ", ") == "x, y, z");
    CHECK(std::regex_match(util::utc_timestamp(), std::regex(R"(\d{4}-\d\d-\d\dT\d\d:\d\d:\d\d\.\d{3}Z)")));
}

TEST_CASE("write_file creates parents and read_file returns bytes verbatim") {
    TempDir dir;
    auto p = dir / "a/b/c.txt";
    util::write_file(p, std::string("x\0y\n", 4));
    CHECK(util::read_file(p) == std::string("x\0y\n", 4));
    CHECK_THROWS_AS(util::read_file(dir / "missing"), Error);
}

TEST_CASE("run_process captures output and exit code") {
    auto r = util::run_process({"sh", "-c", "echo out; echo err >&2; exit 3"});
    CHECK(r.exit_code == 3);
    CHECK_FALSE(r.ok());
    CHECK(r.output.find("out") != std::string::npos);
    CHECK(r.output.find("err") != std::string::npos);
}

TEST_CASE("run_process honours working dir, extra env and log file") {
    TempDir dir;
    util::ProcessOptions o;
    o.working_dir = dir.path();
    o.extra_env = {{"NBREPRO_TEST_VAR", "42"}};
    o.log_file = dir / "log.txt";
    auto r = util::run_process({"sh", "-c", "pwd; echo $NBREPRO_TEST_VAR"}, o);
    REQUIRE(r.ok());
    CHECK(r.output.find(std::filesystem::canonical(dir.path()).string()) != std::string::npos);
    CHECK(r.output.find("42") != std::string::npos);
    CHECK(util::read_file(dir / "log.txt") == r.output);
}

TEST_CASE("run_process kills the process group on timeout") {
    util::ProcessOptions o;
    o.timeout = std::chrono::milliseconds(300);
    auto r = util::run_process({"sh", "-c", "sleep 5 & sleep 5"}, o);
    CHECK(r.timed_out);
    CHECK(r.elapsed_s < 3.0);
}

TEST_CASE("run_process reports a missing executable as launch failure") {
    auto r = util::run_process({"nbrepro-definitely-not-a-binary"});
    CHECK(r.launch_failed);
    CHECK_FALSE(util::executable_on_path("nbrepro-definitely-not-a-binary"));
    CHECK(util::executable_on_path("sh"));
}
