#include "doctest.h"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "miniprof/cli.hpp"

using namespace miniprof;

namespace {

struct CliResult {
    int code;
    std::string out;
};

CliResult run_cli(std::vector<std::string> args) {
    std::vector<const char*> argv{"miniprof"};
    for (const auto& a : args) argv.push_back(a.c_str());

    std::ostringstream captured;
    std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
    int code = cli_main(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old);
    return {code, captured.str()};
}

std::string temp_name(const char* tag) {
    return (std::filesystem::temp_directory_path() /
            (std::string(tag) + "-" + std::to_string(::getpid())))
        .string();
}

} // namespace

TEST_CASE("usage errors exit nonzero") {
    CHECK(run_cli({}).code != 0);
    CHECK(run_cli({"frobnicate"}).code != 0);
    CHECK(run_cli({"run"}).code != 0); // missing program
    CHECK(run_cli({"run", "x.asm", "--nonsense"}).code != 0);
    CHECK(run_cli({"simulate", "--q", "0"}).code != 0);
    CHECK(run_cli({"run", "/nonexistent/x.asm"}).code != 0);
}

TEST_CASE("running a program prints and writes the report") {
    std::string out = temp_name("cli-report");
    std::string events = temp_name("cli-events");
    auto r = run_cli({"run", FIXTURES_DIR "/julia.asm", "--out", out, "--events",
                      events, "--seed", "3"});
    CHECK(r.code == 0);
    CHECK(r.out.find("Line") != std::string::npos);
    CHECK(r.out.find("julia.asm:11") != std::string::npos);
    REQUIRE(std::filesystem::exists(out));
    REQUIRE(std::filesystem::exists(events));
    CHECK(std::filesystem::file_size(events) > 0);
    std::filesystem::remove(out);
    std::filesystem::remove(events);
}

TEST_CASE("parse failures report the offending position") {
    std::string bad = temp_name("cli-bad") + ".asm";
    {
        std::ofstream f(bad);
        f << ".func main\nWAT\n";
    }
    auto r = run_cli({"run", bad});
    CHECK(r.code == 1);
    std::filesystem::remove(bad);
}

TEST_CASE("the simulate subcommand emits the study table") {
    std::string csv = temp_name("cli-csv");
    auto r = run_cli({"simulate", "--runs", "2", "--lines", "20", "--max-time", "2",
                      "--csv", csv});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("time,ratio_python,ratio_native,rho_python,rho_native\n", 0) == 0);
    REQUIRE(std::filesystem::exists(csv));
    std::filesystem::remove(csv);
}

TEST_CASE("cpu-only runs succeed without heap data") {
    std::string out = temp_name("cli-cpuonly");
    auto r = run_cli({"run", FIXTURES_DIR "/pure_bytecode.asm", "--cpu-only",
                      "--out", out});
    CHECK(r.code == 0);
    CHECK(r.out.find("pure_bytecode.asm:2") != std::string::npos);
    std::filesystem::remove(out);
}
