#include "miniprof/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "miniprof/event_channel.hpp"
#include "miniprof/profiler.hpp"
#include "miniprof/program.hpp"
#include "miniprof/simulator.hpp"

namespace miniprof {

namespace {

int do_run(const std::string& source_path, const RunConfig& config,
           const std::string& events_path) {
    std::ifstream in(source_path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open " << source_path << "\n";
        return 1;
    }
    std::ostringstream text;
    text << in.rdbuf();

    Program program;
    try {
        program = parse_program(text.str(), source_path);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    RunResult result = run_profiled(program, config);
    std::cout << result.report;
    {
        std::ofstream out(config.out_path, std::ios::binary | std::ios::trunc);
        out << result.report;
    }
    if (!events_path.empty()) {
        std::ofstream out(events_path, std::ios::binary | std::ios::trunc);
        for (const auto& rec : result.records) out << encode_record(rec) << "\n";
    }
    if (result.exit == ExitStatus::time_limit) {
        std::cerr << "warning: virtual time limit reached\n";
        return 2;
    }
    return 0;
}

int do_simulate(const StudyConfig& config, const std::string& csv_path) {
    std::string csv = study_csv(run_study(config));
    std::cout << csv;
    if (!csv_path.empty()) {
        std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
        out << csv;
    }
    return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"line-level sampling profiler for the bytecode toy runtime"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "execute a program under the profiler");
    std::string source_path;
    RunConfig run_config;
    double switch_interval_s = 0.005;
    std::string events_path;
    run->add_option("program", source_path, "assembly source file")->required();
    run->add_option("--q", run_config.q, "sampling interval in seconds")
        ->check(CLI::PositiveNumber);
    run->add_flag("--cpu-only", run_config.cpu_only, "disable heap profiling");
    run->add_option("--alloc-threshold", run_config.alloc_threshold,
                    "bytes per allocation record")
        ->check(CLI::PositiveNumber);
    run->add_option("--switch-interval", switch_interval_s,
                    "thread switch interval in seconds")
        ->check(CLI::PositiveNumber);
    run->add_option("--profile-interval", run_config.profile_interval,
                    "write a checkpoint report every N virtual seconds")
        ->check(CLI::PositiveNumber);
    run->add_option("--out", run_config.out_path, "report file path");
    run->add_option("--seed", run_config.seed, "run seed (kept in outputs)");
    run->add_option("--events", events_path, "also dump every heap record here");
    run->add_option("--max-seconds", run_config.max_seconds,
                    "virtual time budget before giving up")
        ->check(CLI::PositiveNumber);

    // simulate
    auto* sim = app.add_subcommand("simulate", "estimator convergence study");
    StudyConfig study;
    std::string csv_path;
    sim->add_option("--runs", study.runs, "independent runs per time point")
        ->check(CLI::PositiveNumber);
    sim->add_option("--lines", study.lines, "lines per synthetic workload")
        ->check(CLI::PositiveNumber);
    sim->add_option("--alpha", study.alpha, "pareto shape for drawn costs")
        ->check(CLI::PositiveNumber);
    sim->add_option("--q", study.q, "sampling interval in seconds")
        ->check(CLI::PositiveNumber);
    sim->add_option("--max-time", study.max_time,
                    "largest execution time; points double from 1 s")
        ->check(CLI::PositiveNumber);
    sim->add_option("--seed", study.seed, "base seed for workload draws");
    sim->add_option("--csv", csv_path, "also write the table here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (run->parsed()) {
        run_config.switch_interval_ns =
            static_cast<std::uint64_t>(switch_interval_s * 1e9);
        return do_run(source_path, run_config, events_path);
    }
    return do_simulate(study, csv_path);
}

} // namespace miniprof
