#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "miniprof/cpu_attrib.hpp"
#include "miniprof/event_channel.hpp"
#include "miniprof/program.hpp"
#include "miniprof/report.hpp"
#include "miniprof/vm.hpp"

namespace miniprof {

struct RunConfig {
    double q = 0.01;                     // sampling interval, seconds
    bool cpu_only = false;               // skip the heap machinery entirely
    std::uint64_t alloc_threshold = 1'048'583;
    std::uint64_t switch_interval_ns = 5'000'000;
    bool patch_joins = true;             // bounded waits so samples keep flowing
    double profile_interval = 0.0;       // checkpoint period in virtual s; 0 = off
    std::string out_path = "profile.txt";
    std::uint64_t seed = 0;
    std::string events_path;             // optional dump of every heap record
    std::string channel_path;            // defaults to a pid-suffixed temp file
    double max_seconds = 600.0;
};

struct RunResult {
    ExitStatus exit = ExitStatus::halted;
    double elapsed_seconds = 0.0;
    ProfileTable table;
    std::vector<Record> records;         // every heap record, in channel order
    std::string report;                  // final rendered table
    VmDiagnostics vm_diagnostics;
    CpuAttribDiagnostics cpu_diagnostics;
    std::uint64_t peak_footprint = 0;
    std::uint64_t foreign_frees = 0;
    int checkpoints_written = 0;
};

// Executes the program under a sampling timer and, unless cpu_only, a
// sampling heap. Timer notifications walk every live thread's stack and fold
// the grants into the profile table; heap notifications drain the record
// channel. With profile_interval > 0 the current table is rendered to
// out_path every interval, rotating the previous file to out_path.1, .2, ...
RunResult run_profiled(const Program& program, const RunConfig& config);

// Renders `table` with the options derived from config/result and writes it
// to result.report; exposed for checkpoint reuse.
std::string render_run_report(const ProfileTable& table, const RunConfig& config,
                              double elapsed_seconds, std::uint64_t peak);

} // namespace miniprof
