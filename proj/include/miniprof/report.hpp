#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "miniprof/cpu_attrib.hpp"
#include "miniprof/event_channel.hpp"
#include "miniprof/line_id.hpp"
#include "miniprof/line_stats.hpp"
#include "miniprof/sparkline.hpp"

namespace miniprof {

// Accumulates per-line CPU grants and heap records. Rows render in
// (file, line) order; heap snapshots feed both a per-line and a global
// footprint trend.
class ProfileTable {
public:
    void apply(const CpuDelta& delta);
    void apply(const Record& record);

    const std::map<LineId, LineStats>& lines() const { return lines_; }
    const SparklineBuffer& global_trend() const { return global_trend_; }

    std::uint64_t total_python_quanta() const { return total_quanta_; }
    double total_native_seconds() const { return total_native_seconds_; }
    std::uint64_t total_cpu_samples() const { return total_samples_; }
    std::uint64_t total_copy_bytes() const { return total_copy_bytes_; }
    std::uint64_t peak_footprint_seen() const { return peak_footprint_; }
    double total_python_seconds(double q) const {
        return static_cast<double>(total_quanta_) * q;
    }

private:
    std::map<LineId, LineStats> lines_;
    SparklineBuffer global_trend_;
    std::uint64_t total_quanta_ = 0;
    double total_native_seconds_ = 0.0;
    std::uint64_t total_samples_ = 0;
    std::uint64_t total_copy_bytes_ = 0;
    std::uint64_t peak_footprint_ = 0;
};

ProfileTable aggregate(const std::vector<CpuDelta>& deltas,
                       const std::vector<Record>& records);

struct ReportOptions {
    double q = 0.01;
    double run_seconds = 0.0;       // virtual elapsed time, drives copy rates
    std::uint64_t peak_footprint = 0; // allocator peak; table max used if larger
};

// Fixed-width text table: Line | Py% | Native% | Net Py MB | Net C MB |
// Trend | Copy MB/s. Shares are of the total attributed CPU time. Net heap
// columns are MiB; copy rates are MB/s with MB = 1e6 bytes (stated in the
// header). Layout is deterministic for a given table.
std::string render_report(const ProfileTable& table, const ReportOptions& options);

} // namespace miniprof
