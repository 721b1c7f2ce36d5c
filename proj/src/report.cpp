#include "miniprof/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace miniprof {

namespace {

constexpr double kMiB = 1024.0 * 1024.0;

std::string row_label(const LineId& id) {
    if (id.file == unknown_line().file) return id.file;
    return id.to_string();
}

std::int64_t python_part(std::uint64_t bytes, double frac) {
    return std::llround(static_cast<double>(bytes) * frac);
}

} // namespace

void ProfileTable::apply(const CpuDelta& delta) {
    LineStats& s = lines_[delta.line];
    s.python_quanta += delta.python_quanta;
    s.cpu_sample_count += delta.python_quanta;
    s.native_seconds += delta.native_seconds;
    total_quanta_ += delta.python_quanta;
    total_samples_ += delta.python_quanta;
    total_native_seconds_ += delta.native_seconds;
}

void ProfileTable::apply(const Record& record) {
    LineStats& s = lines_[record.line];
    switch (record.kind) {
    case RecordKind::alloc_malloc: {
        std::int64_t py = python_part(record.bytes, record.python_fraction);
        s.python_alloc_bytes += py;
        s.native_alloc_bytes += static_cast<std::int64_t>(record.bytes) - py;
        break;
    }
    case RecordKind::alloc_free: {
        std::int64_t py = python_part(record.bytes, record.python_fraction);
        s.freed_bytes += static_cast<std::int64_t>(record.bytes);
        s.python_freed_bytes += py;
        break;
    }
    case RecordKind::copy:
        s.copy_bytes += record.bytes;
        total_copy_bytes_ += record.bytes;
        // copies do not move the heap; no trend sample
        return;
    }
    s.footprint_trend.push_footprint(record.footprint);
    global_trend_.push_footprint(record.footprint);
    peak_footprint_ = std::max(peak_footprint_, record.footprint);
}

ProfileTable aggregate(const std::vector<CpuDelta>& deltas,
                       const std::vector<Record>& records) {
    ProfileTable t;
    for (const auto& d : deltas) t.apply(d);
    for (const auto& r : records) t.apply(r);
    return t;
}

std::string render_report(const ProfileTable& table, const ReportOptions& options) {
    const double q = options.q;
    const double total_attrib =
        table.total_python_seconds(q) + table.total_native_seconds();
    const std::uint64_t peak =
        std::max(options.peak_footprint, table.peak_footprint_seen());

    struct Row {
        std::string label;
        std::string trend;
        const LineStats* stats;
    };
    std::vector<Row> rows;
    rows.reserve(table.lines().size());
    std::size_t wline = 4; // "Line"
    std::size_t wtrend = 5; // "Trend"
    for (const auto& [id, stats] : table.lines()) {
        Row r;
        r.label = row_label(id);
        r.trend = render_sparkline(stats.footprint_trend,
                                   stats.footprint_trend.size());
        r.stats = &stats;
        wline = std::max(wline, r.label.size());
        // the glyphs are 3 bytes each in utf-8; pad on display width
        wtrend = std::max(wtrend, stats.footprint_trend.size());
        rows.push_back(std::move(r));
    }

    char buf[512];
    std::string out;
    std::snprintf(buf, sizeof(buf),
                  "cpu attributed %.3f s (interpreter %.3f s, native %.3f s) | "
                  "elapsed %.3f s | peak heap %.2f MiB\n",
                  total_attrib, table.total_python_seconds(q),
                  table.total_native_seconds(), options.run_seconds,
                  static_cast<double>(peak) / kMiB);
    out += buf;
    out += "heap trend [" +
           render_sparkline(table.global_trend(), table.global_trend().size()) +
           "]\n";
    out += "net heap columns in MiB; copy rate in MB/s (1 MB = 1e6 bytes)\n\n";

    auto pad_to = [](std::string s, std::size_t display_width, std::size_t display_len) {
        while (display_len < display_width) {
            s += ' ';
            ++display_len;
        }
        return s;
    };

    out += pad_to("Line", wline, 4) + " |   Py% | Native% | Net Py MB |  Net C MB | " +
           pad_to("Trend", wtrend, 5) + " | Copy MB/s\n";
    out += std::string(wline, '-') + "-+-------+---------+-----------+-----------+-" +
           std::string(wtrend, '-') + "-+----------\n";

    for (const auto& r : rows) {
        const LineStats& s = *r.stats;
        double py_pct = 0.0, c_pct = 0.0;
        if (total_attrib > 0.0) {
            py_pct = s.python_seconds(q) / total_attrib * 100.0;
            c_pct = s.native_seconds / total_attrib * 100.0;
        }
        double copy_rate = options.run_seconds > 0.0
                               ? static_cast<double>(s.copy_bytes) / 1e6 /
                                     options.run_seconds
                               : 0.0;
        out += pad_to(r.label, wline, r.label.size());
        std::snprintf(buf, sizeof(buf), " | %5.1f | %7.1f | %9.2f | %9.2f | ",
                      py_pct, c_pct,
                      static_cast<double>(s.net_python_bytes()) / kMiB,
                      static_cast<double>(s.net_native_bytes()) / kMiB);
        out += buf;
        out += pad_to(r.trend, wtrend, s.footprint_trend.size());
        std::snprintf(buf, sizeof(buf), " | %9.2f\n", copy_rate);
        out += buf;
    }
    return out;
}

} // namespace miniprof
