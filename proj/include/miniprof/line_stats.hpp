#pragma once

#include <cstdint>

#include "miniprof/sparkline.hpp"

namespace miniprof {

// Per-source-line accumulators shared by the CPU estimator and the report.
// Interpreter time is stored as a count of whole sampling quanta rather than
// accumulated floating seconds, so `python_quanta * q` reproduces the summed
// python time exactly: the estimator only ever adds q at a time.
// cpu_sample_count tallies those same grants (native-only thread attributions
// touch neither field).
struct LineStats {
    std::uint64_t python_quanta = 0;
    double native_seconds = 0.0;
    std::uint64_t cpu_sample_count = 0;

    std::uint64_t python_alloc_bytes = 0;
    std::uint64_t native_alloc_bytes = 0;
    std::uint64_t freed_bytes = 0;
    std::uint64_t python_freed_bytes = 0;
    std::uint64_t copy_bytes = 0;
    SparklineBuffer footprint_trend;

    double python_seconds(double q) const {
        return static_cast<double>(python_quanta) * q;
    }
    std::int64_t net_python_bytes() const {
        return static_cast<std::int64_t>(python_alloc_bytes) -
               static_cast<std::int64_t>(python_freed_bytes);
    }
    std::int64_t net_native_bytes() const {
        return static_cast<std::int64_t>(native_alloc_bytes) -
               static_cast<std::int64_t>(freed_bytes - python_freed_bytes);
    }
};

} // namespace miniprof
