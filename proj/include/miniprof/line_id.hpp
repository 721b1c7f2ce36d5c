#pragma once

#include <cstdint>
#include <string>
#include <tuple>

namespace miniprof {

// A source position: file name plus 1-based line number. Used as the key for
// every per-line accumulator in the profiler. Line 0 with file "(unknown)"
// is the bucket for samples that cannot be mapped back to a source line.
struct LineId {
    std::string file;
    std::uint32_t line = 0;

    bool operator==(const LineId& o) const { return line == o.line && file == o.file; }
    bool operator!=(const LineId& o) const { return !(*this == o); }
    bool operator<(const LineId& o) const {
        return std::tie(file, line) < std::tie(o.file, o.line);
    }

    std::string to_string() const { return file + ":" + std::to_string(line); }
};

inline LineId unknown_line() { return LineId{"(unknown)", 0}; }

} // namespace miniprof
