#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "miniprof/line_id.hpp"

namespace miniprof {

enum class RecordKind { alloc_malloc, alloc_free, copy };

const char* record_kind_name(RecordKind kind);

// One sampled memory event. `python_fraction` is meaningful for the two
// alloc kinds only (copy records carry 0). `footprint` is the live-byte
// snapshot at emission time.
struct Record {
    std::uint64_t seq = 0;
    RecordKind kind = RecordKind::alloc_malloc;
    std::uint64_t bytes = 0;
    double python_fraction = 0.0;
    std::uint64_t footprint = 0;
    LineId line;

    bool operator==(const Record& o) const;
};

// Tab-separated single-line form: seq kind bytes frac footprint file line.
// The fraction is fixed at six fractional digits so encoding is byte-stable.
std::string encode_record(const Record& r);
std::optional<Record> decode_record(std::string_view text);

// Lossless file-backed channel between the allocator (producer) and the
// profiler (consumer). Appends survive notification coalescing: draining
// returns every record appended since the previous drain, in order, exactly
// once. The default file lives in the platform temp directory with the
// process id as a suffix and is removed when the channel closes cleanly.
class Channel {
public:
    explicit Channel(std::filesystem::path path, bool remove_on_close = true);
    ~Channel();

    Channel(const Channel&) = delete;
    Channel& operator=(const Channel&) = delete;

    static std::filesystem::path default_path();

    // Stamps the record with the next sequence number, appends, flushes.
    // Returns the assigned sequence number.
    std::uint64_t append(Record r);

    // Reads every pending record and truncates the file. Undecodable lines
    // are skipped and counted, never fatal.
    std::vector<Record> drain();

    const std::filesystem::path& path() const { return path_; }
    std::uint64_t decode_errors() const { return decode_errors_; }
    std::uint64_t write_errors() const { return write_errors_; }

private:
    std::filesystem::path path_;
    bool remove_on_close_;
    std::ofstream out_;
    std::uint64_t next_seq_ = 1;
    std::uint64_t decode_errors_ = 0;
    std::uint64_t write_errors_ = 0;
};

} // namespace miniprof
