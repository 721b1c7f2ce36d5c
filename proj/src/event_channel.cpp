#include "miniprof/event_channel.hpp"

#include <charconv>
#include <cstdio>

#ifdef _WIN32
#include <process.h>
#else
#include <unistd.h>
#endif

namespace miniprof {

namespace {

int current_pid() {
#ifdef _WIN32
    return _getpid();
#else
    return static_cast<int>(::getpid());
#endif
}

template <typename T>
bool parse_uint(std::string_view s, T& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

} // namespace

const char* record_kind_name(RecordKind kind) {
    switch (kind) {
    case RecordKind::alloc_malloc: return "malloc";
    case RecordKind::alloc_free: return "free";
    case RecordKind::copy: return "copy";
    }
    return "?";
}

bool Record::operator==(const Record& o) const {
    return seq == o.seq && kind == o.kind && bytes == o.bytes &&
           python_fraction == o.python_fraction && footprint == o.footprint &&
           line == o.line;
}

std::string encode_record(const Record& r) {
    char frac[32];
    std::snprintf(frac, sizeof frac, "%.6f", r.python_fraction);
    std::string out;
    out += std::to_string(r.seq);
    out += '\t';
    out += record_kind_name(r.kind);
    out += '\t';
    out += std::to_string(r.bytes);
    out += '\t';
    out += frac;
    out += '\t';
    out += std::to_string(r.footprint);
    out += '\t';
    out += r.line.file;
    out += '\t';
    out += std::to_string(r.line.line);
    return out;
}

std::optional<Record> decode_record(std::string_view text) {
    std::string_view fields[7];
    std::size_t n = 0;
    while (n < 7) {
        std::size_t tab = text.find('\t');
        if (tab == std::string_view::npos) {
            fields[n++] = text;
            text = {};
            break;
        }
        fields[n++] = text.substr(0, tab);
        text.remove_prefix(tab + 1);
    }
    if (n != 7 || !text.empty())
        return std::nullopt;

    Record r;
    if (!parse_uint(fields[0], r.seq))
        return std::nullopt;
    if (fields[1] == "malloc")
        r.kind = RecordKind::alloc_malloc;
    else if (fields[1] == "free")
        r.kind = RecordKind::alloc_free;
    else if (fields[1] == "copy")
        r.kind = RecordKind::copy;
    else
        return std::nullopt;
    if (!parse_uint(fields[2], r.bytes))
        return std::nullopt;
    if (!parse_double(fields[3], r.python_fraction))
        return std::nullopt;
    if (!parse_uint(fields[4], r.footprint))
        return std::nullopt;
    r.line.file = std::string(fields[5]);
    if (!parse_uint(fields[6], r.line.line))
        return std::nullopt;
    return r;
}

std::filesystem::path Channel::default_path() {
    return std::filesystem::temp_directory_path() /
           ("miniprof-" + std::to_string(current_pid()));
}

Channel::Channel(std::filesystem::path path, bool remove_on_close)
    : path_(std::move(path)), remove_on_close_(remove_on_close) {
    out_.open(path_, std::ios::out | std::ios::app);
}

Channel::~Channel() {
    out_.close();
    if (remove_on_close_) {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
}

std::uint64_t Channel::append(Record r) {
    r.seq = next_seq_++;
    out_ << encode_record(r) << '\n';
    out_.flush();
    if (!out_) {
        ++write_errors_;
        out_.clear();
    }
    return r.seq;
}

std::vector<Record> Channel::drain() {
    out_.flush();
    std::vector<Record> records;
    {
        std::ifstream in(path_);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty())
                continue;
            if (auto r = decode_record(line))
                records.push_back(*r);
            else
                ++decode_errors_;
        }
    }
    std::error_code ec;
    std::filesystem::resize_file(path_, 0, ec);
    return records;
}

} // namespace miniprof
