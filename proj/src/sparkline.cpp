#include "miniprof/sparkline.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace miniprof {

namespace {

// The eight block elements U+2581..U+2588, lowest to tallest.
const char* const kRamp[8] = {
    "▁", "▂", "▃", "▄",
    "▅", "▆", "▇", "█",
};

std::uint64_t median3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

} // namespace

SparklineBuffer::SparklineBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0 || capacity % 3 != 0)
        throw std::invalid_argument("sparkline capacity must be a positive multiple of 3");
    entries_.reserve(capacity);
}

void SparklineBuffer::push_footprint(std::uint64_t value) {
    if (entries_.size() == capacity_)
        reduce_by_median();
    entries_.push_back(value);
}

void SparklineBuffer::reduce_by_median() {
    assert(entries_.size() % 3 == 0);
    std::size_t out = 0;
    for (std::size_t i = 0; i + 2 < entries_.size(); i += 3)
        entries_[out++] = median3(entries_[i], entries_[i + 1], entries_[i + 2]);
    entries_.resize(out);
}

int sparkline_level(std::uint64_t value, std::uint64_t max_value) {
    if (max_value == 0)
        return 0;
    // value == max_value maps to 8 before the clamp; everything scales
    // linearly below it.
    std::uint64_t level = (value * 8) / max_value;
    return static_cast<int>(std::min<std::uint64_t>(level, 7));
}

std::string render_sparkline(const SparklineBuffer& buffer, std::size_t width) {
    const auto& e = buffer.entries();
    if (e.empty())
        return "";
    std::uint64_t max_value = *std::max_element(e.begin(), e.end());
    // Keep the most recent entries if there are more than fit.
    std::size_t first = e.size() > width ? e.size() - width : 0;
    std::string out;
    for (std::size_t i = first; i < e.size(); ++i)
        out += kRamp[sparkline_level(e[i], max_value)];
    for (std::size_t i = e.size() - first; i < width; ++i)
        out += ' ';
    return out;
}

} // namespace miniprof
