#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace miniprof {

// Bounded trend buffer for memory footprint samples. When the buffer fills
// up, each consecutive triple of entries is replaced by its median, shrinking
// the buffer to a third of its capacity before the new value is appended.
// Repeated reduction smooths older history (a median of medians) while the
// rightmost entries stay recent, so the rendered strip always spans the whole
// run. Capacity must be a multiple of 3 for the triple grouping to be exact.
class SparklineBuffer {
public:
    static constexpr std::size_t kDefaultCapacity = 27;

    explicit SparklineBuffer(std::size_t capacity = kDefaultCapacity);

    // Appends one footprint sample, reducing first if the buffer is full.
    void push_footprint(std::uint64_t value);

    // Collapses consecutive triples to their medians. Length must be a
    // multiple of 3 (always true at capacity); violations assert.
    void reduce_by_median();

    const std::vector<std::uint64_t>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return entries_.empty(); }

private:
    std::size_t capacity_;
    std::vector<std::uint64_t> entries_;
};

// Renders one glyph per entry from an 8-level block ramp, scaled linearly so
// the buffer maximum maps to the tallest glyph. Keeps the most recent `width`
// entries when the buffer is longer, pads with spaces when shorter; an empty
// buffer renders as an empty string.
std::string render_sparkline(const SparklineBuffer& buffer, std::size_t width);

// Ramp level in [0,7] used for a value against a maximum; exposed for tests.
int sparkline_level(std::uint64_t value, std::uint64_t max_value);

} // namespace miniprof
