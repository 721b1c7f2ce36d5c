#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <unordered_map>

namespace miniprof {

// Seam for the backing store so tests can observe or fake page mappings.
// Returned blocks are 4096-aligned.
struct PageProvider {
    virtual ~PageProvider() = default;
    virtual void* map_pages(std::size_t bytes) = 0;
    virtual void unmap_pages(void* p, std::size_t bytes) = 0;
};

PageProvider& default_page_provider();

inline constexpr std::uint32_t kHeaderMagic = 0xDEADBEEF;
inline constexpr std::uint32_t kFreedMagic = 0xFEEEFEEE;
inline constexpr std::size_t kPageSize = 4096;
inline constexpr std::size_t kSlabSize = 4096;
inline constexpr std::size_t kClassStep = 16;
inline constexpr std::size_t kMaxSmallSize = 512;
inline constexpr std::size_t kNumClasses = kMaxSmallSize / kClassStep;
inline constexpr std::size_t kDefaultArenaBytes = 64u << 20;

// Smallest multiple of 16 covering `size` (size 0 maps to 16); 0 means the
// request goes to the large-object path.
std::size_t size_class_for(std::size_t size);

enum class DeallocResult { released, foreign_ignored };

// Sixteen bytes immediately before every payload, keeping payloads
// 16-aligned. The magic is rewritten on release so stale pointers fail the
// validity check instead of corrupting a free list.
struct ObjectHeader {
    std::uint32_t magic;
    std::uint32_t size_class; // bytes, 0 for large objects
    std::uint64_t size;       // requested size
};
static_assert(sizeof(ObjectHeader) == 16);

// The replacement heap: small objects come from size-classed 4K slabs carved
// out of one contiguous reserved region; anything above 512 bytes gets its
// own 4096-aligned page run with a header page in front. deallocate() only
// releases a pointer that passes every ownership check (region or large
// table, alignment, header magic); anything else is ignored and counted, so
// frees of objects that predate the profiler leak harmlessly instead of
// crashing. Footprint counts requested bytes exactly. Thread-safe: a lock
// per size class, one for the large table, one for carving slabs.
class AllocatorCore {
public:
    explicit AllocatorCore(std::size_t arena_bytes = kDefaultArenaBytes,
                           PageProvider* pages = nullptr);
    ~AllocatorCore();

    AllocatorCore(const AllocatorCore&) = delete;
    AllocatorCore& operator=(const AllocatorCore&) = delete;

    // Returns a 16-aligned payload with a valid header (4096-aligned for
    // large requests). Throws std::bad_alloc when the small region is
    // exhausted or pages cannot be mapped.
    void* allocate(std::size_t size);

    struct ReleaseInfo {
        DeallocResult result;
        std::size_t size; // requested size of the released object, 0 if foreign
    };
    ReleaseInfo deallocate(void* p);

    std::uint64_t footprint() const { return footprint_.load(std::memory_order_relaxed); }
    std::uint64_t peak_footprint() const { return peak_.load(std::memory_order_relaxed); }
    std::uint64_t foreign_frees() const { return foreign_.load(std::memory_order_relaxed); }

    bool in_small_region(const void* p) const;

private:
    struct FreeNode {
        FreeNode* next;
    };

    void* small_allocate(std::size_t size);
    void* large_allocate(std::size_t size);
    void bump_footprint(std::size_t size);

    PageProvider* pages_;
    std::byte* arena_ = nullptr;
    std::size_t arena_bytes_ = 0;
    std::size_t arena_used_ = 0; // next unslabbed offset
    std::mutex arena_mutex_;

    FreeNode* free_lists_[kNumClasses] = {};
    std::mutex class_mutex_[kNumClasses];

    struct LargeEntry {
        void* block;
        std::size_t block_bytes;
        std::size_t size;
    };
    std::unordered_map<const void*, LargeEntry> large_;
    std::mutex large_mutex_;

    std::atomic<std::uint64_t> footprint_{0};
    std::atomic<std::uint64_t> peak_{0};
    std::atomic<std::uint64_t> foreign_{0};
};

} // namespace miniprof
