#include "miniprof/allocator.hpp"

#include <cstring>
#include <new>

namespace miniprof {

namespace {

struct NewDeletePages : PageProvider {
    void* map_pages(std::size_t bytes) override {
        return ::operator new(bytes, std::align_val_t(kPageSize));
    }
    void unmap_pages(void* p, std::size_t bytes) override {
        ::operator delete(p, bytes, std::align_val_t(kPageSize));
    }
};

NewDeletePages default_pages;

ObjectHeader* header_of(void* payload) {
    return reinterpret_cast<ObjectHeader*>(static_cast<std::byte*>(payload) - sizeof(ObjectHeader));
}

} // namespace

PageProvider& default_page_provider() {
    return default_pages;
}

std::size_t size_class_for(std::size_t size) {
    if (size > kMaxSmallSize)
        return 0;
    if (size == 0)
        return kClassStep;
    return (size + kClassStep - 1) & ~(kClassStep - 1);
}

AllocatorCore::AllocatorCore(std::size_t arena_bytes, PageProvider* pages)
    : pages_(pages ? pages : &default_pages), arena_bytes_(arena_bytes) {
    arena_ = static_cast<std::byte*>(pages_->map_pages(arena_bytes_));
    // Zero the region up front so ownership checks against not-yet-carved
    // memory read a defined (and failing) header.
    std::memset(arena_, 0, arena_bytes_);
}

AllocatorCore::~AllocatorCore() {
    for (auto& [payload, entry] : large_)
        pages_->unmap_pages(entry.block, entry.block_bytes);
    pages_->unmap_pages(arena_, arena_bytes_);
}

bool AllocatorCore::in_small_region(const void* p) const {
    auto* b = static_cast<const std::byte*>(p);
    // The earliest payload sits one header past the region base.
    return b >= arena_ + sizeof(ObjectHeader) && b < arena_ + arena_bytes_;
}

void AllocatorCore::bump_footprint(std::size_t size) {
    std::uint64_t now = footprint_.fetch_add(size, std::memory_order_relaxed) + size;
    std::uint64_t peak = peak_.load(std::memory_order_relaxed);
    while (now > peak &&
           !peak_.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
    }
}

void* AllocatorCore::small_allocate(std::size_t size) {
    std::size_t cls = size_class_for(size);
    std::size_t idx = cls / kClassStep - 1;
    std::lock_guard lock(class_mutex_[idx]);

    if (!free_lists_[idx]) {
        // Carve a fresh slab for this class: header+payload slots packed
        // back to back, threaded onto the free list lowest address first.
        std::byte* slab;
        {
            std::lock_guard arena_lock(arena_mutex_);
            if (arena_used_ + kSlabSize > arena_bytes_)
                throw std::bad_alloc();
            slab = arena_ + arena_used_;
            arena_used_ += kSlabSize;
        }
        std::size_t slot = sizeof(ObjectHeader) + cls;
        std::size_t nslots = kSlabSize / slot;
        FreeNode* head = nullptr;
        for (std::size_t i = nslots; i-- > 0;) {
            std::byte* payload = slab + i * slot + sizeof(ObjectHeader);
            header_of(payload)->magic = kFreedMagic;
            auto* node = reinterpret_cast<FreeNode*>(payload);
            node->next = head;
            head = node;
        }
        free_lists_[idx] = head;
    }

    FreeNode* node = free_lists_[idx];
    free_lists_[idx] = node->next;
    ObjectHeader* h = header_of(node);
    h->magic = kHeaderMagic;
    h->size_class = static_cast<std::uint32_t>(cls);
    h->size = size;
    bump_footprint(size);
    return node;
}

void* AllocatorCore::large_allocate(std::size_t size) {
    // One leading page holds the header so the payload itself starts on a
    // 4096-byte boundary.
    std::size_t payload_bytes = (size + kPageSize - 1) & ~(kPageSize - 1);
    std::size_t block_bytes = kPageSize + payload_bytes;
    auto* block = static_cast<std::byte*>(pages_->map_pages(block_bytes));
    std::byte* payload = block + kPageSize;
    ObjectHeader* h = header_of(payload);
    h->magic = kHeaderMagic;
    h->size_class = 0;
    h->size = size;
    {
        std::lock_guard lock(large_mutex_);
        large_[payload] = LargeEntry{block, block_bytes, size};
    }
    bump_footprint(size);
    return payload;
}

void* AllocatorCore::allocate(std::size_t size) {
    return size <= kMaxSmallSize ? small_allocate(size) : large_allocate(size);
}

AllocatorCore::ReleaseInfo AllocatorCore::deallocate(void* p) {
    if (!p) {
        foreign_.fetch_add(1, std::memory_order_relaxed);
        return {DeallocResult::foreign_ignored, 0};
    }

    if (in_small_region(p)) {
        auto* b = static_cast<std::byte*>(p);
        // All three ownership checks must pass: region (above), 16-byte
        // alignment, live header magic. Anything else is someone else's
        // pointer (or a stale one) and is deliberately leaked.
        if ((b - arena_) % kClassStep != 0) {
            foreign_.fetch_add(1, std::memory_order_relaxed);
            return {DeallocResult::foreign_ignored, 0};
        }
        ObjectHeader* h = header_of(p);
        std::uint32_t cls = h->size_class;
        if (h->magic != kHeaderMagic || cls == 0 || cls > kMaxSmallSize ||
            cls % kClassStep != 0) {
            foreign_.fetch_add(1, std::memory_order_relaxed);
            return {DeallocResult::foreign_ignored, 0};
        }
        std::size_t idx = cls / kClassStep - 1;
        std::lock_guard lock(class_mutex_[idx]);
        if (h->magic != kHeaderMagic) { // lost a double-free race
            foreign_.fetch_add(1, std::memory_order_relaxed);
            return {DeallocResult::foreign_ignored, 0};
        }
        std::size_t size = static_cast<std::size_t>(h->size);
        h->magic = kFreedMagic;
        auto* node = static_cast<FreeNode*>(p);
        node->next = free_lists_[idx];
        free_lists_[idx] = node;
        footprint_.fetch_sub(size, std::memory_order_relaxed);
        return {DeallocResult::released, size};
    }

    if (reinterpret_cast<std::uintptr_t>(p) % kPageSize == 0) {
        std::lock_guard lock(large_mutex_);
        auto it = large_.find(p);
        if (it != large_.end() && header_of(p)->magic == kHeaderMagic) {
            LargeEntry entry = it->second;
            large_.erase(it);
            header_of(p)->magic = kFreedMagic;
            footprint_.fetch_sub(entry.size, std::memory_order_relaxed);
            pages_->unmap_pages(entry.block, entry.block_bytes);
            return {DeallocResult::released, entry.size};
        }
    }

    foreign_.fetch_add(1, std::memory_order_relaxed);
    return {DeallocResult::foreign_ignored, 0};
}

} // namespace miniprof
