#include "doctest.h"

#include <cstdint>
#include <cstring>
#include <random>
#include <thread>
#include <unordered_map>
#include <vector>

#include "miniprof/allocator.hpp"

using namespace miniprof;

namespace {

const ObjectHeader* header_of(const void* payload) {
    return reinterpret_cast<const ObjectHeader*>(
        static_cast<const std::byte*>(payload) - sizeof(ObjectHeader));
}

} // namespace

TEST_CASE("size classes are sixteen byte steps up to 512") {
    CHECK(size_class_for(0) == 16);
    CHECK(size_class_for(1) == 16);
    CHECK(size_class_for(16) == 16);
    CHECK(size_class_for(17) == 32);
    CHECK(size_class_for(511) == 512);
    CHECK(size_class_for(512) == 512);
    CHECK(size_class_for(513) == 0); // large path
    CHECK(kNumClasses == 32);
}

TEST_CASE("small allocations carry a valid header and aligned payload") {
    AllocatorCore core;
    void* p = core.allocate(40);
    REQUIRE(p != nullptr);
    CHECK(reinterpret_cast<std::uintptr_t>(p) % 16 == 0);
    const ObjectHeader* h = header_of(p);
    CHECK(h->magic == kHeaderMagic);
    CHECK(h->size_class == 48);
    CHECK(h->size == 40);
    CHECK(core.footprint() == 40);
    CHECK(core.in_small_region(p));

    auto rel = core.deallocate(p);
    CHECK(rel.result == DeallocResult::released);
    CHECK(rel.size == 40);
    CHECK(core.footprint() == 0);
    CHECK(header_of(p)->magic == kFreedMagic);
}

TEST_CASE("freed slots are reused most recently released first") {
    AllocatorCore core;
    void* a = core.allocate(32);
    void* b = core.allocate(32);
    core.deallocate(a);
    core.deallocate(b);
    CHECK(core.allocate(32) == b);
    CHECK(core.allocate(32) == a);
}

TEST_CASE("large allocations get page aligned payloads and really unmap") {
    AllocatorCore core;
    void* p = core.allocate(1 << 20);
    REQUIRE(p != nullptr);
    CHECK(reinterpret_cast<std::uintptr_t>(p) % 4096 == 0);
    CHECK_FALSE(core.in_small_region(p));
    const ObjectHeader* h = header_of(p);
    CHECK(h->magic == kHeaderMagic);
    CHECK(h->size_class == 0);
    CHECK(h->size == (1 << 20));
    CHECK(core.footprint() == (1 << 20));
    CHECK(core.peak_footprint() == (1 << 20));

    auto rel = core.deallocate(p);
    CHECK(rel.result == DeallocResult::released);
    CHECK(rel.size == (1 << 20));
    CHECK(core.footprint() == 0);
    CHECK(core.peak_footprint() == (1 << 20));
}

TEST_CASE("double frees fail the magic check and are ignored") {
    AllocatorCore core;
    void* p = core.allocate(64);
    CHECK(core.deallocate(p).result == DeallocResult::released);
    CHECK(core.deallocate(p).result == DeallocResult::foreign_ignored);
    CHECK(core.foreign_frees() == 1);

    void* big = core.allocate(4096);
    CHECK(core.deallocate(big).result == DeallocResult::released);
    CHECK(core.deallocate(big).result == DeallocResult::foreign_ignored);
    CHECK(core.foreign_frees() == 2);
}

TEST_CASE("pointers the heap never issued are ignored and counted") {
    AllocatorCore core;
    void* live = core.allocate(100);

    int stack_var = 0;
    CHECK(core.deallocate(&stack_var).result == DeallocResult::foreign_ignored);
    CHECK(core.deallocate(nullptr).result == DeallocResult::foreign_ignored);

    // interior of a real object: misaligned relative to the slab grid
    auto* interior = static_cast<std::byte*>(live) + 3;
    CHECK(core.deallocate(interior).result == DeallocResult::foreign_ignored);

    // aligned but pointing at never carved arena space
    std::vector<std::byte> outside(64);
    CHECK(core.deallocate(outside.data() +
                          (16 - reinterpret_cast<std::uintptr_t>(outside.data()) % 16))
              .result == DeallocResult::foreign_ignored);

    CHECK(core.foreign_frees() == 4);
    CHECK(core.footprint() == 100); // the live object is untouched
    CHECK(core.deallocate(live).result == DeallocResult::released);
}

TEST_CASE("the footprint tracks requested bytes exactly under churn") {
    AllocatorCore core;
    std::mt19937_64 rng(99);
    std::unordered_map<void*, std::size_t> shadow;
    std::uint64_t expected = 0;
    for (int i = 0; i < 20000; ++i) {
        bool do_alloc = shadow.empty() || (rng() % 2 == 0);
        if (do_alloc) {
            std::size_t size = rng() % 2000; // spans both small and large paths
            void* p = core.allocate(size);
            std::memset(p, 0xAB, size);
            shadow[p] = size;
            expected += size;
        } else {
            auto it = shadow.begin();
            std::advance(it, static_cast<long>(rng() % shadow.size()));
            expected -= it->second;
            CHECK(core.deallocate(it->first).result == DeallocResult::released);
            shadow.erase(it);
        }
        if (i % 4096 == 0) CHECK(core.footprint() == expected);
    }
    CHECK(core.footprint() == expected);
    for (auto& [p, size] : shadow) {
        expected -= size;
        core.deallocate(p);
    }
    CHECK(core.footprint() == 0);
    CHECK(core.foreign_frees() == 0);
}

TEST_CASE("exhausting the reserved region throws instead of corrupting") {
    AllocatorCore core(2 * kSlabSize); // room for two slabs only
    std::vector<void*> held;
    CHECK_THROWS_AS(
        [&] {
            for (;;) held.push_back(core.allocate(496));
        }(),
        std::bad_alloc);
    // 4096/512 slots per slab, two slabs
    CHECK(held.size() == 16);
    for (void* p : held) CHECK(core.deallocate(p).result == DeallocResult::released);
    CHECK(core.allocate(496) != nullptr); // freed slots still serve
}

TEST_CASE("concurrent allocation keeps the books consistent") {
    AllocatorCore core;
    constexpr int kThreads = 4;
    constexpr int kOps = 20000;
    std::vector<std::thread> workers;
    workers.reserve(kThreads);
    for (int t = 0; t < kThreads; ++t) {
        workers.emplace_back([&core, t] {
            std::mt19937_64 rng(static_cast<std::uint64_t>(t) + 1);
            std::vector<std::pair<void*, std::size_t>> mine;
            for (int i = 0; i < kOps; ++i) {
                if (mine.empty() || rng() % 2 == 0) {
                    std::size_t size = rng() % 700;
                    void* p = core.allocate(size);
                    std::memset(p, t, size);
                    mine.emplace_back(p, size);
                } else {
                    core.deallocate(mine.back().first);
                    mine.pop_back();
                }
            }
            for (auto& [p, size] : mine) core.deallocate(p);
        });
    }
    for (auto& w : workers) w.join();
    CHECK(core.footprint() == 0);
    CHECK(core.foreign_frees() == 0);
    CHECK(core.peak_footprint() > 0);
}
