#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "miniprof/allocator.hpp"
#include "miniprof/event_channel.hpp"
#include "miniprof/line_id.hpp"
#include "miniprof/vm.hpp"

namespace miniprof {

enum class Provenance { python, native };

// Frame names carrying these prefixes belong to the interpreter runtime, so
// allocations made beneath them count as script ("python") allocations.
// Names in `native_overrides` keep the prefix but allocate on behalf of
// native code and are classified native outright.
struct ClassifierConfig {
    std::vector<std::string> interpreter_prefixes = {"Vm_", "_Vm"};
    std::vector<std::string> native_overrides = {"_VmCFunction", "VmArray"};
    int max_depth = 4; // innermost frames examined per classification
};

// What one frame contributes to a classification; a pure function of the
// function name, which is what makes per-frame memoization transparent.
enum class FrameKind : std::uint8_t { interpreter, native_override, plain };

// Open-addressed map from function identity to FrameKind. Linear probing,
// power-of-two capacity, grown at 70% load. Keys are the program's function
// indices, so hits avoid re-running the string prefix scan.
class ClassifierCache {
public:
    explicit ClassifierCache(std::size_t initial_slots = 64);

    std::optional<FrameKind> lookup(std::uint32_t key) const;
    void insert(std::uint32_t key, FrameKind kind);

    std::uint64_t hits() const { return hits_; }
    std::uint64_t misses() const { return misses_; }

private:
    struct Slot {
        std::uint32_t key_plus_one = 0; // 0 = empty
        FrameKind kind = FrameKind::plain;
    };
    void grow();

    std::vector<Slot> slots_;
    std::size_t used_ = 0;
    mutable std::uint64_t hits_ = 0;
    mutable std::uint64_t misses_ = 0;
};

FrameKind classify_frame_name(const std::string& name, const ClassifierConfig& config);

// Walks the innermost max_depth frames: the first interpreter-prefixed frame
// decides python, an override frame decides native, and a stack with neither
// within reach is native. The cache, when given, memoizes per-frame kinds
// and never changes the verdict.
Provenance classify_allocation_stack(const FrameStack& stack, const ClassifierConfig& config,
                                     ClassifierCache* cache = nullptr);

struct SamplingConfig {
    // Smallest prime above 2^20; prime so sampling cannot phase-lock with
    // power-of-two allocation patterns.
    std::uint64_t alloc_threshold = 1'048'583;
    // Copy records cost less to act on, so they fire at twice the pace.
    std::uint64_t copy_threshold_factor = 2;
    // Call-stack provenance is sampled this many times per alloc record.
    std::uint64_t stack_sample_divisor = 13;
    ClassifierConfig classifier;

    std::uint64_t copy_threshold() const { return alloc_threshold * copy_threshold_factor; }
    std::uint64_t stack_threshold() const { return alloc_threshold / stack_sample_divisor; }
};

struct SamplingState {
    std::uint64_t alloc_accum = 0;  // allocated bytes since the last malloc record
    std::uint64_t free_accum = 0;   // released bytes since the last free record
    std::uint64_t copy_accum = 0;   // copied bytes since the last copy record
    std::uint64_t stack_accum = 0;  // allocated bytes since the last provenance sample
    std::uint64_t python_bytes = 0; // provenance-sampled script bytes since last record
    std::uint64_t total_bytes = 0;  // provenance-sampled bytes since last record
    std::uint64_t stack_samples = 0;
    std::uint64_t malloc_records = 0;
    std::uint64_t free_records = 0;
    std::uint64_t copy_records = 0;
    bool in_handler = false; // reentrancy guard around record emission
};

// Sampling front end over AllocatorCore: accumulates allocation, free, and
// copy volume, classifies provenance every threshold/13 bytes, and emits one
// channel record plus one notification per threshold crossing. Designed for
// the VM's single execution stream; the underlying core is what must stand
// up to concurrent use.
class SamplingAllocator {
public:
    using NotifyFn = std::function<void(NotificationKind)>;

    SamplingAllocator(AllocatorCore& core, SamplingConfig config,
                      Channel* channel = nullptr, NotifyFn notify = nullptr);

    void* allocate(std::size_t size, const FrameStack& stack, const LineId& line);
    DeallocResult deallocate(void* p, const LineId& line);
    void copy(std::uint64_t bytes, const LineId& line);

    const SamplingState& state() const { return state_; }
    const SamplingConfig& config() const { return config_; }
    const ClassifierCache& cache() const { return cache_; }
    std::uint64_t footprint() const { return core_.footprint(); }
    std::uint64_t peak_footprint() const { return core_.peak_footprint(); }

private:
    void emit_record(RecordKind kind, NotificationKind notify_kind, const LineId& line);
    void drain_crossings(std::uint64_t& accum, std::uint64_t threshold, RecordKind kind,
                         NotificationKind notify_kind, const LineId& line);

    AllocatorCore& core_;
    SamplingConfig config_;
    Channel* channel_;
    NotifyFn notify_;
    ClassifierCache cache_;
    SamplingState state_;
};

} // namespace miniprof
