#include "miniprof/sampling.hpp"

namespace miniprof {

ClassifierCache::ClassifierCache(std::size_t initial_slots) {
    std::size_t n = 16;
    while (n < initial_slots)
        n <<= 1;
    slots_.resize(n);
}

std::optional<FrameKind> ClassifierCache::lookup(std::uint32_t key) const {
    std::size_t mask = slots_.size() - 1;
    for (std::size_t i = key & mask;; i = (i + 1) & mask) {
        const Slot& s = slots_[i];
        if (s.key_plus_one == 0) {
            ++misses_;
            return std::nullopt;
        }
        if (s.key_plus_one == key + 1) {
            ++hits_;
            return s.kind;
        }
    }
}

void ClassifierCache::insert(std::uint32_t key, FrameKind kind) {
    if ((used_ + 1) * 10 > slots_.size() * 7)
        grow();
    std::size_t mask = slots_.size() - 1;
    for (std::size_t i = key & mask;; i = (i + 1) & mask) {
        Slot& s = slots_[i];
        if (s.key_plus_one == key + 1) {
            s.kind = kind;
            return;
        }
        if (s.key_plus_one == 0) {
            s.key_plus_one = key + 1;
            s.kind = kind;
            ++used_;
            return;
        }
    }
}

void ClassifierCache::grow() {
    std::vector<Slot> old;
    old.swap(slots_);
    slots_.resize(old.size() * 2);
    used_ = 0;
    std::size_t mask = slots_.size() - 1;
    for (const Slot& s : old) {
        if (s.key_plus_one == 0)
            continue;
        std::size_t key = s.key_plus_one - 1;
        for (std::size_t i = key & mask;; i = (i + 1) & mask) {
            if (slots_[i].key_plus_one == 0) {
                slots_[i] = s;
                ++used_;
                break;
            }
        }
    }
}

FrameKind classify_frame_name(const std::string& name, const ClassifierConfig& config) {
    for (const auto& override_name : config.native_overrides)
        if (name == override_name)
            return FrameKind::native_override;
    for (const auto& prefix : config.interpreter_prefixes)
        if (name.rfind(prefix, 0) == 0)
            return FrameKind::interpreter;
    return FrameKind::plain;
}

Provenance classify_allocation_stack(const FrameStack& stack, const ClassifierConfig& config,
                                     ClassifierCache* cache) {
    int depth = 0;
    for (auto it = stack.rbegin(); it != stack.rend() && depth < config.max_depth;
         ++it, ++depth) {
        FrameKind kind;
        if (cache) {
            if (auto cached = cache->lookup(it->func_index)) {
                kind = *cached;
            } else {
                kind = classify_frame_name(it->function, config);
                cache->insert(it->func_index, kind);
            }
        } else {
            kind = classify_frame_name(it->function, config);
        }
        if (kind == FrameKind::native_override)
            return Provenance::native;
        if (kind == FrameKind::interpreter)
            return Provenance::python;
    }
    return Provenance::native;
}

SamplingAllocator::SamplingAllocator(AllocatorCore& core, SamplingConfig config,
                                     Channel* channel, NotifyFn notify)
    : core_(core), config_(config), channel_(channel), notify_(std::move(notify)) {}

void SamplingAllocator::emit_record(RecordKind kind, NotificationKind notify_kind,
                                    const LineId& line) {
    state_.in_handler = true;
    Record r;
    r.kind = kind;
    r.bytes = kind == RecordKind::copy ? config_.copy_threshold() : config_.alloc_threshold;
    if (kind != RecordKind::copy) {
        r.python_fraction = state_.total_bytes == 0
                                ? 0.0
                                : static_cast<double>(state_.python_bytes) /
                                      static_cast<double>(state_.total_bytes);
        state_.python_bytes = 0;
        state_.total_bytes = 0;
    }
    r.footprint = core_.footprint();
    r.line = line;
    switch (kind) {
    case RecordKind::alloc_malloc: ++state_.malloc_records; break;
    case RecordKind::alloc_free: ++state_.free_records; break;
    case RecordKind::copy: ++state_.copy_records; break;
    }
    if (channel_)
        channel_->append(r);
    if (notify_)
        notify_(notify_kind);
    state_.in_handler = false;
}

void SamplingAllocator::drain_crossings(std::uint64_t& accum, std::uint64_t threshold,
                                        RecordKind kind, NotificationKind notify_kind,
                                        const LineId& line) {
    // Emission can trigger further allocation (the channel write, a hook);
    // the flag defers nested emissions and the entry snapshot keeps bytes a
    // handler banked from extending this very loop. Both retry at the next
    // crossing.
    std::uint64_t pending = accum / threshold;
    while (pending-- > 0 && accum >= threshold) {
        if (state_.in_handler)
            break;
        accum -= threshold;
        emit_record(kind, notify_kind, line);
    }
}

void* SamplingAllocator::allocate(std::size_t size, const FrameStack& stack,
                                  const LineId& line) {
    void* p = core_.allocate(size);

    state_.stack_accum += size;
    std::uint64_t stack_threshold = config_.stack_threshold();
    while (state_.stack_accum >= stack_threshold) {
        state_.stack_accum -= stack_threshold;
        Provenance prov = classify_allocation_stack(stack, config_.classifier, &cache_);
        state_.total_bytes += size;
        if (prov == Provenance::python)
            state_.python_bytes += size;
        ++state_.stack_samples;
    }

    state_.alloc_accum += size;
    drain_crossings(state_.alloc_accum, config_.alloc_threshold, RecordKind::alloc_malloc,
                    NotificationKind::malloc_sample, line);
    return p;
}

DeallocResult SamplingAllocator::deallocate(void* p, const LineId& line) {
    AllocatorCore::ReleaseInfo info = core_.deallocate(p);
    if (info.result == DeallocResult::released) {
        state_.free_accum += info.size;
        drain_crossings(state_.free_accum, config_.alloc_threshold, RecordKind::alloc_free,
                        NotificationKind::free_sample, line);
    }
    return info.result;
}

void SamplingAllocator::copy(std::uint64_t bytes, const LineId& line) {
    state_.copy_accum += bytes;
    drain_crossings(state_.copy_accum, config_.copy_threshold(), RecordKind::copy,
                    NotificationKind::copy_sample, line);
}

} // namespace miniprof
