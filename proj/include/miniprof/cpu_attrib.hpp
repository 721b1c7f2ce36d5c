#pragma once

#include <cstdint>
#include <functional>
#include <unordered_set>
#include <vector>

#include "miniprof/line_id.hpp"
#include "miniprof/program.hpp"
#include "miniprof/vm.hpp"

namespace miniprof {

// State carried between timer samples. `now - last_signal_time` is the real
// elapsed interval T for the current sample; it exceeds q exactly when
// delivery was delayed by native execution.
struct CpuSampleContext {
    double q = 0.01; // timer interval, seconds
    double last_signal_time = 0.0;
    double now = 0.0;
};

// Positions of call-class opcodes (names starting with "CALL_"), per
// function. A non-main thread parked on one is doing native work.
class CallOpcodeMap {
public:
    void insert(std::uint32_t func, std::uint32_t index) {
        positions_.insert(key(func, index));
    }
    bool contains(std::uint32_t func, std::uint32_t index) const {
        return positions_.count(key(func, index)) != 0;
    }
    std::size_t size() const { return positions_.size(); }

private:
    static std::uint64_t key(std::uint32_t func, std::uint32_t index) {
        return (static_cast<std::uint64_t>(func) << 32) | index;
    }
    std::unordered_set<std::uint64_t> positions_;
};

CallOpcodeMap build_call_map(const Program& program);

// Predicate deciding which files count as profiled code. Everything is
// profiled by default; a session can exclude runtime-library files so
// samples walk out to the user frame that called into them.
using ProfiledScope = std::function<bool(const std::string& file)>;

inline ProfiledScope profile_all_files() {
    return [](const std::string&) { return true; };
}

// The line of the innermost frame whose file is in scope; falls back to the
// outermost frame when nothing matches. Empty stacks map to the unknown
// bucket (callers normally skip them first).
LineId walk_to_profiled_line(const FrameStack& frames, const ProfiledScope& scope);

// One attribution produced by a sample. Interpreter time is granted in whole
// quanta of q seconds (0 or 1 per delta) so totals stay exact.
struct CpuDelta {
    LineId line;
    std::uint32_t python_quanta = 0;
    double native_seconds = 0.0;
};

struct ThreadSample {
    ThreadStatus status = ThreadStatus::executing;
    FrameStack frames;
};

struct CpuAttribDiagnostics {
    std::uint64_t empty_stacks = 0;
};

// Splits one timer sample into per-line deltas. The main thread's profiled
// line gets one quantum of interpreter time plus max(T - q, 0) of native
// time: over a run the quanta sum to exactly S*q while the native residue
// recovers time the timer could not observe. Every other executing thread
// gets one quantum as well - native if it is parked on a CALL_ opcode,
// interpreter otherwise; sleeping threads get nothing. Per-thread grants
// mean the summed attribution can exceed wall time when threads run.
std::vector<CpuDelta> on_cpu_sample(const CpuSampleContext& ctx, const FrameStack& main_frames,
                                    const std::vector<ThreadSample>& others,
                                    const CallOpcodeMap& call_map, const ProfiledScope& scope,
                                    CpuAttribDiagnostics* diag = nullptr);

// Swaps the VM's blocking JOIN for a loop of bounded waits of one switch
// interval, marking the waiter sleeping inside each wait. This keeps the
// main thread reaching opcode boundaries (and thus receiving notifications)
// during joins instead of going dark until the target exits.
void patch_blocking_join(Vm& vm, std::uint64_t switch_interval_ns);
void patch_blocking_join(Vm& vm);

} // namespace miniprof
