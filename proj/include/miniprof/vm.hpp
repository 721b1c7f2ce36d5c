#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "miniprof/line_id.hpp"
#include "miniprof/program.hpp"

namespace miniprof {

// Notification kinds mirror the profiler's signal set: one periodic virtual
// timer plus the three sampled memory events raised by the allocator.
enum class NotificationKind { timer, malloc_sample, free_sample, copy_sample };

enum class ThreadStatus { executing, sleeping };
enum class StepOutcome { ran, halted };
enum class ExitStatus { halted, all_threads_exited, time_limit };

// One stack frame as seen by observers. `opcode_index` is the instruction
// that is executing or just executed (for a parked caller, the CALL it is
// suspended in), so samples land on the line that owns the current work.
struct FrameSnapshot {
    std::string function;
    std::uint32_t func_index = 0;
    std::uint32_t opcode_index = 0;
    LineId line;
};

// Outermost frame first, innermost frame last.
using FrameStack = std::vector<FrameSnapshot>;

struct VmConfig {
    std::uint64_t opcode_cost_ns = 10'000;         // fixed virtual cost per opcode
    std::uint64_t switch_interval_ns = 5'000'000;  // scheduler rotation quantum
    std::uint64_t timer_interval_ns = 0;           // 0 disables timer notifications
    std::uint64_t max_virtual_ns = 600'000'000'000ULL; // runaway guard
    bool patched_join = false; // bounded-wait JOIN; see patch_blocking_join
    bool wall_clock = false;   // reserved: virtual time is the only implemented mode
    std::uint64_t seed = 0;    // reserved: execution is fully deterministic
};

class Vm;

struct NotificationSink {
    virtual ~NotificationSink() = default;
    virtual void on_notification(NotificationKind kind, const Vm& vm) = 0;
};

// Memory operations ALLOC/FREE/COPY delegate to. The profiler installs its
// sampling allocator here; by default a null backend hands out no storage and
// the opcodes only shuffle handles.
struct AllocBackend {
    virtual ~AllocBackend() = default;
    virtual void* alloc(std::uint64_t size, const FrameStack& stack, const LineId& line) = 0;
    virtual void free(void* p, const LineId& line) = 0;
    virtual void copy(std::uint64_t bytes, const LineId& line) = 0;
};

struct VmDiagnostics {
    std::uint64_t stack_underflows = 0;
    std::uint64_t invalid_frees = 0;
};

struct StepResult {
    StepOutcome outcome = StepOutcome::ran;
    int thread = -1; // thread that executed, -1 when halted before running
};

// A deterministic stack VM with interpreter-style execution semantics: one
// thread runs at a time, the scheduler rotates among executing threads every
// switch interval of virtual time, and notifications are delivered to the
// main thread only, at opcode boundaries. Duplicate pending notification
// kinds coalesce (depth one per kind), modeling lost signals. A CALL_NATIVE
// advances the clock atomically by its declared duration: no delivery and no
// thread switch happens inside it. Given (program, config), execution and
// every observable side effect are a pure function of the inputs.
class Vm {
public:
    Vm(const Program& program, VmConfig config, AllocBackend* backend = nullptr);

    // Executes one opcode of the thread holding the execution lock, then
    // fires due timers, delivers pending notifications if main just ran, and
    // rotates the lock when the switch interval elapsed.
    StepResult step(NotificationSink* sink);

    // Drives step() until the program halts, every thread exits, or the
    // runaway guard trips.
    ExitStatus run(NotificationSink* sink);

    // Queues a notification for the main thread; duplicates coalesce.
    void enqueue_notification(NotificationKind kind);

    std::uint64_t clock_ns() const { return clock_ns_; }
    double clock_seconds() const { return static_cast<double>(clock_ns_) / 1e9; }
    bool halted() const { return halted_; }
    bool halt_opcode_seen() const { return halt_opcode_seen_; }
    int gil_holder() const { return gil_holder_; }

    // Alive threads in id order.
    std::vector<std::pair<int, ThreadStatus>> enumerate_threads() const;

    // Deep snapshot of a live thread's frames; throws std::out_of_range for
    // an unknown or dead thread id.
    FrameStack current_frames(int tid) const;

    const VmDiagnostics& diagnostics() const { return diag_; }
    const VmConfig& config() const { return config_; }
    void set_patched_join(bool on) { config_.patched_join = on; }
    void set_switch_interval(std::uint64_t ns) {
        config_.switch_interval_ns = ns;
        next_switch_ns_ = clock_ns_ + ns;
    }

private:
    struct Frame {
        std::uint32_t func = 0;
        std::uint32_t last_executed = 0; // instruction executing / just executed
        std::uint32_t next_pc = 0;
        std::vector<std::int64_t> stack;
    };

    enum class WaitKind { none, bounded, join_blocked };

    struct ThreadRec {
        int id = 0;
        std::vector<Frame> frames;
        ThreadStatus status = ThreadStatus::executing;
        bool alive = true;
        WaitKind wait = WaitKind::none;
        std::uint64_t wake_at_ns = 0; // bounded waits only
        int join_target = -1;
    };

    bool runnable(const ThreadRec& t) const { return t.alive && t.wait == WaitKind::none; }
    bool any_alive() const;
    void wake_ready(int& preferred);
    bool pick_thread();
    void execute_one(int tid);
    void do_return(ThreadRec& t);
    void fire_timers();
    void deliver(NotificationSink* sink, int ran_tid);
    void maybe_rotate();
    FrameStack snapshot_frames(const ThreadRec& t) const;
    std::int64_t pop_value(Frame& fr);

    const Program* program_;
    VmConfig config_;
    AllocBackend* backend_;

    std::vector<ThreadRec> threads_;
    int gil_holder_ = 0;
    std::uint64_t clock_ns_ = 0;
    std::uint64_t next_timer_ns_ = 0;
    std::uint64_t next_switch_ns_ = 0;
    bool halted_ = false;          // HALT executed
    bool halt_opcode_seen_ = false;
    std::vector<NotificationKind> pending_; // insertion-ordered, one per kind
    std::unordered_map<std::int64_t, void*> handles_;
    std::int64_t next_handle_ = 1;
    VmDiagnostics diag_;
};

} // namespace miniprof
