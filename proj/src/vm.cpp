#include "miniprof/vm.hpp"

#include <algorithm>
#include <stdexcept>

namespace miniprof {

namespace {

// Null backend: ALLOC hands out no storage, FREE and COPY are no-ops. Used
// when the profiler's memory instrumentation is off.
struct NullBackend : AllocBackend {
    void* alloc(std::uint64_t, const FrameStack&, const LineId&) override { return nullptr; }
    void free(void*, const LineId&) override {}
    void copy(std::uint64_t, const LineId&) override {}
};

NullBackend null_backend;

} // namespace

Vm::Vm(const Program& program, VmConfig config, AllocBackend* backend)
    : program_(&program), config_(config),
      backend_(backend ? backend : &null_backend) {
    ThreadRec main;
    main.id = 0;
    main.frames.push_back(Frame{program.entry, 0, 0, {}});
    threads_.push_back(std::move(main));
    next_timer_ns_ = config_.timer_interval_ns;
    next_switch_ns_ = config_.switch_interval_ns;
}

bool Vm::any_alive() const {
    return std::any_of(threads_.begin(), threads_.end(),
                       [](const ThreadRec& t) { return t.alive; });
}

// Releases threads whose bounded wait expired or whose join target died.
// The lowest-id thread woken here preempts the scheduler at this boundary so
// the main thread regains the lock promptly after each bounded wait.
void Vm::wake_ready(int& preferred) {
    for (auto& t : threads_) {
        if (!t.alive || t.wait == WaitKind::none)
            continue;
        bool wake = false;
        if (t.wait == WaitKind::bounded && t.wake_at_ns <= clock_ns_)
            wake = true;
        // a waiter wakes the moment its join target dies, timed nap or not
        if (t.join_target >= 0 &&
            (t.join_target >= static_cast<int>(threads_.size()) ||
             !threads_[t.join_target].alive))
            wake = true;
        if (wake) {
            t.wait = WaitKind::none;
            t.status = ThreadStatus::executing;
            t.join_target = -1;
            if (preferred == -1 || t.id < preferred)
                preferred = t.id;
        }
    }
}

// Finds a thread to execute, advancing the clock across idle gaps where every
// live thread is waiting. Returns false when no thread is alive.
bool Vm::pick_thread() {
    for (;;) {
        if (!any_alive())
            return false;
        int preferred = -1;
        wake_ready(preferred);
        if (preferred != -1) {
            gil_holder_ = preferred;
            return true;
        }
        if (runnable(threads_[gil_holder_]))
            return true;
        // Round-robin to the next runnable thread.
        int n = static_cast<int>(threads_.size());
        for (int off = 1; off <= n; ++off) {
            int cand = (gil_holder_ + off) % n;
            if (runnable(threads_[cand])) {
                gil_holder_ = cand;
                return true;
            }
        }
        // Everyone is waiting: jump to the earliest bounded deadline.
        std::uint64_t earliest = UINT64_MAX;
        for (const auto& t : threads_)
            if (t.alive && t.wait == WaitKind::bounded)
                earliest = std::min(earliest, t.wake_at_ns);
        if (earliest == UINT64_MAX)
            throw std::runtime_error("vm deadlock: all live threads blocked in joins");
        clock_ns_ = std::max(clock_ns_, earliest);
    }
}

std::int64_t Vm::pop_value(Frame& fr) {
    if (fr.stack.empty()) {
        ++diag_.stack_underflows;
        return 0;
    }
    std::int64_t v = fr.stack.back();
    fr.stack.pop_back();
    return v;
}

void Vm::do_return(ThreadRec& t) {
    t.frames.pop_back();
    if (t.frames.empty())
        t.alive = false;
}

void Vm::execute_one(int tid) {
    ThreadRec& t = threads_[tid];
    Frame& fr = t.frames.back();
    const auto& code = program_->functions[fr.func].code;

    if (fr.next_pc >= code.size()) { // fell off the end: implicit RET
        clock_ns_ += config_.opcode_cost_ns;
        do_return(t);
        return;
    }

    fr.last_executed = fr.next_pc;
    const Instruction& ins = code[fr.next_pc];
    ++fr.next_pc;
    clock_ns_ += ins.op == Opcode::call_native ? ins.native_ns : config_.opcode_cost_ns;

    const LineId line{program_->files[ins.file_idx], ins.line};

    switch (ins.op) {
    case Opcode::push:
        fr.stack.push_back(ins.operand);
        break;
    case Opcode::pop:
        pop_value(fr);
        break;
    case Opcode::add: {
        std::int64_t b = pop_value(fr);
        std::int64_t a = pop_value(fr);
        fr.stack.push_back(static_cast<std::int64_t>(
            static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b)));
        break;
    }
    case Opcode::jmp:
        fr.next_pc = static_cast<std::uint32_t>(ins.operand);
        break;
    case Opcode::jnz:
        // Tests the top of the stack without consuming it, so countdown
        // loops can keep their counter live across iterations.
        if (fr.stack.empty())
            ++diag_.stack_underflows;
        else if (fr.stack.back() != 0)
            fr.next_pc = static_cast<std::uint32_t>(ins.operand);
        break;
    case Opcode::call:
        t.frames.push_back(Frame{ins.func_target, 0, 0, {}});
        break;
    case Opcode::call_native:
        break; // clock already advanced by the declared duration
    case Opcode::alloc: {
        void* p = backend_->alloc(static_cast<std::uint64_t>(ins.operand),
                                  snapshot_frames(t), line);
        std::int64_t handle = next_handle_++;
        handles_[handle] = p;
        t.frames.back().stack.push_back(handle);
        break;
    }
    case Opcode::free_obj: {
        if (fr.stack.empty()) {
            ++diag_.stack_underflows;
            break;
        }
        std::int64_t handle = fr.stack.back();
        fr.stack.pop_back();
        auto it = handles_.find(handle);
        if (it == handles_.end()) {
            ++diag_.invalid_frees;
            break;
        }
        backend_->free(it->second, line);
        handles_.erase(it);
        break;
    }
    case Opcode::copy:
        backend_->copy(static_cast<std::uint64_t>(ins.operand), line);
        break;
    case Opcode::spawn: {
        ThreadRec worker;
        worker.id = static_cast<int>(threads_.size());
        worker.frames.push_back(Frame{ins.func_target, 0, 0, {}});
        threads_.push_back(std::move(worker));
        break;
    }
    case Opcode::join: {
        int target = static_cast<int>(ins.operand);
        bool target_alive = target >= 0 &&
                            target < static_cast<int>(threads_.size()) &&
                            threads_[target].alive;
        if (!target_alive)
            break; // completes immediately; an unknown id counts as dead
        // Stay on the JOIN and wait. Patched: a bounded wait of one switch
        // interval with the thread marked sleeping, re-checking on wake, so
        // the waiter keeps reaching opcode boundaries. Unpatched: block
        // outright until the target dies; the thread still reads as
        // executing because nothing intercepted the call.
        fr.next_pc = fr.last_executed;
        if (config_.patched_join) {
            t.status = ThreadStatus::sleeping;
            t.wait = WaitKind::bounded;
            t.wake_at_ns = clock_ns_ + config_.switch_interval_ns;
            t.join_target = target; // naps end early if the target dies
        } else {
            t.wait = WaitKind::join_blocked;
            t.join_target = target;
        }
        break;
    }
    case Opcode::ret:
        do_return(t);
        break;
    case Opcode::halt:
        halted_ = true;
        halt_opcode_seen_ = true;
        break;
    }
}

void Vm::fire_timers() {
    if (config_.timer_interval_ns == 0)
        return;
    bool due = false;
    while (clock_ns_ >= next_timer_ns_) {
        due = true;
        next_timer_ns_ += config_.timer_interval_ns;
    }
    if (due)
        enqueue_notification(NotificationKind::timer);
}

void Vm::enqueue_notification(NotificationKind kind) {
    if (std::find(pending_.begin(), pending_.end(), kind) == pending_.end())
        pending_.push_back(kind);
}

void Vm::deliver(NotificationSink* sink, int ran_tid) {
    if (ran_tid != 0 || !threads_[0].alive || pending_.empty())
        return;
    std::vector<NotificationKind> due;
    due.swap(pending_);
    if (!sink)
        return;
    for (NotificationKind kind : due)
        sink->on_notification(kind, *this);
}

void Vm::maybe_rotate() {
    if (clock_ns_ < next_switch_ns_)
        return;
    next_switch_ns_ = clock_ns_ + config_.switch_interval_ns;
    int n = static_cast<int>(threads_.size());
    for (int off = 1; off <= n; ++off) {
        int cand = (gil_holder_ + off) % n;
        if (runnable(threads_[cand])) {
            gil_holder_ = cand;
            return;
        }
    }
}

StepResult Vm::step(NotificationSink* sink) {
    if (halted_ || !pick_thread()) {
        halted_ = true;
        return {StepOutcome::halted, -1};
    }
    int tid = gil_holder_;
    execute_one(tid);
    fire_timers();
    if (!halted_)
        deliver(sink, tid);
    maybe_rotate();
    if (halted_ || !any_alive()) {
        halted_ = true;
        return {StepOutcome::halted, tid};
    }
    return {StepOutcome::ran, tid};
}

ExitStatus Vm::run(NotificationSink* sink) {
    for (;;) {
        if (clock_ns_ > config_.max_virtual_ns)
            return ExitStatus::time_limit;
        StepResult r = step(sink);
        if (r.outcome == StepOutcome::halted)
            return halt_opcode_seen_ ? ExitStatus::halted : ExitStatus::all_threads_exited;
    }
}

std::vector<std::pair<int, ThreadStatus>> Vm::enumerate_threads() const {
    std::vector<std::pair<int, ThreadStatus>> out;
    for (const auto& t : threads_)
        if (t.alive)
            out.emplace_back(t.id, t.status);
    return out;
}

FrameStack Vm::snapshot_frames(const ThreadRec& t) const {
    FrameStack out;
    out.reserve(t.frames.size());
    for (const auto& fr : t.frames) {
        FrameSnapshot snap;
        snap.function = program_->functions[fr.func].name;
        snap.func_index = fr.func;
        snap.opcode_index = fr.last_executed;
        snap.line = program_->line_of(fr.func, fr.last_executed);
        out.push_back(std::move(snap));
    }
    return out;
}

FrameStack Vm::current_frames(int tid) const {
    if (tid < 0 || tid >= static_cast<int>(threads_.size()) || !threads_[tid].alive)
        throw std::out_of_range("no live thread with id " + std::to_string(tid));
    return snapshot_frames(threads_[tid]);
}

} // namespace miniprof
