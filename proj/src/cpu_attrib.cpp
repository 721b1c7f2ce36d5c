#include "miniprof/cpu_attrib.hpp"

#include <algorithm>
#include <string_view>

namespace miniprof {

CallOpcodeMap build_call_map(const Program& program) {
    CallOpcodeMap map;
    for (std::uint32_t f = 0; f < program.functions.size(); ++f) {
        const auto& code = program.functions[f].code;
        for (std::uint32_t i = 0; i < code.size(); ++i) {
            std::string_view name = opcode_name(code[i].op);
            if (name.substr(0, 5) == "CALL_")
                map.insert(f, i);
        }
    }
    return map;
}

LineId walk_to_profiled_line(const FrameStack& frames, const ProfiledScope& scope) {
    if (frames.empty())
        return unknown_line();
    for (auto it = frames.rbegin(); it != frames.rend(); ++it)
        if (scope(it->line.file))
            return it->line;
    return frames.front().line;
}

std::vector<CpuDelta> on_cpu_sample(const CpuSampleContext& ctx, const FrameStack& main_frames,
                                    const std::vector<ThreadSample>& others,
                                    const CallOpcodeMap& call_map, const ProfiledScope& scope,
                                    CpuAttribDiagnostics* diag) {
    std::vector<CpuDelta> deltas;

    if (main_frames.empty()) {
        if (diag)
            ++diag->empty_stacks;
    } else {
        double elapsed = ctx.now - ctx.last_signal_time;
        CpuDelta d;
        d.line = walk_to_profiled_line(main_frames, scope);
        d.python_quanta = 1;
        d.native_seconds = std::max(elapsed - ctx.q, 0.0);
        deltas.push_back(std::move(d));
    }

    for (const ThreadSample& t : others) {
        if (t.status == ThreadStatus::sleeping)
            continue;
        if (t.frames.empty()) {
            if (diag)
                ++diag->empty_stacks;
            continue;
        }
        const FrameSnapshot& innermost = t.frames.back();
        CpuDelta d;
        d.line = walk_to_profiled_line(t.frames, scope);
        if (call_map.contains(innermost.func_index, innermost.opcode_index))
            d.native_seconds = ctx.q; // inside (or parked on) a native call
        else
            d.python_quanta = 1;
        deltas.push_back(std::move(d));
    }
    return deltas;
}

void patch_blocking_join(Vm& vm, std::uint64_t switch_interval_ns) {
    // The bounded-wait quantum rides on the VM's switch interval, exactly
    // like the scheduler's own rotation cadence.
    vm.set_switch_interval(switch_interval_ns);
    vm.set_patched_join(true);
}

void patch_blocking_join(Vm& vm) {
    vm.set_patched_join(true);
}

} // namespace miniprof
