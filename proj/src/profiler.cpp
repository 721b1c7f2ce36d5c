#include "miniprof/profiler.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "miniprof/allocator.hpp"
#include "miniprof/sampling.hpp"

namespace miniprof {

namespace {

// Routes VM heap opcodes through the sampling layer.
class SamplerBackend : public AllocBackend {
public:
    explicit SamplerBackend(SamplingAllocator& sampler) : sampler_(sampler) {}

    void* alloc(std::uint64_t size, const FrameStack& stack, const LineId& line) override {
        return sampler_.allocate(static_cast<std::size_t>(size), stack, line);
    }
    void free(void* p, const LineId& line) override { sampler_.deallocate(p, line); }
    void copy(std::uint64_t bytes, const LineId& line) override {
        sampler_.copy(bytes, line);
    }

private:
    SamplingAllocator& sampler_;
};

class Session : public NotificationSink {
public:
    Session(const Program& program, const RunConfig& config, Channel* channel)
        : config_(config), channel_(channel), call_map_(build_call_map(program)) {}

    void on_notification(NotificationKind kind, const Vm& vm) override {
        if (kind == NotificationKind::timer)
            handle_timer(vm);
        else
            drain();
    }

    void handle_timer(const Vm& vm) {
        auto threads = vm.enumerate_threads();
        if (threads.empty() || threads.front().first != 0)
            return; // no main thread, nothing to attribute to
        FrameStack main_frames = vm.current_frames(0);
        std::vector<ThreadSample> others;
        for (const auto& [tid, status] : threads) {
            if (tid == 0) continue;
            others.push_back({status, vm.current_frames(tid)});
        }
        CpuSampleContext ctx;
        ctx.q = config_.q;
        ctx.last_signal_time = last_signal_;
        ctx.now = vm.clock_seconds();
        auto deltas = on_cpu_sample(ctx, main_frames, others, call_map_,
                                    profile_all_files(), &cpu_diag_);
        for (const auto& d : deltas) table_.apply(d);
        last_signal_ = ctx.now;
    }

    void drain() {
        if (!channel_) return;
        for (auto& rec : channel_->drain()) {
            table_.apply(rec);
            records_.push_back(std::move(rec));
        }
    }

    ProfileTable& table() { return table_; }
    std::vector<Record>& records() { return records_; }
    const CpuAttribDiagnostics& cpu_diagnostics() const { return cpu_diag_; }

private:
    const RunConfig& config_;
    Channel* channel_;
    CallOpcodeMap call_map_;
    ProfileTable table_;
    std::vector<Record> records_;
    CpuAttribDiagnostics cpu_diag_;
    double last_signal_ = 0.0;
};

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

} // namespace

std::string render_run_report(const ProfileTable& table, const RunConfig& config,
                              double elapsed_seconds, std::uint64_t peak) {
    ReportOptions opt;
    opt.q = config.q;
    opt.run_seconds = elapsed_seconds;
    opt.peak_footprint = peak;
    return render_report(table, opt);
}

RunResult run_profiled(const Program& program, const RunConfig& config) {
    VmConfig vm_config;
    vm_config.timer_interval_ns =
        static_cast<std::uint64_t>(std::llround(config.q * 1e9));
    vm_config.switch_interval_ns = config.switch_interval_ns;
    vm_config.patched_join = config.patch_joins;
    vm_config.max_virtual_ns =
        static_cast<std::uint64_t>(std::llround(config.max_seconds * 1e9));
    vm_config.seed = config.seed;

    std::unique_ptr<AllocatorCore> core;
    std::unique_ptr<Channel> channel;
    std::unique_ptr<SamplingAllocator> sampler;
    std::unique_ptr<SamplerBackend> backend;
    Vm* vm_ptr = nullptr; // bound below; the sampler outlives every use
    if (!config.cpu_only) {
        core = std::make_unique<AllocatorCore>();
        std::filesystem::path path = config.channel_path.empty()
                                         ? Channel::default_path()
                                         : std::filesystem::path(config.channel_path);
        channel = std::make_unique<Channel>(path, /*remove_on_close=*/true);
        SamplingConfig sampling;
        sampling.alloc_threshold = config.alloc_threshold;
        sampler = std::make_unique<SamplingAllocator>(
            *core, sampling, channel.get(), [&vm_ptr](NotificationKind kind) {
                if (vm_ptr) vm_ptr->enqueue_notification(kind);
            });
        backend = std::make_unique<SamplerBackend>(*sampler);
    }

    Session session(program, config, channel.get());
    Vm vm(program, vm_config, backend.get());
    vm_ptr = &vm;

    RunResult result;
    const std::uint64_t interval_ns =
        config.profile_interval > 0.0
            ? static_cast<std::uint64_t>(std::llround(config.profile_interval * 1e9))
            : 0;
    std::uint64_t next_checkpoint = interval_ns;
    const std::filesystem::path out_path(config.out_path);

    auto rotate_and_write = [&](const std::string& text) {
        if (result.checkpoints_written > 0) {
            std::filesystem::path old = out_path;
            old += "." + std::to_string(result.checkpoints_written);
            std::error_code ec;
            std::filesystem::rename(out_path, old, ec);
        }
        write_text_file(out_path, text);
    };

    for (;;) {
        if (vm.clock_ns() > vm_config.max_virtual_ns) {
            result.exit = ExitStatus::time_limit;
            break;
        }
        StepResult sr = vm.step(&session);
        if (interval_ns > 0 && vm.clock_ns() >= next_checkpoint &&
            sr.outcome == StepOutcome::ran) {
            session.drain();
            std::uint64_t peak = sampler ? sampler->peak_footprint() : 0;
            rotate_and_write(render_run_report(session.table(), config,
                                               vm.clock_seconds(), peak));
            ++result.checkpoints_written;
            while (next_checkpoint <= vm.clock_ns()) next_checkpoint += interval_ns;
        }
        if (sr.outcome == StepOutcome::halted) {
            result.exit = vm.halt_opcode_seen() ? ExitStatus::halted
                                                : ExitStatus::all_threads_exited;
            break;
        }
    }

    // records emitted after the last notification still sit in the channel
    session.drain();

    result.elapsed_seconds = vm.clock_seconds();
    result.peak_footprint = sampler ? sampler->peak_footprint() : 0;
    result.foreign_frees = core ? core->foreign_frees() : 0;
    result.vm_diagnostics = vm.diagnostics();
    result.cpu_diagnostics = session.cpu_diagnostics();
    result.report = render_run_report(session.table(), config, result.elapsed_seconds,
                                      result.peak_footprint);
    if (interval_ns > 0) rotate_and_write(result.report);
    result.table = std::move(session.table());
    result.records = std::move(session.records());
    return result;
}

} // namespace miniprof
