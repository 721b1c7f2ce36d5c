#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace miniprof {

// Per-visit interpreter and native costs for one simulated line, in seconds.
struct SimLineCost {
    double python = 0.0;
    double native = 0.0;
};

struct SimWorkload {
    std::vector<SimLineCost> lines;
    double alpha = 1.16;
    std::uint64_t seed = 0;

    double pass_cost() const; // sum of all per-visit costs
};

// Draws i.i.d. Pareto(alpha) costs with minimum 1.0 for both components of
// every line (inverse-transform sampling), then normalizes by the grand sum
// so one pass over the lines costs exactly one unit. Scale the costs by a
// target duration to make a single simulated pass fill that duration.
SimWorkload generate_workload(int n, double alpha, std::uint64_t seed);

// Per-visit costs multiplied by `factor`; used by the study to stretch one
// drawn shape across its range of execution times.
SimWorkload scale_workload(const SimWorkload& w, double factor);

struct SimOptions {
    double q = 0.01; // sampling interval, seconds
};

// Outcome of one simulated execution. Interpreter estimates are kept as
// whole quantum counts, so est_python_total() == samples * q is an identity.
struct SimResult {
    std::vector<double> actual_python;
    std::vector<double> actual_native;
    std::vector<std::uint64_t> python_quanta;
    std::vector<double> est_native;
    std::uint64_t samples = 0;
    double total_time = 0.0; // virtual seconds actually simulated
    double q = 0.01;

    double est_python(std::size_t i) const {
        return static_cast<double>(python_quanta[i]) * q;
    }
    double est_python_total() const { return static_cast<double>(samples) * q; }
    double est_native_total() const;
    double actual_python_total() const;
    double actual_native_total() const;
    double ratio_python() const; // estimated / actual, NaN if actual is 0
    double ratio_native() const;
    std::optional<double> rho_python() const;
    std::optional<double> rho_native() const;
};

// Walks the lines cyclically, alternating an interpreter phase and a native
// phase per visit, until total_time has elapsed (the crossing phase is
// completed). A timer fires every q seconds of virtual time. Fires inside an
// interpreter phase are delivered at once; fires inside a native phase
// coalesce into a single delivery at the phase end, attributed to the line
// that ran the native call. Each delivery grants one interpreter quantum and
// max(T - q, 0) native seconds, T being the time since the prior delivery.
SimResult simulate_run(const SimWorkload& workload, double total_time,
                       const SimOptions& options = {});

// Spearman rank correlation with average ranks for ties; nullopt when either
// side has zero rank variance.
std::optional<double> spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

struct StudyRow {
    double time = 0.0;
    double ratio_python = 0.0; // mean estimated/actual across runs
    double ratio_native = 0.0;
    double rho_python = 0.0; // mean rank correlation across runs
    double rho_native = 0.0;
    double abs_err_python = 0.0; // mean |ratio - 1| across runs
    double abs_err_native = 0.0;
};

struct StudyConfig {
    int runs = 10;
    int lines = 100;
    double alpha = 1.16;
    double q = 0.01;
    double max_time = 64.0; // time points double from 1 s up to this
    std::uint64_t seed = 1;
};

// Draws one workload shape per run, then replays each shape stretched to
// every time point. Ratios converge toward 1 and rank correlations toward 1
// as phases grow long against q.
std::vector<StudyRow> run_study(const StudyConfig& config);

// CSV with header time,ratio_python,ratio_native,rho_python,rho_native and
// six fixed decimals per value; byte-identical for a fixed config.
std::string study_csv(const std::vector<StudyRow>& rows);

} // namespace miniprof
