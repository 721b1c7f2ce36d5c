#include "miniprof/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace miniprof {

namespace {

// 53-bit uniform in [0, 1).
double next_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Pareto(alpha) with scale 1 via inverse transform; result >= 1.
double next_pareto(std::mt19937_64& rng, double alpha) {
    double u = 1.0 - next_uniform(rng); // (0, 1]
    return std::pow(u, -1.0 / alpha);
}

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

double safe_ratio(double est, double actual) {
    if (actual == 0.0) return nan_value();
    return est / actual;
}

// Ranks 1..n with ties averaged.
std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        double rank = static_cast<double>(i + j + 2) / 2.0; // mean of i+1 .. j+1
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double da = a[i] - ma;
        double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

} // namespace

double SimWorkload::pass_cost() const {
    double sum = 0.0;
    for (const auto& l : lines) sum += l.python + l.native;
    return sum;
}

SimWorkload generate_workload(int n, double alpha, std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("workload needs at least one line");
    if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
    SimWorkload w;
    w.alpha = alpha;
    w.seed = seed;
    w.lines.resize(static_cast<std::size_t>(n));
    std::mt19937_64 rng(seed);
    for (auto& l : w.lines) {
        l.python = next_pareto(rng, alpha);
        l.native = next_pareto(rng, alpha);
    }
    double sum = w.pass_cost();
    for (auto& l : w.lines) {
        l.python /= sum;
        l.native /= sum;
    }
    return w;
}

SimWorkload scale_workload(const SimWorkload& w, double factor) {
    SimWorkload out = w;
    for (auto& l : out.lines) {
        l.python *= factor;
        l.native *= factor;
    }
    return out;
}

double SimResult::est_native_total() const {
    return std::accumulate(est_native.begin(), est_native.end(), 0.0);
}

double SimResult::actual_python_total() const {
    return std::accumulate(actual_python.begin(), actual_python.end(), 0.0);
}

double SimResult::actual_native_total() const {
    return std::accumulate(actual_native.begin(), actual_native.end(), 0.0);
}

double SimResult::ratio_python() const {
    return safe_ratio(est_python_total(), actual_python_total());
}

double SimResult::ratio_native() const {
    return safe_ratio(est_native_total(), actual_native_total());
}

std::optional<double> SimResult::rho_python() const {
    std::vector<double> est(python_quanta.size());
    for (std::size_t i = 0; i < est.size(); ++i) est[i] = est_python(i);
    return spearman_rho(est, actual_python);
}

std::optional<double> SimResult::rho_native() const {
    return spearman_rho(est_native, actual_native);
}

SimResult simulate_run(const SimWorkload& workload, double total_time,
                       const SimOptions& options) {
    if (workload.lines.empty()) throw std::invalid_argument("empty workload");
    if (total_time <= 0.0) throw std::invalid_argument("total_time must be positive");
    if (options.q <= 0.0) throw std::invalid_argument("q must be positive");

    const std::size_t n = workload.lines.size();
    const double q = options.q;
    SimResult r;
    r.q = q;
    r.actual_python.assign(n, 0.0);
    r.actual_native.assign(n, 0.0);
    r.python_quanta.assign(n, 0);
    r.est_native.assign(n, 0.0);

    double clock = 0.0;
    double last_delivery = 0.0;
    double next_fire = q;
    bool done = false;

    auto deliver = [&](std::size_t line, double at) {
        double elapsed = at - last_delivery;
        r.python_quanta[line] += 1;
        r.samples += 1;
        r.est_native[line] += std::max(elapsed - q, 0.0);
        last_delivery = at;
    };

    while (!done) {
        for (std::size_t i = 0; i < n && !done; ++i) {
            // interpreter phase: every fire is delivered on time
            double d = workload.lines[i].python;
            if (d > 0.0) {
                double end = clock + d;
                r.actual_python[i] += d;
                while (next_fire <= end) {
                    deliver(i, next_fire);
                    next_fire += q;
                }
                clock = end;
                if (clock >= total_time) done = true;
            }
            if (done) break;
            // native phase: fires queue up and collapse into one delivery at
            // the end of the call
            d = workload.lines[i].native;
            if (d > 0.0) {
                double end = clock + d;
                r.actual_native[i] += d;
                bool fired = false;
                while (next_fire <= end) {
                    fired = true;
                    next_fire += q;
                }
                if (fired) deliver(i, end);
                clock = end;
                if (clock >= total_time) done = true;
            }
        }
    }
    r.total_time = clock;
    return r;
}

std::optional<double> spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) return std::nullopt;
    return pearson(average_ranks(a), average_ranks(b));
}

std::vector<StudyRow> run_study(const StudyConfig& config) {
    if (config.runs <= 0) throw std::invalid_argument("runs must be positive");
    if (config.max_time < 1.0) throw std::invalid_argument("max_time must be at least 1");

    std::vector<double> times;
    for (double t = 1.0; t <= config.max_time; t *= 2.0) times.push_back(t);

    std::vector<SimWorkload> shapes;
    shapes.reserve(static_cast<std::size_t>(config.runs));
    for (int run = 0; run < config.runs; ++run) {
        shapes.push_back(generate_workload(config.lines, config.alpha,
                                           config.seed + static_cast<std::uint64_t>(run)));
    }

    SimOptions opt;
    opt.q = config.q;

    std::vector<StudyRow> rows;
    rows.reserve(times.size());
    for (double t : times) {
        StudyRow row;
        row.time = t;
        for (const auto& shape : shapes) {
            SimResult res = simulate_run(scale_workload(shape, t), t, opt);
            double rp = res.ratio_python();
            double rn = res.ratio_native();
            row.ratio_python += rp;
            row.ratio_native += rn;
            row.abs_err_python += std::abs(rp - 1.0);
            row.abs_err_native += std::abs(rn - 1.0);
            row.rho_python += res.rho_python().value_or(0.0);
            row.rho_native += res.rho_native().value_or(0.0);
        }
        double k = static_cast<double>(config.runs);
        row.ratio_python /= k;
        row.ratio_native /= k;
        row.rho_python /= k;
        row.rho_native /= k;
        row.abs_err_python /= k;
        row.abs_err_native /= k;
        rows.push_back(row);
    }
    return rows;
}

std::string study_csv(const std::vector<StudyRow>& rows) {
    std::string out = "time,ratio_python,ratio_native,rho_python,rho_native\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f\n", r.time,
                      r.ratio_python, r.ratio_native, r.rho_python, r.rho_native);
        out += buf;
    }
    return out;
}

} // namespace miniprof
