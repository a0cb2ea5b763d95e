#include "lcgnn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <ostream>
#include <sstream>

#include "lcgnn/errors.hpp"

namespace lcgnn {

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename F>
double time_ms(F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

BudgetModel unconstrained(BudgetModel bm) {
    bm.vol_gpu = std::numeric_limits<double>::max() / 4.0;
    return bm;
}

std::string environment_note() {
    std::ostringstream os;
#if defined(__clang__)
    os << "clang " << __clang_major__ << "." << __clang_minor__;
#elif defined(__GNUC__)
    os << "gcc " << __GNUC__ << "." << __GNUC_MINOR__;
#else
    os << "unknown compiler";
#endif
#ifdef NDEBUG
    os << ", release";
#else
    os << ", debug";
#endif
    os << ", host executor";
    return os.str();
}

}  // namespace

const char* to_string(BenchTask t) { return t == BenchTask::normalize ? "normalize" : "aggregate"; }
const char* to_string(BenchMode m) { return m == BenchMode::naive ? "naive" : "blocked"; }

BenchReport run_bench(const Graph& g, const DenseMatrix& x, int K, const BudgetModel& bm,
                      int repeats) {
    if (repeats < 1) throw ConfigError("repeats: must be at least 1");
    bm.validate();

    const Index a = solve_norm_blocks(bm);
    const auto [b, c] = solve_agg_blocks(bm);

    BenchReport report;
    report.environment = environment_note();
    report.plan_a = a;
    report.plan_b = b;
    report.plan_c = c;
    report.budget_bytes = bm.vol_gpu;

    // Correctness gate before any timing: blocked results must match the
    // naive single-block computation.
    BudgetedExecutor naive_exec(unconstrained(bm));
    const SparseMatrix s_naive = block_normalize(g, 1, naive_exec);
    const PrecomputedFeatures f_naive = block_feature_aggregation(s_naive, x, K, 1, 1, naive_exec);

    BudgetedExecutor planned_exec(bm);
    const SparseMatrix s_blocked = block_normalize(g, a, planned_exec);
    if (s_blocked.nnz() != s_naive.nnz())
        throw Error("bench: blocked normalization changed the sparsity structure");
    const PrecomputedFeatures f_blocked =
        block_feature_aggregation(s_blocked, x, K, b, c, planned_exec);
    for (int k = 1; k <= K; ++k) {
        const double diff = max_abs_diff(f_naive.power(k), f_blocked.power(k));
        if (diff > 1e-8)
            throw Error("bench: blocked power " + std::to_string(k) + " deviates by " +
                        std::to_string(diff));
    }

    struct Setup {
        BenchTask task;
        BenchMode mode;
        Index a, b, c;
        bool limited;
    };
    const Setup setups[] = {
        {BenchTask::normalize, BenchMode::naive, 1, 1, 1, false},
        {BenchTask::normalize, BenchMode::blocked, a, 1, 1, true},
        {BenchTask::aggregate, BenchMode::naive, 1, 1, 1, false},
        {BenchTask::aggregate, BenchMode::blocked, 1, b, c, true},
    };

    for (const Setup& setup : setups) {
        BudgetedExecutor exec(setup.limited ? bm : unconstrained(bm));
        std::vector<double> times;
        times.reserve(static_cast<std::size_t>(repeats));
        SparseMatrix s_for_agg;
        if (setup.task == BenchTask::aggregate) {
            BudgetedExecutor prep(unconstrained(bm));
            s_for_agg = block_normalize(g, 1, prep);
        }
        for (int r = 0; r < repeats; ++r) {
            if (setup.task == BenchTask::normalize)
                times.push_back(time_ms([&] { block_normalize(g, setup.a, exec); }));
            else
                times.push_back(time_ms(
                    [&] { block_feature_aggregation(s_for_agg, x, K, setup.b, setup.c, exec); }));
        }
        report.records.push_back({setup.task, setup.mode, setup.a, setup.b, setup.c, median(times),
                                  exec.peak_estimate()});
    }
    return report;
}

void write_bench_csv(const BenchReport& report, std::ostream& out) {
    out << "task,mode,a,b,c,median_ms,peak_estimate_bytes\n";
    char line[256];
    for (const BenchRecord& r : report.records) {
        std::snprintf(line, sizeof(line), "%s,%s,%lld,%lld,%lld,%.3f,%.1f\n", to_string(r.task),
                      to_string(r.mode), static_cast<long long>(r.a), static_cast<long long>(r.b),
                      static_cast<long long>(r.c), r.median_ms, r.peak_estimate_bytes);
        out << line;
    }
}

void write_bench_text(const BenchReport& report, std::ostream& out) {
    out << "environment: " << report.environment << "\n";
    out << "plan: a=" << report.plan_a << " b=" << report.plan_b << " c=" << report.plan_c
        << " budget_bytes=" << report.budget_bytes << "\n";
    char line[256];
    for (const BenchRecord& r : report.records) {
        std::snprintf(line, sizeof(line), "%-9s %-7s  median %10.3f ms  peak %14.1f bytes\n",
                      to_string(r.task), to_string(r.mode), r.median_ms, r.peak_estimate_bytes);
        out << line;
    }
}

}  // namespace lcgnn
