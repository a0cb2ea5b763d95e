#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lcgnn/blocking.hpp"

namespace lcgnn {

enum class BenchTask { normalize, aggregate };
enum class BenchMode { naive, blocked };

struct BenchRecord {
    BenchTask task;
    BenchMode mode;
    Index a = 1, b = 1, c = 1;  // plan; naive runs use single blocks
    double median_ms = 0.0;
    double peak_estimate_bytes = 0.0;
};

struct BenchReport {
    std::vector<BenchRecord> records;
    std::string environment;
    Index plan_a = 1, plan_b = 1, plan_c = 1;
    double budget_bytes = 0.0;
};

const char* to_string(BenchTask t);
const char* to_string(BenchMode m);

/// Times naive single-block runs against solver-planned blocked runs of
/// normalization and K-step aggregation, repeats times each, and reports
/// medians. Output equality between the two modes is verified to 1e-8
/// max-abs before any timing is reported; a mismatch or a BudgetExceeded
/// from a planned run is an internal failure and propagates. No speedup is
/// asserted; blocked peak volume never exceeds the budget.
BenchReport run_bench(const Graph& g, const DenseMatrix& x, int K, const BudgetModel& bm,
                      int repeats);

void write_bench_csv(const BenchReport& report, std::ostream& out);
void write_bench_text(const BenchReport& report, std::ostream& out);

}  // namespace lcgnn
