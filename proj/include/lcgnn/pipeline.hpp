#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "lcgnn/bench.hpp"
#include "lcgnn/io.hpp"
#include "lcgnn/trainer.hpp"

namespace lcgnn {

struct DataPaths {
    std::string edges, features, labels, split;
};

/// One reproducible run: data source, model, training and budget settings,
/// output placement. Exactly one of {dataset paths, synthetic parameters}
/// must be present.
struct RunConfig {
    std::optional<DataPaths> data;
    std::optional<SyntheticParams> synthetic;

    ModelFamily family = ModelFamily::gcn;
    int conv_layers = 2;
    int mlp_layers = 2;
    CombineKind combine = CombineKind::concat;
    ActivationKind activation = ActivationKind::relu;

    TrainConfig train;

    BudgetCoefficients coeffs;
    double gpu_budget_bytes = 1.0e9;

    /// Existing precomputed-feature file consumed by the train command; when
    /// empty the features are produced inline.
    std::string lcpf_path;

    /// Output directory; when empty a fresh runs/<confighash>-<timestamp>
    /// directory is created so nothing is silently overwritten.
    std::string out_dir;

    int bench_repeats = 3;

    void validate() const;  // throws ConfigError naming the offending field
};

struct LoadedData {
    Graph graph;
    DenseMatrix features;
    std::vector<int> labels;
    std::vector<SplitTag> split;
    std::uint64_t hash = 0;
};

LoadedData load_or_generate(const RunConfig& cfg);

ModelSpec model_spec_for(const RunConfig& cfg, Index feature_dim, Index classes);

/// Resolves (and creates) the run directory for a command's outputs.
std::string resolve_out_dir(const RunConfig& cfg);

/// Prints the original formula, one trace line per rewrite application, the
/// transformed formula, and the precomputation powers.
LcTransformResult run_transform(const ModelSpec& spec, std::ostream& out);

/// Writes the plan report for the given config's budget model.
struct PlanOutcome {
    BudgetModel model;
    Index a = 1, b = 1, c = 1;
    std::string report_path;
};
PlanOutcome run_plan(const RunConfig& cfg, std::ostream& out);

struct PrecomputeOutcome {
    std::string lcpf_path;
    std::string manifest_path;
    std::string plan_report_path;
    Index a = 1, b = 1, c = 1;
    double precompute_ms = 0.0;
};

/// Solves the block counts for the configured budget, runs block-wise
/// normalization and aggregation, and writes the feature file, its manifest,
/// and the plan report. Byte-identical outputs for identical inputs.
PrecomputeOutcome run_precompute(const RunConfig& cfg, std::ostream& log);

struct TrainOutcome {
    std::string summary_path;
    std::string history_path;
    double test_acc = 0.0;
    std::int64_t best_epoch = -1;
};

TrainOutcome run_train(const RunConfig& cfg, std::ostream& log);

struct BenchOutcome {
    std::string csv_path;
    std::string text_path;
};

BenchOutcome run_bench_cmd(const RunConfig& cfg, std::ostream& log);

/// Writes the four dataset files for the configured synthetic generator.
std::string run_gen_synthetic(const RunConfig& cfg, std::ostream& log);

void run_calibrate(std::span<const Index> probe_sizes, std::ostream& out);

}  // namespace lcgnn
