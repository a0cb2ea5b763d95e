#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "lcgnn/graph.hpp"
#include "lcgnn/rewrite.hpp"

namespace lcgnn {

/// Byte accounting used for every volume estimate: a sparse block occupies
/// (triplet count) x kTripletBytes, a dense block (rows x cols) x
/// kScalarBytes.
inline constexpr double kTripletBytes = 24.0;  // two 64-bit indices + one f64
inline constexpr double kScalarBytes = 8.0;

/// Relative slack applied to every budget-constraint comparison so that
/// algebraically tight instances are not rejected by rounding. The solvers
/// and the brute-force checks in the tests share this predicate.
inline constexpr double kFeasibilityRelSlack = 1e-9;

struct BudgetCoefficients {
    double alpha_a = 1.0;
    double alpha_s = 1.0;
    double alpha_d = 1.0;
    double beta_s = 1.0;
    double beta_x = 1.0;
};

/// Machine coefficients plus data volumes parameterizing the block-count
/// minimizations for normalization and feature aggregation.
struct BudgetModel {
    double alpha_a = 1.0, alpha_s = 1.0, alpha_d = 1.0;
    double beta_s = 1.0, beta_x = 1.0;
    double vol_a = 0.0, vol_s = 0.0, vol_d = 0.0, vol_x = 0.0;  // bytes
    double vol_gpu = 0.0;                                       // bytes

    void validate() const;  // all strictly positive

    /// Estimated footprint of one normalization block op when the adjacency
    /// is split into a balanced blocks: (alpha_a·vol_a + alpha_s·vol_s)/a +
    /// alpha_d·vol_d.
    double norm_block_estimate(Index a) const;
    /// Estimated footprint of one aggregation block op for a (b, c) split:
    /// beta_s·vol_s/b + beta_x·vol_x/c.
    double agg_block_estimate(Index b, Index c) const;

    bool norm_feasible(Index a) const;
    bool agg_feasible(Index b, Index c) const;

    /// Volumes derived from a dataset: vol_a = vol_s = nnz(A~)·kTripletBytes,
    /// vol_d = n·kScalarBytes, vol_x = n·d·kScalarBytes.
    static BudgetModel for_data(Index num_nodes, Index nnz_tilde, Index feature_dim,
                                const BudgetCoefficients& coeffs, double gpu_bytes);
};

/// Minimum block count a >= 1 satisfying the normalization constraint.
/// Closed form a = ceil((alpha_a·vol_a + alpha_s·vol_s) / (vol_gpu -
/// alpha_d·vol_d)), then adjusted against the shared feasibility predicate so
/// the returned value is exactly the scan minimum. Throws Infeasible when
/// alpha_d·vol_d is not strictly below vol_gpu.
Index solve_norm_blocks(const BudgetModel& bm);

/// Exhaustive search for the (b, c) pair minimizing b·c under the
/// aggregation constraint: ascending b, each paired with its minimal
/// feasible c, until b alone exceeds the best product found (the product is
/// at least b, so the scan provably covers the optimum). Ties break toward
/// smaller b, then smaller c. A feasible pair always exists for positive
/// volumes since both constraint terms vanish as the counts grow.
std::pair<Index, Index> solve_agg_blocks(const BudgetModel& bm);

/// Resource classes used for budget estimation and calibration probes.
enum class Resource { adjacency_sparse, normalized_sparse, degree_dense, filter_sparse, feature_dense };

const char* to_string(Resource r);

/// Memory behaviour of the underlying device: how many bytes a resource of a
/// given logical size occupies when resident. The host reference executor is
/// zero-overhead; tests substitute synthetic models.
struct MemoryModel {
    virtual ~MemoryModel() = default;
    virtual double resident_bytes(Resource kind, double logical_bytes) const = 0;
};

struct HostMemoryModel final : MemoryModel {
    double resident_bytes(Resource, double logical_bytes) const override { return logical_bytes; }
};

struct ResourceSample {
    Resource kind;
    double logical_bytes;
    double resident_bytes;
};

/// Gatekeeper for block operations. Every block op is submitted before it
/// runs; the executor checks the model estimate against the budget, tracks
/// the peak, and (when a probe is attached) records per-resource residency
/// samples for calibration. The reference implementation executes on the
/// host while enforcing the declared device budget.
class BudgetedExecutor {
public:
    explicit BudgetedExecutor(BudgetModel model);

    const BudgetModel& model() const { return model_; }

    /// Throws BudgetExceeded when the estimate for one of a normalization
    /// blocks exceeds vol_gpu.
    void submit_norm_block(Index a);
    /// Throws BudgetExceeded when the estimate for one (b, c) aggregation
    /// block op exceeds vol_gpu.
    void submit_agg_block(Index b, Index c);

    /// Reports the actual logical bytes a block op touches for one resource.
    /// No-op unless a probe is attached.
    void observe(Resource kind, double logical_bytes);

    void attach_probe(const MemoryModel* device, std::vector<ResourceSample>* sink);

    double peak_estimate() const { return peak_estimate_; }
    std::size_t block_ops() const { return block_ops_; }
    void reset_stats();

private:
    void charge(double estimate);

    BudgetModel model_;
    double peak_estimate_ = 0.0;
    std::size_t block_ops_ = 0;
    const MemoryModel* probe_device_ = nullptr;
    std::vector<ResourceSample>* probe_sink_ = nullptr;
};

/// Disjoint, size-balanced decomposition of an edge list.
struct EdgeBlockSet {
    std::vector<std::vector<Edge>> blocks;
};

/// Splits a canonically ordered edge list into m contiguous chunks whose
/// sizes differ by at most one; m > |edges| yields empty tail blocks.
EdgeBlockSet split_edges(std::span<const Edge> edges, Index m);

/// Same contiguous balanced split over sparse-matrix triplets, as views.
std::vector<std::span<const Triplet>> split_triplets(std::span<const Triplet> triplets, Index m);

/// Block-wise adjacency normalization: the self-loop augmented adjacency is
/// split into a balanced triplet blocks, each block is degree-scaled through
/// the executor, and the disjoint block results are concatenated. Equals the
/// direct normalize_adjacency output entry for entry.
SparseMatrix block_normalize(const Graph& g, Index a, BudgetedExecutor& exec);

/// Aggregated feature matrices S^k·X keyed by power k.
struct PrecomputedFeatures {
    std::map<int, DenseMatrix> per_power;
    Index n = 0;
    Index d = 0;
    int source_layers = 0;  // K used to produce the set
    std::uint64_t dataset_hash = 0;

    /// Throws MissingPower when k is absent.
    const DenseMatrix& power(int k) const;
    bool has_power(int k) const { return per_power.count(k) != 0; }

    /// Restriction to exactly the powers of a plan; power 0 is filled with x.
    PrecomputedFeatures subset(const PlanSpec& plan, const DenseMatrix& x) const;
};

/// Block-wise feature aggregation. The filter is split once into b balanced
/// triplet blocks; for each k = 1..K the current feature matrix is split
/// column-wise into c blocks of width ceil(d/c) (smaller final block), every
/// (filter block, column block) product is executed through the executor with
/// the per-column accumulation reduced in ascending filter-block order, the
/// column results are concatenated, and the result both joins the output and
/// feeds step k+1. Matches naive repeated multiplication to within roundoff.
PrecomputedFeatures block_feature_aggregation(const SparseMatrix& s, const DenseMatrix& x, int K,
                                              Index b, Index c, BudgetedExecutor& exec);

struct CalibrationOptions {
    /// Maximum tolerated rms residual as a fraction of the mean observation.
    double max_residual_fraction = 0.05;
    Index probe_feature_dim = 8;
    int probe_layers = 1;
    std::uint64_t probe_seed = 90210;
};

struct CoefficientFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_fraction = 0.0;
    int samples = 0;
};

struct CalibrationResult {
    CoefficientFit alpha_a, alpha_s, alpha_d, beta_s, beta_x;

    BudgetCoefficients coefficients() const;
};

/// Runs instrumented block normalization and aggregation on synthetic probe
/// graphs of the given node counts and fits one linear memory-use model per
/// resource class; the fitted slopes are the coefficient estimates. Throws
/// CalibrationUnstable when a fit is underdetermined (fewer than two distinct
/// probe sizes) or its residual exceeds the configured fraction of the mean.
CalibrationResult calibrate_budget(const MemoryModel& device, std::span<const Index> probe_sizes,
                                   const CalibrationOptions& opts = {});

}  // namespace lcgnn
