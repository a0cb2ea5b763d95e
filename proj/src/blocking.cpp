#include "lcgnn/blocking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lcgnn/errors.hpp"
#include "lcgnn/synthetic.hpp"

namespace lcgnn {

namespace {

bool within_budget(double estimate, double budget) {
    return estimate <= budget * (1.0 + kFeasibilityRelSlack);
}

std::string bytes_str(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

void BudgetModel::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw ConfigError(std::string(name) + ": must be positive");
    };
    positive(alpha_a, "alpha_a");
    positive(alpha_s, "alpha_s");
    positive(alpha_d, "alpha_d");
    positive(beta_s, "beta_s");
    positive(beta_x, "beta_x");
    positive(vol_a, "vol_a");
    positive(vol_s, "vol_s");
    positive(vol_d, "vol_d");
    positive(vol_x, "vol_x");
    positive(vol_gpu, "vol_gpu");
}

double BudgetModel::norm_block_estimate(Index a) const {
    return (alpha_a * vol_a + alpha_s * vol_s) / static_cast<double>(a) + alpha_d * vol_d;
}

double BudgetModel::agg_block_estimate(Index b, Index c) const {
    return beta_s * vol_s / static_cast<double>(b) + beta_x * vol_x / static_cast<double>(c);
}

bool BudgetModel::norm_feasible(Index a) const {
    return within_budget(norm_block_estimate(a), vol_gpu);
}

bool BudgetModel::agg_feasible(Index b, Index c) const {
    return within_budget(agg_block_estimate(b, c), vol_gpu);
}

BudgetModel BudgetModel::for_data(Index num_nodes, Index nnz_tilde, Index feature_dim,
                                  const BudgetCoefficients& coeffs, double gpu_bytes) {
    BudgetModel bm;
    bm.alpha_a = coeffs.alpha_a;
    bm.alpha_s = coeffs.alpha_s;
    bm.alpha_d = coeffs.alpha_d;
    bm.beta_s = coeffs.beta_s;
    bm.beta_x = coeffs.beta_x;
    bm.vol_a = static_cast<double>(nnz_tilde) * kTripletBytes;
    bm.vol_s = static_cast<double>(nnz_tilde) * kTripletBytes;
    bm.vol_d = static_cast<double>(num_nodes) * kScalarBytes;
    bm.vol_x = static_cast<double>(num_nodes) * static_cast<double>(feature_dim) * kScalarBytes;
    bm.vol_gpu = gpu_bytes;
    return bm;
}

Index solve_norm_blocks(const BudgetModel& bm) {
    bm.validate();
    const double fixed = bm.alpha_d * bm.vol_d;
    const double shareable = bm.alpha_a * bm.vol_a + bm.alpha_s * bm.vol_s;
    const double headroom = bm.vol_gpu - fixed;
    if (headroom <= 0.0)
        throw Infeasible("budget " + bytes_str(bm.vol_gpu) + " cannot hold the degree term " +
                         bytes_str(fixed) + " even with one edge block");
    Index a = std::max<Index>(1, static_cast<Index>(std::ceil(shareable / headroom)));
    // Settle rounding against the shared feasibility predicate so the result
    // is exactly the scan minimum.
    while (a > 1 && bm.norm_feasible(a - 1)) --a;
    while (!bm.norm_feasible(a)) ++a;
    return a;
}

std::pair<Index, Index> solve_agg_blocks(const BudgetModel& bm) {
    bm.validate();
    // Exhaustive scan over b with the minimal feasible c per b. The product
    // is at least b, so once b alone exceeds the best product found the scan
    // is complete; a feasible pair always exists because both terms vanish
    // as the counts grow.
    constexpr Index kScanCap = Index{1} << 24;
    Index best_b = -1, best_c = -1;
    Index best_product = std::numeric_limits<Index>::max();
    for (Index b = 1; b <= kScanCap; ++b) {
        if (best_b > 0 && b > best_product) break;
        const double headroom = bm.vol_gpu - bm.beta_s * bm.vol_s / static_cast<double>(b);
        if (headroom <= 0.0) continue;
        const double c_real = std::ceil(bm.beta_x * bm.vol_x / headroom);
        if (c_real > static_cast<double>(kScanCap)) continue;  // cannot beat any small pair
        Index c = std::max<Index>(1, static_cast<Index>(c_real));
        // settle fp rounding against the shared feasibility predicate
        while (c > 1 && bm.agg_feasible(b, c - 1)) --c;
        for (int guard = 0; guard < 4 && !bm.agg_feasible(b, c); ++guard) ++c;
        if (!bm.agg_feasible(b, c)) continue;
        if (b * c < best_product) {  // ties keep the earlier (smaller b, then c) pair
            best_product = b * c;
            best_b = b;
            best_c = c;
        }
    }
    if (best_b < 0) throw Infeasible("no feasible aggregation split found");
    return {best_b, best_c};
}

const char* to_string(Resource r) {
    switch (r) {
        case Resource::adjacency_sparse: return "adjacency_sparse";
        case Resource::normalized_sparse: return "normalized_sparse";
        case Resource::degree_dense: return "degree_dense";
        case Resource::filter_sparse: return "filter_sparse";
        case Resource::feature_dense: return "feature_dense";
    }
    return "?";
}

BudgetedExecutor::BudgetedExecutor(BudgetModel model) : model_(std::move(model)) {
    model_.validate();
}

void BudgetedExecutor::charge(double estimate) {
    if (!within_budget(estimate, model_.vol_gpu))
        throw BudgetExceeded("block estimate " + bytes_str(estimate) + " bytes exceeds budget " +
                             bytes_str(model_.vol_gpu) + " bytes");
    peak_estimate_ = std::max(peak_estimate_, estimate);
    ++block_ops_;
}

void BudgetedExecutor::submit_norm_block(Index a) { charge(model_.norm_block_estimate(a)); }

void BudgetedExecutor::submit_agg_block(Index b, Index c) { charge(model_.agg_block_estimate(b, c)); }

void BudgetedExecutor::observe(Resource kind, double logical_bytes) {
    if (probe_device_ && probe_sink_)
        probe_sink_->push_back(
            {kind, logical_bytes, probe_device_->resident_bytes(kind, logical_bytes)});
}

void BudgetedExecutor::attach_probe(const MemoryModel* device, std::vector<ResourceSample>* sink) {
    probe_device_ = device;
    probe_sink_ = sink;
}

void BudgetedExecutor::reset_stats() {
    peak_estimate_ = 0.0;
    block_ops_ = 0;
}

EdgeBlockSet split_edges(std::span<const Edge> edges, Index m) {
    if (m < 1) throw ConfigError("block count: must be at least 1");
    EdgeBlockSet out;
    out.blocks.resize(static_cast<std::size_t>(m));
    const Index total = static_cast<Index>(edges.size());
    const Index base = total / m;
    const Index remainder = total % m;
    Index offset = 0;
    for (Index i = 0; i < m; ++i) {
        const Index size = base + (i < remainder ? 1 : 0);
        auto chunk = edges.subspan(static_cast<std::size_t>(offset), static_cast<std::size_t>(size));
        out.blocks[static_cast<std::size_t>(i)].assign(chunk.begin(), chunk.end());
        offset += size;
    }
    return out;
}

std::vector<std::span<const Triplet>> split_triplets(std::span<const Triplet> triplets, Index m) {
    if (m < 1) throw ConfigError("block count: must be at least 1");
    std::vector<std::span<const Triplet>> out;
    out.reserve(static_cast<std::size_t>(m));
    const Index total = static_cast<Index>(triplets.size());
    const Index base = total / m;
    const Index remainder = total % m;
    Index offset = 0;
    for (Index i = 0; i < m; ++i) {
        const Index size = base + (i < remainder ? 1 : 0);
        out.push_back(
            triplets.subspan(static_cast<std::size_t>(offset), static_cast<std::size_t>(size)));
        offset += size;
    }
    return out;
}

SparseMatrix block_normalize(const Graph& g, Index a, BudgetedExecutor& exec) {
    if (a < 1) throw ConfigError("a: must be at least 1");
    const SparseMatrix a_tilde = add_self_loops(g);
    const DegreeVector degrees = degree_vector(a_tilde);
    for (std::size_t i = 0; i < degrees.size(); ++i)
        if (!(degrees[i] > 0.0))
            throw ConfigError("degree[" + std::to_string(i) + "]: zero degree after augmentation");

    SparseMatrix out;
    out.rows = a_tilde.rows;
    out.cols = a_tilde.cols;
    out.triplets.reserve(a_tilde.triplets.size());
    // The blocks are disjoint contiguous chunks of the canonically sorted
    // triplet list, so concatenating the block results is the disjoint union
    // and preserves the canonical order. Entries use the same scaling
    // expression as normalize_adjacency and are therefore bit-identical to
    // the direct path.
    for (const auto block : split_triplets(a_tilde.triplets, a)) {
        exec.observe(Resource::adjacency_sparse, static_cast<double>(block.size()) * kTripletBytes);
        exec.observe(Resource::normalized_sparse, static_cast<double>(block.size()) * kTripletBytes);
        exec.observe(Resource::degree_dense, static_cast<double>(degrees.size()) * kScalarBytes);
        exec.submit_norm_block(a);
        for (const Triplet& t : block)
            out.triplets.push_back({t.row, t.col,
                                    t.value / std::sqrt(degrees[static_cast<std::size_t>(t.row)] *
                                                        degrees[static_cast<std::size_t>(t.col)])});
    }
    return out;
}

const DenseMatrix& PrecomputedFeatures::power(int k) const {
    auto it = per_power.find(k);
    if (it == per_power.end()) throw MissingPower(k);
    return it->second;
}

PrecomputedFeatures PrecomputedFeatures::subset(const PlanSpec& plan, const DenseMatrix& x) const {
    PrecomputedFeatures out;
    out.n = n;
    out.d = d;
    out.source_layers = source_layers;
    out.dataset_hash = dataset_hash;
    for (int k : plan.powers) {
        if (k == 0) {
            if (x.rows != n || x.cols != d)
                throw ShapeMismatch("subset: feature matrix does not match the aggregated shapes");
            out.per_power.emplace(0, x);
        } else {
            out.per_power.emplace(k, power(k));
        }
    }
    return out;
}

PrecomputedFeatures block_feature_aggregation(const SparseMatrix& s, const DenseMatrix& x, int K,
                                              Index b, Index c, BudgetedExecutor& exec) {
    if (K < 1) throw ConfigError("K: must be at least 1");
    if (b < 1) throw ConfigError("b: must be at least 1");
    if (c < 1) throw ConfigError("c: must be at least 1");
    if (s.rows != s.cols || s.cols != x.rows)
        throw ShapeMismatch("block_feature_aggregation: filter and features do not chain");

    const Index n = x.rows;
    const Index d = x.cols;
    const auto filter_blocks = split_triplets(s.triplets, b);

    PrecomputedFeatures out;
    out.n = n;
    out.d = d;
    out.source_layers = K;

    // Column blocks have width ceil(d/c); the final block takes what remains
    // and may be narrower (or empty when c > d).
    const Index width = (d + c - 1) / c;

    DenseMatrix prev = x;
    for (int k = 1; k <= K; ++k) {
        std::vector<DenseMatrix> column_results;
        column_results.reserve(static_cast<std::size_t>(c));
        for (Index i = 0; i < c; ++i) {
            const Index col0 = i * width;
            const Index ncols = std::max<Index>(0, std::min(width, d - col0));
            if (ncols == 0) continue;
            DenseMatrix acc(n, ncols);
            // Fixed ascending block order keeps the summation bit-reproducible.
            for (const auto block : filter_blocks) {
                exec.observe(Resource::filter_sparse,
                             static_cast<double>(block.size()) * kTripletBytes);
                exec.observe(Resource::feature_dense,
                             static_cast<double>(n) * static_cast<double>(ncols) * kScalarBytes);
                exec.submit_agg_block(b, c);
                for (const Triplet& t : block) {
                    const double* src = prev.values.data() + t.col * d + col0;
                    double* dst = acc.values.data() + t.row * ncols;
                    for (Index j = 0; j < ncols; ++j) dst[j] += t.value * src[j];
                }
            }
            column_results.push_back(std::move(acc));
        }
        DenseMatrix conc = hconcat(column_results);
        prev = conc;
        out.per_power.emplace(k, std::move(conc));
    }
    return out;
}

namespace {

struct FitAccumulator {
    std::vector<double> xs, ys;
};

CoefficientFit fit_line(const std::vector<ResourceSample>& samples, Resource kind,
                        double max_residual_fraction) {
    FitAccumulator acc;
    for (const auto& s : samples) {
        if (s.kind != kind) continue;
        acc.xs.push_back(s.logical_bytes);
        acc.ys.push_back(s.resident_bytes);
    }
    const auto n = static_cast<double>(acc.xs.size());
    if (acc.xs.size() < 2)
        throw CalibrationUnstable(std::string("calibration of ") + to_string(kind) +
                                  ": fewer than two probe observations; the fit is underdetermined");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < acc.xs.size(); ++i) {
        sx += acc.xs[i];
        sy += acc.ys[i];
        sxx += acc.xs[i] * acc.xs[i];
        sxy += acc.xs[i] * acc.ys[i];
    }
    const double det = n * sxx - sx * sx;
    const double x_scale = std::max(1.0, sxx);
    if (std::abs(det) <= 1e-12 * x_scale)
        throw CalibrationUnstable(std::string("calibration of ") + to_string(kind) +
                                  ": probe sizes do not vary; the fit is underdetermined");
    CoefficientFit fit;
    fit.samples = static_cast<int>(acc.xs.size());
    fit.slope = (n * sxy - sx * sy) / det;
    fit.intercept = (sy - fit.slope * sx) / n;
    double rss = 0;
    for (std::size_t i = 0; i < acc.xs.size(); ++i) {
        const double r = acc.ys[i] - (fit.slope * acc.xs[i] + fit.intercept);
        rss += r * r;
    }
    const double mean_y = sy / n;
    fit.residual_fraction = std::sqrt(rss / n) / std::max(1e-300, std::abs(mean_y));
    if (fit.residual_fraction > max_residual_fraction)
        throw CalibrationUnstable(std::string("calibration of ") + to_string(kind) +
                                  ": residual fraction " + bytes_str(fit.residual_fraction) +
                                  " exceeds " + bytes_str(max_residual_fraction));
    return fit;
}

}  // namespace

BudgetCoefficients CalibrationResult::coefficients() const {
    return {alpha_a.slope, alpha_s.slope, alpha_d.slope, beta_s.slope, beta_x.slope};
}

CalibrationResult calibrate_budget(const MemoryModel& device, std::span<const Index> probe_sizes,
                                   const CalibrationOptions& opts) {
    if (probe_sizes.empty()) throw CalibrationUnstable("calibration requires probe sizes");
    std::vector<ResourceSample> samples;
    for (Index size : probe_sizes) {
        if (size < 2) throw ConfigError("probe size: must be at least 2");
        SyntheticParams params;
        params.n = size;
        params.classes = 2;
        params.feature_dim = opts.probe_feature_dim;
        params.homophily = 0.5;
        params.mode = FeatureMode::linear;
        params.seed = opts.probe_seed;
        params.avg_degree = 8.0;
        const SyntheticDataset probe = gen_synthetic(params);

        // Unblocked instrumented runs; the budget is never the constraint here.
        const SparseMatrix a_tilde = add_self_loops(probe.graph);
        BudgetModel bm = BudgetModel::for_data(size, a_tilde.nnz(), opts.probe_feature_dim, {},
                                               std::numeric_limits<double>::max() / 4.0);
        BudgetedExecutor exec(bm);
        exec.attach_probe(&device, &samples);
        const SparseMatrix s = block_normalize(probe.graph, 1, exec);
        block_feature_aggregation(s, probe.features, opts.probe_layers, 1, 1, exec);
    }
    CalibrationResult result;
    result.alpha_a = fit_line(samples, Resource::adjacency_sparse, opts.max_residual_fraction);
    result.alpha_s = fit_line(samples, Resource::normalized_sparse, opts.max_residual_fraction);
    result.alpha_d = fit_line(samples, Resource::degree_dense, opts.max_residual_fraction);
    result.beta_s = fit_line(samples, Resource::filter_sparse, opts.max_residual_fraction);
    result.beta_x = fit_line(samples, Resource::feature_dense, opts.max_residual_fraction);
    return result;
}

}  // namespace lcgnn
