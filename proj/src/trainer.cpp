#include "lcgnn/trainer.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "lcgnn/errors.hpp"

namespace lcgnn {

namespace {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct WeightShape {
    int index;
    Index in, out;
};

Index jknet_logit_width(const ModelSpec& spec) {
    return spec.combine == CombineKind::concat
               ? static_cast<Index>(spec.conv_layers) * spec.dims.hidden
               : spec.dims.hidden;
}

std::vector<WeightShape> weight_shapes(const ModelSpec& spec) {
    const Index d = spec.dims.feature, h = spec.dims.hidden, y = spec.dims.classes;
    const int K = spec.conv_layers;
    std::vector<WeightShape> shapes;
    switch (spec.family) {
        case ModelFamily::sgc:
            shapes.push_back({0, d, y});
            break;
        case ModelFamily::gcn:
            for (int k = 1; k <= K; ++k)
                shapes.push_back({k, k == 1 ? d : h, k == K ? y : h});
            break;
        case ModelFamily::jknet:
            // Shared square chain weights; the combined branch outputs are the
            // logits, so the class count must fit their width.
            if (y > jknet_logit_width(spec))
                throw ConfigError("dims.classes: jknet logits are " +
                                  std::to_string(jknet_logit_width(spec)) +
                                  " wide; classes must not exceed that");
            for (int k = 1; k <= K; ++k) shapes.push_back({k, k == 1 ? d : h, h});
            break;
        case ModelFamily::gprgnn:
            for (int t = 1; t <= spec.mlp_layers; ++t)
                shapes.push_back({t, t == 1 ? d : h, t == spec.mlp_layers ? y : h});
            break;
    }
    return shapes;
}

/// Chain weight ids used by each branch of the model. gcn and sgc are single
/// chains; jknet branch k uses weights 1..k; gprgnn applies the same MLP to
/// every hop.
std::vector<int> chain_ids(const ModelSpec& spec, int branch) {
    std::vector<int> ids;
    switch (spec.family) {
        case ModelFamily::sgc: ids = {0}; break;
        case ModelFamily::gcn:
            for (int k = 1; k <= spec.conv_layers; ++k) ids.push_back(k);
            break;
        case ModelFamily::jknet:
            for (int k = 1; k <= branch; ++k) ids.push_back(k);
            break;
        case ModelFamily::gprgnn:
            for (int t = 1; t <= spec.mlp_layers; ++t) ids.push_back(t);
            break;
    }
    return ids;
}

template <typename S>
Mat<S> gather_rows(const DenseMatrix& m, std::span<const Index> rows) {
    Mat<S> out(static_cast<Eigen::Index>(rows.size()), m.cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double* src = m.values.data() + rows[r] * m.cols;
        for (Index c = 0; c < m.cols; ++c) out(static_cast<Eigen::Index>(r), c) = static_cast<S>(src[c]);
    }
    return out;
}

template <typename S>
Mat<S> typed_weight(const ModelParams& params, int index) {
    auto it = params.weights.find(index);
    if (it == params.weights.end())
        throw ShapeMismatch("forward: no weight with index " + std::to_string(index));
    const DenseMatrix& w = it->second;
    Mat<S> out(w.rows, w.cols);
    for (Index r = 0; r < w.rows; ++r)
        for (Index c = 0; c < w.cols; ++c) out(r, c) = static_cast<S>(w.at(r, c));
    return out;
}

template <typename S>
DenseMatrix to_dense_matrix(const Mat<S>& m) {
    DenseMatrix out(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.at(r, c) = static_cast<double>(m(r, c));
    return out;
}

/// Inverted dropout mask: entries are 0 or 1/(1-p). Draws are consumed in
/// row-major order from the shared generator so runs are reproducible.
template <typename S>
Mat<S> dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64& rng) {
    Mat<S> mask(rows, cols);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const S keep_scale = static_cast<S>(1.0 / (1.0 - p));
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            mask(r, c) = unit(rng) < p ? S(0) : keep_scale;
    return mask;
}

template <typename S>
struct ChainCache {
    std::vector<Mat<S>> inputs;    // input of each layer; inputs[0] is the chain input
    std::vector<Mat<S>> preacts;   // pre-activation per layer
    std::vector<Mat<S>> dropmasks; // mask applied after activation l (empty when inactive)
};

template <typename S>
Mat<S> chain_forward(const ModelSpec& spec, const ModelParams& params, Mat<S> input,
                     const std::vector<int>& ids, bool training, double dropout,
                     std::mt19937_64& rng, ChainCache<S>* cache) {
    const bool relu_act = spec.activation == ActivationKind::relu;
    Mat<S> current = std::move(input);
    if (cache) cache->inputs.push_back(current);
    Mat<S> preact;
    for (std::size_t l = 0; l < ids.size(); ++l) {
        const Mat<S> w = typed_weight<S>(params, ids[l]);
        if (current.cols() != w.rows())
            throw ShapeMismatch("forward: weight " + std::to_string(ids[l]) + " expects " +
                                std::to_string(w.rows()) + " inputs, got " +
                                std::to_string(current.cols()));
        preact.noalias() = current * w;
        if (cache) cache->preacts.push_back(preact);
        if (l + 1 < ids.size()) {
            current = relu_act ? preact.cwiseMax(S(0)).eval() : preact;
            if (training && dropout > 0.0) {
                Mat<S> mask = dropout_mask<S>(current.rows(), current.cols(), dropout, rng);
                current = current.cwiseProduct(mask);
                if (cache) cache->dropmasks.push_back(std::move(mask));
            } else if (cache) {
                cache->dropmasks.emplace_back();
            }
            if (cache) cache->inputs.push_back(current);
        } else {
            current = preact;
        }
    }
    return current;
}

template <typename S>
void chain_backward(const ModelSpec& spec, const ModelParams& params, const std::vector<int>& ids,
                    const ChainCache<S>& cache, Mat<S> grad_out,
                    std::map<int, Mat<S>>& weight_grads) {
    const bool relu_act = spec.activation == ActivationKind::relu;
    Mat<S> g = std::move(grad_out);
    for (std::size_t li = ids.size(); li-- > 0;) {
        weight_grads.at(ids[li]).noalias() += cache.inputs[li].transpose() * g;
        if (li == 0) break;
        const Mat<S> w = typed_weight<S>(params, ids[li]);
        Mat<S> da = g * w.transpose();
        if (cache.dropmasks[li - 1].size() > 0) da = da.cwiseProduct(cache.dropmasks[li - 1]);
        if (relu_act)
            g = da.cwiseProduct(
                (cache.preacts[li - 1].array() > S(0)).template cast<S>().matrix());
        else
            g = std::move(da);
    }
}

template <typename S>
struct ForwardState {
    Mat<S> logits;
    std::vector<ChainCache<S>> caches;        // one per branch
    std::vector<Mat<S>> branch_outputs;       // jknet max / gprgnn terms
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> argmax;  // jknet max
};

template <typename S>
ForwardState<S> model_forward(const ModelSpec& spec, const ModelParams& params,
                              const PrecomputedFeatures& features, std::span<const Index> rows,
                              bool training, const TrainConfig& cfg, std::mt19937_64& rng,
                              bool want_cache) {
    if (rows.empty()) throw EmptyMask("forward: no rows selected");
    ForwardState<S> state;
    switch (spec.family) {
        case ModelFamily::sgc:
        case ModelFamily::gcn: {
            const int K = spec.conv_layers;
            Mat<S> input = gather_rows<S>(features.power(K), rows);
            const auto ids = chain_ids(spec, 0);
            ChainCache<S> cache;
            state.logits = chain_forward<S>(spec, params, std::move(input), ids, training,
                                            cfg.dropout, rng, want_cache ? &cache : nullptr);
            if (want_cache) state.caches.push_back(std::move(cache));
            return state;
        }
        case ModelFamily::jknet: {
            const int K = spec.conv_layers;
            for (int k = 1; k <= K; ++k) {
                Mat<S> input = gather_rows<S>(features.power(k), rows);
                const auto ids = chain_ids(spec, k);
                ChainCache<S> cache;
                Mat<S> out = chain_forward<S>(spec, params, std::move(input), ids, training,
                                              cfg.dropout, rng, want_cache ? &cache : nullptr);
                state.branch_outputs.push_back(std::move(out));
                if (want_cache) state.caches.push_back(std::move(cache));
            }
            if (spec.combine == CombineKind::concat) {
                const Eigen::Index n = state.branch_outputs[0].rows();
                Eigen::Index width = 0;
                for (const auto& b : state.branch_outputs) width += b.cols();
                state.logits.resize(n, width);
                Eigen::Index c0 = 0;
                for (const auto& b : state.branch_outputs) {
                    state.logits.middleCols(c0, b.cols()) = b;
                    c0 += b.cols();
                }
            } else {
                // Elementwise max; ties keep the lowest branch index so the
                // backward routing is deterministic.
                state.logits = state.branch_outputs[0];
                state.argmax.setZero(state.logits.rows(), state.logits.cols());
                for (int k = 1; k < K; ++k) {
                    const auto& b = state.branch_outputs[static_cast<std::size_t>(k)];
                    for (Eigen::Index r = 0; r < state.logits.rows(); ++r)
                        for (Eigen::Index c = 0; c < state.logits.cols(); ++c)
                            if (b(r, c) > state.logits(r, c)) {
                                state.logits(r, c) = b(r, c);
                                state.argmax(r, c) = k;
                            }
                }
            }
            return state;
        }
        case ModelFamily::gprgnn: {
            const int K = spec.conv_layers;
            const auto ids = chain_ids(spec, 0);
            for (int k = 0; k <= K; ++k) {
                Mat<S> input = gather_rows<S>(features.power(k), rows);
                ChainCache<S> cache;
                if (training && cfg.input_dropout > 0.0) {
                    Mat<S> mask =
                        dropout_mask<S>(input.rows(), input.cols(), cfg.input_dropout, rng);
                    input = input.cwiseProduct(mask);
                }
                Mat<S> out = chain_forward<S>(spec, params, std::move(input), ids, training,
                                              cfg.dropout, rng, want_cache ? &cache : nullptr);
                if (k == 0) {
                    state.logits = out * static_cast<S>(params.attn.at(0));
                } else {
                    state.logits.noalias() += out * static_cast<S>(params.attn.at(
                                                        static_cast<std::size_t>(k)));
                }
                state.branch_outputs.push_back(std::move(out));
                if (want_cache) state.caches.push_back(std::move(cache));
            }
            return state;
        }
    }
    throw ConfigError("family: unsupported model family");
}

template <typename S>
double cross_entropy_and_grad(const Mat<S>& logits, std::span<const int> labels, Mat<S>* grad) {
    if (static_cast<std::size_t>(logits.rows()) != labels.size())
        throw ShapeMismatch("loss: logits rows do not match labels");
    const Eigen::Index n = logits.rows(), width = logits.cols();
    if (grad) grad->setZero(n, width);
    double total = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
        const int label = labels[static_cast<std::size_t>(r)];
        if (label < 0 || label >= width)
            throw ShapeMismatch("loss: label " + std::to_string(label) + " outside logit width " +
                                std::to_string(width));
        S m = logits(r, 0);
        for (Eigen::Index c = 1; c < width; ++c) m = std::max(m, logits(r, c));
        double sum = 0.0;
        for (Eigen::Index c = 0; c < width; ++c)
            sum += std::exp(static_cast<double>(logits(r, c) - m));
        const double lse = std::log(sum) + static_cast<double>(m);
        total += lse - static_cast<double>(logits(r, label));
        if (grad) {
            const double inv = 1.0 / (sum * static_cast<double>(n));
            for (Eigen::Index c = 0; c < width; ++c)
                (*grad)(r, c) = static_cast<S>(
                    std::exp(static_cast<double>(logits(r, c) - m)) * inv);
            (*grad)(r, label) -= static_cast<S>(1.0 / static_cast<double>(n));
        }
    }
    return total / static_cast<double>(n);
}

template <typename S>
std::pair<double, Gradients> loss_grads_impl(const ModelSpec& spec, const ModelParams& params,
                                             const PrecomputedFeatures& features,
                                             std::span<const Index> rows,
                                             std::span<const int> labels, const TrainConfig& cfg,
                                             RunMode mode, std::mt19937_64& rng) {
    ForwardState<S> state = model_forward<S>(spec, params, features, rows,
                                             mode == RunMode::train, cfg, rng, true);
    Mat<S> glogits;
    double loss = cross_entropy_and_grad<S>(state.logits, labels, &glogits);

    std::map<int, Mat<S>> wgrads;
    for (const auto& [index, w] : params.weights) wgrads.emplace(index, Mat<S>::Zero(w.rows, w.cols));

    Gradients out;
    switch (spec.family) {
        case ModelFamily::sgc:
        case ModelFamily::gcn:
            chain_backward<S>(spec, params, chain_ids(spec, 0), state.caches[0],
                              std::move(glogits), wgrads);
            break;
        case ModelFamily::jknet: {
            const int K = spec.conv_layers;
            if (spec.combine == CombineKind::concat) {
                Eigen::Index c0 = 0;
                for (int k = 1; k <= K; ++k) {
                    const auto& branch = state.branch_outputs[static_cast<std::size_t>(k - 1)];
                    Mat<S> g = glogits.middleCols(c0, branch.cols());
                    c0 += branch.cols();
                    chain_backward<S>(spec, params, chain_ids(spec, k),
                                      state.caches[static_cast<std::size_t>(k - 1)], std::move(g),
                                      wgrads);
                }
            } else {
                for (int k = 1; k <= K; ++k) {
                    Mat<S> g = (state.argmax.array() == (k - 1))
                                   .template cast<S>()
                                   .matrix()
                                   .cwiseProduct(glogits);
                    chain_backward<S>(spec, params, chain_ids(spec, k),
                                      state.caches[static_cast<std::size_t>(k - 1)], std::move(g),
                                      wgrads);
                }
            }
            break;
        }
        case ModelFamily::gprgnn: {
            const int K = spec.conv_layers;
            out.attn.resize(static_cast<std::size_t>(K) + 1, 0.0);
            for (int k = 0; k <= K; ++k) {
                const auto& term = state.branch_outputs[static_cast<std::size_t>(k)];
                out.attn[static_cast<std::size_t>(k)] =
                    static_cast<double>(glogits.cwiseProduct(term).sum());
                Mat<S> g = glogits * static_cast<S>(params.attn.at(static_cast<std::size_t>(k)));
                chain_backward<S>(spec, params, chain_ids(spec, 0),
                                  state.caches[static_cast<std::size_t>(k)], std::move(g), wgrads);
            }
            break;
        }
    }

    // L2 weight decay on the weight matrices only.
    if (cfg.weight_decay > 0.0) {
        for (const auto& [index, w] : params.weights) {
            double sq = 0.0;
            for (double v : w.values) sq += v * v;
            loss += 0.5 * cfg.weight_decay * sq;
            auto& g = wgrads.at(index);
            for (Index r = 0; r < w.rows; ++r)
                for (Index c = 0; c < w.cols; ++c)
                    g(r, c) += static_cast<S>(cfg.weight_decay * w.at(r, c));
        }
    }

    for (const auto& [index, g] : wgrads) out.weights.emplace(index, to_dense_matrix<S>(g));
    return {loss, std::move(out)};
}

std::vector<Index> rows_with_tag(std::span<const SplitTag> split, SplitTag tag) {
    std::vector<Index> rows;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == tag) rows.push_back(static_cast<Index>(i));
    return rows;
}

void adam_update(double& value, double& m, double& v, double g, double lr, double bc1, double bc2) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g * g;
    value -= lr * (m / bc1) / (std::sqrt(v / bc2) + kAdamEps);
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate: must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight_decay: must be non-negative");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout: must lie in [0, 1)");
    if (input_dropout < 0.0 || input_dropout >= 1.0)
        throw ConfigError("input_dropout: must lie in [0, 1)");
    if (batch_size < 1) throw ConfigError("batch_size: must be at least 1");
    if (patience < 1) throw ConfigError("patience: must be at least 1");
    if (max_epochs < 1) throw ConfigError("max_epochs: must be at least 1");
    if (hidden_dim < 1) throw ConfigError("hidden_dim: must be at least 1");
    if (attn_init < 0.0 || attn_init > 1.0) throw ConfigError("attn_init: must lie in [0, 1]");
}

std::vector<int> required_powers(const ModelSpec& spec) {
    std::vector<int> powers;
    switch (spec.family) {
        case ModelFamily::sgc:
        case ModelFamily::gcn:
            powers.push_back(spec.conv_layers);
            break;
        case ModelFamily::jknet:
            for (int k = 1; k <= spec.conv_layers; ++k) powers.push_back(k);
            break;
        case ModelFamily::gprgnn:
            for (int k = 0; k <= spec.conv_layers; ++k) powers.push_back(k);
            break;
    }
    return powers;
}

ModelParams init_params(const ModelSpec& spec, const TrainConfig& cfg) {
    spec.validate();
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    ModelParams params;
    for (const WeightShape& shape : weight_shapes(spec)) {
        DenseMatrix w(shape.in, shape.out);
        const double scale = 1.0 / std::sqrt(static_cast<double>(shape.in));
        std::uniform_real_distribution<double> uniform(-scale, scale);
        for (double& v : w.values) v = uniform(rng);
        params.adam_m.emplace(shape.index, DenseMatrix(shape.in, shape.out));
        params.adam_v.emplace(shape.index, DenseMatrix(shape.in, shape.out));
        params.weights.emplace(shape.index, std::move(w));
    }
    if (spec.family == ModelFamily::gprgnn) {
        const int K = spec.conv_layers;
        const double a = cfg.attn_init;
        params.attn.resize(static_cast<std::size_t>(K) + 1);
        for (int k = 0; k < K; ++k)
            params.attn[static_cast<std::size_t>(k)] = a * std::pow(1.0 - a, k);
        params.attn[static_cast<std::size_t>(K)] = std::pow(1.0 - a, K);
        params.adam_m_attn.assign(params.attn.size(), 0.0);
        params.adam_v_attn.assign(params.attn.size(), 0.0);
    }
    return params;
}

DenseMatrix forward(const ModelSpec& spec, const ModelParams& params,
                    const PrecomputedFeatures& features, std::span<const Index> rows, RunMode mode,
                    const TrainConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    if (cfg.precision == Precision::f32) {
        auto state = model_forward<float>(spec, params, features, rows, mode == RunMode::train,
                                          cfg, rng, false);
        return to_dense_matrix<float>(state.logits);
    }
    auto state =
        model_forward<double>(spec, params, features, rows, mode == RunMode::train, cfg, rng, false);
    return to_dense_matrix<double>(state.logits);
}

double softmax_cross_entropy(const DenseMatrix& logits, std::span<const int> labels) {
    Mat<double> typed(logits.rows, logits.cols);
    for (Index r = 0; r < logits.rows; ++r)
        for (Index c = 0; c < logits.cols; ++c) typed(r, c) = logits.at(r, c);
    return cross_entropy_and_grad<double>(typed, labels, nullptr);
}

std::pair<double, Gradients> loss_and_grads(const ModelSpec& spec, const ModelParams& params,
                                            const PrecomputedFeatures& features,
                                            std::span<const Index> rows,
                                            std::span<const int> labels, const TrainConfig& cfg,
                                            RunMode mode) {
    std::mt19937_64 rng(cfg.seed);
    if (cfg.precision == Precision::f32)
        return loss_grads_impl<float>(spec, params, features, rows, labels, cfg, mode, rng);
    return loss_grads_impl<double>(spec, params, features, rows, labels, cfg, mode, rng);
}

void adam_step(ModelParams& params, const Gradients& grads, const TrainConfig& cfg) {
    for (const auto& [index, g] : grads.weights)
        for (double v : g.values)
            if (!std::isfinite(v))
                throw NonFiniteGradient("gradient of weight " + std::to_string(index) +
                                        " is not finite");
    for (double v : grads.attn)
        if (!std::isfinite(v)) throw NonFiniteGradient("attention gradient is not finite");

    params.step += 1;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(params.step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(params.step));

    for (auto& [index, w] : params.weights) {
        auto git = grads.weights.find(index);
        if (git == grads.weights.end()) continue;
        const DenseMatrix& g = git->second;
        if (!w.same_shape(g)) throw ShapeMismatch("adam_step: gradient shape mismatch");
        DenseMatrix& m = params.adam_m.at(index);
        DenseMatrix& v = params.adam_v.at(index);
        for (std::size_t i = 0; i < w.values.size(); ++i)
            adam_update(w.values[i], m.values[i], v.values[i], g.values[i], cfg.learning_rate, bc1,
                        bc2);
    }
    if (!params.attn.empty() && !cfg.freeze_attn && !grads.attn.empty()) {
        if (grads.attn.size() != params.attn.size())
            throw ShapeMismatch("adam_step: attention gradient length mismatch");
        for (std::size_t i = 0; i < params.attn.size(); ++i)
            adam_update(params.attn[i], params.adam_m_attn[i], params.adam_v_attn[i], grads.attn[i],
                        cfg.learning_rate, bc1, bc2);
    }
}

TrainResult train(const ModelSpec& spec, const PrecomputedFeatures& features,
                  std::span<const int> labels, std::span<const SplitTag> split,
                  const TrainConfig& cfg, double precompute_ms) {
    spec.validate();
    cfg.validate();
    if (labels.size() != static_cast<std::size_t>(features.n))
        throw ShapeMismatch("train: labels length does not match feature rows");
    if (split.size() != labels.size())
        throw ShapeMismatch("train: split length does not match labels");
    for (int k : required_powers(spec))
        if (!features.has_power(k)) throw MissingPower(k);

    std::vector<Index> train_rows = rows_with_tag(split, SplitTag::train);
    std::vector<Index> val_rows = rows_with_tag(split, SplitTag::val);
    if (train_rows.empty()) throw ConfigError("split: no training rows");
    if (val_rows.empty()) throw ConfigError("split: no validation rows");

    std::mt19937_64 rng(cfg.seed);
    ModelParams params = init_params(spec, cfg);
    ModelParams best_params = params;
    double best_acc = -1.0;
    std::int64_t best_epoch = -1;
    Index since_best = 0;

    TrainHistory history;
    history.precompute_ms = precompute_ms;

    std::vector<int> batch_labels;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::int64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(train_rows.begin(), train_rows.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < train_rows.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t size =
                std::min(static_cast<std::size_t>(cfg.batch_size), train_rows.size() - start);
            std::span<const Index> rows(train_rows.data() + start, size);
            batch_labels.resize(size);
            for (std::size_t i = 0; i < size; ++i)
                batch_labels[i] = labels[static_cast<std::size_t>(rows[i])];
            double loss;
            Gradients grads;
            if (cfg.precision == Precision::f32)
                std::tie(loss, grads) = loss_grads_impl<float>(spec, params, features, rows,
                                                               batch_labels, cfg, RunMode::train, rng);
            else
                std::tie(loss, grads) = loss_grads_impl<double>(
                    spec, params, features, rows, batch_labels, cfg, RunMode::train, rng);
            adam_step(params, grads, cfg);
            loss_sum += loss * static_cast<double>(size);
        }
        const double train_loss = loss_sum / static_cast<double>(train_rows.size());
        const double val_acc = evaluate_accuracy(spec, params, features, labels, val_rows);
        const double cum_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        history.epochs.push_back({epoch, train_loss, val_acc, cum_ms});

        if (val_acc > best_acc) {
            best_acc = val_acc;
            best_epoch = epoch;
            best_params = params;
            since_best = 0;
        } else {
            ++since_best;
        }
        if (since_best >= cfg.patience) break;
    }
    history.best_epoch = best_epoch;
    return TrainResult{std::move(best_params), std::move(history)};
}

double evaluate_accuracy(const ModelSpec& spec, const ModelParams& params,
                         const PrecomputedFeatures& features, std::span<const int> labels,
                         std::span<const Index> mask_rows) {
    if (mask_rows.empty()) throw EmptyMask("evaluate_accuracy: empty mask");
    TrainConfig eval_cfg;  // defaults; dropout is inactive in eval mode
    eval_cfg.hidden_dim = spec.dims.hidden;
    const DenseMatrix logits = forward(spec, params, features, mask_rows, RunMode::eval, eval_cfg);
    std::size_t correct = 0;
    for (Index r = 0; r < logits.rows; ++r) {
        Index arg = 0;
        double best = logits.at(r, 0);
        for (Index c = 1; c < logits.cols; ++c)
            if (logits.at(r, c) > best) {  // strict: ties keep the lowest class id
                best = logits.at(r, c);
                arg = c;
            }
        if (arg == labels[static_cast<std::size_t>(mask_rows[static_cast<std::size_t>(r)])])
            ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(mask_rows.size());
}

}  // namespace lcgnn
