#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "lcgnn/blocking.hpp"
#include "lcgnn/formula.hpp"
#include "lcgnn/synthetic.hpp"

namespace lcgnn {

enum class Precision { f32, f64 };
enum class RunMode { train, eval };

struct TrainConfig {
    double learning_rate = 0.01;
    double weight_decay = 0.0;
    double dropout = 0.0;        // after each hidden activation
    double input_dropout = 0.0;  // on aggregated feature rows before the MLP (gprgnn)
    Index batch_size = 4096;
    Index patience = 300;
    Index max_epochs = 2000;
    Index hidden_dim = 256;
    ActivationKind activation = ActivationKind::relu;
    std::uint64_t seed = 0;
    Precision precision = Precision::f64;
    /// Attention bootstrap: coefficient k starts at a·(1-a)^k, the last at
    /// (1-a)^K. a = 1 concentrates all mass on the raw features.
    double attn_init = 0.1;
    /// Keeps attention coefficients fixed at their initialization; used for
    /// aggregation-free baselines.
    bool freeze_attn = false;

    void validate() const;  // throws ConfigError naming the offending field
};

struct Gradients {
    std::map<int, DenseMatrix> weights;
    std::vector<double> attn;
};

/// Learnable state plus Adam moments. Weight indices follow the model
/// formula; attention coefficients exist for gprgnn only.
struct ModelParams {
    std::map<int, DenseMatrix> weights;
    std::vector<double> attn;
    std::map<int, DenseMatrix> adam_m, adam_v;
    std::vector<double> adam_m_attn, adam_v_attn;
    std::int64_t step = 0;
};

struct EpochRecord {
    std::int64_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_acc = 0.0;
    double cum_ms = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    double precompute_ms = 0.0;
    std::int64_t best_epoch = -1;
};

struct TrainResult {
    ModelParams params;  // snapshot from the best validation epoch
    TrainHistory history;
};

/// Filter powers the model family consumes: {K} for gcn/sgc, {1..K} for
/// jknet, {0..K} for gprgnn. Always equal to the plan extracted from the
/// transformed formula.
std::vector<int> required_powers(const ModelSpec& spec);

/// Seeded initialization: each weight entry is uniform in
/// [-1/sqrt(fan_in), 1/sqrt(fan_in)]; attention per attn_init. Deterministic
/// given (spec, cfg).
ModelParams init_params(const ModelSpec& spec, const TrainConfig& cfg);

/// Logits for the given rows (softmax is fused into the loss). Dropout is
/// active only in train mode and draws from a generator seeded by cfg.seed.
/// Throws MissingPower when a required aggregated power is absent.
DenseMatrix forward(const ModelSpec& spec, const ModelParams& params,
                    const PrecomputedFeatures& features, std::span<const Index> rows, RunMode mode,
                    const TrainConfig& cfg);

/// Mean softmax cross-entropy with max-subtracted log-sum-exp.
double softmax_cross_entropy(const DenseMatrix& logits, std::span<const int> labels);

/// Loss plus reverse-mode gradients for every parameter, including attention
/// coefficients. Weight decay enters as an L2 term on the weight matrices.
/// Dropout follows the mode, as in forward.
std::pair<double, Gradients> loss_and_grads(const ModelSpec& spec, const ModelParams& params,
                                            const PrecomputedFeatures& features,
                                            std::span<const Index> rows,
                                            std::span<const int> labels, const TrainConfig& cfg,
                                            RunMode mode = RunMode::train);

/// Standard Adam update (beta1 = 0.9, beta2 = 0.999, eps = 1e-8) with bias
/// correction. Throws NonFiniteGradient on any non-finite gradient entry.
/// Frozen attention is left untouched.
void adam_step(ModelParams& params, const Gradients& grads, const TrainConfig& cfg);

/// Mini-batch training with early stopping: shuffled batches over the
/// training rows each epoch, validation accuracy after every epoch, stop
/// after cfg.patience epochs without improvement or at cfg.max_epochs.
/// Returns the parameters of the best validation epoch. Deterministic up to
/// the wall-clock fields.
TrainResult train(const ModelSpec& spec, const PrecomputedFeatures& features,
                  std::span<const int> labels, std::span<const SplitTag> split,
                  const TrainConfig& cfg, double precompute_ms = 0.0);

/// Argmax-match fraction over the masked rows; prediction ties resolve to
/// the lowest class id. Throws EmptyMask.
double evaluate_accuracy(const ModelSpec& spec, const ModelParams& params,
                         const PrecomputedFeatures& features, std::span<const int> labels,
                         std::span<const Index> mask_rows);

}  // namespace lcgnn
