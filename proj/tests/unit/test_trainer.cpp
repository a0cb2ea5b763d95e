#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "lcgnn/errors.hpp"
#include "lcgnn/oracle.hpp"
#include "lcgnn/rewrite.hpp"
#include "lcgnn/trainer.hpp"
#include "support.hpp"

using namespace lcgnn;

namespace {

ModelSpec spec_of(ModelFamily family, int K, Index d, Index h, Index y, int T = 2,
                  CombineKind comb = CombineKind::concat) {
    ModelSpec spec;
    spec.family = family;
    spec.conv_layers = K;
    spec.mlp_layers = T;
    spec.combine = comb;
    spec.dims = Dims{d, h, y};
    return spec;
}

/// Exact aggregated features for a small random graph.
PrecomputedFeatures exact_features(const testing::GraphFixture& fixture, int max_power) {
    PrecomputedFeatures features;
    features.n = fixture.features.rows;
    features.d = fixture.features.cols;
    features.source_layers = max_power;
    for (int k = 0; k <= max_power; ++k)
        features.per_power.emplace(
            k, oracle::matrix_power_aggregate(fixture.s_dense, fixture.features, k));
    return features;
}

std::vector<Index> all_rows(Index n) {
    std::vector<Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Index{0});
    return rows;
}

std::vector<int> random_labels(std::mt19937_64& rng, Index n, int y) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = static_cast<int>(rng() % static_cast<std::uint64_t>(y));
    return labels;
}

double finite_difference(const ModelSpec& spec, ModelParams& params,
                         const PrecomputedFeatures& features, std::span<const Index> rows,
                         std::span<const int> labels, const TrainConfig& cfg, double* target) {
    const double step = 1e-5;
    const double saved = *target;
    *target = saved + step;
    const double up = loss_and_grads(spec, params, features, rows, labels, cfg).first;
    *target = saved - step;
    const double down = loss_and_grads(spec, params, features, rows, labels, cfg).first;
    *target = saved;
    return (up - down) / (2.0 * step);
}

void check_gradients(const ModelSpec& spec, const TrainConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto fixture = testing::random_graph_fixture(rng, 14, spec.dims.feature);
    const PrecomputedFeatures features = exact_features(fixture, spec.conv_layers);
    const auto rows = all_rows(features.n);
    const auto labels = random_labels(rng, features.n, static_cast<int>(spec.dims.classes));

    ModelParams params = init_params(spec, cfg);
    const auto [loss, grads] = loss_and_grads(spec, params, features, rows, labels, cfg);
    CHECK(std::isfinite(loss));

    double worst = 0.0;
    for (auto& [index, warr] : params.weights) {
        const DenseMatrix& g = grads.weights.at(index);
        for (std::size_t i = 0; i < warr.values.size(); i += 3) {  // probe a subset of entries
            const double fd = finite_difference(spec, params, features, rows, labels, cfg,
                                                &warr.values[i]);
            const double an = g.values[i];
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
            worst = std::max(worst, rel);
        }
    }
    for (std::size_t k = 0; k < params.attn.size(); ++k) {
        const double fd =
            finite_difference(spec, params, features, rows, labels, cfg, &params.attn[k]);
        const double rel =
            std::abs(fd - grads.attn[k]) / std::max({std::abs(fd), std::abs(grads.attn[k]), 1e-6});
        worst = std::max(worst, rel);
    }
    CHECK(worst < 1e-4);
}

}  // namespace

TEST_CASE("config validation names the field") {
    TrainConfig cfg;
    cfg.patience = 0;
    CHECK_THROWS_WITH_AS(cfg.validate(), "patience: must be at least 1", ConfigError);
    cfg = {};
    cfg.dropout = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("required powers per family") {
    CHECK(required_powers(spec_of(ModelFamily::gcn, 3, 4, 8, 2)) == std::vector<int>{3});
    CHECK(required_powers(spec_of(ModelFamily::sgc, 2, 4, 8, 2)) == std::vector<int>{2});
    CHECK(required_powers(spec_of(ModelFamily::jknet, 3, 4, 8, 2)) == std::vector<int>{1, 2, 3});
    CHECK(required_powers(spec_of(ModelFamily::gprgnn, 2, 4, 8, 2)) == std::vector<int>{0, 1, 2});
    // matches the plan extracted from the transformed formula
    for (ModelFamily family :
         {ModelFamily::gcn, ModelFamily::sgc, ModelFamily::jknet, ModelFamily::gprgnn}) {
        const ModelSpec spec = spec_of(family, 3, 4, 8, 2);
        CHECK(required_powers(spec) == lc_transform(build_formula(spec)).plan.powers);
    }
}

TEST_CASE("attention initialization") {
    TrainConfig cfg;
    SUBCASE("all mass on the deepest hop") {
        cfg.attn_init = 0.0;
        const ModelParams p = init_params(spec_of(ModelFamily::gprgnn, 3, 4, 8, 2), cfg);
        CHECK(p.attn == std::vector<double>{0.0, 0.0, 0.0, 1.0});
    }
    SUBCASE("all mass on the raw features") {
        cfg.attn_init = 1.0;
        const ModelParams p = init_params(spec_of(ModelFamily::gprgnn, 3, 4, 8, 2), cfg);
        CHECK(p.attn == std::vector<double>{1.0, 0.0, 0.0, 0.0});
    }
    SUBCASE("identical runs for identical seeds") {
        cfg.seed = 9;
        const ModelSpec spec = spec_of(ModelFamily::gcn, 2, 4, 8, 2);
        const ModelParams a = init_params(spec, cfg);
        const ModelParams b = init_params(spec, cfg);
        CHECK(a.weights.at(1).values == b.weights.at(1).values);
        CHECK(a.weights.at(2).values == b.weights.at(2).values);
    }
}

TEST_CASE("forward basics") {
    std::mt19937_64 rng(77);
    const auto fixture = testing::random_graph_fixture(rng, 10, 4);
    const PrecomputedFeatures features = exact_features(fixture, 2);
    const auto rows = all_rows(features.n);
    TrainConfig cfg;
    cfg.hidden_dim = 6;

    SUBCASE("zero weights give uniform predictions") {
        const ModelSpec spec = spec_of(ModelFamily::gcn, 2, 4, 6, 3);
        ModelParams params = init_params(spec, cfg);
        for (auto& [index, w] : params.weights) std::fill(w.values.begin(), w.values.end(), 0.0);
        const DenseMatrix logits = forward(spec, params, features, rows, RunMode::eval, cfg);
        CHECK(max_abs(logits) == 0.0);
        const DenseMatrix probs = softmax_rows(logits);
        for (double v : probs.values) CHECK(v == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("one-hot attention at hop zero reduces to an MLP on the raw features") {
        const ModelSpec spec = spec_of(ModelFamily::gprgnn, 2, 4, 6, 3);
        TrainConfig gpr_cfg = cfg;
        gpr_cfg.attn_init = 1.0;
        ModelParams params = init_params(spec, gpr_cfg);
        const DenseMatrix out = forward(spec, params, features, rows, RunMode::eval, gpr_cfg);
        // same MLP applied directly to X
        oracle::ParamSet mlp;
        mlp.weights = params.weights;
        const DenseMatrix z1 = relu(matmul(fixture.features, mlp.weights.at(1)));
        const DenseMatrix expected = matmul(z1, mlp.weights.at(2));
        CHECK(max_abs_diff(out, expected) <= 1e-12);
    }
    SUBCASE("missing power is reported") {
        const ModelSpec spec = spec_of(ModelFamily::gcn, 2, 4, 6, 3);
        ModelParams params = init_params(spec, cfg);
        PrecomputedFeatures partial = features;
        partial.per_power.erase(2);
        CHECK_THROWS_AS(forward(spec, params, partial, rows, RunMode::eval, cfg), MissingPower);
    }
}

TEST_CASE("eval forward agrees with the dense reference evaluation") {
    std::mt19937_64 rng(500);
    const auto fixture = testing::random_graph_fixture(rng, 16, 4);
    const PrecomputedFeatures features = exact_features(fixture, 3);
    const auto rows = all_rows(features.n);

    const auto check_family = [&](const ModelSpec& spec) {
        TrainConfig cfg;
        cfg.hidden_dim = spec.dims.hidden;
        cfg.seed = 21;
        const ModelParams params = init_params(spec, cfg);
        oracle::ParamSet oracle_params;
        oracle_params.weights = params.weights;
        oracle_params.attn = params.attn;
        const Formula lc = lc_transform(build_formula(spec)).formula;
        const DenseMatrix expected =
            oracle::evaluate_formula(lc, oracle_params, fixture.s_dense, fixture.features);
        const DenseMatrix logits = forward(spec, params, features, rows, RunMode::eval, cfg);
        CHECK(max_abs_diff(softmax_rows(logits), expected) <= 1e-10);

        TrainConfig cfg32 = cfg;
        cfg32.precision = Precision::f32;
        const DenseMatrix logits32 = forward(spec, params, features, rows, RunMode::eval, cfg32);
        CHECK(max_abs_diff(softmax_rows(logits32), expected) <= 1e-6);
    };

    check_family(spec_of(ModelFamily::gcn, 2, 4, 5, 3));
    check_family(spec_of(ModelFamily::sgc, 3, 4, 5, 3));
    check_family(spec_of(ModelFamily::jknet, 3, 4, 5, 3));
    check_family(spec_of(ModelFamily::jknet, 3, 4, 5, 3, 2, CombineKind::max));
    check_family(spec_of(ModelFamily::gprgnn, 3, 4, 5, 3, 2));
}

TEST_CASE("loss values") {
    SUBCASE("uniform logits cost ln(y)") {
        DenseMatrix logits(3, 4);
        const std::vector<int> labels{0, 1, 2};
        CHECK(softmax_cross_entropy(logits, labels) == doctest::Approx(std::log(4.0)));
    }
    SUBCASE("saturated correct logits cost nearly nothing") {
        DenseMatrix logits(2, 3);
        logits.at(0, 0) = 50.0;
        logits.at(1, 2) = 50.0;
        const std::vector<int> labels{0, 2};
        CHECK(softmax_cross_entropy(logits, labels) < 1e-20);
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    TrainConfig cfg;
    cfg.hidden_dim = 4;
    cfg.seed = 3;
    SUBCASE("gcn") { check_gradients(spec_of(ModelFamily::gcn, 2, 5, 4, 3), cfg, 11); }
    SUBCASE("sgc") { check_gradients(spec_of(ModelFamily::sgc, 2, 5, 4, 3), cfg, 12); }
    SUBCASE("jknet concat") {
        check_gradients(spec_of(ModelFamily::jknet, 3, 5, 4, 3), cfg, 13);
    }
    SUBCASE("jknet max") {
        check_gradients(spec_of(ModelFamily::jknet, 3, 5, 4, 3, 2, CombineKind::max), cfg, 14);
    }
    SUBCASE("gprgnn with attention") {
        check_gradients(spec_of(ModelFamily::gprgnn, 2, 5, 4, 3, 2), cfg, 15);
    }
    SUBCASE("with weight decay") {
        TrainConfig wd_cfg = cfg;
        wd_cfg.weight_decay = 0.05;
        check_gradients(spec_of(ModelFamily::gcn, 2, 5, 4, 3), wd_cfg, 16);
    }
}

TEST_CASE("adam steps") {
    const ModelSpec spec = spec_of(ModelFamily::gcn, 1, 3, 4, 2);
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    ModelParams params = init_params(spec, cfg);
    const ModelParams before = params;

    SUBCASE("zero gradients leave parameters unchanged") {
        Gradients zeros;
        zeros.weights.emplace(1, DenseMatrix(3, 2));
        adam_step(params, zeros, cfg);
        CHECK(params.weights.at(1).values == before.weights.at(1).values);
    }
    SUBCASE("first step moves by roughly the learning rate against the sign") {
        Gradients grads;
        DenseMatrix g(3, 2);
        for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = (i % 2 == 0) ? 2.5 : -2.5;
        grads.weights.emplace(1, g);
        adam_step(params, grads, cfg);
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            const double moved = params.weights.at(1).values[i] - before.weights.at(1).values[i];
            const double expected = (i % 2 == 0) ? -cfg.learning_rate : cfg.learning_rate;
            CHECK(moved == doctest::Approx(expected).epsilon(1e-5));
        }
    }
    SUBCASE("non-finite gradients are rejected") {
        Gradients grads;
        DenseMatrix g(3, 2);
        g.values[0] = std::nan("");
        grads.weights.emplace(1, g);
        CHECK_THROWS_AS(adam_step(params, grads, cfg), NonFiniteGradient);
    }
}

TEST_CASE("training on a separable dataset reaches full training accuracy") {
    SyntheticParams data_params;
    data_params.n = 100;
    data_params.classes = 2;
    data_params.feature_dim = 6;
    data_params.homophily = 0.9;
    data_params.seed = 8;
    data_params.noise_sigma = 0.5;
    const SyntheticDataset ds = gen_synthetic(data_params);
    const SparseMatrix a_tilde = add_self_loops(ds.graph);
    const SparseMatrix s = normalize_adjacency(a_tilde, degree_vector(a_tilde));
    const DenseMatrix s_dense = to_dense(s);

    PrecomputedFeatures features;
    features.n = data_params.n;
    features.d = data_params.feature_dim;
    features.source_layers = 2;
    for (int k = 0; k <= 2; ++k)
        features.per_power.emplace(k, oracle::matrix_power_aggregate(s_dense, ds.features, k));

    const ModelSpec spec = spec_of(ModelFamily::gcn, 2, data_params.feature_dim, 16, 2);
    TrainConfig cfg;
    cfg.hidden_dim = 16;
    cfg.learning_rate = 0.05;
    cfg.max_epochs = 500;
    cfg.patience = 500;
    cfg.seed = 4;

    const TrainResult result = train(spec, features, ds.labels, ds.split, cfg);
    std::vector<Index> train_rows;
    for (std::size_t i = 0; i < ds.split.size(); ++i)
        if (ds.split[i] == SplitTag::train) train_rows.push_back(static_cast<Index>(i));
    const double train_acc =
        evaluate_accuracy(spec, result.params, features, ds.labels, train_rows);
    CHECK(train_acc == doctest::Approx(1.0));

    SUBCASE("history is deterministic for a fixed seed") {
        const TrainResult again = train(spec, features, ds.labels, ds.split, cfg);
        REQUIRE(again.history.epochs.size() == result.history.epochs.size());
        for (std::size_t i = 0; i < again.history.epochs.size(); ++i) {
            CHECK(again.history.epochs[i].train_loss == result.history.epochs[i].train_loss);
            CHECK(again.history.epochs[i].val_acc == result.history.epochs[i].val_acc);
        }
    }
    SUBCASE("returned parameters achieve the best observed validation accuracy") {
        double best = 0.0;
        for (const EpochRecord& r : result.history.epochs) best = std::max(best, r.val_acc);
        std::vector<Index> val_rows;
        for (std::size_t i = 0; i < ds.split.size(); ++i)
            if (ds.split[i] == SplitTag::val) val_rows.push_back(static_cast<Index>(i));
        CHECK(evaluate_accuracy(spec, result.params, features, ds.labels, val_rows) ==
              doctest::Approx(best));
        CHECK(result.history.best_epoch >= 1);
    }
}

TEST_CASE("evaluate_accuracy edge cases") {
    PrecomputedFeatures features;
    features.n = 4;
    features.d = 2;
    features.per_power.emplace(1, DenseMatrix(4, 2));

    const ModelSpec spec = spec_of(ModelFamily::sgc, 1, 2, 2, 2);
    TrainConfig cfg;
    ModelParams params = init_params(spec, cfg);
    for (auto& [i, w] : params.weights) std::fill(w.values.begin(), w.values.end(), 0.0);

    SUBCASE("empty mask rejected") {
        const std::vector<int> labels{0, 0, 0, 0};
        std::vector<Index> empty;
        CHECK_THROWS_AS(evaluate_accuracy(spec, params, features, labels, empty), EmptyMask);
    }
    SUBCASE("uniform logits tie-break to class zero") {
        const std::vector<int> labels{0, 1, 0, 1};  // half the rows are class 0
        const auto rows = all_rows(4);
        CHECK(evaluate_accuracy(spec, params, features, labels, rows) == doctest::Approx(0.5));
    }
    SUBCASE("two-class permutation complements the accuracy") {
        std::mt19937_64 rng(6);
        const auto fixture = testing::random_graph_fixture(rng, 12, 2);
        const PrecomputedFeatures real = exact_features(fixture, 1);
        const ModelSpec spec2 = spec_of(ModelFamily::sgc, 1, 2, 2, 2);
        TrainConfig cfg2;
        cfg2.seed = 10;
        const ModelParams p2 = init_params(spec2, cfg2);
        auto labels = random_labels(rng, real.n, 2);
        const auto rows = all_rows(real.n);
        const double acc = evaluate_accuracy(spec2, p2, real, labels, rows);
        for (auto& l : labels) l = 1 - l;
        const double flipped = evaluate_accuracy(spec2, p2, real, labels, rows);
        CHECK(acc + flipped == doctest::Approx(1.0));
    }
}
