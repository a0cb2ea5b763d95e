#include <doctest.h>

#include <random>
#include <set>

#include "lcgnn/oracle.hpp"
#include "lcgnn/rewrite.hpp"
#include "support.hpp"

using namespace lcgnn;

namespace {

ModelSpec spec_of(ModelFamily family, int K, int T = 2, CombineKind comb = CombineKind::concat,
                  ActivationKind act = ActivationKind::relu) {
    ModelSpec spec;
    spec.family = family;
    spec.conv_layers = K;
    spec.mlp_layers = T;
    spec.combine = comb;
    spec.activation = act;
    spec.dims = Dims{3, 4, 2};
    return spec;
}

}  // namespace

TEST_CASE("single rewrite steps") {
    SUBCASE("two-layer convolution commutes its outer filter") {
        const Formula f = build_formula(spec_of(ModelFamily::gcn, 2));
        const Formula rewritten = apply_f_lc(f);
        CHECK(render_formula(rewritten) == "softmax(σ(S^2·X·W_1)·W_2)");
    }
    SUBCASE("normal forms are returned unchanged") {
        const Formula f = build_formula(spec_of(ModelFamily::sgc, 2));
        CHECK(apply_f_lc(f) == f);
    }
    SUBCASE("branched formulas rewrite the leftmost branch first") {
        const Formula f = build_formula(spec_of(ModelFamily::jknet, 2));
        const Formula once = apply_f_lc(f);
        CHECK(render_formula(once) ==
              "softmax(COMB_concat[S^1·X·W_1, σ(S^2·X·W_1)·W_2])");
        CHECK(count_redexes(once) == 0);
    }
}

TEST_CASE("fixpoint transforms of the model families") {
    SUBCASE("gcn K=2") {
        const auto result = lc_transform(build_formula(spec_of(ModelFamily::gcn, 2)));
        CHECK(render_formula(result.formula) == "softmax(σ(S^2·X·W_1)·W_2)");
        CHECK(result.plan.powers == std::vector<int>{2});
        CHECK(result.steps.size() == 1);
    }
    SUBCASE("jknet K=3 reaches per-branch feature contact") {
        const auto result = lc_transform(build_formula(spec_of(ModelFamily::jknet, 3)));
        CHECK(render_formula(result.formula) ==
              "softmax(COMB_concat[S^1·X·W_1, σ(S^2·X·W_1)·W_2, "
              "σ(σ(S^3·X·W_1)·W_2)·W_3])");
        CHECK(result.plan.powers == std::vector<int>{1, 2, 3});
        CHECK(result.steps.size() == 3);  // one for branch 2, two for branch 3
    }
    SUBCASE("gprgnn keeps hop zero and pushes every filter to the features") {
        const auto result = lc_transform(build_formula(spec_of(ModelFamily::gprgnn, 3, 2)));
        CHECK(render_formula(result.formula) ==
              "softmax(Σγ[σ(X·W_1)·W_2, "
              "σ(S^1·X·W_1)·W_2, σ(S^2·X·W_1)·W_2, "
              "σ(S^3·X·W_1)·W_2])");
        CHECK(result.plan.powers == std::vector<int>{0, 1, 2, 3});
    }
    SUBCASE("sgc is already in normal form") {
        const auto result = lc_transform(build_formula(spec_of(ModelFamily::sgc, 3)));
        CHECK(result.steps.empty());
        CHECK(result.plan.powers == std::vector<int>{3});
    }
}

TEST_CASE("validate_lc") {
    CHECK(validate_lc(build_formula(spec_of(ModelFamily::sgc, 2))));
    CHECK_FALSE(validate_lc(build_formula(spec_of(ModelFamily::gcn, 2))));
    std::mt19937_64 rng(17);
    for (int i = 0; i < 30; ++i) {
        const auto generated = testing::random_formula(rng);
        CHECK(validate_lc(lc_transform(generated.formula).formula));
    }
}

TEST_CASE("termination measure strictly decreases per application") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 60; ++i) {
        const auto generated = testing::random_formula(rng);
        Formula current = generated.formula;
        int measure = testing::filters_above_activations(current);
        int steps = 0;
        const int bound = 1 + testing::activation_count(current) * 16;
        while (true) {
            const Formula next = apply_f_lc(current);
            if (next == current) break;
            const int next_measure = testing::filters_above_activations(next);
            CHECK(next_measure < measure);
            measure = next_measure;
            current = next;
            REQUIRE(++steps <= bound);
        }
        CHECK(count_redexes(current) == 0);
    }
}

TEST_CASE("rewrite preserves weights, activations, and per-leaf filter power") {
    std::mt19937_64 rng(31337);
    for (int i = 0; i < 60; ++i) {
        const auto generated = testing::random_formula(rng);
        const auto result = lc_transform(generated.formula);

        std::multiset<int> weights_before, weights_after;
        testing::weight_index_multiset(generated.formula, weights_before);
        testing::weight_index_multiset(result.formula, weights_after);
        CHECK(weights_before == weights_after);

        CHECK(testing::activation_count(generated.formula) ==
              testing::activation_count(result.formula));

        std::vector<int> powers_before, powers_after;
        testing::leaf_powers(generated.formula, 0, powers_before);
        testing::leaf_powers(result.formula, 0, powers_after);
        CHECK(powers_before == powers_after);
    }
}

TEST_CASE("identity-activation semantics are preserved by the transform") {
    std::mt19937_64 rng(555);
    testing::GeneratorOptions opts;
    opts.activation = ActivationKind::identity;
    for (int i = 0; i < 25; ++i) {
        const auto generated = testing::random_formula(rng, opts);
        const auto fixture = testing::random_graph_fixture(rng, 24, generated.feature_dim);
        const auto result = lc_transform(generated.formula);
        const DenseMatrix before =
            oracle::evaluate_formula(generated.formula, generated.params, fixture.s_dense,
                                     fixture.features);
        const DenseMatrix after = oracle::evaluate_formula(result.formula, generated.params,
                                                           fixture.s_dense, fixture.features);
        const double scale = std::max(1.0, max_abs(before));
        CHECK(max_abs_diff(before, after) / scale <= 1e-9);
    }
}

TEST_CASE("plan powers cap at the source depth") {
    for (int K = 1; K <= 5; ++K) {
        const auto gcn = lc_transform(build_formula(spec_of(ModelFamily::gcn, K)));
        CHECK(gcn.plan.max_power() == K);
        const auto jk = lc_transform(build_formula(spec_of(ModelFamily::jknet, K)));
        CHECK(jk.plan.max_power() == K);
    }
}
