#include <doctest.h>

#include <random>

#include "lcgnn/errors.hpp"
#include "lcgnn/formula.hpp"
#include "lcgnn/oracle.hpp"
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

TEST_CASE("rendering atoms") {
    CHECK(render_formula(feature_var()) == "X");
    CHECK(render_formula(filter_power(1, feature_var())) == "S^1·X");
    CHECK(render_formula(build_formula(spec_of(ModelFamily::sgc, 2))) ==
          "softmax(S^2·X·W)");
}

TEST_CASE("build_formula matches the family formulations") {
    CHECK(render_formula(build_formula(spec_of(ModelFamily::gcn, 2))) ==
          "softmax(S^1·σ(S^1·X·W_1)·W_2)");
    CHECK(render_formula(build_formula(spec_of(ModelFamily::gcn, 1))) ==
          "softmax(S^1·X·W_1)");
    CHECK(render_formula(build_formula(spec_of(ModelFamily::jknet, 2))) ==
          "softmax(COMB_concat[S^1·X·W_1, "
          "S^1·σ(S^1·X·W_1)·W_2])");
    // attention-weighted hops share one MLP; hop zero consumes the bare X
    CHECK(render_formula(build_formula(spec_of(ModelFamily::gprgnn, 2, 2))) ==
          "softmax(Σγ[σ(X·W_1)·W_2, "
          "S^1·σ(X·W_1)·W_2, S^2·σ(X·W_1)·W_2])");
    CHECK_THROWS_AS(build_formula(spec_of(ModelFamily::gcn, 0)), ConfigError);
}

TEST_CASE("canonical constructors merge powers and hoist weights") {
    const Formula merged = filter_power(2, filter_power(3, feature_var()));
    CHECK(render_formula(merged) == "S^5·X");
    const Formula hoisted = filter_power(2, weight_mul(1, feature_var()));
    CHECK(render_formula(hoisted) == "S^2·X·W_1");
    CHECK(hoisted == weight_mul(1, filter_power(2, feature_var())));
}

TEST_CASE("count_redexes") {
    CHECK(count_redexes(build_formula(spec_of(ModelFamily::sgc, 2))) == 0);
    CHECK(count_redexes(build_formula(spec_of(ModelFamily::gcn, 2))) == 1);
    CHECK(count_redexes(build_formula(spec_of(ModelFamily::gcn, 3))) == 2);
    CHECK(count_redexes(build_formula(spec_of(ModelFamily::gcn, 4))) == 3);
    // one per attention hop with k >= 1 once the weight chain is hoisted
    CHECK(count_redexes(build_formula(spec_of(ModelFamily::gprgnn, 2, 2))) == 2);
}

TEST_CASE("render is injective on canonical forms") {
    std::mt19937_64 rng(99);
    std::vector<Formula> formulas;
    for (int i = 0; i < 40; ++i)
        formulas.push_back(testing::random_formula(rng).formula);
    formulas.push_back(build_formula(spec_of(ModelFamily::gcn, 3)));
    formulas.push_back(build_formula(spec_of(ModelFamily::jknet, 3, 2, CombineKind::max)));
    for (std::size_t i = 0; i < formulas.size(); ++i)
        for (std::size_t j = 0; j < formulas.size(); ++j) {
            const bool same_render = render_formula(formulas[i]) == render_formula(formulas[j]);
            const bool same_structure = formulas[i] == formulas[j];
            CHECK(same_render == same_structure);
        }
}

TEST_CASE("identity-activation gcn evaluates like sgc with the reparameterized weight") {
    std::mt19937_64 rng(123);
    const auto fixture = testing::random_graph_fixture(rng, 12, 3);
    const Index n = fixture.graph.num_nodes();
    (void)n;

    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_matrix = [&](Index r, Index c) {
        DenseMatrix m(r, c);
        for (double& v : m.values) v = gauss(rng);
        return m;
    };

    const DenseMatrix w1 = random_matrix(3, 4);
    const DenseMatrix w2 = random_matrix(4, 2);

    oracle::ParamSet gcn_params;
    gcn_params.weights.emplace(1, w1);
    gcn_params.weights.emplace(2, w2);
    oracle::ParamSet sgc_params;
    sgc_params.weights.emplace(0, matmul(w1, w2));

    const Formula gcn_id =
        build_formula(spec_of(ModelFamily::gcn, 2, 2, CombineKind::concat, ActivationKind::identity));
    const Formula sgc = build_formula(spec_of(ModelFamily::sgc, 2));

    const DenseMatrix a = oracle::evaluate_formula(gcn_id, gcn_params, fixture.s_dense, fixture.features);
    const DenseMatrix b = oracle::evaluate_formula(sgc, sgc_params, fixture.s_dense, fixture.features);
    CHECK(max_abs_diff(a, b) <= 1e-9);
}

TEST_CASE("build_formula is deterministic") {
    const ModelSpec spec = spec_of(ModelFamily::jknet, 3, 2, CombineKind::max);
    CHECK(build_formula(spec) == build_formula(spec));
    CHECK(render_formula(build_formula(spec)) == render_formula(build_formula(spec)));
}
