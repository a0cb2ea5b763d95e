#include "lcgnn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "lcgnn/errors.hpp"

namespace lcgnn {

namespace {

constexpr double kDefaultLinearNoise = 2.5;
constexpr double kDefaultXorNoise = 0.7;

}  // namespace

void SyntheticParams::validate() const {
    if (n <= 0) throw ConfigError("n: must be positive");
    if (classes < 1) throw ConfigError("classes: must be at least 1");
    if (classes > n) throw ConfigError("classes: must not exceed n");
    if (feature_dim < 2) throw ConfigError("feature_dim: must be at least 2");
    if (homophily < 0.0 || homophily > 1.0) throw ConfigError("homophily: must lie in [0, 1]");
    if (avg_degree <= 0.0) throw ConfigError("avg_degree: must be positive");
    if (mode == FeatureMode::xor_signs && classes != 2)
        throw ConfigError("classes: xor mode encodes a binary parity and requires classes = 2");
}

SyntheticDataset gen_synthetic(const SyntheticParams& params) {
    params.validate();
    const Index n = params.n;
    const Index d = params.feature_dim;
    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Communities are the planted partition blocks. In xor mode the four
    // latent sign groups carry the structure and the label is their parity.
    const int communities = params.mode == FeatureMode::xor_signs ? 4 : params.classes;
    std::vector<int> community(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        int c = static_cast<int>(i % communities);
        community[static_cast<std::size_t>(i)] = c;
        labels[static_cast<std::size_t>(i)] =
            params.mode == FeatureMode::xor_signs ? ((c & 1) ^ ((c >> 1) & 1)) : c;
    }

    // Expected intra-community degree is homophily*avg_degree, the rest goes
    // across communities; homophily 1 therefore forbids inter-community edges.
    const double block = static_cast<double>(n) / communities;
    const double p_in = std::min(1.0, params.homophily * params.avg_degree / std::max(1.0, block - 1.0));
    const double p_out = std::min(
        1.0, (1.0 - params.homophily) * params.avg_degree / std::max(1.0, static_cast<double>(n) - block));

    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(static_cast<double>(n) * params.avg_degree / 2.0 + 16.0));
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            double p = community[static_cast<std::size_t>(i)] == community[static_cast<std::size_t>(j)]
                           ? p_in
                           : p_out;
            if (p > 0.0 && unit(rng) < p) edges.push_back({i, j});
        }
    }
    Graph graph = Graph::from_edges(n, std::move(edges));

    const double sigma = params.noise_sigma > 0.0
                             ? params.noise_sigma
                             : (params.mode == FeatureMode::linear ? kDefaultLinearNoise
                                                                   : kDefaultXorNoise);

    DenseMatrix features(n, d);
    if (params.mode == FeatureMode::linear) {
        // Per-class means drawn once; every coordinate gets noise on top.
        DenseMatrix means(params.classes, d);
        for (Index c = 0; c < params.classes; ++c)
            for (Index k = 0; k < d; ++k) means.at(c, k) = gauss(rng);
        for (Index i = 0; i < n; ++i) {
            int c = labels[static_cast<std::size_t>(i)];
            for (Index k = 0; k < d; ++k) features.at(i, k) = means.at(c, k) + sigma * gauss(rng);
        }
    } else {
        for (Index i = 0; i < n; ++i) {
            int c = community[static_cast<std::size_t>(i)];
            double s1 = (c & 1) ? -1.0 : 1.0;
            double s2 = ((c >> 1) & 1) ? -1.0 : 1.0;
            features.at(i, 0) = s1 + sigma * gauss(rng);
            features.at(i, 1) = s2 + sigma * gauss(rng);
            for (Index k = 2; k < d; ++k) features.at(i, k) = gauss(rng);
        }
    }

    // Seeded shuffle, then fixed 60/20/20 cut.
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<SplitTag> split(static_cast<std::size_t>(n), SplitTag::test);
    const Index n_train = (n * 6) / 10;
    const Index n_val = (n * 2) / 10;
    for (Index i = 0; i < n; ++i) {
        SplitTag tag = i < n_train            ? SplitTag::train
                       : i < n_train + n_val  ? SplitTag::val
                                              : SplitTag::test;
        split[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = tag;
    }

    return SyntheticDataset{std::move(graph), std::move(features), std::move(labels),
                            std::move(split)};
}

}  // namespace lcgnn
