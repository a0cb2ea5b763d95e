#pragma once

#include <cstdint>
#include <vector>

#include "lcgnn/graph.hpp"

namespace lcgnn {

enum class FeatureMode {
    linear,    // class-dependent Gaussian means, linearly separable once denoised
    xor_signs  // label is the XOR of two latent feature sign bits
};

enum class SplitTag : char { train = 't', val = 'v', test = 's' };

struct SyntheticParams {
    Index n = 1000;
    int classes = 2;
    Index feature_dim = 16;
    double homophily = 0.9;  // in [0, 1]; 1 means intra-community edges only
    FeatureMode mode = FeatureMode::linear;
    std::uint64_t seed = 0;
    double avg_degree = 10.0;
    /// Feature noise standard deviation; <= 0 selects a per-mode default.
    double noise_sigma = 0.0;

    void validate() const;
};

struct SyntheticDataset {
    Graph graph;
    DenseMatrix features;          // n x feature_dim
    std::vector<int> labels;       // n class ids
    std::vector<SplitTag> split;   // 60/20/20 train/val/test
};

/// Planted-partition generator. Pure function of its parameters: the same
/// SyntheticParams always produce byte-identical output.
///
/// linear mode plants one community per class and draws features around a
/// per-class mean. xor_signs mode plants four latent sign communities
/// (++, +-, -+, --) in the first two feature dimensions and labels each node
/// with the parity of its community bits, so the task is not linearly
/// separable but an MLP can solve it; it requires classes == 2.
SyntheticDataset gen_synthetic(const SyntheticParams& params);

}  // namespace lcgnn
