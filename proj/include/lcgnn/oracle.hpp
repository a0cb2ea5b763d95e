#pragma once

#include <map>
#include <vector>

#include "lcgnn/dense.hpp"
#include "lcgnn/formula.hpp"

namespace lcgnn::oracle {

/// Dense parameter bundle for reference evaluation. Shapes must chain with
/// the weight indices of the formula being evaluated.
struct ParamSet {
    std::map<int, DenseMatrix> weights;
    std::vector<double> attn;  // coefficient k for attention-sum child k
};

/// Maximum node count the reference evaluator accepts. It exists for
/// verification, not scale.
inline constexpr Index kMaxOracleNodes = 2048;

/// Direct recursive dense evaluation of a formula. All arithmetic is 64-bit.
/// Throws ShapeMismatch on incompatible operands or missing weights.
DenseMatrix evaluate_formula(const Formula& f, const ParamSet& p, const DenseMatrix& s_dense,
                             const DenseMatrix& x);

/// Naive repeated multiplication S·(S·(...·X)). Ground truth for the blocked
/// aggregation path. k = 0 returns X.
DenseMatrix matrix_power_aggregate(const DenseMatrix& s_dense, const DenseMatrix& x, int k);

}  // namespace lcgnn::oracle
