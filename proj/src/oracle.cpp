#include "lcgnn/oracle.hpp"

#include <string>

#include "lcgnn/errors.hpp"

namespace lcgnn::oracle {

namespace {

const DenseMatrix& weight_for(const ParamSet& p, int index) {
    auto it = p.weights.find(index);
    if (it == p.weights.end())
        throw ShapeMismatch("evaluate_formula: no weight with index " + std::to_string(index));
    return it->second;
}

DenseMatrix eval(const Formula& f, const ParamSet& p, const DenseMatrix& s, const DenseMatrix& x) {
    return std::visit(
        [&](const auto& node) -> DenseMatrix {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, FeatureVar>) {
                return x;
            } else if constexpr (std::is_same_v<T, FilterPowerNode>) {
                DenseMatrix acc = eval(node.child, p, s, x);
                for (int i = 0; i < node.power; ++i) acc = matmul(s, acc);
                return acc;
            } else if constexpr (std::is_same_v<T, WeightMulNode>) {
                return matmul(eval(node.child, p, s, x), weight_for(p, node.index));
            } else if constexpr (std::is_same_v<T, ActivationNode>) {
                DenseMatrix v = eval(node.child, p, s, x);
                return node.kind == ActivationKind::relu ? relu(v) : v;
            } else if constexpr (std::is_same_v<T, CombineNode>) {
                std::vector<DenseMatrix> parts;
                parts.reserve(node.children.size());
                for (const Formula& c : node.children) parts.push_back(eval(c, p, s, x));
                if (node.kind == CombineKind::concat) return hconcat(parts);
                DenseMatrix acc = parts.front();
                for (std::size_t i = 1; i < parts.size(); ++i) acc = cwise_max(acc, parts[i]);
                return acc;
            } else if constexpr (std::is_same_v<T, AttnSumNode>) {
                if (p.attn.size() != node.children.size())
                    throw ShapeMismatch("evaluate_formula: attention length " +
                                        std::to_string(p.attn.size()) + " for " +
                                        std::to_string(node.children.size()) + " terms");
                DenseMatrix acc = scaled(eval(node.children[0], p, s, x), p.attn[0]);
                for (std::size_t k = 1; k < node.children.size(); ++k)
                    add_scaled(acc, eval(node.children[k], p, s, x), p.attn[k]);
                return acc;
            } else {
                return softmax_rows(eval(node.child, p, s, x));
            }
        },
        f.node().v);
}

}  // namespace

DenseMatrix evaluate_formula(const Formula& f, const ParamSet& p, const DenseMatrix& s_dense,
                             const DenseMatrix& x) {
    if (s_dense.rows != s_dense.cols) throw ShapeMismatch("evaluate_formula: filter must be square");
    if (s_dense.rows > kMaxOracleNodes)
        throw ShapeMismatch("evaluate_formula: reference evaluator accepts at most " +
                            std::to_string(kMaxOracleNodes) + " nodes");
    if (x.rows != s_dense.rows) throw ShapeMismatch("evaluate_formula: filter/feature row mismatch");
    return eval(f, p, s_dense, x);
}

DenseMatrix matrix_power_aggregate(const DenseMatrix& s_dense, const DenseMatrix& x, int k) {
    if (k < 0) throw ShapeMismatch("matrix_power_aggregate: negative power");
    if (s_dense.rows != s_dense.cols || s_dense.cols != x.rows)
        throw ShapeMismatch("matrix_power_aggregate: incompatible shapes");
    DenseMatrix acc = x;
    for (int i = 0; i < k; ++i) acc = matmul(s_dense, acc);
    return acc;
}

}  // namespace lcgnn::oracle
