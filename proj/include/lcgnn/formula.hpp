#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "lcgnn/dense.hpp"

namespace lcgnn {

enum class ModelFamily { gcn, sgc, jknet, gprgnn };
enum class CombineKind { concat, max };
enum class ActivationKind { relu, identity };

class Formula;

struct FeatureVar {};

/// Immutable expression tree over {X, S^k·(.), (.)·W_i, activation, COMB,
/// attention-weighted sum, softmax}. Construction goes through the factory
/// functions, which maintain two canonical forms:
///   - juxtaposed filter powers merge: S^i applied to S^j·t becomes S^(i+j)·t
///   - a filter never wraps a weight application: S^k·(t·W_i) is stored as
///     (S^k·t)·W_i, which is the same product reassociated
/// Trees are shared via reference counting and safe to traverse concurrently.
class Formula {
public:
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

    explicit Formula(NodePtr node) : node_(std::move(node)) {}

    const Node& node() const { return *node_; }
    const NodePtr& ptr() const { return node_; }

    friend bool operator==(const Formula& a, const Formula& b);

private:
    NodePtr node_;
};

struct FilterPowerNode {
    int power;
    Formula child;
};
struct WeightMulNode {
    int index;  // index 0 renders as the bare symbol W
    Formula child;
};
struct ActivationNode {
    ActivationKind kind;
    Formula child;
};
struct CombineNode {
    CombineKind kind;
    std::vector<Formula> children;
};
struct AttnSumNode {
    std::vector<Formula> children;  // child k carries implicit coefficient index k
};
struct SoftmaxNode {
    Formula child;
};

struct Formula::Node {
    std::variant<FeatureVar, FilterPowerNode, WeightMulNode, ActivationNode, CombineNode,
                 AttnSumNode, SoftmaxNode>
        v;
};

Formula feature_var();
/// Canonicalizing constructor; see Formula. Requires power >= 1.
Formula filter_power(int power, Formula child);
Formula weight_mul(int index, Formula child);
Formula activation(ActivationKind kind, Formula child);
Formula combine(CombineKind kind, std::vector<Formula> children);
Formula attn_sum(std::vector<Formula> children);
Formula softmax(Formula child);

/// Feature, hidden, and output widths. These are node-count independent.
struct Dims {
    Index feature = 1;  // d
    Index hidden = 1;   // h
    Index classes = 1;  // y

    void validate() const;
};

struct ModelSpec {
    ModelFamily family = ModelFamily::gcn;
    int conv_layers = 2;                        // K
    int mlp_layers = 2;                         // T, gprgnn only
    CombineKind combine = CombineKind::concat;  // jknet only
    ActivationKind activation = ActivationKind::relu;
    Dims dims;

    void validate() const;
};

/// Builds the canonical formulation of a model family:
///   gcn     softmax(S·act(...act(S·X·W_1)...)·W_K)
///   sgc     softmax(S^K·X·W)
///   jknet   softmax(COMB over k of S·act(...)·W_k) with weights shared by
///           every branch
///   gprgnn  softmax of the attention-weighted sum over k = 0..K of
///           S^k·(act(...act(X·W_1)...)·W_T)
Formula build_formula(const ModelSpec& spec);

/// Deterministic canonical rendering. On canonical trees this is injective:
/// two formulas render to the same string iff they are structurally equal.
/// Grammar: X | S^k·t | t·W_i | σ(t) | id(t) | COMB_concat[...] |
/// COMB_max[...] | Σγ[...] | softmax(t).
std::string render_formula(const Formula& f);

/// Number of filter applications that sit directly on an activation node.
int count_redexes(const Formula& f);

bool operator==(const Formula& a, const Formula& b);
inline bool operator!=(const Formula& a, const Formula& b) { return !(a == b); }

const char* to_string(ModelFamily f);
const char* to_string(CombineKind k);
const char* to_string(ActivationKind k);

}  // namespace lcgnn
