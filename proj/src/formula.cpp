#include "lcgnn/formula.hpp"

#include <string>

#include "lcgnn/errors.hpp"

namespace lcgnn {

namespace {

Formula make(Formula::Node node) {
    return Formula(std::make_shared<const Formula::Node>(std::move(node)));
}

}  // namespace

Formula feature_var() { return make({FeatureVar{}}); }

Formula filter_power(int power, Formula child) {
    if (power < 1) throw ConfigError("filter power: must be at least 1");
    // Canonical form: carry the filter down the weight chain (the product is
    // associative) and merge juxtaposed filter powers.
    if (const auto* w = std::get_if<WeightMulNode>(&child.node().v))
        return weight_mul(w->index, filter_power(power, w->child));
    if (const auto* fp = std::get_if<FilterPowerNode>(&child.node().v))
        return make({FilterPowerNode{power + fp->power, fp->child}});
    return make({FilterPowerNode{power, std::move(child)}});
}

Formula weight_mul(int index, Formula child) {
    if (index < 0) throw ConfigError("weight index: must be non-negative");
    return make({WeightMulNode{index, std::move(child)}});
}

Formula activation(ActivationKind kind, Formula child) {
    return make({ActivationNode{kind, std::move(child)}});
}

Formula combine(CombineKind kind, std::vector<Formula> children) {
    if (children.empty()) throw ConfigError("combine: needs at least one branch");
    return make({CombineNode{kind, std::move(children)}});
}

Formula attn_sum(std::vector<Formula> children) {
    if (children.empty()) throw ConfigError("attention sum: needs at least one term");
    return make({AttnSumNode{std::move(children)}});
}

Formula softmax(Formula child) { return make({SoftmaxNode{std::move(child)}}); }

void Dims::validate() const {
    if (feature < 1) throw ConfigError("dims.feature: must be positive");
    if (hidden < 1) throw ConfigError("dims.hidden: must be positive");
    if (classes < 1) throw ConfigError("dims.classes: must be positive");
}

void ModelSpec::validate() const {
    if (conv_layers < 1) throw ConfigError("conv_layers: must be at least 1");
    if (family == ModelFamily::gprgnn && mlp_layers < 1)
        throw ConfigError("mlp_layers: must be at least 1");
    dims.validate();
}

Formula build_formula(const ModelSpec& spec) {
    spec.validate();
    const int K = spec.conv_layers;
    switch (spec.family) {
        case ModelFamily::gcn: {
            Formula t = feature_var();
            for (int k = 1; k <= K; ++k) {
                t = weight_mul(k, filter_power(1, std::move(t)));
                if (k < K) t = activation(spec.activation, std::move(t));
            }
            return softmax(std::move(t));
        }
        case ModelFamily::sgc:
            // The reparameterized single weight renders as the bare W.
            return softmax(weight_mul(0, filter_power(K, feature_var())));
        case ModelFamily::jknet: {
            std::vector<Formula> branches;
            Formula prev = weight_mul(1, filter_power(1, feature_var()));
            branches.push_back(prev);
            for (int k = 2; k <= K; ++k) {
                prev = weight_mul(k, filter_power(1, activation(spec.activation, prev)));
                branches.push_back(prev);
            }
            return softmax(combine(spec.combine, std::move(branches)));
        }
        case ModelFamily::gprgnn: {
            const int T = spec.mlp_layers;
            Formula mlp = feature_var();
            for (int t = 1; t <= T; ++t) {
                mlp = weight_mul(t, std::move(mlp));
                if (t < T) mlp = activation(spec.activation, std::move(mlp));
            }
            std::vector<Formula> terms;
            terms.push_back(mlp);  // hop 0 consumes the bare features
            for (int k = 1; k <= K; ++k) terms.push_back(filter_power(k, mlp));
            return softmax(attn_sum(std::move(terms)));
        }
    }
    throw ConfigError("family: unsupported model family");
}

namespace {

void render_into(const Formula& f, std::string& out) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, FeatureVar>) {
                out += "X";
            } else if constexpr (std::is_same_v<T, FilterPowerNode>) {
                out += "S^";
                out += std::to_string(node.power);
                out += "·";
                render_into(node.child, out);
            } else if constexpr (std::is_same_v<T, WeightMulNode>) {
                render_into(node.child, out);
                out += "·W";
                if (node.index > 0) {
                    out += "_";
                    out += std::to_string(node.index);
                }
            } else if constexpr (std::is_same_v<T, ActivationNode>) {
                out += node.kind == ActivationKind::relu ? "σ(" : "id(";
                render_into(node.child, out);
                out += ")";
            } else if constexpr (std::is_same_v<T, CombineNode>) {
                out += node.kind == CombineKind::concat ? "COMB_concat[" : "COMB_max[";
                for (std::size_t i = 0; i < node.children.size(); ++i) {
                    if (i > 0) out += ", ";
                    render_into(node.children[i], out);
                }
                out += "]";
            } else if constexpr (std::is_same_v<T, AttnSumNode>) {
                out += "Σγ[";
                for (std::size_t i = 0; i < node.children.size(); ++i) {
                    if (i > 0) out += ", ";
                    render_into(node.children[i], out);
                }
                out += "]";
            } else if constexpr (std::is_same_v<T, SoftmaxNode>) {
                out += "softmax(";
                render_into(node.child, out);
                out += ")";
            }
        },
        f.node().v);
}

}  // namespace

std::string render_formula(const Formula& f) {
    std::string out;
    render_into(f, out);
    return out;
}

int count_redexes(const Formula& f) {
    return std::visit(
        [](const auto& node) -> int {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, FeatureVar>) {
                return 0;
            } else if constexpr (std::is_same_v<T, FilterPowerNode>) {
                int self = std::holds_alternative<ActivationNode>(node.child.node().v) ? 1 : 0;
                return self + count_redexes(node.child);
            } else if constexpr (std::is_same_v<T, CombineNode> || std::is_same_v<T, AttnSumNode>) {
                int total = 0;
                for (const Formula& c : node.children) total += count_redexes(c);
                return total;
            } else {
                return count_redexes(node.child);
            }
        },
        f.node().v);
}

bool operator==(const Formula& a, const Formula& b) {
    if (a.ptr() == b.ptr()) return true;
    if (a.node().v.index() != b.node().v.index()) return false;
    return std::visit(
        [&b](const auto& na) -> bool {
            using T = std::decay_t<decltype(na)>;
            const auto& nb = std::get<T>(b.node().v);
            if constexpr (std::is_same_v<T, FeatureVar>) {
                return true;
            } else if constexpr (std::is_same_v<T, FilterPowerNode>) {
                return na.power == nb.power && na.child == nb.child;
            } else if constexpr (std::is_same_v<T, WeightMulNode>) {
                return na.index == nb.index && na.child == nb.child;
            } else if constexpr (std::is_same_v<T, ActivationNode>) {
                return na.kind == nb.kind && na.child == nb.child;
            } else if constexpr (std::is_same_v<T, CombineNode>) {
                if (na.kind != nb.kind || na.children.size() != nb.children.size()) return false;
                for (std::size_t i = 0; i < na.children.size(); ++i)
                    if (!(na.children[i] == nb.children[i])) return false;
                return true;
            } else if constexpr (std::is_same_v<T, AttnSumNode>) {
                if (na.children.size() != nb.children.size()) return false;
                for (std::size_t i = 0; i < na.children.size(); ++i)
                    if (!(na.children[i] == nb.children[i])) return false;
                return true;
            } else {
                return na.child == nb.child;
            }
        },
        a.node().v);
}

const char* to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::gcn: return "gcn";
        case ModelFamily::sgc: return "sgc";
        case ModelFamily::jknet: return "jknet";
        case ModelFamily::gprgnn: return "gprgnn";
    }
    return "?";
}

const char* to_string(CombineKind k) { return k == CombineKind::concat ? "concat" : "max"; }

const char* to_string(ActivationKind k) { return k == ActivationKind::relu ? "relu" : "identity"; }

}  // namespace lcgnn
