#include "lcgnn/rewrite.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <stdexcept>

namespace lcgnn {

bool PlanSpec::contains(int k) const {
    return std::binary_search(powers.begin(), powers.end(), k);
}

int PlanSpec::max_power() const { return powers.empty() ? 0 : powers.back(); }

namespace {

/// Pre-order search for the first (outermost-leftmost) redex; returns the
/// subtree with that single site rewritten, or nothing when the subtree is
/// already in normal form.
std::optional<Formula> rewrite_first(const Formula& f) {
    return std::visit(
        [&](const auto& node) -> std::optional<Formula> {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, FeatureVar>) {
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, FilterPowerNode>) {
                if (const auto* act = std::get_if<ActivationNode>(&node.child.node().v)) {
                    // S^j·act(t) -> act(S^j·t); the constructor carries S^j
                    // past weight applications and merges filter powers.
                    return activation(act->kind, filter_power(node.power, act->child));
                }
                if (auto r = rewrite_first(node.child)) return filter_power(node.power, *r);
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, WeightMulNode>) {
                if (auto r = rewrite_first(node.child)) return weight_mul(node.index, *r);
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, ActivationNode>) {
                if (auto r = rewrite_first(node.child)) return activation(node.kind, *r);
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, CombineNode>) {
                for (std::size_t i = 0; i < node.children.size(); ++i) {
                    if (auto r = rewrite_first(node.children[i])) {
                        std::vector<Formula> children = node.children;
                        children[i] = *r;
                        return combine(node.kind, std::move(children));
                    }
                }
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, AttnSumNode>) {
                for (std::size_t i = 0; i < node.children.size(); ++i) {
                    if (auto r = rewrite_first(node.children[i])) {
                        std::vector<Formula> children = node.children;
                        children[i] = *r;
                        return attn_sum(std::move(children));
                    }
                }
                return std::nullopt;
            } else {
                if (auto r = rewrite_first(node.child)) return softmax(*r);
                return std::nullopt;
            }
        },
        f.node().v);
}

void count_nodes(const Formula& f, int& activations, int& filters) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, FeatureVar>) {
            } else if constexpr (std::is_same_v<T, FilterPowerNode>) {
                ++filters;
                count_nodes(node.child, activations, filters);
            } else if constexpr (std::is_same_v<T, ActivationNode>) {
                ++activations;
                count_nodes(node.child, activations, filters);
            } else if constexpr (std::is_same_v<T, CombineNode> || std::is_same_v<T, AttnSumNode>) {
                for (const Formula& c : node.children) count_nodes(c, activations, filters);
            } else {
                count_nodes(node.child, activations, filters);
            }
        },
        f.node().v);
}

/// Accumulated filter power reaching each feature leaf.
void collect_powers(const Formula& f, int carried, std::set<int>& out) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, FeatureVar>) {
                out.insert(carried);
            } else if constexpr (std::is_same_v<T, FilterPowerNode>) {
                collect_powers(node.child, carried + node.power, out);
            } else if constexpr (std::is_same_v<T, CombineNode> || std::is_same_v<T, AttnSumNode>) {
                for (const Formula& c : node.children) collect_powers(c, carried, out);
            } else {
                collect_powers(node.child, carried, out);
            }
        },
        f.node().v);
}

}  // namespace

Formula apply_f_lc(const Formula& f) {
    if (auto r = rewrite_first(f)) return *r;
    return f;
}

LcTransformResult lc_transform(const Formula& f) {
    int activations = 0, filters = 0;
    count_nodes(f, activations, filters);
    const int max_steps = activations * filters + 1;

    LcTransformResult result{f, {}, {}};
    Formula current = f;
    for (int step = 0; step < max_steps; ++step) {
        auto rewritten = rewrite_first(current);
        if (!rewritten) {
            std::set<int> powers;
            collect_powers(current, 0, powers);
            result.formula = current;
            result.plan.powers.assign(powers.begin(), powers.end());
            return result;
        }
        current = *rewritten;
        result.steps.push_back(current);
    }
    // Each application strictly shrinks the filters-above-activations
    // measure, so the bound cannot be hit.
    throw std::logic_error("lc_transform: rewrite did not reach a normal form within its bound");
}

bool validate_lc(const Formula& f) {
    return std::visit(
        [](const auto& node) -> bool {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, FeatureVar>) {
                return true;
            } else if constexpr (std::is_same_v<T, FilterPowerNode>) {
                const auto& childv = node.child.node().v;
                if (std::holds_alternative<ActivationNode>(childv) ||
                    std::holds_alternative<WeightMulNode>(childv) ||
                    std::holds_alternative<CombineNode>(childv) ||
                    std::holds_alternative<AttnSumNode>(childv))
                    return false;
                return validate_lc(node.child);
            } else if constexpr (std::is_same_v<T, CombineNode> || std::is_same_v<T, AttnSumNode>) {
                for (const Formula& c : node.children)
                    if (!validate_lc(c)) return false;
                return true;
            } else {
                return validate_lc(node.child);
            }
        },
        f.node().v);
}

}  // namespace lcgnn
