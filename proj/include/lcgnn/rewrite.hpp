#pragma once

#include <vector>

#include "lcgnn/formula.hpp"

namespace lcgnn {

/// The set of filter powers k for which S^k·X must be precomputed; includes
/// 0 when the bare feature matrix is consumed directly.
struct PlanSpec {
    std::vector<int> powers;  // sorted ascending, unique, non-empty

    bool contains(int k) const;
    int max_power() const;
};

/// Rewrites exactly one redex, the outermost-leftmost filter application that
/// sits directly on an activation node: S^j·act(t) becomes act(S^j·t). The
/// canonicalizing constructors then carry S^j down the weight chain of t and
/// merge it with any filter power it lands on. Returns the input unchanged
/// when no redex exists.
Formula apply_f_lc(const Formula& f);

struct LcTransformResult {
    Formula formula;
    PlanSpec plan;
    /// Intermediate formulas, one per rewrite application (empty when the
    /// input was already in normal form).
    std::vector<Formula> steps;
};

/// Applies apply_f_lc to fixpoint. The result has no redexes and satisfies
/// validate_lc for every formula in the supported class (filters applied
/// within convolution chains). Terminates in at most
/// (#activation nodes) x (#filter nodes) applications.
LcTransformResult lc_transform(const Formula& f);

/// True iff no filter application has an activation, weight application,
/// combine, or attention-sum child, i.e. every filter touches the feature
/// chain directly.
bool validate_lc(const Formula& f);

}  // namespace lcgnn
