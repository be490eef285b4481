#pragma once

#include "vilab/mdp.hpp"
#include "vilab/mdp_json.hpp"

#include <vector>

namespace vilab {

enum class RewardVariant { Exp, Dyadic };

std::string reward_variant_name(RewardVariant variant);

/**
 * Parameters of the three-state adversarial family on which value iteration
 * needs exponentially many iterations (in the state-action count) to pick up
 * the optimal action, while policy iteration converges immediately.
 *
 * State 1 has actions 0..k; states 2 and 3 have only action 0. Action 0 at
 * state 1 moves to the rewarding self-loop state 3; actions i >= 1 move to
 * the absorbing zero-reward state 2 but pay
 *
 *     r(1, i) = (beta / (1 - beta)) * (1 - eps_i)
 *
 * up front, with eps_i = e^{-M_i} (Exp variant) or 2^{-M_i} (Dyadic
 * variant). The Dyadic variant exists because e^{-M_i} is irrational:
 * it keeps every quantity an exact rational while preserving the
 * iteration-count phenomenon (threshold rescaled by ln 2).
 */
struct FamilyParams {
    int k = 0;
    std::vector<long> M;        // strictly increasing, all >= 1, length k
    Scalar beta;                // exact rational in (0,1)
    RewardVariant variant = RewardVariant::Dyadic;
    Backend backend;            // Rational (Dyadic) or BigFloat/Double (Exp)
};

/// Throws std::invalid_argument on any parameter-invariant violation.
void check_params(const FamilyParams& params);

/// Builds the three-state instance; the result passes validate() cleanly.
Mdp build_family(const FamilyParams& params);

/// V_j of the value-iteration sequence started from V_0 = 0, in closed form:
/// V_j(2) = 0, V_j(3) = (1 - beta^j)/(1 - beta),
/// V_j(1) = max{ beta(1 - beta^{j-1})/(1 - beta), (beta/(1-beta))(1 - eps_k) }
/// for j >= 1, all evaluated under params.backend.
ValueFunction closed_form_values(const FamilyParams& params, long j);

/// Smallest j >= 1 at which greedy(V_{j-1}) picks action 0 at state 1 under
/// the lowest-index tie-break: the smallest j with beta^{j-1} <= eps_k.
/// Dyadic: exact rational binary search. Exp: candidate 1 + ceil(M_k/(-ln
/// beta)) from outward-rounded interval arithmetic, confirmed against the
/// defining comparison and nudged by one if the confirmation disagrees.
long predicted_switch_iteration(const FamilyParams& params);

/// Whether j strictly exceeds the family's analytic lower bound on the
/// switch iteration: M_k/(-ln beta) for exp rewards, rescaled to
/// M_k ln2/(-ln beta) for dyadic rewards. Decided exactly.
bool exceeds_switch_lower_bound(const FamilyParams& params, long j);

/// Precision sufficient for BigFloat runs of the Exp variant to sort the
/// competing action values correctly up to 2x the switch iteration:
/// P = ceil(M_k * log2(e)) + ceil(log2(j*)) + 64 guard bits.
/// Rejects the Dyadic variant (exact arithmetic needs no sizing).
mpfr_prec_t required_precision_bits(const FamilyParams& params);

/// Params for k = 1..k_max with M_i = ceil(e^{i+3}), Exp variant, BigFloat
/// backend sized by required_precision_bits.
std::vector<FamilyParams> exponential_family(int k_max, const Scalar& beta);

/// The family's optimal policy (action 0 everywhere).
Policy family_optimal_policy();
/// The all-zero policy with state 1 overridden to `a` (0 <= a <= k).
Policy family_policy_choosing(ActionId a);

/// {"k":int, "M":[int,...], "beta":scalar-string, "variant":"exp"|"dyadic",
///  "precision_bits":int?, "backend":"rational"|"bigfloat"|"double"?}
/// beta is always an exact rational string. The optional backend field
/// defaults to rational for dyadic and bigfloat for exp; an exp/bigfloat
/// params object without precision_bits is sized via required_precision_bits.
ordered_json family_params_to_json(const FamilyParams& params);
FamilyParams family_params_from_json(const ordered_json& j);

} // namespace vilab
