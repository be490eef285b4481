#pragma once

#include "vilab/scalar.hpp"

#include <map>
#include <string>
#include <vector>

namespace vilab {

using StateId = int;   // states are 1-based: 1..n
using ActionId = int;  // nonnegative action identifiers

/**
 * Finite discounted MDP. States are 1..n; each state has a nonempty ordered
 * action list; transitions are stored sparsely per (x, a). All scalars
 * (discount, probabilities, rewards) must live on `backend`.
 *
 * Instances are treated as immutable once built; all operations below are
 * pure functions.
 */
struct Mdp {
    int n = 0;
    Scalar discount;
    std::vector<std::vector<ActionId>> action_sets;        // action_sets[x-1] = A(x)
    // transitions[{x,a}] = ordered successor map y -> p(y|x,a)
    std::map<std::pair<StateId, ActionId>, std::map<StateId, Scalar>> transitions;
    std::map<std::pair<StateId, ActionId>, Scalar> rewards; // rewards[{x,a}] = r(x,a)
    Backend backend;

    const std::vector<ActionId>& actions(StateId x) const { return action_sets.at(x - 1); }
    /// Total number of state-action pairs, sum over x of |A(x)|.
    long total_state_action_pairs() const;
};

struct Policy {
    std::vector<ActionId> choice; // choice[x-1] = φ(x)

    ActionId at(StateId x) const { return choice.at(x - 1); }
    bool operator==(const Policy&) const = default;
};

struct ValueFunction {
    std::vector<Scalar> values; // values[x-1] = v(x)

    const Scalar& at(StateId x) const { return values.at(x - 1); }
    bool operator==(const ValueFunction& rhs) const;

    static ValueFunction zeros(int n, const Backend& backend);
};

struct Violation {
    enum class Kind {
        BadSize,          // n < 1 or mis-sized containers
        DiscountRange,    // β outside (0,1) or wrong backend
        EmptyActionSet,
        DuplicateEntry,   // repeated action id / transition row / reward row
        BadReference,     // state or action id outside the model
        ProbabilityRange, // p < 0
        RowSum,           // Σ_y p(y|x,a) differs from 1 beyond tolerance
        MissingTransitions,
        MissingReward,
        BackendMismatch,
    };
    Kind kind;
    std::string location; // e.g. "(x=1, a=0)", "state 2", "discount"
    std::string message;
};

std::string violation_kind_name(Violation::Kind kind);

/// Returns every invariant violation (empty list iff the model is valid).
/// Row sums must hold exactly on exact backends, within 2^{2-P} on
/// BigFloat(P) and within 2^{-51} on hardware doubles.
std::vector<Violation> validate(const Mdp& mdp);

/// Throws std::invalid_argument with the full list if validate() is nonempty.
void require_valid(const Mdp& mdp);

/// q(x,a) = r(x,a) + β Σ_y p(y|x,a) v(y).
Scalar action_value(const Mdp& mdp, StateId x, ActionId a, const ValueFunction& v);

struct BackupResult {
    ValueFunction values;
    Policy greedy;
};

/// One Bellman backup; also returns the greedy policy attaining it (ties
/// resolved toward the action earliest in A(x)). Both outputs are computed
/// from the same action-value sweep, so they are always consistent.
BackupResult backup_with_greedy(const Mdp& mdp, const ValueFunction& v);

ValueFunction bellman_backup(const Mdp& mdp, const ValueFunction& v);
Policy greedy_policy(const Mdp& mdp, const ValueFunction& v);

/// Checks φ(x) ∈ A(x) for all states; throws std::invalid_argument otherwise.
void require_valid_policy(const Mdp& mdp, const Policy& policy);

/// Exact (or precision-bounded) solution of v = r_φ + β P_φ v by Gaussian
/// elimination with partial pivoting over the scalar field.
ValueFunction evaluate_policy(const Mdp& mdp, const Policy& policy);

enum class Order { Less, Equal, Greater };

/// Per-state ordering of evaluate_policy(φ1) against evaluate_policy(φ2).
std::vector<Order> compare_policies(const Mdp& mdp, const Policy& phi1, const Policy& phi2);

} // namespace vilab
