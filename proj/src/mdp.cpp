#include "vilab/mdp.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace vilab {

namespace {

std::string pair_location(StateId x, ActionId a) {
    return "(x=" + std::to_string(x) + ", a=" + std::to_string(a) + ")";
}

// Largest tolerated |row sum - 1| for the model's backend.
Scalar row_sum_tolerance(const Backend& backend) {
    switch (backend.kind) {
    case BackendKind::Rational:
        return Scalar::zero(backend);
    case BackendKind::BigFloat:
        if (backend.precision_bits >= 3) {
            return pow(Scalar::rational(1, 2).converted_to(backend),
                       static_cast<unsigned long>(backend.precision_bits - 2));
        }
        return Scalar::one(backend); // degenerate precision; accept anything near 1
    case BackendKind::Double:
        return pow(Scalar::of_double(0.5), 51);
    }
    throw std::invalid_argument("unknown backend");
}

} // namespace

long Mdp::total_state_action_pairs() const {
    long total = 0;
    for (const auto& as : action_sets) {
        total += static_cast<long>(as.size());
    }
    return total;
}

bool ValueFunction::operator==(const ValueFunction& rhs) const {
    if (values.size() != rhs.values.size()) {
        return false;
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] != rhs.values[i]) {
            return false;
        }
    }
    return true;
}

ValueFunction ValueFunction::zeros(int n, const Backend& backend) {
    ValueFunction v;
    v.values.assign(static_cast<std::size_t>(n), Scalar::zero(backend));
    return v;
}

std::string violation_kind_name(Violation::Kind kind) {
    switch (kind) {
    case Violation::Kind::BadSize: return "bad-size";
    case Violation::Kind::DiscountRange: return "discount-range";
    case Violation::Kind::EmptyActionSet: return "empty-action-set";
    case Violation::Kind::DuplicateEntry: return "duplicate-entry";
    case Violation::Kind::BadReference: return "bad-reference";
    case Violation::Kind::ProbabilityRange: return "probability-range";
    case Violation::Kind::RowSum: return "row-sum";
    case Violation::Kind::MissingTransitions: return "missing-transitions";
    case Violation::Kind::MissingReward: return "missing-reward";
    case Violation::Kind::BackendMismatch: return "backend-mismatch";
    }
    return "unknown";
}

std::vector<Violation> validate(const Mdp& mdp) {
    std::vector<Violation> out;
    auto add = [&](Violation::Kind kind, std::string location, std::string message) {
        out.push_back({kind, std::move(location), std::move(message)});
    };

    if (mdp.n < 1) {
        add(Violation::Kind::BadSize, "n", "state count must be >= 1, got " + std::to_string(mdp.n));
        return out; // nothing else is meaningful
    }

    if (!(mdp.discount.backend() == mdp.backend)) {
        add(Violation::Kind::BackendMismatch, "discount",
            "discount backend " + mdp.discount.backend().describe() + " differs from model backend " +
                mdp.backend.describe());
    } else {
        Scalar zero = Scalar::zero(mdp.backend);
        Scalar one = Scalar::one(mdp.backend);
        if (!(mdp.discount > zero && mdp.discount < one)) {
            add(Violation::Kind::DiscountRange, "discount",
                "discount must satisfy 0 < beta < 1, got " + mdp.discount.str());
        }
    }

    if (static_cast<int>(mdp.action_sets.size()) != mdp.n) {
        add(Violation::Kind::BadSize, "actions",
            "expected " + std::to_string(mdp.n) + " action sets, got " +
                std::to_string(mdp.action_sets.size()));
        return out; // per-state checks below would index out of range
    }

    std::set<std::pair<StateId, ActionId>> declared;
    for (StateId x = 1; x <= mdp.n; ++x) {
        const auto& as = mdp.actions(x);
        if (as.empty()) {
            add(Violation::Kind::EmptyActionSet, "state " + std::to_string(x),
                "action set A(" + std::to_string(x) + ") is empty");
            continue;
        }
        std::set<ActionId> seen;
        for (ActionId a : as) {
            if (a < 0) {
                add(Violation::Kind::BadReference, "state " + std::to_string(x),
                    "negative action id " + std::to_string(a));
                continue;
            }
            if (!seen.insert(a).second) {
                add(Violation::Kind::DuplicateEntry, "state " + std::to_string(x),
                    "action " + std::to_string(a) + " listed twice in A(" + std::to_string(x) + ")");
                continue;
            }
            declared.insert({x, a});
        }
    }

    Scalar tolerance = row_sum_tolerance(mdp.backend);
    for (const auto& [key, row] : mdp.transitions) {
        const auto [x, a] = key;
        std::string loc = pair_location(x, a);
        if (!declared.count(key)) {
            add(Violation::Kind::BadReference, loc,
                "transitions declared for a pair outside the model");
            continue;
        }
        if (row.empty()) {
            add(Violation::Kind::MissingTransitions, loc, "empty transition row");
            continue;
        }
        bool row_ok = true;
        for (const auto& [y, p] : row) {
            if (y < 1 || y > mdp.n) {
                add(Violation::Kind::BadReference, loc,
                    "successor state " + std::to_string(y) + " outside 1.." + std::to_string(mdp.n));
                row_ok = false;
                continue;
            }
            if (!(p.backend() == mdp.backend)) {
                add(Violation::Kind::BackendMismatch, loc,
                    "p(" + std::to_string(y) + "|x,a) backend " + p.backend().describe() +
                        " differs from model backend " + mdp.backend.describe());
                row_ok = false;
                continue;
            }
            if (p.sign() < 0) {
                add(Violation::Kind::ProbabilityRange, loc,
                    "p(" + std::to_string(y) + "|x,a) = " + p.str() + " is negative");
                row_ok = false;
            }
        }
        if (!row_ok) {
            continue; // a row-sum over mixed/invalid entries would be noise
        }
        Scalar sum = Scalar::zero(mdp.backend);
        for (const auto& [y, p] : row) {
            sum = sum + p;
        }
        Scalar err = abs(sum - Scalar::one(mdp.backend));
        if (err > tolerance) {
            add(Violation::Kind::RowSum, loc, "row sum " + sum.str() + " differs from 1");
        }
    }

    for (const auto& key : declared) {
        if (!mdp.transitions.count(key)) {
            add(Violation::Kind::MissingTransitions, pair_location(key.first, key.second),
                "no transition row for a declared state-action pair");
        }
        if (!mdp.rewards.count(key)) {
            add(Violation::Kind::MissingReward, pair_location(key.first, key.second),
                "no reward for a declared state-action pair");
        }
    }

    for (const auto& [key, r] : mdp.rewards) {
        std::string loc = pair_location(key.first, key.second);
        if (!declared.count(key)) {
            add(Violation::Kind::BadReference, loc, "reward declared for a pair outside the model");
            continue;
        }
        if (!(r.backend() == mdp.backend)) {
            add(Violation::Kind::BackendMismatch, loc,
                "reward backend " + r.backend().describe() + " differs from model backend " +
                    mdp.backend.describe());
        }
    }

    return out;
}

void require_valid(const Mdp& mdp) {
    std::vector<Violation> violations = validate(mdp);
    if (violations.empty()) {
        return;
    }
    std::ostringstream oss;
    oss << "invalid MDP (" << violations.size() << " violation(s)):";
    for (const auto& v : violations) {
        oss << "\n  [" << violation_kind_name(v.kind) << "] " << v.location << ": " << v.message;
    }
    throw std::invalid_argument(oss.str());
}

namespace {

void require_value_shape(const Mdp& mdp, const ValueFunction& v) {
    if (static_cast<int>(v.values.size()) != mdp.n) {
        throw std::invalid_argument("value function has " + std::to_string(v.values.size()) +
                                    " entries, model has " + std::to_string(mdp.n) + " states");
    }
    for (const Scalar& s : v.values) {
        if (!(s.backend() == mdp.backend)) {
            throw std::invalid_argument("value-function backend " + s.backend().describe() +
                                        " differs from model backend " + mdp.backend.describe());
        }
    }
}

} // namespace

Scalar action_value(const Mdp& mdp, StateId x, ActionId a, const ValueFunction& v) {
    auto it = mdp.transitions.find({x, a});
    auto rit = mdp.rewards.find({x, a});
    if (it == mdp.transitions.end() || rit == mdp.rewards.end()) {
        throw std::invalid_argument("no data for state-action pair " + pair_location(x, a));
    }
    Scalar expect = Scalar::zero(mdp.backend);
    for (const auto& [y, p] : it->second) {
        expect = expect + p * v.at(y);
    }
    return rit->second + mdp.discount * expect;
}

BackupResult backup_with_greedy(const Mdp& mdp, const ValueFunction& v) {
    require_value_shape(mdp, v);
    BackupResult result;
    result.values.values.reserve(static_cast<std::size_t>(mdp.n));
    result.greedy.choice.reserve(static_cast<std::size_t>(mdp.n));
    for (StateId x = 1; x <= mdp.n; ++x) {
        const auto& as = mdp.actions(x);
        ActionId best_action = as.front();
        Scalar best = action_value(mdp, x, best_action, v);
        for (std::size_t i = 1; i < as.size(); ++i) {
            Scalar q = action_value(mdp, x, as[i], v);
            if (q > best) { // ties keep the earlier action in A(x)
                best = std::move(q);
                best_action = as[i];
            }
        }
        result.values.values.push_back(std::move(best));
        result.greedy.choice.push_back(best_action);
    }
    return result;
}

ValueFunction bellman_backup(const Mdp& mdp, const ValueFunction& v) {
    return backup_with_greedy(mdp, v).values;
}

Policy greedy_policy(const Mdp& mdp, const ValueFunction& v) {
    return backup_with_greedy(mdp, v).greedy;
}

void require_valid_policy(const Mdp& mdp, const Policy& policy) {
    if (static_cast<int>(policy.choice.size()) != mdp.n) {
        throw std::invalid_argument("policy has " + std::to_string(policy.choice.size()) +
                                    " entries, model has " + std::to_string(mdp.n) + " states");
    }
    for (StateId x = 1; x <= mdp.n; ++x) {
        const auto& as = mdp.actions(x);
        if (std::find(as.begin(), as.end(), policy.at(x)) == as.end()) {
            throw std::invalid_argument("policy action " + std::to_string(policy.at(x)) +
                                        " not in A(" + std::to_string(x) + ")");
        }
    }
}

ValueFunction evaluate_policy(const Mdp& mdp, const Policy& policy) {
    require_valid_policy(mdp, policy);
    const int n = mdp.n;
    const Backend& be = mdp.backend;
    Scalar zero = Scalar::zero(be);
    Scalar one = Scalar::one(be);

    // Assemble A = I - beta * P_phi and b = r_phi.
    std::vector<std::vector<Scalar>> a(static_cast<std::size_t>(n),
                                       std::vector<Scalar>(static_cast<std::size_t>(n), zero));
    std::vector<Scalar> b(static_cast<std::size_t>(n), zero);
    for (StateId x = 1; x <= n; ++x) {
        a[x - 1][x - 1] = one;
        const auto& row = mdp.transitions.at({x, policy.at(x)});
        for (const auto& [y, p] : row) {
            a[x - 1][y - 1] = a[x - 1][y - 1] - mdp.discount * p;
        }
        b[x - 1] = mdp.rewards.at({x, policy.at(x)});
    }

    // Gaussian elimination with partial pivoting over the scalar field.
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        Scalar pivot_mag = abs(a[col][col]);
        for (int row = col + 1; row < n; ++row) {
            Scalar mag = abs(a[row][col]);
            if (mag > pivot_mag) {
                pivot = row;
                pivot_mag = std::move(mag);
            }
        }
        if (pivot_mag.is_zero()) {
            // Unreachable for a valid discounted model (strict diagonal dominance).
            throw std::logic_error("singular policy-evaluation system: internal inconsistency");
        }
        if (pivot != col) {
            std::swap(a[pivot], a[col]);
            std::swap(b[pivot], b[col]);
        }
        for (int row = col + 1; row < n; ++row) {
            if (a[row][col].is_zero()) {
                continue;
            }
            Scalar factor = a[row][col] / a[col][col];
            a[row][col] = zero;
            for (int j = col + 1; j < n; ++j) {
                a[row][j] = a[row][j] - factor * a[col][j];
            }
            b[row] = b[row] - factor * b[col];
        }
    }

    ValueFunction v = ValueFunction::zeros(n, be);
    for (int row = n - 1; row >= 0; --row) {
        Scalar acc = b[static_cast<std::size_t>(row)];
        for (int j = row + 1; j < n; ++j) {
            acc = acc - a[row][j] * v.values[static_cast<std::size_t>(j)];
        }
        v.values[static_cast<std::size_t>(row)] = acc / a[row][row];
    }
    return v;
}

std::vector<Order> compare_policies(const Mdp& mdp, const Policy& phi1, const Policy& phi2) {
    ValueFunction v1 = evaluate_policy(mdp, phi1);
    ValueFunction v2 = evaluate_policy(mdp, phi2);
    std::vector<Order> out;
    out.reserve(static_cast<std::size_t>(mdp.n));
    for (int i = 0; i < mdp.n; ++i) {
        int c = v1.values[static_cast<std::size_t>(i)].cmp(v2.values[static_cast<std::size_t>(i)]);
        out.push_back(c < 0 ? Order::Less : (c == 0 ? Order::Equal : Order::Greater));
    }
    return out;
}

} // namespace vilab
