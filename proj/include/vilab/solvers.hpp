#pragma once

#include "vilab/mdp.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace vilab {

enum class StopReason { PolicyTargetReached, SpanTolerance, MaxIterations };

std::string stop_reason_name(StopReason reason);

/**
 * Stopping rules for value iteration; any subset may be active, the first
 * to fire wins. Checked in the order target-policy, span, max-iterations.
 */
struct StopRules {
    struct TargetPolicy {
        Policy policy;
        long patience = 1; // consecutive greedy hits required, >= 1
    };
    std::optional<TargetPolicy> target;
    std::optional<Scalar> span_epsilon; // fires when span(V_j - V_{j-1}) < epsilon
    std::optional<long> max_iterations; // fires after exactly N backups

    bool any() const { return target || span_epsilon || max_iterations; }
};

/**
 * Value-iteration trace. Record 0 is the initial V_0 (no greedy policy, no
 * residual); record j >= 1 carries the greedy policy phi^j = greedy(V_{j-1})
 * and the residual max_x |V_j(x) - V_{j-1}(x)|. Value vectors are retained
 * only when requested — exact rationals grow linearly in j, so a full trace
 * is quadratic storage.
 */
struct VITrace {
    struct Record {
        long j = 0;
        std::optional<ValueFunction> v;
        std::optional<Policy> greedy;   // present for j >= 1
        std::optional<Scalar> residual; // present for j >= 1
    };
    std::vector<Record> iterations;
    StopReason stop_reason = StopReason::MaxIterations;

    long total_iterations() const { return static_cast<long>(iterations.size()) - 1; }
    /// Earliest j whose greedy record equals `policy` and that starts the
    /// final run of consecutive hits; nullopt unless the target rule fired.
    std::optional<long> switch_iteration;
    const Record& last() const { return iterations.back(); }
};

VITrace value_iteration(const Mdp& mdp, const ValueFunction& v0, const StopRules& rules,
                        bool trace_values);

struct PIResult {
    Policy policy;
    long iterations = 0;           // evaluate+improve passes, incl. the confirming one
    std::vector<Policy> history;   // policy after each pass; history.front() == after pass 1
};

/// Howard policy iteration: evaluate, then greedily improve with ties broken
/// toward the incumbent action and then toward the lowest index; stops when a
/// pass leaves the policy unchanged.
PIResult policy_iteration(const Mdp& mdp, const Policy& phi0);

/// Runs VI from V_0 = 0 and returns the smallest j >= 1 such that the greedy
/// policy phi^j selects `target_action` at `state`; nullopt when max_iter
/// backups pass without a hit.
std::optional<long> measure_switch_iteration(const Mdp& mdp, StateId state,
                                             ActionId target_action, long max_iter);

/// JSON-lines export: one record per iteration, then a final
/// {"stop_reason":..., "iterations":...} line.
void write_trace_jsonl(std::ostream& out, const VITrace& trace);

} // namespace vilab
