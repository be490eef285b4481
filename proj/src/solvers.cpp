#include "vilab/solvers.hpp"

#include "vilab/mdp_json.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace vilab {

std::string stop_reason_name(StopReason reason) {
    switch (reason) {
    case StopReason::PolicyTargetReached: return "PolicyTargetReached";
    case StopReason::SpanTolerance: return "SpanTolerance";
    case StopReason::MaxIterations: return "MaxIterations";
    }
    return "unknown";
}

namespace {

void check_rules(const Mdp& mdp, const StopRules& rules) {
    if (!rules.any()) {
        throw std::invalid_argument("value_iteration requires at least one stop rule");
    }
    if (rules.target) {
        require_valid_policy(mdp, rules.target->policy);
        if (rules.target->patience < 1) {
            throw std::invalid_argument("target-policy patience must be >= 1");
        }
    }
    if (rules.span_epsilon) {
        if (!(rules.span_epsilon->backend() == mdp.backend)) {
            throw std::invalid_argument("span epsilon backend " +
                                        rules.span_epsilon->backend().describe() +
                                        " differs from model backend " + mdp.backend.describe());
        }
        if (!(rules.span_epsilon->sign() > 0)) {
            throw std::invalid_argument("span epsilon must be > 0");
        }
    }
    if (rules.max_iterations && *rules.max_iterations < 1) {
        throw std::invalid_argument("max iterations must be >= 1");
    }
}

} // namespace

VITrace value_iteration(const Mdp& mdp, const ValueFunction& v0, const StopRules& rules,
                        bool trace_values) {
    check_rules(mdp, rules);

    VITrace trace;
    VITrace::Record initial;
    initial.j = 0;
    if (trace_values) {
        initial.v = v0;
    }
    trace.iterations.push_back(std::move(initial));

    ValueFunction v = v0;
    long streak = 0;
    long j = 0;
    while (true) {
        ++j;
        BackupResult step = backup_with_greedy(mdp, v);

        // Residual and difference span in one sweep over V_j - V_{j-1}.
        Scalar diff0 = step.values.values.front() - v.values.front();
        Scalar diff_min = diff0;
        Scalar diff_max = std::move(diff0);
        for (std::size_t i = 1; i < v.values.size(); ++i) {
            Scalar diff = step.values.values[i] - v.values[i];
            if (diff < diff_min) {
                diff_min = diff;
            }
            if (diff > diff_max) {
                diff_max = std::move(diff);
            }
        }
        Scalar abs_min = abs(diff_min);
        Scalar abs_max = abs(diff_max);
        Scalar residual = abs_min > abs_max ? abs_min : abs_max;

        VITrace::Record rec;
        rec.j = j;
        if (trace_values) {
            rec.v = step.values;
        }
        rec.greedy = step.greedy;
        rec.residual = residual;
        trace.iterations.push_back(std::move(rec));

        if (rules.target) {
            if (step.greedy == rules.target->policy) {
                ++streak;
                if (streak >= rules.target->patience) {
                    trace.stop_reason = StopReason::PolicyTargetReached;
                    trace.switch_iteration = j - rules.target->patience + 1;
                    break;
                }
            } else {
                streak = 0;
            }
        }
        if (rules.span_epsilon && (diff_max - diff_min) < *rules.span_epsilon) {
            trace.stop_reason = StopReason::SpanTolerance;
            break;
        }
        if (rules.max_iterations && j >= *rules.max_iterations) {
            trace.stop_reason = StopReason::MaxIterations;
            break;
        }
        v = std::move(step.values);
    }
    return trace;
}

PIResult policy_iteration(const Mdp& mdp, const Policy& phi0) {
    require_valid_policy(mdp, phi0);
    PIResult result;
    Policy current = phi0;
    while (true) {
        ValueFunction v = evaluate_policy(mdp, current);
        Policy next;
        next.choice.reserve(static_cast<std::size_t>(mdp.n));
        for (StateId x = 1; x <= mdp.n; ++x) {
            ActionId incumbent = current.at(x);
            Scalar best = action_value(mdp, x, incumbent, v);
            ActionId best_action = incumbent;
            // Strict improvement only, scanning A(x) in order: the incumbent
            // survives ties, and among strictly better actions the lowest
            // index wins.
            for (ActionId a : mdp.actions(x)) {
                if (a == incumbent) {
                    continue;
                }
                Scalar q = action_value(mdp, x, a, v);
                if (q > best) {
                    best = std::move(q);
                    best_action = a;
                }
            }
            next.choice.push_back(best_action);
        }
        ++result.iterations;
        result.history.push_back(next);
        if (next == current) {
            result.policy = std::move(next);
            return result;
        }
        current = std::move(next);
    }
}

std::optional<long> measure_switch_iteration(const Mdp& mdp, StateId state,
                                             ActionId target_action, long max_iter) {
    if (state < 1 || state > mdp.n) {
        throw std::invalid_argument("state " + std::to_string(state) + " outside 1.." +
                                    std::to_string(mdp.n));
    }
    const auto& as = mdp.actions(state);
    if (std::find(as.begin(), as.end(), target_action) == as.end()) {
        throw std::invalid_argument("target action " + std::to_string(target_action) +
                                    " not in A(" + std::to_string(state) + ")");
    }
    if (max_iter < 1) {
        throw std::invalid_argument("max_iter must be >= 1");
    }
    ValueFunction v = ValueFunction::zeros(mdp.n, mdp.backend);
    for (long j = 1; j <= max_iter; ++j) {
        BackupResult step = backup_with_greedy(mdp, v);
        if (step.greedy.at(state) == target_action) {
            return j;
        }
        v = std::move(step.values);
    }
    return std::nullopt;
}

void write_trace_jsonl(std::ostream& out, const VITrace& trace) {
    for (const auto& rec : trace.iterations) {
        ordered_json line;
        line["j"] = rec.j;
        if (rec.greedy) {
            line["greedy"] = policy_to_json(*rec.greedy);
        }
        if (rec.residual) {
            line["residual"] = rec.residual->str();
        }
        if (rec.v) {
            line["v"] = value_function_to_json(*rec.v);
        }
        out << line.dump() << "\n";
    }
    ordered_json final_line;
    final_line["stop_reason"] = stop_reason_name(trace.stop_reason);
    final_line["iterations"] = trace.total_iterations();
    out << final_line.dump() << "\n";
}

} // namespace vilab
