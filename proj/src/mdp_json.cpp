#include "vilab/mdp_json.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace vilab {

namespace {

[[noreturn]] void fail(const std::string& context, const std::string& what) {
    throw std::runtime_error(context + ": " + what);
}

void reject_unknown_fields(const ordered_json& j, const std::set<std::string>& allowed,
                           const std::string& context) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key)) {
            fail(context, "unknown field '" + key + "'");
        }
    }
}

const ordered_json& require_field(const ordered_json& j, const std::string& key,
                                  const std::string& context) {
    auto it = j.find(key);
    if (it == j.end()) {
        fail(context, "missing field '" + key + "'");
    }
    return *it;
}

long require_integer(const ordered_json& j, const std::string& context) {
    if (!j.is_number_integer()) {
        fail(context, "expected an integer, got " + std::string(j.type_name()));
    }
    return j.get<long>();
}

std::string require_string(const ordered_json& j, const std::string& context) {
    if (!j.is_string()) {
        fail(context, "expected a string, got " + std::string(j.type_name()));
    }
    return j.get<std::string>();
}

Scalar require_scalar(const ordered_json& j, const Backend& backend, const std::string& context) {
    std::string text = require_string(j, context);
    try {
        return parse_scalar(text, backend);
    } catch (const std::exception& e) {
        fail(context, e.what());
    }
}

// Strict positive decimal integer used for object keys like "1".."n".
int parse_state_key(const std::string& key, const std::string& context) {
    if (key.empty() || key.size() > 9) {
        fail(context, "bad state key '" + key + "'");
    }
    int value = 0;
    for (char c : key) {
        if (c < '0' || c > '9') {
            fail(context, "bad state key '" + key + "'");
        }
        value = value * 10 + (c - '0');
    }
    if (value < 1) {
        fail(context, "bad state key '" + key + "'");
    }
    return value;
}

} // namespace

ordered_json backend_to_json(const Backend& backend) {
    ordered_json j;
    switch (backend.kind) {
    case BackendKind::Rational:
        j["kind"] = "rational";
        break;
    case BackendKind::BigFloat:
        j["kind"] = "bigfloat";
        j["precision_bits"] = static_cast<long>(backend.precision_bits);
        break;
    case BackendKind::Double:
        j["kind"] = "double";
        break;
    }
    return j;
}

Backend backend_from_json(const ordered_json& j, const std::string& context) {
    if (!j.is_object()) {
        fail(context, "expected an object");
    }
    reject_unknown_fields(j, {"kind", "precision_bits"}, context);
    std::string kind = require_string(require_field(j, "kind", context), context + ".kind");
    if (kind == "rational" || kind == "double") {
        if (j.contains("precision_bits")) {
            fail(context, "'precision_bits' is only valid for kind 'bigfloat'");
        }
        return kind == "rational" ? Backend::rational() : Backend::hardware_double();
    }
    if (kind == "bigfloat") {
        long p = require_integer(require_field(j, "precision_bits", context),
                                 context + ".precision_bits");
        if (p < MPFR_PREC_MIN || p > (1L << 24)) {
            fail(context + ".precision_bits", "precision out of range: " + std::to_string(p));
        }
        return Backend::bigfloat(static_cast<mpfr_prec_t>(p));
    }
    fail(context + ".kind", "unknown backend kind '" + kind + "'");
}

ordered_json mdp_to_json(const Mdp& mdp) {
    ordered_json j;
    j["n"] = mdp.n;
    j["discount"] = mdp.discount.str();
    ordered_json actions = ordered_json::object();
    for (StateId x = 1; x <= mdp.n; ++x) {
        actions[std::to_string(x)] = mdp.actions(x);
    }
    j["actions"] = std::move(actions);
    ordered_json transitions = ordered_json::array();
    for (const auto& [key, row] : mdp.transitions) {
        for (const auto& [y, p] : row) {
            transitions.push_back(
                {{"x", key.first}, {"a", key.second}, {"y", y}, {"p", p.str()}});
        }
    }
    j["transitions"] = std::move(transitions);
    ordered_json rewards = ordered_json::array();
    for (const auto& [key, r] : mdp.rewards) {
        rewards.push_back({{"x", key.first}, {"a", key.second}, {"r", r.str()}});
    }
    j["rewards"] = std::move(rewards);
    j["backend"] = backend_to_json(mdp.backend);
    return j;
}

Mdp mdp_from_json(const ordered_json& j) {
    const std::string ctx = "mdp";
    if (!j.is_object()) {
        fail(ctx, "expected an object");
    }
    reject_unknown_fields(j, {"n", "discount", "actions", "transitions", "rewards", "backend"},
                          ctx);

    Mdp mdp;
    mdp.backend = backend_from_json(require_field(j, "backend", ctx), ctx + ".backend");
    long n = require_integer(require_field(j, "n", ctx), ctx + ".n");
    if (n < 1 || n > 1000000) {
        fail(ctx + ".n", "state count out of range: " + std::to_string(n));
    }
    mdp.n = static_cast<int>(n);
    mdp.discount =
        require_scalar(require_field(j, "discount", ctx), mdp.backend, ctx + ".discount");

    const ordered_json& actions = require_field(j, "actions", ctx);
    if (!actions.is_object()) {
        fail(ctx + ".actions", "expected an object");
    }
    mdp.action_sets.assign(static_cast<std::size_t>(mdp.n), {});
    std::set<int> seen_states;
    for (const auto& [key, value] : actions.items()) {
        std::string actx = ctx + ".actions[\"" + key + "\"]";
        int x = parse_state_key(key, actx);
        if (x > mdp.n) {
            fail(actx, "state outside 1.." + std::to_string(mdp.n));
        }
        if (!seen_states.insert(x).second) {
            fail(actx, "state listed twice");
        }
        if (!value.is_array()) {
            fail(actx, "expected an array of action ids");
        }
        std::vector<ActionId> as;
        for (const auto& item : value) {
            as.push_back(static_cast<ActionId>(require_integer(item, actx)));
        }
        mdp.action_sets[static_cast<std::size_t>(x - 1)] = std::move(as);
    }
    for (StateId x = 1; x <= mdp.n; ++x) {
        if (!seen_states.count(x)) {
            fail(ctx + ".actions", "no action list for state " + std::to_string(x));
        }
    }

    const ordered_json& transitions = require_field(j, "transitions", ctx);
    if (!transitions.is_array()) {
        fail(ctx + ".transitions", "expected an array");
    }
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        std::string tctx = ctx + ".transitions[" + std::to_string(i) + "]";
        const ordered_json& entry = transitions[i];
        if (!entry.is_object()) {
            fail(tctx, "expected an object");
        }
        reject_unknown_fields(entry, {"x", "a", "y", "p"}, tctx);
        int x = static_cast<int>(require_integer(require_field(entry, "x", tctx), tctx + ".x"));
        int a = static_cast<int>(require_integer(require_field(entry, "a", tctx), tctx + ".a"));
        int y = static_cast<int>(require_integer(require_field(entry, "y", tctx), tctx + ".y"));
        Scalar p = require_scalar(require_field(entry, "p", tctx), mdp.backend, tctx + ".p");
        auto& row = mdp.transitions[{x, a}];
        if (!row.emplace(y, std::move(p)).second) {
            fail(tctx, "duplicate transition entry for (x=" + std::to_string(x) +
                           ", a=" + std::to_string(a) + ", y=" + std::to_string(y) + ")");
        }
    }

    const ordered_json& rewards = require_field(j, "rewards", ctx);
    if (!rewards.is_array()) {
        fail(ctx + ".rewards", "expected an array");
    }
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        std::string rctx = ctx + ".rewards[" + std::to_string(i) + "]";
        const ordered_json& entry = rewards[i];
        if (!entry.is_object()) {
            fail(rctx, "expected an object");
        }
        reject_unknown_fields(entry, {"x", "a", "r"}, rctx);
        int x = static_cast<int>(require_integer(require_field(entry, "x", rctx), rctx + ".x"));
        int a = static_cast<int>(require_integer(require_field(entry, "a", rctx), rctx + ".a"));
        Scalar r = require_scalar(require_field(entry, "r", rctx), mdp.backend, rctx + ".r");
        if (!mdp.rewards.emplace(std::make_pair(x, a), std::move(r)).second) {
            fail(rctx, "duplicate reward entry for (x=" + std::to_string(x) +
                           ", a=" + std::to_string(a) + ")");
        }
    }

    return mdp;
}

ordered_json policy_to_json(const Policy& policy) {
    ordered_json j = ordered_json::object();
    for (std::size_t i = 0; i < policy.choice.size(); ++i) {
        j[std::to_string(i + 1)] = policy.choice[i];
    }
    return j;
}

Policy policy_from_json(const ordered_json& j, int n) {
    const std::string ctx = "policy";
    if (!j.is_object()) {
        fail(ctx, "expected an object");
    }
    Policy policy;
    policy.choice.assign(static_cast<std::size_t>(n), -1);
    std::set<int> seen;
    for (const auto& [key, value] : j.items()) {
        std::string pctx = ctx + "[\"" + key + "\"]";
        int x = parse_state_key(key, pctx);
        if (x > n) {
            fail(pctx, "state outside 1.." + std::to_string(n));
        }
        if (!seen.insert(x).second) {
            fail(pctx, "state listed twice");
        }
        policy.choice[static_cast<std::size_t>(x - 1)] =
            static_cast<ActionId>(require_integer(value, pctx));
    }
    for (int x = 1; x <= n; ++x) {
        if (!seen.count(x)) {
            fail(ctx, "no action for state " + std::to_string(x));
        }
    }
    return policy;
}

ordered_json value_function_to_json(const ValueFunction& v) {
    ordered_json j = ordered_json::object();
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        j[std::to_string(i + 1)] = v.values[i].str();
    }
    return j;
}

ordered_json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "' for reading");
    }
    try {
        return ordered_json::parse(in);
    } catch (const ordered_json::parse_error& e) {
        throw std::runtime_error("JSON parse failure in '" + path + "': " + e.what());
    }
}

void write_json_file(const std::string& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    out << j.dump(2) << "\n";
    if (!out) {
        throw std::runtime_error("failed writing '" + path + "'");
    }
}

Mdp read_mdp_file(const std::string& path) {
    return mdp_from_json(read_json_file(path));
}

void write_mdp_file(const std::string& path, const Mdp& mdp) {
    write_json_file(path, mdp_to_json(mdp));
}

} // namespace vilab
