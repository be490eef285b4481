#pragma once

#include "vilab/mdp.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace vilab {

using ordered_json = nlohmann::ordered_json;

/**
 * Canonical JSON form of an Mdp:
 *
 * {
 *   "n": 3,
 *   "discount": "1/2",
 *   "actions": { "1": [0, 1, 2], "2": [0], "3": [0] },
 *   "transitions": [ {"x":1, "a":0, "y":3, "p":"1/1"}, ... ],
 *   "rewards":     [ {"x":1, "a":0, "r":"0/1"}, ... ],
 *   "backend": { "kind": "rational" }
 * }
 *
 * Scalars use the scalar string grammar for the declared backend;
 * "precision_bits" is required in "backend" exactly when kind is "bigfloat".
 * Parsing is strict: unknown fields, missing fields, wrong types, and
 * duplicate transition/reward rows are all rejected (std::runtime_error).
 */
ordered_json mdp_to_json(const Mdp& mdp);
Mdp mdp_from_json(const ordered_json& j);

ordered_json backend_to_json(const Backend& backend);
Backend backend_from_json(const ordered_json& j, const std::string& context);

/// Policies serialize as { "1": 0, "2": 0, "3": 0 } (state -> action).
ordered_json policy_to_json(const Policy& policy);
Policy policy_from_json(const ordered_json& j, int n);

/// Value functions serialize as { "1": "15/8", ... } (state -> scalar string).
ordered_json value_function_to_json(const ValueFunction& v);

/// File helpers; throw std::runtime_error on IO or parse failure.
ordered_json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const ordered_json& j);
Mdp read_mdp_file(const std::string& path);
void write_mdp_file(const std::string& path, const Mdp& mdp);

} // namespace vilab
