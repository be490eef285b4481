#include "vilab/family.hpp"

#include "vilab/solvers.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace vilab;

namespace {

FamilyParams dyadic_params(int k, std::vector<long> m, long num = 1, long den = 2) {
    FamilyParams params;
    params.k = k;
    params.M = std::move(m);
    params.beta = Scalar::rational(num, den);
    params.variant = RewardVariant::Dyadic;
    params.backend = Backend::rational();
    return params;
}

FamilyParams exp_params(int k, std::vector<long> m, long num, long den, mpfr_prec_t precision) {
    FamilyParams params;
    params.k = k;
    params.M = std::move(m);
    params.beta = Scalar::rational(num, den);
    params.variant = RewardVariant::Exp;
    params.backend = Backend::bigfloat(precision);
    return params;
}

} // namespace

TEST_SUITE("family") {

TEST_CASE("parameter invariants are enforced") {
    CHECK_THROWS_AS(check_params(dyadic_params(0, {})), std::invalid_argument);
    CHECK_THROWS_AS(check_params(dyadic_params(2, {4})), std::invalid_argument);       // wrong length
    CHECK_THROWS_AS(check_params(dyadic_params(2, {8, 4})), std::invalid_argument);    // decreasing
    CHECK_THROWS_AS(check_params(dyadic_params(2, {4, 4})), std::invalid_argument);    // not strict
    CHECK_THROWS_AS(check_params(dyadic_params(1, {0})), std::invalid_argument);       // M < 1
    CHECK_THROWS_AS(check_params(dyadic_params(1, {4}, 1, 1)), std::invalid_argument); // beta = 1
    CHECK_THROWS_AS(check_params(dyadic_params(1, {4}, 0, 1)), std::invalid_argument); // beta = 0

    FamilyParams inexact_beta = dyadic_params(1, {4});
    inexact_beta.beta = Scalar::of_double(0.5);
    CHECK_THROWS_AS(check_params(inexact_beta), std::invalid_argument);

    FamilyParams dyadic_on_bigfloat = dyadic_params(1, {4});
    dyadic_on_bigfloat.backend = Backend::bigfloat(64);
    CHECK_THROWS_AS(check_params(dyadic_on_bigfloat), std::invalid_argument);

    FamilyParams exp_on_rational = exp_params(1, {4}, 9, 10, 64);
    exp_on_rational.backend = Backend::rational();
    CHECK_THROWS_WITH_AS(check_params(exp_on_rational),
                         doctest::Contains("irrational"), std::invalid_argument);
    CHECK_THROWS_AS(build_family(exp_on_rational), std::invalid_argument);

    CHECK_NOTHROW(check_params(dyadic_params(3, {1, 2, 3})));
    CHECK_NOTHROW(check_params(exp_params(1, {4}, 9, 10, 128)));
}

TEST_CASE("the built instance has the documented three-state structure") {
    FamilyParams params = dyadic_params(2, {4, 8});
    Mdp mdp = build_family(params);

    CHECK(mdp.n == 3);
    CHECK(mdp.action_sets[0] == std::vector<ActionId>{0, 1, 2});
    CHECK(mdp.action_sets[1] == std::vector<ActionId>{0});
    CHECK(mdp.action_sets[2] == std::vector<ActionId>{0});
    CHECK(mdp.total_state_action_pairs() == 5);

    Scalar one = Scalar::rational(1, 1);
    CHECK(mdp.transitions.at({1, 0}) == std::map<StateId, Scalar>{{3, one}});
    CHECK(mdp.transitions.at({1, 1}) == std::map<StateId, Scalar>{{2, one}});
    CHECK(mdp.transitions.at({1, 2}) == std::map<StateId, Scalar>{{2, one}});
    CHECK(mdp.transitions.at({2, 0}) == std::map<StateId, Scalar>{{2, one}});
    CHECK(mdp.transitions.at({3, 0}) == std::map<StateId, Scalar>{{3, one}});

    CHECK(mdp.rewards.at({1, 0}) == Scalar::rational(0, 1));
    CHECK(mdp.rewards.at({2, 0}) == Scalar::rational(0, 1));
    CHECK(mdp.rewards.at({3, 0}) == Scalar::rational(1, 1));

    // Dyadic rewards at beta = 1/2: gain * (1 - 2^{-M_i}) with gain = 1.
    CHECK(mdp.rewards.at({1, 1}) == Scalar::rational(15, 16));
    CHECK(mdp.rewards.at({1, 2}) == Scalar::rational(255, 256));

    // Strictly below the gain of the optimal action, increasing in i.
    Scalar gain = Scalar::rational(1, 1);
    CHECK(mdp.rewards.at({1, 1}) < gain);
    CHECK(mdp.rewards.at({1, 2}) < gain);
    CHECK(mdp.rewards.at({1, 1}) < mdp.rewards.at({1, 2}));
    // v*(1) - r(1,i) = gain * 2^{-M_i}, exactly.
    ValueFunction v_star = evaluate_policy(mdp, family_optimal_policy());
    CHECK(v_star.at(1) - mdp.rewards.at({1, 1}) == Scalar::rational(1, 16));
    CHECK(v_star.at(1) - mdp.rewards.at({1, 2}) == Scalar::rational(1, 256));
}

TEST_CASE("every built instance passes validation") {
    CHECK(validate(build_family(dyadic_params(1, {4}))).empty());
    CHECK(validate(build_family(dyadic_params(3, {2, 5, 11}, 9, 10))).empty());
    CHECK(validate(build_family(exp_params(2, {4, 9}, 9, 10, 128))).empty());

    FamilyParams on_double = exp_params(1, {40}, 1, 2, 2);
    on_double.backend = Backend::hardware_double();
    Mdp dbl = build_family(on_double);
    CHECK(validate(dbl).empty());
    CHECK(dbl.backend.kind == BackendKind::Double);
}

TEST_CASE("exp rewards sit inside the certified rational enclosure") {
    FamilyParams params = exp_params(1, {4}, 9, 10, 128);
    Mdp mdp = build_family(params);

    // gain * (1 - e^{-4}) with gain = 9; the MPFR result may be off from the
    // real value by a few last-place units at precision 128.
    oracle::RationalInterval enc = oracle::exp_neg_enclosure(4, 250);
    mpq_class gain(9);
    mpq_class slack = mpq_class(1) / (mpz_class(1) << 115);
    mpq_class r = mdp.rewards.at({1, 1}).as_bigfloat().to_rational();
    CHECK(r >= gain * (1 - enc.hi) - slack);
    CHECK(r <= gain * (1 - enc.lo) + slack);

    // Hardware doubles get the same reward to within a few ulps.
    FamilyParams on_double = exp_params(1, {4}, 1, 2, 2);
    on_double.backend = Backend::hardware_double();
    double expected = 1.0 * (1.0 - std::exp(-4.0));
    CHECK(build_family(on_double).rewards.at({1, 1}).to_double() ==
          doctest::Approx(expected).epsilon(1e-14));

    // At M = 40 the dyadic gap e^{-40} is below the 53-bit ulp of 1, so the
    // double-backend reward collapses onto the gain itself — the rounding
    // event behind the hardware-double failure mode.
    FamilyParams collapsing = exp_params(1, {40}, 1, 2, 2);
    collapsing.backend = Backend::hardware_double();
    CHECK(build_family(collapsing).rewards.at({1, 1}) == Scalar::of_double(1.0));
}

TEST_CASE("closed-form iterates: base cases and the j=10 example") {
    FamilyParams params = dyadic_params(2, {4, 8});
    CHECK(closed_form_values(params, 0) == ValueFunction::zeros(3, params.backend));

    ValueFunction v1 = closed_form_values(params, 1);
    CHECK(v1.at(1) == Scalar::rational(255, 256)); // r(1,k) wins the max at j=1
    CHECK(v1.at(2) == Scalar::rational(0, 1));
    CHECK(v1.at(3) == Scalar::rational(1, 1));

    ValueFunction v10 = closed_form_values(params, 10);
    CHECK(v10.at(1) == Scalar::rational(511, 512));
    CHECK(v10.at(2) == Scalar::rational(0, 1));
    CHECK(v10.at(3) == Scalar::rational(1023, 512));

    CHECK_THROWS_AS(closed_form_values(params, -1), std::invalid_argument);
}

TEST_CASE("closed form equals the backup iteration exactly on rationals") {
    for (auto& params : {dyadic_params(2, {4, 8}), dyadic_params(1, {6}, 9, 10),
                         dyadic_params(3, {2, 4, 9}, 3, 4)}) {
        Mdp mdp = build_family(params);
        ValueFunction v = ValueFunction::zeros(3, mdp.backend);
        for (long j = 0; j <= 20; ++j) {
            CHECK(closed_form_values(params, j) == v);
            v = bellman_backup(mdp, v);
        }
    }
}

TEST_CASE("closed form tracks the backup iteration closely on bigfloats") {
    FamilyParams params = exp_params(1, {4}, 9, 10, 128);
    Mdp mdp = build_family(params);
    Scalar tol = pow(Scalar::rational(1, 2).converted_to(params.backend), 100);
    ValueFunction v = ValueFunction::zeros(3, mdp.backend);
    for (long j = 0; j <= 80; ++j) {
        ValueFunction closed = closed_form_values(params, j);
        for (int x = 1; x <= 3; ++x) {
            CHECK(abs(closed.at(x) - v.at(x)) <= tol);
        }
        v = bellman_backup(mdp, v);
    }
}

TEST_CASE("predicted switch iteration: reference instances and frozen values") {
    CHECK(predicted_switch_iteration(dyadic_params(2, {4, 8})) == 9);
    CHECK(predicted_switch_iteration(exp_params(1, {4}, 9, 10, 128)) == 39);

    // The three instances of the exponential schedule at beta = 9/10.
    CHECK(predicted_switch_iteration(exp_params(1, {55}, 9, 10, 154)) == 524);
    CHECK(predicted_switch_iteration(exp_params(2, {55, 149}, 9, 10, 290)) == 1416);
    CHECK(predicted_switch_iteration(exp_params(3, {55, 149, 404}, 9, 10, 659)) == 3836);

    // At beta = 1/2 the dyadic threshold is exact: j* = M_k + 1.
    for (long m : {1L, 4L, 8L, 16L, 33L, 64L}) {
        CHECK(predicted_switch_iteration(dyadic_params(1, {m})) == m + 1);
    }

    // Only the last M entry matters.
    CHECK(predicted_switch_iteration(dyadic_params(2, {1, 8})) == 9);
    CHECK(predicted_switch_iteration(dyadic_params(2, {7, 8})) == 9);
}

TEST_CASE("prediction agrees with the oracle and the measured run on a grid") {
    for (auto [num, den] : std::vector<std::pair<long, long>>{{1, 2}, {3, 4}, {7, 8}, {9, 10}}) {
        for (long m : {1L, 2L, 3L, 5L, 8L, 12L}) {
            FamilyParams params = dyadic_params(1, {m}, num, den);
            long predicted = predicted_switch_iteration(params);
            auto from_oracle =
                oracle::dyadic_family_switch(1, {m}, mpq_class(num, den), 10000);
            REQUIRE(from_oracle.has_value());
            CHECK(predicted == *from_oracle);
            CHECK(measure_switch_iteration(build_family(params), 1, 0, 10000) == predicted);
        }
    }
}

TEST_CASE("the analytic lower bound is strict and sharp") {
    // Dyadic, beta = 1/2, M = 8: bound is exactly 8.
    FamilyParams params = dyadic_params(2, {4, 8});
    CHECK(!exceeds_switch_lower_bound(params, 8));
    CHECK(exceeds_switch_lower_bound(params, 9));
    CHECK(exceeds_switch_lower_bound(params, predicted_switch_iteration(params)));

    // Exp, beta = 9/10, M = 4: bound is 4/ln(10/9) = 37.96...
    FamilyParams exp_p = exp_params(1, {4}, 9, 10, 128);
    CHECK(!exceeds_switch_lower_bound(exp_p, 37));
    CHECK(exceeds_switch_lower_bound(exp_p, 38));
    CHECK(exceeds_switch_lower_bound(exp_p, predicted_switch_iteration(exp_p)));
    CHECK(!exceeds_switch_lower_bound(exp_p, 1));
}

TEST_CASE("the switch iteration grows with M_k and with beta") {
    long previous = 0;
    for (long m : {2L, 4L, 8L, 16L, 32L}) {
        long j = predicted_switch_iteration(dyadic_params(1, {m}, 9, 10));
        CHECK(j > previous);
        previous = j;
    }
    previous = 0;
    for (auto [num, den] : std::vector<std::pair<long, long>>{{1, 2}, {3, 4}, {9, 10}, {99, 100}}) {
        long j = predicted_switch_iteration(exp_params(1, {4}, num, den, 128));
        CHECK(j > previous);
        previous = j;
    }
}

TEST_CASE("required precision: frozen sizes and dyadic rejection") {
    CHECK(required_precision_bits(exp_params(1, {4}, 9, 10, 64)) == 76);
    CHECK(required_precision_bits(exp_params(1, {40}, 1, 2, 64)) == 128);
    CHECK(required_precision_bits(exp_params(1, {55}, 9, 10, 64)) == 154);
    CHECK(required_precision_bits(exp_params(2, {55, 149}, 9, 10, 64)) == 290);
    CHECK(required_precision_bits(exp_params(3, {55, 149, 404}, 9, 10, 64)) == 659);
    CHECK_THROWS_AS(required_precision_bits(dyadic_params(2, {4, 8})), std::invalid_argument);
}

TEST_CASE("a measured run at the required precision matches the prediction") {
    FamilyParams params = exp_params(1, {40}, 1, 2, 2);
    params.backend = Backend::bigfloat(required_precision_bits(params));
    CHECK(params.backend.precision_bits == 128);
    long predicted = predicted_switch_iteration(params);
    CHECK(predicted == 59);
    CHECK(measure_switch_iteration(build_family(params), 1, 0, 2 * predicted) == predicted);
}

TEST_CASE("the exponential schedule doubles down: M_i = ceil(e^{i+3})") {
    auto schedule = exponential_family(3, Scalar::rational(9, 10));
    REQUIRE(schedule.size() == 3);
    CHECK(schedule[0].k == 1);
    CHECK(schedule[0].M == std::vector<long>{55});
    CHECK(schedule[1].M == std::vector<long>{55, 149});
    CHECK(schedule[2].M == std::vector<long>{55, 149, 404});
    for (const auto& params : schedule) {
        CHECK(params.variant == RewardVariant::Exp);
        CHECK(params.backend.kind == BackendKind::BigFloat);
        CHECK(params.backend.precision_bits == required_precision_bits(params));
        CHECK(params.beta == Scalar::rational(9, 10));
    }
    CHECK(schedule[2].backend.precision_bits == 659);

    // Consecutive switch iterations grow by a factor close to e.
    long j1 = predicted_switch_iteration(schedule[0]);
    long j2 = predicted_switch_iteration(schedule[1]);
    long j3 = predicted_switch_iteration(schedule[2]);
    double r21 = static_cast<double>(j2) / static_cast<double>(j1);
    double r32 = static_cast<double>(j3) / static_cast<double>(j2);
    CHECK(r21 > 2.5);
    CHECK(r21 < 2.9);
    CHECK(r32 > 2.5);
    CHECK(r32 < 2.9);

    CHECK_THROWS_AS(exponential_family(0, Scalar::rational(9, 10)), std::invalid_argument);
}

TEST_CASE("policy helpers") {
    CHECK(family_optimal_policy() == Policy{{0, 0, 0}});
    CHECK(family_policy_choosing(2) == Policy{{2, 0, 0}});
    Mdp mdp = build_family(dyadic_params(2, {4, 8}));
    CHECK_NOTHROW(require_valid_policy(mdp, family_policy_choosing(2)));
    CHECK_THROWS_AS(require_valid_policy(mdp, family_policy_choosing(3)), std::invalid_argument);
}

TEST_CASE("params serialize to the documented JSON and round-trip") {
    FamilyParams dyadic = dyadic_params(2, {4, 8});
    ordered_json dj = family_params_to_json(dyadic);
    CHECK(dj == ordered_json{{"k", 2}, {"M", {4, 8}}, {"beta", "1/2"}, {"variant", "dyadic"}});
    FamilyParams dyadic_back = family_params_from_json(dj);
    CHECK(dyadic_back.k == 2);
    CHECK(dyadic_back.M == std::vector<long>{4, 8});
    CHECK(dyadic_back.beta == dyadic.beta);
    CHECK(dyadic_back.variant == RewardVariant::Dyadic);
    CHECK(dyadic_back.backend == Backend::rational());

    FamilyParams exp_big = exp_params(1, {4}, 9, 10, 128);
    ordered_json ej = family_params_to_json(exp_big);
    CHECK(ej == ordered_json{{"k", 1},
                             {"M", {4}},
                             {"beta", "9/10"},
                             {"variant", "exp"},
                             {"precision_bits", 128}});
    CHECK(family_params_from_json(ej).backend == Backend::bigfloat(128));

    FamilyParams exp_double = exp_params(1, {40}, 1, 2, 2);
    exp_double.backend = Backend::hardware_double();
    ordered_json xj = family_params_to_json(exp_double);
    CHECK(xj == ordered_json{
                    {"k", 1}, {"M", {40}}, {"beta", "1/2"}, {"variant", "exp"}, {"backend", "double"}});
    CHECK(family_params_from_json(xj).backend == Backend::hardware_double());
}

TEST_CASE("params JSON omits precision_bits and auto-sizes it on parse") {
    ordered_json j{{"k", 1}, {"M", {55}}, {"beta", "9/10"}, {"variant", "exp"}};
    FamilyParams params = family_params_from_json(j);
    CHECK(params.backend == Backend::bigfloat(154));

    j["precision_bits"] = 200;
    CHECK(family_params_from_json(j).backend == Backend::bigfloat(200));
}

TEST_CASE("params JSON rejects malformed input") {
    ordered_json good{{"k", 2}, {"M", {4, 8}}, {"beta", "1/2"}, {"variant", "dyadic"}};
    CHECK_NOTHROW(family_params_from_json(good));

    auto expect_runtime_error = [](ordered_json j) {
        CHECK_THROWS_AS(family_params_from_json(j), std::runtime_error);
    };

    ordered_json unknown = good;
    unknown["extra"] = 1;
    expect_runtime_error(unknown);

    ordered_json missing = good;
    missing.erase("M");
    expect_runtime_error(missing);

    ordered_json bad_beta = good;
    bad_beta["beta"] = "0.5"; // rationals must be written p/q
    expect_runtime_error(bad_beta);

    ordered_json bad_k = good;
    bad_k["k"] = "two";
    expect_runtime_error(bad_k);

    ordered_json bad_m = good;
    bad_m["M"] = {4, "eight"};
    expect_runtime_error(bad_m);

    ordered_json stray_precision = good;
    stray_precision["precision_bits"] = 64; // backend here is rational
    expect_runtime_error(stray_precision);

    ordered_json bad_backend = good;
    bad_backend["backend"] = "decimal";
    expect_runtime_error(bad_backend);

    expect_runtime_error(ordered_json::array());

    // Semantic violations surface from check_params as invalid_argument.
    ordered_json dyadic_bigfloat = good;
    dyadic_bigfloat["backend"] = "bigfloat";
    dyadic_bigfloat["precision_bits"] = 64;
    CHECK_THROWS_AS(family_params_from_json(dyadic_bigfloat), std::invalid_argument);

    ordered_json exp_rational{{"k", 1}, {"M", {4}}, {"beta", "9/10"}, {"variant", "exp"},
                              {"backend", "rational"}};
    CHECK_THROWS_AS(family_params_from_json(exp_rational), std::invalid_argument);

    ordered_json zero_k = good;
    zero_k["k"] = 0;
    zero_k["M"] = ordered_json::array();
    CHECK_THROWS_AS(family_params_from_json(zero_k), std::invalid_argument);

    ordered_json beta_too_big = good;
    beta_too_big["beta"] = "3/2";
    CHECK_THROWS_AS(family_params_from_json(beta_too_big), std::invalid_argument);
}

} // TEST_SUITE("family")
