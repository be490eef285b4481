#include "vilab/mdp_json.hpp"

#include "vilab/family.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <filesystem>

using namespace vilab;

namespace {

Mdp sample_family() {
    FamilyParams params;
    params.k = 2;
    params.M = {4, 8};
    params.beta = Scalar::rational(1, 2);
    params.variant = RewardVariant::Dyadic;
    params.backend = Backend::rational();
    return build_family(params);
}

ordered_json sample_family_json() { return mdp_to_json(sample_family()); }

bool mdp_equal(const Mdp& a, const Mdp& b) {
    return a.n == b.n && a.discount == b.discount && a.action_sets == b.action_sets &&
           a.transitions == b.transitions && a.rewards == b.rewards && a.backend == b.backend;
}

} // namespace

TEST_SUITE("json") {

TEST_CASE("the family instance serializes to the documented shape") {
    ordered_json j = sample_family_json();
    CHECK(j["n"] == 3);
    CHECK(j["discount"] == "1/2");
    CHECK(j["actions"] == ordered_json{{"1", {0, 1, 2}}, {"2", {0}}, {"3", {0}}});
    CHECK(j["backend"] == ordered_json{{"kind", "rational"}});
    REQUIRE(j["transitions"].is_array());
    REQUIRE(j["rewards"].is_array());
    CHECK(j["transitions"].size() == 5);
    CHECK(j["rewards"].size() == 5);
    CHECK(j["transitions"][0] == ordered_json{{"x", 1}, {"a", 0}, {"y", 3}, {"p", "1/1"}});
    // r(1,2) = 255/256, serialized in canonical lowest terms.
    bool found = false;
    for (const auto& row : j["rewards"]) {
        if (row["x"] == 1 && row["a"] == 2) {
            CHECK(row["r"] == "255/256");
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("rational models round-trip bit-exactly") {
    auto rng = testutil::seeded_rng(30);
    for (int trial = 0; trial < 25; ++trial) {
        Mdp mdp = testutil::random_mdp(rng);
        Mdp back = mdp_from_json(mdp_to_json(mdp));
        CHECK(mdp_equal(mdp, back));
        // A second trip is stable too.
        CHECK(mdp_to_json(back) == mdp_to_json(mdp));
    }
}

TEST_CASE("bigfloat and double models round-trip bit-exactly") {
    FamilyParams params;
    params.k = 2;
    params.M = {4, 9};
    params.beta = Scalar::rational(9, 10);
    params.variant = RewardVariant::Exp;
    params.backend = Backend::bigfloat(128);
    Mdp big = build_family(params);
    ordered_json bj = mdp_to_json(big);
    CHECK(bj["backend"] == ordered_json{{"kind", "bigfloat"}, {"precision_bits", 128}});
    // Bigfloat scalars serialize as hex literals with an explicit precision.
    CHECK(bj["discount"].get<std::string>().find("0x") != std::string::npos);
    CHECK(bj["discount"].get<std::string>().find("@128") != std::string::npos);
    CHECK(mdp_equal(big, mdp_from_json(bj)));

    params.backend = Backend::hardware_double();
    Mdp dbl = build_family(params);
    ordered_json dj = mdp_to_json(dbl);
    CHECK(dj["backend"] == ordered_json{{"kind", "double"}});
    CHECK(dj["discount"] == "0.9");
    CHECK(mdp_equal(dbl, mdp_from_json(dj)));
}

TEST_CASE("parsing is strict about fields and types") {
    auto expect_reject = [](ordered_json j, const char* needle) {
        CHECK_THROWS_WITH_AS(mdp_from_json(j), doctest::Contains(needle), std::runtime_error);
    };

    ordered_json good = sample_family_json();
    CHECK_NOTHROW(mdp_from_json(good));

    ordered_json unknown = good;
    unknown["comment"] = "hi";
    expect_reject(unknown, "unknown field 'comment'");

    for (const char* key : {"n", "discount", "actions", "transitions", "rewards", "backend"}) {
        ordered_json missing = good;
        missing.erase(key);
        expect_reject(missing, "missing field");
    }

    ordered_json bad_n = good;
    bad_n["n"] = "3";
    expect_reject(bad_n, "n");

    ordered_json bad_scalar = good;
    bad_scalar["discount"] = "0.5"; // not p/q under a rational backend
    expect_reject(bad_scalar, "discount");

    ordered_json bad_state_key = good;
    bad_state_key["actions"]["zero"] = {0};
    expect_reject(bad_state_key, "state");

    ordered_json bad_row = good;
    bad_row["transitions"][0].erase("p");
    expect_reject(bad_row, "missing field");

    ordered_json extra_row_field = good;
    extra_row_field["rewards"][0]["note"] = 1;
    expect_reject(extra_row_field, "unknown field");

    ordered_json not_object = ordered_json::array();
    expect_reject(not_object, "object");
}

TEST_CASE("duplicate transition and reward rows are rejected") {
    ordered_json dup_transition = sample_family_json();
    dup_transition["transitions"].push_back(dup_transition["transitions"][0]);
    CHECK_THROWS_WITH_AS(mdp_from_json(dup_transition), doctest::Contains("duplicate"),
                         std::runtime_error);

    ordered_json dup_reward = sample_family_json();
    dup_reward["rewards"].push_back(dup_reward["rewards"][0]);
    CHECK_THROWS_WITH_AS(mdp_from_json(dup_reward), doctest::Contains("duplicate"),
                         std::runtime_error);
}

TEST_CASE("backend JSON: precision_bits exactly when bigfloat") {
    CHECK(backend_to_json(Backend::rational()) == ordered_json{{"kind", "rational"}});
    CHECK(backend_to_json(Backend::hardware_double()) == ordered_json{{"kind", "double"}});
    CHECK(backend_to_json(Backend::bigfloat(256)) ==
          ordered_json{{"kind", "bigfloat"}, {"precision_bits", 256}});

    CHECK(backend_from_json(ordered_json{{"kind", "rational"}}, "t") == Backend::rational());
    CHECK(backend_from_json(ordered_json{{"kind", "bigfloat"}, {"precision_bits", 53}}, "t") ==
          Backend::bigfloat(53));

    auto reject = [](ordered_json j) {
        CHECK_THROWS_AS(backend_from_json(j, "t"), std::runtime_error);
    };
    reject(ordered_json{{"kind", "bigfloat"}});                               // missing bits
    reject(ordered_json{{"kind", "rational"}, {"precision_bits", 64}});       // stray bits
    reject(ordered_json{{"kind", "double"}, {"precision_bits", 53}});         // stray bits
    reject(ordered_json{{"kind", "float128"}});                               // unknown kind
    reject(ordered_json{{"kind", "bigfloat"}, {"precision_bits", 0}});        // below MPFR min
    reject(ordered_json{{"kind", "bigfloat"}, {"precision_bits", (1 << 24) + 1}});
    reject(ordered_json{{"kind", "bigfloat"}, {"precision_bits", "128"}});
    reject(ordered_json::array());
}

TEST_CASE("policy JSON maps states to actions") {
    Policy policy{{2, 0, 0}};
    ordered_json j = policy_to_json(policy);
    CHECK(j == ordered_json{{"1", 2}, {"2", 0}, {"3", 0}});
    CHECK(policy_from_json(j, 3) == policy);

    CHECK_THROWS_AS(policy_from_json(j, 4), std::runtime_error);  // missing state 4
    ordered_json extra = j;
    extra["4"] = 0;
    CHECK_THROWS_AS(policy_from_json(extra, 3), std::runtime_error);
    ordered_json bad_value = j;
    bad_value["2"] = "zero";
    CHECK_THROWS_AS(policy_from_json(bad_value, 3), std::runtime_error);
}

TEST_CASE("value functions serialize with scalar strings") {
    ValueFunction v;
    v.values = {Scalar::rational(15, 8), Scalar::rational(0, 1), Scalar::rational(-3, 7)};
    CHECK(value_function_to_json(v) == ordered_json{{"1", "15/8"}, {"2", "0/1"}, {"3", "-3/7"}});
}

TEST_CASE("file helpers round-trip through disk and report IO failures") {
    std::filesystem::path dir = testutil::scratch_dir("json_files");
    std::string path = (dir / "model.json").string();

    Mdp mdp = sample_family();
    write_mdp_file(path, mdp);
    CHECK(mdp_equal(read_mdp_file(path), mdp));

    // Files end with a newline and parse as ordinary JSON.
    ordered_json raw = read_json_file(path);
    CHECK(raw == mdp_to_json(mdp));

    CHECK_THROWS_AS(read_json_file((dir / "absent.json").string()), std::runtime_error);
    CHECK_THROWS_AS(read_mdp_file((dir / "absent.json").string()), std::runtime_error);

    testutil::write_text_file((dir / "broken.json").string(), "{ not json");
    CHECK_THROWS_AS(read_json_file((dir / "broken.json").string()), std::runtime_error);

    CHECK_THROWS_AS(write_json_file((dir / "no_dir" / "x.json").string(), raw),
                    std::runtime_error);
}

} // TEST_SUITE("json")
