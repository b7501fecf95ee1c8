#include <catch2/catch_amalgamated.hpp>

#include "blockcloud/config.hpp"

using namespace blockcloud;
using namespace blockcloud::sim;
using nlohmann::json;

namespace {

json minimal_scenario() {
    return json::parse(R"({
        "seed": 42,
        "nodes": [
            {"id": "s1", "role": "super", "wealth": 100},
            {"id": "s2", "role": "super", "wealth": 110},
            {"id": "s3", "role": "super", "wealth": 120},
            {"id": "s4", "role": "super", "wealth": 130},
            {"id": "t1", "role": "tasking", "wealth": 10},
            {"id": "c1", "role": "computing", "wealth": 5}
        ],
        "tasks": [
            {
                "id": "task-1",
                "tasking_node": "t1",
                "wealth": 50,
                "assignments": [
                    {"id": "a1", "type": "computing", "wealth": 50}
                ]
            }
        ]
    })");
}

bool mentions(const ConfigError& e, const std::string& needle) {
    for (const auto& i : e.issues())
        if (i.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("a minimal scenario parses with defaults filled in") {
    ScenarioConfig cfg = ScenarioConfig::from_json(minimal_scenario());
    CHECK(cfg.seed == 42);
    REQUIRE(cfg.nodes.size() == 6);
    CHECK(cfg.nodes[0].role == NodeRole::Super);
    CHECK(cfg.nodes[0].wealth == Cftx::from_units(100));
    CHECK(cfg.nodes[0].behavior == Behavior::Honest);
    CHECK(cfg.validator_set_size == 4);
    CHECK(cfg.ack_retries == 3);
    CHECK(cfg.latency.min_us == 1000);
    CHECK(cfg.latency.max_us == 5000);
    CHECK(cfg.bft.protocols.size() == 4);
    REQUIRE(cfg.tasks.size() == 1);
    CHECK(cfg.tasks[0].b_timer_us == 10'000'000);
    CHECK(cfg.tasks[0].assignments[0].nodes_required == 1);
    CHECK(cfg.attack.kind == AttackKind::None);
    CHECK(cfg.inject_fault.empty());
}

TEST_CASE("optional sections override defaults") {
    json j = minimal_scenario();
    j["latency_us"] = {{"min", 2000}, {"max", 8000}};
    j["policy"] = {{"super_share", 0.3}, {"tariff_rate", 0.25}};
    j["dcc"] = {{"a", 0.1}, {"b", 0.8}};
    j["attack"] = {{"kind", "double-spend"}, {"attacker", "c1"}};
    j["nodes"][5]["behavior"] = "double-spender";
    ScenarioConfig cfg = ScenarioConfig::from_json(j);
    CHECK(cfg.latency.min_us == 2000);
    CHECK(cfg.latency.max_us == 8000);
    CHECK(cfg.policy.super_share == 0.3);
    CHECK(cfg.policy.tariff_rate == 0.25);
    CHECK(cfg.dcc_params.a == 0.1);
    CHECK(cfg.attack.kind == AttackKind::DoubleSpend);
    CHECK(cfg.attack.attacker == "c1");
    CHECK(cfg.nodes[5].behavior == Behavior::DoubleSpender);
}

TEST_CASE("custom protocol tables replace the built-in defaults") {
    json j = minimal_scenario();
    j["bft"] = {
        {"protocols", json::array({
            {{"name", "P"}, {"kci", {1}}, {"kpi", {5.0, 2.0}}},
            {{"name", "Q"}, {"kci", {0}}, {"kpi", {4.0, 1.0}}},
        })},
        {"kci_prefs", {0}},
        {"kpi_weights", {0.6, 0.4}},
        {"directions", {"higher", "lower"}},
    };
    ScenarioConfig cfg = ScenarioConfig::from_json(j);
    REQUIRE(cfg.bft.protocols.size() == 2);
    CHECK(cfg.bft.protocols[1].name == "Q");
    CHECK(cfg.bft.prefs.kpi_weights == std::vector<double>{0.6, 0.4});
    CHECK(cfg.bft.prefs.directions[1] == dabft::KpiDirection::LowerBetter);
}

TEST_CASE("unknown keys are rejected with their path") {
    json j = minimal_scenario();
    j["sedd"] = 7;
    try {
        ScenarioConfig::from_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(mentions(e, "unknown key 'sedd'"));
    }

    json j2 = minimal_scenario();
    j2["nodes"][0]["welth"] = 5;
    try {
        ScenarioConfig::from_json(j2);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(mentions(e, "nodes[0]"));
        CHECK(mentions(e, "welth"));
    }
}

TEST_CASE("missing required keys and wrong types are reported per field") {
    json j = minimal_scenario();
    j["nodes"][1].erase("id");
    j["tasks"][0]["wealth"] = "lots";
    try {
        ScenarioConfig::from_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(mentions(e, "nodes[1]: missing required key 'id'"));
        CHECK(mentions(e, "tasks[0].wealth: wrong type"));
        CHECK(e.issues().size() >= 2);  // all problems reported at once
    }
}

TEST_CASE("bad enumeration strings are rejected") {
    json j = minimal_scenario();
    j["nodes"][0]["role"] = "admin";
    CHECK_THROWS_AS(ScenarioConfig::from_json(j), ConfigError);

    json j2 = minimal_scenario();
    j2["nodes"][0]["behavior"] = "sneaky";
    CHECK_THROWS_AS(ScenarioConfig::from_json(j2), ConfigError);

    json j3 = minimal_scenario();
    j3["attack"] = {{"kind", "teleport"}};
    CHECK_THROWS_AS(ScenarioConfig::from_json(j3), ConfigError);

    json j4 = minimal_scenario();
    j4["tasks"][0]["assignments"][0]["type"] = "quantum";
    CHECK_THROWS_AS(ScenarioConfig::from_json(j4), ConfigError);
}

TEST_CASE("semantic validation catches cross-field problems") {
    json dup = minimal_scenario();
    dup["nodes"][1]["id"] = "s1";
    try {
        ScenarioConfig::from_json(dup);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(mentions(e, "duplicate id 's1'"));
    }

    json few = minimal_scenario();
    few["nodes"].erase(3);  // drop a super, leaving 3 < validator_set_size
    try {
        ScenarioConfig::from_json(few);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(mentions(e, "fewer super nodes"));
    }

    json ghost = minimal_scenario();
    ghost["tasks"][0]["tasking_node"] = "nobody";
    CHECK_THROWS_AS(ScenarioConfig::from_json(ghost), ConfigError);

    json bare = minimal_scenario();
    bare["tasks"][0]["assignments"] = json::array();
    CHECK_THROWS_AS(ScenarioConfig::from_json(bare), ConfigError);

    json lat = minimal_scenario();
    lat["latency_us"] = {{"min", 9000}, {"max", 100}};
    CHECK_THROWS_AS(ScenarioConfig::from_json(lat), ConfigError);

    json atk = minimal_scenario();
    atk["attack"] = {{"kind", "double-spend"}, {"attacker", "ghost"}};
    CHECK_THROWS_AS(ScenarioConfig::from_json(atk), ConfigError);
}

TEST_CASE("the fault-injection hook only accepts known faults") {
    json ok = minimal_scenario();
    ok["inject_fault"] = "conservation";
    CHECK(ScenarioConfig::from_json(ok).inject_fault == "conservation");

    json bad = minimal_scenario();
    bad["inject_fault"] = "gravity";
    try {
        ScenarioConfig::from_json(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(mentions(e, "inject_fault"));
    }
}

TEST_CASE("error text aggregates every issue") {
    json j = json::parse(R"({"nodes": "oops", "tasks": 7, "bogus": true})");
    try {
        ScenarioConfig::from_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.issues().size() >= 3);
        std::string what = e.what();
        CHECK(what.find("invalid scenario config") != std::string::npos);
        for (const auto& issue : e.issues())
            CHECK(what.find(issue) != std::string::npos);
    }
}
