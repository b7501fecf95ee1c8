#include <catch2/catch_amalgamated.hpp>

#include "blockcloud/sim.hpp"

using namespace blockcloud;
using namespace blockcloud::sim;

namespace {

std::array<err::FactorScore, 3> node_profile(double s) {
    std::array<err::FactorScore, 3> p{};
    for (auto& f : p) f = {s, 1.0 / 3.0, 1.0};
    return p;
}

std::array<err::FactorScore, 6> task_profile(double s) {
    std::array<err::FactorScore, 6> p{};
    for (auto& f : p) f = {s, 1.0 / 6.0, 1.0};
    return p;
}

NodeConfig node(const std::string& id, NodeRole role, std::int64_t wealth, double score,
                Behavior behavior = Behavior::Honest) {
    return {id, role, Cftx::from_units(wealth), node_profile(score), behavior};
}

ScenarioConfig honest_scenario() {
    ScenarioConfig cfg;
    cfg.seed = 7;
    cfg.nodes = {
        node("s1", NodeRole::Super, 100, 0.40),
        node("s2", NodeRole::Super, 110, 0.50),
        node("s3", NodeRole::Super, 120, 0.60),
        node("s4", NodeRole::Super, 130, 0.70),
        node("t1", NodeRole::Tasking, 10, 0.50),
        node("c1", NodeRole::Computing, 5, 0.45),
        node("st1", NodeRole::Storage, 5, 0.55),
    };
    TaskConfig t1;
    t1.id = "task-1";
    t1.tasking_node = "t1";
    t1.wealth = Cftx::from_units(50);
    t1.profile = task_profile(0.5);
    t1.assignments = {
        {"a1", chain::AssignType::Computing, Cftx::from_units(30)},
        {"a2", chain::AssignType::Storage, Cftx::from_units(20)},
    };
    TaskConfig t2;
    t2.id = "task-2";
    t2.tasking_node = "t1";
    t2.wealth = Cftx::from_units(5);
    t2.profile = task_profile(0.6);
    t2.init_at_us = 200'000;
    AssignmentConfig transfer;
    transfer.id = "pay";
    transfer.type = chain::AssignType::Null;
    transfer.wealth = Cftx::from_units(5);
    transfer.from = "s4";
    transfer.to = "t1";
    transfer.value = Cftx::from_units(3);
    transfer.nonce = 1;
    t2.assignments = {transfer};
    cfg.tasks = {t1, t2};
    cfg.validate();
    return cfg;
}

Cftx wealth_sum(const RunResult& r) {
    Cftx s;
    for (const auto& [_, w] : r.wealth) s += w;
    return s;
}

}  // namespace

TEST_CASE("an empty task list yields genesis-only supply") {
    ScenarioConfig cfg = honest_scenario();
    cfg.tasks.clear();
    RunResult r = run_scenario(cfg);
    CHECK(r.supply.genesis == Cftx::from_units(480));
    CHECK(r.supply.issued == kZeroCftx);
    CHECK(r.finalized_blocks == 0);
    CHECK(r.closed_tasks == 0);
    CHECK(r.invariant_failures.empty());
    CHECK(wealth_sum(r) == r.supply.circulating());
}

TEST_CASE("an honest run closes every task and conserves wealth exactly") {
    RunResult r = run_scenario(honest_scenario());
    INFO(r.summary());
    CHECK(r.invariant_failures.empty());
    CHECK(r.closed_tasks == 2);
    CHECK_FALSE(r.fork_detected);
    CHECK(r.abandoned_assignments == 0);
    // each task finalizes at least root, acceptance, completion, close
    CHECK(r.finalized_blocks >= 8);
    CHECK(wealth_sum(r) == r.supply.circulating());
    CHECK(r.supply.circulating() ==
          r.supply.genesis + r.supply.issued - r.supply.burned);
    // the peer transfer applied exactly once
    REQUIRE(r.applied_transfers.size() == 1);
    CHECK(r.applied_transfers[0] == "s4->t1 3.000000 nonce=1");

    for (const auto& c : r.chains) {
        CHECK(c.closed());
        CHECK(c.verify_linkage());
        CHECK(c.blocks().size() >= 4);
    }
}

TEST_CASE("runs with the same seed are byte-identical") {
    RunResult a = run_scenario(honest_scenario());
    RunResult b = run_scenario(honest_scenario());
    CHECK(a.log == b.log);
    CHECK(a.summary() == b.summary());
    CHECK(a.ledger_equal(b));

    ScenarioConfig other = honest_scenario();
    other.seed = 8;
    RunResult c = run_scenario(other);
    CHECK(a.ledger_equal(c));  // economics do not depend on latency draws
}

TEST_CASE("shard membership is recorded per task") {
    ScenarioConfig cfg = honest_scenario();
    RunResult r = run_scenario(cfg);
    REQUIRE(r.shard_members.size() == 2);
    for (const auto& [task, members] : r.shard_members) {
        CHECK(members.size() == cfg.validator_set_size);
        for (const auto& m : members) {
            const NodeConfig* n = cfg.find_node(m);
            REQUIRE(n != nullptr);
            CHECK(n->role == NodeRole::Super);
        }
    }
}

TEST_CASE("silent resource nodes trigger retries and abandonment") {
    ScenarioConfig cfg = honest_scenario();
    for (auto& n : cfg.nodes)
        if (n.id == "c1") n.behavior = Behavior::Silent;
    RunResult r = run_scenario(cfg);
    INFO(r.summary());
    CHECK(r.abandoned_assignments == 1);
    CHECK(r.closed_tasks == 2);  // the task still closes without the worker
    CHECK(r.invariant_failures.empty());
    CHECK(wealth_sum(r) == r.supply.circulating());
    bool saw_retry = false, saw_query = false;
    for (const auto& line : r.log) {
        if (line.find("event=retry") != std::string::npos) saw_retry = true;
        if (line.find("event=tasking-node-query") != std::string::npos) saw_query = true;
    }
    CHECK(saw_retry);
    CHECK(saw_query);
    // the abandoned assignment earns nothing: only a2's wealth is issued
    CHECK(r.supply.issued == Cftx::from_units(25));
}

TEST_CASE("double-spend conflicts are rejected with no economic effect") {
    ScenarioConfig baseline_cfg = honest_scenario();
    RunResult baseline = run_scenario(baseline_cfg);

    ScenarioConfig cfg = honest_scenario();
    cfg.attack.kind = AttackKind::DoubleSpend;
    cfg.attack.attacker = "t1";
    for (auto& n : cfg.nodes)
        if (n.id == "t1") n.behavior = Behavior::DoubleSpender;
    cfg.validate();
    RunResult r = run_scenario(cfg);
    INFO(r.summary());
    CHECK(r.conflict_tx_rejected);
    CHECK(r.invariant_failures.empty());
    CHECK(r.ledger_equal(baseline));
    bool saw_reject = false;
    for (const auto& line : r.log)
        if (line.find("event=conflict-rejected") != std::string::npos) saw_reject = true;
    CHECK(saw_reject);
}

TEST_CASE("short-range fake blocks never finalize") {
    ScenarioConfig baseline_cfg = honest_scenario();
    baseline_cfg.latency = {1000, 1000};  // fixed latency in both runs
    RunResult baseline = run_scenario(baseline_cfg);

    ScenarioConfig cfg = baseline_cfg;
    cfg.attack.kind = AttackKind::ShortRange;
    cfg.attack.attacker = "s1";
    cfg.validate();
    RunResult r = run_scenario(cfg);
    INFO(r.summary());
    bool saw_fake = false;
    for (const auto& line : r.log)
        if (line.find("event=fake-proposal") != std::string::npos) saw_fake = true;
    CHECK(saw_fake);
    CHECK_FALSE(r.fake_block_finalized);
    CHECK_FALSE(r.fork_detected);
    CHECK(r.closed_tasks == 2);
    CHECK(r.ledger_equal(baseline));
}

TEST_CASE("consensus tolerates F equivocators and forks at F+1") {
    // n = 3F + 1: within the bound no conflicting finalization is possible
    FaultTrial safe = run_fault_trial(4, 1, 1001);
    CHECK_FALSE(safe.forked);
    FaultTrial safe7 = run_fault_trial(7, 2, 1002);
    CHECK_FALSE(safe7.forked);

    FaultTrial forked = run_fault_trial(4, 2, 1003);
    CHECK(forked.forked);
    CHECK(forked.evidence_ok);
    FaultTrial forked7 = run_fault_trial(7, 3, 1004);
    CHECK(forked7.forked);
    CHECK(forked7.evidence_ok);
}

TEST_CASE("shard takeover probability stays below one third") {
    double frac = shard_membership_fraction(16, 4, 7, 400, 99);
    CHECK(frac >= 0.0);
    CHECK(frac < 1.0 / 3.0);
}

TEST_CASE("result chains survive a flatten round trip") {
    RunResult r = run_scenario(honest_scenario());
    chain::FlatChain flat = flatten(r.chains);
    std::size_t total = 0;
    for (const auto& c : r.chains) total += c.blocks().size();
    CHECK(flat.entries.size() == total);
    auto rebuilt = chain::reconstruct(flat);
    REQUIRE(rebuilt.size() == r.chains.size());
    for (const auto& c : r.chains) {
        REQUIRE(rebuilt.contains(c.id()));
        REQUIRE(rebuilt[c.id()].size() == c.blocks().size());
        for (std::size_t i = 0; i < c.blocks().size(); ++i)
            CHECK(chain::canonical_hash(rebuilt[c.id()][i]) ==
                  chain::canonical_hash(c.blocks()[i]));
    }
}

TEST_CASE("the conservation fault hook is caught by the invariant checks") {
    ScenarioConfig cfg = honest_scenario();
    cfg.inject_fault = "conservation";
    RunResult r = run_scenario(cfg);
    REQUIRE_FALSE(r.invariant_failures.empty());
    CHECK(r.invariant_failures[0].find("conservation") != std::string::npos);
}

TEST_CASE("audit events reproduce the supply book") {
    RunResult r = run_scenario(honest_scenario());
    Cftx issued, burned, genesis;
    for (const auto& ev : r.audit) {
        if (ev.type == "issue") issued += ev.amount;
        if (ev.type == "burn") burned += ev.amount;
        if (ev.type == "genesis") genesis += ev.amount;
    }
    CHECK(genesis == r.supply.genesis);
    CHECK(issued == r.supply.issued);
    CHECK(burned == r.supply.burned);
}
