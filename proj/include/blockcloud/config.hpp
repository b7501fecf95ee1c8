#ifndef BLOCKCLOUD_CONFIG_HPP
#define BLOCKCLOUD_CONFIG_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockcloud/chain.hpp"
#include "blockcloud/dabft_dcc.hpp"
#include "blockcloud/dabft_select.hpp"
#include "blockcloud/dpoev.hpp"
#include "blockcloud/econ_err.hpp"
#include "blockcloud/fixed.hpp"

namespace blockcloud::sim {

using nlohmann::json;

/// Config rejection with per-field diagnostics.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> issues)
        : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
    const std::vector<std::string>& issues() const { return issues_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "invalid scenario config:";
        for (const auto& i : v) s += "\n  " + i;
        return s;
    }
    std::vector<std::string> issues_;
};

enum class NodeRole : std::uint8_t { Super, Tasking, Computing, Storage };
enum class Behavior : std::uint8_t { Honest, Silent, Equivocator, Briber, DoubleSpender };
enum class AttackKind : std::uint8_t {
    None,
    Equivocation,  // fault-bound trials: equivocating validators incl. handler
    DoubleSpend,
    ShortRange,
    Fifty1,
    ShardTakeover,
};

struct NodeConfig {
    std::string id;
    NodeRole role = NodeRole::Super;
    Cftx wealth;
    std::array<err::FactorScore, 3> profile{};
    Behavior behavior = Behavior::Honest;
};

struct AssignmentConfig {
    std::string id;
    chain::AssignType type = chain::AssignType::Computing;
    Cftx wealth;
    std::size_t nodes_required = 1;
    std::uint64_t exec_us = 100'000;
    // P2P transfer fields (Null type only)
    std::string from;
    std::string to;
    Cftx value;
    std::uint64_t nonce = 0;
};

struct TaskConfig {
    std::string id;
    std::string tasking_node;
    Cftx wealth;
    std::array<err::FactorScore, 6> profile{};
    std::vector<AssignmentConfig> assignments;
    std::uint64_t init_at_us = 0;
    std::uint64_t b_timer_us = 10'000'000;
};

struct LatencyConfig {
    std::uint64_t min_us = 1'000;
    std::uint64_t max_us = 5'000;
};

struct BftConfig {
    std::vector<dabft::ProtocolProfile> protocols;
    dabft::Preferences prefs;
};

struct AttackConfig {
    AttackKind kind = AttackKind::None;
    std::string attacker;  // node id, meaning depends on kind
};

struct ScenarioConfig {
    std::uint64_t seed = 0;
    std::vector<NodeConfig> nodes;
    LatencyConfig latency;
    std::size_t validator_set_size = 4;
    std::uint64_t ack_timeout_us = 500'000;
    int ack_retries = 3;
    double handler_weight = 2.0;
    dpoev::PolicyParams policy;
    dcc::DccParams dcc_params;
    double ema_alpha = 0.3;
    static BftConfig default_bft();
    BftConfig bft = default_bft();
    std::vector<TaskConfig> tasks;
    AttackConfig attack;
    std::string inject_fault;  // test hook: "" or "conservation"

    const NodeConfig* find_node(const std::string& id) const {
        for (const auto& n : nodes)
            if (n.id == id) return &n;
        return nullptr;
    }

    static ScenarioConfig from_json(const json& j);
    void validate() const;
};

inline BftConfig ScenarioConfig::default_bft() {
    BftConfig b;
    // KCI columns: speculative execution, client multicast; KPI columns:
    // throughput tx/s, latency s, capacity clients.
    b.protocols = {
        {"PBFT", {0, 0}, {3000.0, 1.0, 100.0}},
        {"Zyzzyva", {1, 1}, {8000.0, 0.4, 60.0}},
        {"Quorum", {1, 1}, {9000.0, 0.3, 30.0}},
        {"Chain", {0, 0}, {7000.0, 0.8, 80.0}},
    };
    b.prefs.kci_prefs = {0, 0};
    b.prefs.kpi_weights = {0.5, 0.3, 0.2};
    b.prefs.directions = {dabft::KpiDirection::HigherBetter, dabft::KpiDirection::LowerBetter,
                          dabft::KpiDirection::HigherBetter};
    return b;
}

namespace detail {

class FieldReader {
public:
    FieldReader(const json& j, std::string path, std::vector<std::string>& issues)
        : j_(j), path_(std::move(path)), issues_(issues) {
        if (!j.is_object()) issues_.push_back(path_ + ": expected object");
    }

    ~FieldReader() {
        if (!j_.is_object()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.contains(it.key()))
                issues_.push_back(path_ + ": unknown key '" + it.key() + "'");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.is_object() && j_.contains(key);
    }

    template <typename T>
    void get(const std::string& key, T& out, bool required = false) {
        seen_.insert(key);
        if (!j_.is_object() || !j_.contains(key)) {
            if (required) issues_.push_back(path_ + ": missing required key '" + key + "'");
            return;
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            issues_.push_back(path_ + "." + key + ": wrong type");
        }
    }

    void get_cftx(const std::string& key, Cftx& out, bool required = false) {
        double v = out.real();
        get(key, v, required);
        out = Cftx::from_real(v);
    }

    const json* child(const std::string& key) {
        seen_.insert(key);
        if (!j_.is_object() || !j_.contains(key)) return nullptr;
        return &j_.at(key);
    }

    const std::string& path() const { return path_; }

private:
    const json& j_;
    std::string path_;
    std::vector<std::string>& issues_;
    std::set<std::string> seen_;
};

inline err::FactorScore read_factor(const json& j, const std::string& path,
                                    std::vector<std::string>& issues) {
    err::FactorScore f;
    FieldReader r(j, path, issues);
    r.get("score", f.score, true);
    r.get("weight", f.weight, true);
    r.get("norm", f.norm, true);
    return f;
}

template <std::size_t N>
inline std::array<err::FactorScore, N> read_profile(const json* j, const std::string& path,
                                                    std::vector<std::string>& issues) {
    std::array<err::FactorScore, N> out{};
    for (auto& f : out) f = {0.0, 1.0 / N, 1.0};
    if (!j) return out;
    if (!j->is_array() || j->size() != N) {
        issues.push_back(path + ": expected array of " + std::to_string(N) + " factors");
        return out;
    }
    for (std::size_t i = 0; i < N; ++i)
        out[i] = read_factor((*j)[i], path + "[" + std::to_string(i) + "]", issues);
    return out;
}

}  // namespace detail

inline ScenarioConfig ScenarioConfig::from_json(const json& j) {
    std::vector<std::string> issues;
    ScenarioConfig cfg;
    cfg.bft = default_bft();
    {
        detail::FieldReader r(j, "config", issues);
        r.get("seed", cfg.seed);
        r.get("validator_set_size", cfg.validator_set_size);
        r.get("ack_timeout_us", cfg.ack_timeout_us);
        r.get("ack_retries", cfg.ack_retries);
        r.get("handler_weight", cfg.handler_weight);
        r.get("ema_alpha", cfg.ema_alpha);
        r.get("inject_fault", cfg.inject_fault);

        if (const json* lat = r.child("latency_us")) {
            detail::FieldReader lr(*lat, "latency_us", issues);
            lr.get("min", cfg.latency.min_us);
            lr.get("max", cfg.latency.max_us);
        }
        if (const json* pol = r.child("policy")) {
            detail::FieldReader pr(*pol, "policy", issues);
            pr.get("super_share", cfg.policy.super_share);
            pr.get("dominance_threshold", cfg.policy.dominance_threshold);
            pr.get("tariff_rate", cfg.policy.tariff_rate);
        }
        if (const json* d = r.child("dcc")) {
            detail::FieldReader dr(*d, "dcc", issues);
            dr.get("a", cfg.dcc_params.a);
            dr.get("b", cfg.dcc_params.b);
            dr.get("kappa", cfg.dcc_params.kappa);
            dr.get("lambda", cfg.dcc_params.lambda);
            dr.get("h0_sq", cfg.dcc_params.h0_sq);
        }
        if (const json* bft = r.child("bft")) {
            detail::FieldReader br(*bft, "bft", issues);
            if (const json* protos = br.child("protocols")) {
                cfg.bft.protocols.clear();
                if (!protos->is_array()) {
                    issues.push_back("bft.protocols: expected array");
                } else {
                    for (std::size_t i = 0; i < protos->size(); ++i) {
                        dabft::ProtocolProfile p;
                        detail::FieldReader pr((*protos)[i],
                                               "bft.protocols[" + std::to_string(i) + "]", issues);
                        pr.get("name", p.name, true);
                        pr.get("kci", p.kci_row, true);
                        pr.get("kpi", p.kpi_row, true);
                        cfg.bft.protocols.push_back(std::move(p));
                    }
                }
            }
            br.get("kci_prefs", cfg.bft.prefs.kci_prefs);
            br.get("kpi_weights", cfg.bft.prefs.kpi_weights);
            br.get("heuristic_weights", cfg.bft.prefs.heuristic_weights);
            std::vector<std::string> dirs;
            br.get("directions", dirs);
            if (!dirs.empty()) {
                cfg.bft.prefs.directions.clear();
                for (const auto& d : dirs) {
                    if (d == "higher")
                        cfg.bft.prefs.directions.push_back(dabft::KpiDirection::HigherBetter);
                    else if (d == "lower")
                        cfg.bft.prefs.directions.push_back(dabft::KpiDirection::LowerBetter);
                    else
                        issues.push_back("bft.directions: expected 'higher' or 'lower'");
                }
            }
        }
        if (const json* nodes = r.child("nodes")) {
            if (!nodes->is_array()) {
                issues.push_back("nodes: expected array");
            } else {
                for (std::size_t i = 0; i < nodes->size(); ++i) {
                    NodeConfig n;
                    std::string path = "nodes[" + std::to_string(i) + "]";
                    detail::FieldReader nr((*nodes)[i], path, issues);
                    nr.get("id", n.id, true);
                    std::string role = "super";
                    nr.get("role", role);
                    if (role == "super") n.role = NodeRole::Super;
                    else if (role == "tasking") n.role = NodeRole::Tasking;
                    else if (role == "computing") n.role = NodeRole::Computing;
                    else if (role == "storage") n.role = NodeRole::Storage;
                    else issues.push_back(path + ".role: unknown role '" + role + "'");
                    nr.get_cftx("wealth", n.wealth);
                    std::string behavior = "honest";
                    nr.get("behavior", behavior);
                    if (behavior == "honest") n.behavior = Behavior::Honest;
                    else if (behavior == "silent") n.behavior = Behavior::Silent;
                    else if (behavior == "equivocator") n.behavior = Behavior::Equivocator;
                    else if (behavior == "briber") n.behavior = Behavior::Briber;
                    else if (behavior == "double-spender") n.behavior = Behavior::DoubleSpender;
                    else issues.push_back(path + ".behavior: unknown behavior '" + behavior + "'");
                    n.profile = detail::read_profile<3>(nr.child("profile"), path + ".profile",
                                                        issues);
                    cfg.nodes.push_back(std::move(n));
                }
            }
        }
        if (const json* tasks = r.child("tasks")) {
            if (!tasks->is_array()) {
                issues.push_back("tasks: expected array");
            } else {
                for (std::size_t i = 0; i < tasks->size(); ++i) {
                    TaskConfig t;
                    std::string path = "tasks[" + std::to_string(i) + "]";
                    detail::FieldReader tr((*tasks)[i], path, issues);
                    tr.get("id", t.id, true);
                    tr.get("tasking_node", t.tasking_node, true);
                    tr.get_cftx("wealth", t.wealth);
                    tr.get("init_at_us", t.init_at_us);
                    tr.get("b_timer_us", t.b_timer_us);
                    t.profile = detail::read_profile<6>(tr.child("profile"), path + ".profile",
                                                        issues);
                    if (const json* assigns = tr.child("assignments")) {
                        if (!assigns->is_array()) {
                            issues.push_back(path + ".assignments: expected array");
                        } else {
                            for (std::size_t k = 0; k < assigns->size(); ++k) {
                                AssignmentConfig a;
                                std::string ap = path + ".assignments[" + std::to_string(k) + "]";
                                detail::FieldReader ar((*assigns)[k], ap, issues);
                                ar.get("id", a.id, true);
                                std::string type = "computing";
                                ar.get("type", type);
                                if (type == "computing") a.type = chain::AssignType::Computing;
                                else if (type == "storage") a.type = chain::AssignType::Storage;
                                else if (type == "null") a.type = chain::AssignType::Null;
                                else issues.push_back(ap + ".type: unknown type '" + type + "'");
                                ar.get_cftx("wealth", a.wealth);
                                ar.get("nodes_required", a.nodes_required);
                                ar.get("exec_us", a.exec_us);
                                ar.get("from", a.from);
                                ar.get("to", a.to);
                                ar.get_cftx("value", a.value);
                                ar.get("nonce", a.nonce);
                                t.assignments.push_back(std::move(a));
                            }
                        }
                    }
                    cfg.tasks.push_back(std::move(t));
                }
            }
        }
        if (const json* atk = r.child("attack")) {
            detail::FieldReader ar(*atk, "attack", issues);
            std::string kind = "none";
            ar.get("kind", kind);
            if (kind == "none") cfg.attack.kind = AttackKind::None;
            else if (kind == "equivocation") cfg.attack.kind = AttackKind::Equivocation;
            else if (kind == "double-spend") cfg.attack.kind = AttackKind::DoubleSpend;
            else if (kind == "short-range") cfg.attack.kind = AttackKind::ShortRange;
            else if (kind == "51-percent") cfg.attack.kind = AttackKind::Fifty1;
            else if (kind == "shard-takeover") cfg.attack.kind = AttackKind::ShardTakeover;
            else issues.push_back("attack.kind: unknown kind '" + kind + "'");
            ar.get("attacker", cfg.attack.attacker);
        }
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    cfg.validate();
    return cfg;
}

inline void ScenarioConfig::validate() const {
    std::vector<std::string> issues;
    if (validator_set_size < 1) issues.push_back("validator_set_size: must be >= 1");
    if (latency.min_us > latency.max_us) issues.push_back("latency_us: min > max");
    if (ema_alpha < 0.0 || ema_alpha > 1.0) issues.push_back("ema_alpha: outside [0,1]");
    std::set<std::string> ids;
    std::size_t supers = 0;
    for (const auto& n : nodes) {
        if (n.id.empty()) issues.push_back("nodes: empty node id");
        if (!ids.insert(n.id).second) issues.push_back("nodes: duplicate id '" + n.id + "'");
        if (n.role == NodeRole::Super) ++supers;
        if (n.wealth.is_negative()) issues.push_back("nodes." + n.id + ": negative wealth");
    }
    if (!tasks.empty() && supers < validator_set_size)
        issues.push_back("nodes: fewer super nodes than validator_set_size");
    std::set<std::string> task_ids;
    for (const auto& t : tasks) {
        if (!task_ids.insert(t.id).second) issues.push_back("tasks: duplicate id '" + t.id + "'");
        if (!find_node(t.tasking_node))
            issues.push_back("tasks." + t.id + ": unknown tasking node '" + t.tasking_node + "'");
        if (t.assignments.empty()) issues.push_back("tasks." + t.id + ": no assignments");
        if (t.wealth.is_negative()) issues.push_back("tasks." + t.id + ": negative wealth");
    }
    if (attack.kind != AttackKind::None && attack.kind != AttackKind::Equivocation &&
        !find_node(attack.attacker))
        issues.push_back("attack.attacker: unknown node '" + attack.attacker + "'");
    try {
        dpoev::PolicyParams p = policy;
        (void)p;
        if (policy.super_share < 0.0 || policy.super_share > 1.0)
            issues.push_back("policy.super_share: outside [0,1]");
        if (policy.dominance_threshold < 0.0 || policy.dominance_threshold > 1.0)
            issues.push_back("policy.dominance_threshold: outside [0,1]");
        if (policy.tariff_rate < 0.0 || policy.tariff_rate > 1.0)
            issues.push_back("policy.tariff_rate: outside [0,1]");
        for (auto& p2 : bft.protocols) p2.validate();
        if (!bft.protocols.empty())
            bft.prefs.validate(bft.protocols[0].kci_row.size(), bft.protocols[0].kpi_row.size());
    } catch (const std::exception& e) {
        issues.push_back(std::string("bft: ") + e.what());
    }
    if (!inject_fault.empty() && inject_fault != "conservation")
        issues.push_back("inject_fault: unknown fault '" + inject_fault + "'");
    if (!issues.empty()) throw ConfigError(std::move(issues));
}

}  // namespace blockcloud::sim

#endif
