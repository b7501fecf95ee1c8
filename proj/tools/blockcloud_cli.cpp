// Command-line front end: scenario runs, economic scoring, protocol
// selection, a cross-chain exchange walkthrough, and replay verification.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "blockcloud/dsol.hpp"
#include "blockcloud/econ_err.hpp"
#include "blockcloud/sim.hpp"

using nlohmann::json;
using namespace blockcloud;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInvariant = 2;

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    in >> j;
    return j;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t from_config) {
    if (flag) return *flag;
    if (const char* env = std::getenv("BLOCKCLOUD_SEED")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') return v;
        throw std::runtime_error("BLOCKCLOUD_SEED is not an integer");
    }
    return from_config;
}

void write_out(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
}

std::string render_run(const sim::RunResult& res, bool summary_only) {
    std::ostringstream os;
    if (!summary_only)
        for (const auto& line : res.log) os << line << '\n';
    os << "summary " << res.summary() << '\n';
    for (const auto& f : res.invariant_failures) os << "invariant-violation " << f << '\n';
    return os.str();
}

int cmd_sim_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
                const std::string& out_path, bool summary_only) {
    sim::ScenarioConfig cfg = sim::ScenarioConfig::from_json(load_json(config_path));
    cfg.seed = resolve_seed(seed, cfg.seed);
    sim::RunResult res = sim::run_scenario(cfg);
    write_out(out_path, render_run(res, summary_only));
    return res.invariant_failures.empty() ? kExitOk : kExitInvariant;
}

int cmd_econ_score(const std::string& config_path, const std::string& out_path) {
    json j = load_json(config_path);
    err::RankingTable table;
    auto factor = [](const json& f) {
        return err::FactorScore{f.at("score").get<double>(), f.at("weight").get<double>(),
                                f.value("norm", 1.0)};
    };
    if (j.contains("tasks"))
        for (const auto& t : j.at("tasks")) {
            std::array<err::FactorScore, 6> p{};
            const auto& prof = t.at("profile");
            if (prof.size() != p.size()) throw std::runtime_error("task profile needs 6 factors");
            for (std::size_t i = 0; i < p.size(); ++i) p[i] = factor(prof[i]);
            table.submit_task(t.at("id").get<std::string>(), err::TaskRankingProfile(p));
        }
    if (j.contains("nodes"))
        for (const auto& n : j.at("nodes")) {
            std::array<err::FactorScore, 3> p{};
            const auto& prof = n.at("profile");
            if (prof.size() != p.size()) throw std::runtime_error("node profile needs 3 factors");
            for (std::size_t i = 0; i < p.size(); ++i) p[i] = factor(prof[i]);
            table.submit_node(n.at("id").get<std::string>(), err::NodeRankingProfile(p));
        }
    write_out(out_path, table.serialize());
    return kExitOk;
}

int cmd_bft_select(const std::string& config_path, const std::string& out_path) {
    json wrapper = {{"bft", load_json(config_path)}};
    sim::ScenarioConfig cfg = sim::ScenarioConfig::from_json(wrapper);
    dabft::Evaluation ev = dabft::evaluate(cfg.bft.protocols, cfg.bft.prefs);
    std::size_t pick = dabft::select(ev.E);
    std::ostringstream os;
    for (std::size_t i = 0; i < cfg.bft.protocols.size(); ++i) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s C=%d P=%.6f E=%.6f\n",
                      cfg.bft.protocols[i].name.c_str(), ev.C[i], ev.P[i], ev.E[i]);
        os << buf;
    }
    os << "selected " << cfg.bft.protocols[pick].name << '\n';
    write_out(out_path, os.str());
    return kExitOk;
}

int cmd_xchain_demo(const std::optional<std::uint64_t>& seed, const std::string& out_path) {
    std::uint64_t t0 = resolve_seed(seed, 1) % 1000 + 1;
    std::ostringstream os;
    dsol::XChain a("A"), b("B");
    dsol::Bytes secret_a = {'p', 'l', 'a', 'n', 's'};
    dsol::Bytes secret_b = {'k', 'e', 'y', 's'};
    a.mint_token("XA", dsol::XTokenType::Collection, "alice", {'a'}, secret_a,
                 Cftx::from_units(10));
    b.mint_token("XB", dsol::XTokenType::Collection, "bob", {'b'}, secret_b, Cftx::from_units(12));
    os << "minted XA on A (base " << a.token("XA").base_id << ")\n";
    os << "minted XB on B (base " << b.token("XB").base_id << ")\n";

    auto res = dsol::xchain_exchange(a, "XA", b, "XB", t0, t0 + 1000);
    os << "exchange completed: shadow " << res.shadow_on_b << " on B, shadow " << res.shadow_on_a
       << " on A\n";
    bool single = dsol::single_normal_per_base({&a, &b});
    os << "single-active-instance invariant: " << (single ? "holds" : "violated") << '\n';

    dsol::xchain_return(b, res.shadow_on_b, a, "XA");
    dsol::xchain_return(a, res.shadow_on_a, b, "XB");
    os << "both tokens returned home; private data restored bit-identical\n";
    os << "single-active-instance invariant: "
       << (dsol::single_normal_per_base({&a, &b}) ? "holds" : "violated") << '\n';
    write_out(out_path, os.str());
    return single ? kExitOk : kExitInvariant;
}

int cmd_replay(const std::string& config_path, const std::optional<std::uint64_t>& seed,
               const std::string& out_path) {
    sim::ScenarioConfig cfg = sim::ScenarioConfig::from_json(load_json(config_path));
    cfg.seed = resolve_seed(seed, cfg.seed);
    sim::RunResult first = sim::run_scenario(cfg);
    sim::RunResult second = sim::run_scenario(cfg);
    bool identical = first.log == second.log && first.summary() == second.summary() &&
                     first.ledger_equal(second);
    std::ostringstream os;
    os << "replay " << (identical ? "identical" : "DIVERGED") << " seed=" << cfg.seed << '\n';
    os << "summary " << first.summary() << '\n';
    write_out(out_path, os.str());
    if (!identical) return kExitInvariant;
    return first.invariant_failures.empty() ? kExitOk : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BlockCloud protocol simulator"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    bool summary_only = false;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* c = cmd->add_option("--config", config_path, "scenario config file (JSON)");
        if (needs_config) c->required();
        cmd->add_option("--seed", seed, "RNG seed (overrides config and BLOCKCLOUD_SEED)");
        cmd->add_option("--out", out_path, "write output to a file instead of stdout");
        cmd->add_option("--jobs", jobs, "worker count (reserved, runs are single-threaded)");
    };

    CLI::App* sim_cmd = app.add_subcommand("sim", "simulation commands");
    CLI::App* sim_run = sim_cmd->add_subcommand("run", "run one scenario");
    add_common(sim_run, true);
    sim_run->add_flag("--summary", summary_only, "print only the summary line");

    CLI::App* econ_cmd = app.add_subcommand("econ", "economic scoring commands");
    CLI::App* econ_score = econ_cmd->add_subcommand("score", "score ranking profiles");
    add_common(econ_score, true);

    CLI::App* bft_cmd = app.add_subcommand("bft", "consensus selection commands");
    CLI::App* bft_select = bft_cmd->add_subcommand("select", "evaluate and pick a protocol");
    add_common(bft_select, true);

    CLI::App* xchain_cmd = app.add_subcommand("xchain", "cross-chain exchange commands");
    CLI::App* xchain_demo = xchain_cmd->add_subcommand("demo", "scripted two-chain exchange");
    add_common(xchain_demo, false);

    CLI::App* replay = app.add_subcommand("replay", "run a scenario twice and compare");
    add_common(replay, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;  // bad command line is a configuration error
    }

    try {
        if (sim_run->parsed()) return cmd_sim_run(config_path, seed, out_path, summary_only);
        if (econ_score->parsed()) return cmd_econ_score(config_path, out_path);
        if (bft_select->parsed()) return cmd_bft_select(config_path, out_path);
        if (xchain_demo->parsed()) return cmd_xchain_demo(seed, out_path);
        if (replay->parsed()) return cmd_replay(config_path, seed, out_path);
    } catch (const sim::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kExitConfig;
    } catch (const json::exception& e) {
        std::cerr << "config parse error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const dsol::ProtocolError& e) {
        std::cerr << "protocol violation: " << e.what() << '\n';
        return kExitInvariant;
    } catch (const std::domain_error& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return kExitInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
