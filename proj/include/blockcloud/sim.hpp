#ifndef BLOCKCLOUD_SIM_HPP
#define BLOCKCLOUD_SIM_HPP

#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "blockcloud/chain.hpp"
#include "blockcloud/config.hpp"
#include "blockcloud/dabft_dcc.hpp"
#include "blockcloud/dabft_select.hpp"
#include "blockcloud/dpoev.hpp"
#include "blockcloud/econ_err.hpp"
#include "blockcloud/fixed.hpp"

namespace blockcloud::sim {

/// Two conflicting signed Prepare votes from one validator at one height.
struct EquivocationEvidence {
    std::string validator;
    std::string chain_id;
    std::uint64_t height = 0;
    chain::Vote first;
    chain::Vote second;

    bool valid() const {
        if (first.from != validator || second.from != validator) return false;
        if (first.hv != second.hv || first.vote_hash == second.vote_hash) return false;
        if (first.vote_type != chain::VoteType::Prepare ||
            second.vote_type != chain::VoteType::Prepare)
            return false;
        chain::Signer s{validator};
        return s.verify(chain::vote_message(first), first.signature) &&
               s.verify(chain::vote_message(second), second.signature);
    }
};

struct RunResult {
    std::vector<std::string> log;
    std::map<std::string, Cftx> wealth;
    std::vector<std::string> applied_transfers;
    dpoev::TokenSupply supply;
    dpoev::VatLedger vat;
    std::map<std::string, Cftx> cumulative_awards;
    std::vector<dpoev::AuditEvent> audit;
    std::vector<chain::SideChain> chains;
    std::map<std::string, std::vector<std::string>> shard_members;

    std::size_t finalized_blocks = 0;
    std::size_t closed_tasks = 0;
    std::size_t abandoned_assignments = 0;
    std::size_t total_transactions = 0;
    std::uint64_t end_time_us = 0;
    std::size_t tariff_events = 0;

    bool fork_detected = false;
    bool fake_block_finalized = false;
    bool conflict_tx_rejected = false;
    bool bribe_rejected = false;
    std::vector<EquivocationEvidence> evidence;
    std::vector<std::string> invariant_failures;

    double simulated_tps() const {
        if (end_time_us == 0) return 0.0;
        return static_cast<double>(total_transactions) * 1e6 / static_cast<double>(end_time_us);
    }

    std::string summary() const {
        char buf[512];
        std::snprintf(buf, sizeof buf,
                      "blocks=%zu tasks=%zu tx=%zu end_us=%llu tps=%.3f genesis=%s issued=%s "
                      "burned=%s circulating=%s fork=%d evidence=%zu tariffs=%zu invariants=%zu",
                      finalized_blocks, closed_tasks, total_transactions,
                      static_cast<unsigned long long>(end_time_us), simulated_tps(),
                      supply.genesis.str().c_str(), supply.issued.str().c_str(),
                      supply.burned.str().c_str(), supply.circulating().str().c_str(),
                      fork_detected ? 1 : 0, evidence.size(), tariff_events,
                      invariant_failures.size());
        return buf;
    }

    /// Economic-outcome equality: balances, applied transfers, task count.
    bool ledger_equal(const RunResult& o) const {
        return wealth == o.wealth && applied_transfers == o.applied_transfers &&
               closed_tasks == o.closed_tasks && supply.circulating() == o.supply.circulating();
    }
};

class Simulator {
public:
    explicit Simulator(ScenarioConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {}

    RunResult run() {
        setup();
        while (!queue_.empty()) {
            Evt e = queue_.top();
            queue_.pop();
            now_ = e.at;
            e.fn();
        }
        teardown();
        return std::move(res_);
    }

private:
    enum class Phase {
        Pending,
        RootConsensus,
        Distributing,
        AcceptConsensus,
        Executing,
        CompleteConsensus,
        CloseConsensus,
        Closed,
    };

    struct AssignRun {
        AssignmentConfig cfg;
        bool injected = false;
        bool rejected = false;  // conflicting transaction dropped by the handler
        bool abandoned = false;
        std::vector<std::string> ranked;
        std::set<std::string> offered;
        std::set<std::string> accepted;
        std::set<std::string> results;

        bool active() const { return !rejected; }
        bool needs_resource() const { return active() && cfg.type != chain::AssignType::Null; }
        bool ack_satisfied() const {
            return !needs_resource() || abandoned || accepted.size() >= cfg.nodes_required;
        }
        bool exec_done() const {
            if (!active() || abandoned) return true;
            if (cfg.type == chain::AssignType::Null) return true;
            for (const auto& v : accepted)
                if (!results.contains(v)) return false;
            return true;
        }
    };

    struct CandidateBlock {
        Digest h{};
        std::string variant;
        bool is_root = false;
        bool is_close = false;
        std::vector<chain::AssignmentUpdate> updates;
        chain::TaskSpec spec;
    };

    struct Round {
        std::map<Digest, CandidateBlock> candidates;
        std::map<Digest, std::set<std::string>> prepares;
        std::map<Digest, std::set<std::string>> commits;
        std::set<Digest> commit_started;
        std::set<Digest> finalized;
        std::map<std::string, Digest> lock;  // honest first-seen rule
        std::vector<chain::Vote> votes;
        bool continued = false;
        bool fake_injected = false;
    };

    struct TaskRun {
        const TaskConfig* cfg = nullptr;
        double score = 0.0;
        dpoev::ValidatorSet validators;
        std::string protocol;
        std::optional<chain::SideChain> chain;
        std::vector<AssignRun> assigns;
        Phase phase = Phase::Pending;
        std::map<std::uint64_t, Round> rounds;
        std::uint64_t next_height = 0;
        std::uint64_t ack_gen = 0;
        int retry_round = 0;
        std::uint64_t close_time = 0;
    };

    struct Evt {
        std::uint64_t at;
        std::uint64_t seq;
        std::function<void()> fn;
    };
    struct EvtAfter {
        bool operator()(const Evt& a, const Evt& b) const {
            if (a.at != b.at) return a.at > b.at;
            return a.seq > b.seq;
        }
    };

    // --- infrastructure ---

    std::uint64_t lat() {
        std::uint64_t span = cfg_.latency.max_us - cfg_.latency.min_us + 1;
        return cfg_.latency.min_us + rng_() % span;
    }

    void at(std::uint64_t when, std::function<void()> fn) {
        queue_.push({when, seq_++, std::move(fn)});
    }
    void after(std::uint64_t delay, std::function<void()> fn) { at(now_ + delay, std::move(fn)); }

    void log(const std::string& line) {
        res_.log.push_back("t=" + std::to_string(now_) + " " + line);
    }

    Behavior behavior(const std::string& id) const {
        const NodeConfig* n = cfg_.find_node(id);
        return n ? n->behavior : Behavior::Honest;
    }

    bool equivocates(const TaskRun& t, const std::string& id) const {
        return cfg_.attack.kind == AttackKind::Equivocation &&
               behavior(id) == Behavior::Equivocator &&
               std::find(t.validators.ids.begin(), t.validators.ids.end(), id) !=
                   t.validators.ids.end();
    }

    // --- setup / teardown ---

    void setup() {
        Cftx total;
        for (const auto& n : cfg_.nodes) {
            wealth_[n.id] = n.wealth;
            total += n.wealth;
        }
        supply_ = dpoev::genesis_issue(total);
        res_.audit.push_back({"genesis", "", total});

        for (const auto& p : cfg_.bft.protocols) {
            ProtoTrack tr;
            tr.state.emplace(static_cast<int>(p.kpi_row.size()), cfg_.dcc_params,
                             dcc::Mat::Identity(static_cast<int>(p.kpi_row.size()),
                                                static_cast<int>(p.kpi_row.size())));
            protos_[p.name] = std::move(tr);
        }

        tasks_.reserve(cfg_.tasks.size());
        for (const auto& tc : cfg_.tasks) {
            tasks_.emplace_back();
            TaskRun& t = tasks_.back();
            t.cfg = &tc;
            for (const auto& ac : tc.assignments) t.assigns.push_back({ac});
            if (cfg_.attack.kind == AttackKind::DoubleSpend &&
                tc.tasking_node == cfg_.attack.attacker) {
                for (const auto& ac : tc.assignments) {
                    if (ac.type != chain::AssignType::Null) continue;
                    AssignmentConfig dup = ac;
                    dup.id = ac.id + "-dup";
                    dup.to = cfg_.attack.attacker;  // re-spend the same nonce back to self
                    t.assigns.push_back({dup, true});
                    break;
                }
            }
            std::size_t idx = tasks_.size() - 1;
            at(tc.init_at_us, [this, idx] { task_init(tasks_[idx]); });
        }
    }

    void teardown() {
        res_.end_time_us = now_;
        res_.wealth = wealth_;
        res_.supply = supply_;
        res_.vat = vat_;
        for (auto& t : tasks_) {
            if (t.chain) {
                for (const auto& b : t.chain->blocks())
                    res_.total_transactions += b.transactions.size();
                res_.chains.push_back(*t.chain);
            }
        }
        extract_evidence();
        if (cfg_.inject_fault == "conservation" && !res_.wealth.empty())
            res_.wealth.begin()->second += Cftx::from_micro(1);
        check_invariants();
        log("run-end " + res_.summary());
    }

    void check_invariants() {
        auto fail = [this](const std::string& m) { res_.invariant_failures.push_back(m); };

        Cftx total;
        for (const auto& [_, w] : res_.wealth) total += w;
        if (total != res_.supply.circulating())
            fail("conservation: node balances " + total.str() + " != circulating " +
                 res_.supply.circulating().str());

        Cftx issued, burned;
        for (const auto& ev : res_.audit) {
            if (ev.type == "issue") issued += ev.amount;
            if (ev.type == "burn") burned += ev.amount;
        }
        if (issued != res_.supply.issued || burned != res_.supply.burned)
            fail("conservation: audit trail does not reproduce the supply book");

        bool has_silent = false;
        for (const auto& n : cfg_.nodes)
            if (n.behavior == Behavior::Silent) has_silent = true;

        for (const auto& t : tasks_) {
            if (t.phase != Phase::Closed) {
                fail("liveness: task " + t.cfg->id + " never closed");
                continue;
            }
            if (cfg_.attack.kind == AttackKind::None && !has_silent &&
                t.close_time > t.cfg->init_at_us + t.cfg->b_timer_us)
                fail("liveness: task " + t.cfg->id + " missed its block timer");
        }
        if (cfg_.attack.kind == AttackKind::None && res_.fork_detected)
            fail("safety: conflicting finalization without an attack");
        for (const auto& c : res_.chains) {
            if (!c.verify_linkage()) fail("chain " + c.id() + ": broken linkage");
            if (!c.closed()) fail("chain " + c.id() + ": left open");
        }
        if (open_shards_ != 0) fail("shards: " + std::to_string(open_shards_) + " left open");
    }

    void extract_evidence() {
        for (const auto& t : tasks_) {
            for (const auto& [height, round] : t.rounds) {
                std::map<std::string, std::map<Digest, chain::Vote>> by_validator;
                for (const auto& v : round.votes)
                    if (v.vote_type == chain::VoteType::Prepare)
                        by_validator[v.from].emplace(v.vote_hash, v);
                for (const auto& [validator, votes] : by_validator) {
                    if (votes.size() < 2) continue;
                    auto it = votes.begin();
                    EquivocationEvidence ev;
                    ev.validator = validator;
                    ev.chain_id = t.cfg->id;
                    ev.height = height;
                    ev.first = it->second;
                    ev.second = std::next(it)->second;
                    res_.evidence.push_back(std::move(ev));
                }
            }
        }
    }

    // --- task lifecycle ---

    void task_init(TaskRun& t) {
        err::TaskRankingProfile profile(t.cfg->profile);
        t.score = err::task_err_score(profile);

        std::vector<dpoev::ServiceCandidate> supers;
        for (const auto& n : cfg_.nodes) {
            if (n.role != NodeRole::Super || n.id == t.cfg->tasking_node) continue;
            err::NodeRankingProfile np(n.profile);
            supers.push_back({n.id, err::node_err_score(np), wealth_[n.id]});
        }
        t.validators = dpoev::select_service_nodes(t.score, supers, cfg_.validator_set_size);
        res_.shard_members[t.cfg->id] = t.validators.ids;
        ++open_shards_;

        t.protocol = select_protocol();
        log("task=" + t.cfg->id + " event=init score=" + std::to_string(t.score) +
            " handler=" + t.validators.handler + " protocol=" + t.protocol +
            " validators=" + std::to_string(t.validators.ids.size()));

        if (cfg_.attack.kind == AttackKind::Fifty1 && !cfg_.attack.attacker.empty()) {
            for (const auto& v : t.validators.ids) {
                if (v == cfg_.attack.attacker) continue;
                log("task=" + t.cfg->id + " event=bribe-rejected from=" + cfg_.attack.attacker +
                    " to=" + v);
                res_.bribe_rejected = true;
            }
        }

        t.phase = Phase::RootConsensus;
        after(lat(), [this, &t] { propose_root(t); });
    }

    void propose_root(TaskRun& t) {
        chain::TaskSpec spec;
        spec.task_id = t.cfg->id;
        spec.tasking_node = t.cfg->tasking_node;
        spec.task_handler = t.validators.handler;
        spec.ts = now_;
        spec.b_timer = t.cfg->b_timer_us;
        spec.task_wealth = t.cfg->wealth;
        spec.relevancy = t.score;

        // The handler drops conflicting transfers: same sender and nonce.
        std::set<std::pair<std::string, std::uint64_t>> seen;
        for (auto& a : t.assigns) {
            if (a.cfg.type == chain::AssignType::Null) {
                if (!seen.insert({a.cfg.from, a.cfg.nonce}).second) {
                    a.rejected = true;
                    res_.conflict_tx_rejected = true;
                    log("task=" + t.cfg->id + " event=conflict-rejected assign=" + a.cfg.id +
                        " from=" + a.cfg.from + " nonce=" + std::to_string(a.cfg.nonce));
                    continue;
                }
            }
            chain::AssignmentSpec as;
            as.id = a.cfg.id;
            as.type = a.cfg.type;
            as.wealth = a.cfg.wealth;
            as.from = a.cfg.from;
            as.to = a.cfg.to;
            as.nonce = a.cfg.nonce;
            spec.assignments.push_back(std::move(as));
        }

        bool split = equivocates(t, t.validators.handler);
        std::vector<CandidateBlock> cands;
        CandidateBlock a;
        a.is_root = true;
        a.spec = spec;
        a.variant = split ? "A" : "";
        cands.push_back(a);
        if (split) {
            CandidateBlock b = a;
            b.variant = "B";
            b.spec.ts = now_ + 1;  // equivocating twin differs in timestamp
            cands.push_back(b);
        }
        start_consensus(t, 0, cands, split);
    }

    Digest candidate_hash(const TaskRun& t, std::uint64_t height, const CandidateBlock& c) const {
        chain::Encoder e;
        e.str(t.cfg->id);
        e.u64(height);
        e.str(c.variant);
        e.u8(c.is_root ? 1 : 0);
        e.u8(c.is_close ? 1 : 0);
        e.u64(c.spec.ts);
        for (const auto& u : c.updates) {
            e.str(u.assign_id);
            e.u8(static_cast<std::uint8_t>(u.new_state));
            e.u8(u.abandon ? 1 : 0);
        }
        return Sha256::hash(e.data());
    }

    void start_consensus(TaskRun& t, std::uint64_t height, std::vector<CandidateBlock> cands,
                         bool split_honest) {
        Round& r = t.rounds[height];
        for (auto& c : cands) {
            c.h = candidate_hash(t, height, c);
            r.candidates[c.h] = c;
        }
        std::vector<std::string> honest, faulty;
        for (const auto& v : t.validators.ids)
            (equivocates(t, v) ? faulty : honest).push_back(v);

        if (split_honest && cands.size() == 2) {
            std::size_t half = (honest.size() + 1) / 2;
            for (std::size_t i = 0; i < honest.size(); ++i)
                deliver_to(t, height, honest[i], cands[i < half ? 0 : 1].h);
            for (const auto& v : faulty)
                for (const auto& c : cands) deliver_to(t, height, v, c.h);
        } else {
            for (const auto& v : t.validators.ids)
                for (const auto& c : cands) deliver_to(t, height, v, c.h);
        }
    }

    void deliver_to(TaskRun& t, std::uint64_t height, const std::string& v, Digest h) {
        after(lat(), [this, &t, height, v, h] { on_proposal(t, height, v, h); });
    }

    void on_proposal(TaskRun& t, std::uint64_t height, const std::string& v, Digest h) {
        Round& r = t.rounds[height];
        if (behavior(v) == Behavior::Silent) return;

        if (cfg_.attack.kind == AttackKind::ShortRange && v == cfg_.attack.attacker &&
            height >= 1 && !r.fake_injected) {
            r.fake_injected = true;
            CandidateBlock fake = r.candidates.at(h);
            fake.variant = "fake";
            fake.h = candidate_hash(t, height, fake);
            r.candidates[fake.h] = fake;
            log("task=" + t.cfg->id + " event=fake-proposal height=" + std::to_string(height) +
                " by=" + v);
            for (const auto& u : t.validators.ids) deliver_to(t, height, u, fake.h);
            send_prepare(t, height, v, fake.h);  // the attacker endorses its own fake
        }

        if (equivocates(t, v)) {
            send_prepare(t, height, v, h);
            return;
        }
        if (!r.lock.contains(v)) {
            r.lock[v] = h;
            send_prepare(t, height, v, h);
        }
    }

    chain::Vote make_vote(const TaskRun& t, std::uint64_t height, const std::string& v, Digest h,
                          chain::VoteType type) const {
        chain::Vote vote;
        vote.type_bft = t.protocol;
        vote.from = v;
        vote.vote_hash = h;
        vote.hv = height + 1;
        vote.hvs = height;
        vote.vote_type = type;
        vote.signature = chain::Signer{v}.sign(chain::vote_message(vote));
        return vote;
    }

    void send_prepare(TaskRun& t, std::uint64_t height, const std::string& v, Digest h) {
        chain::Vote vote = make_vote(t, height, v, h, chain::VoteType::Prepare);
        after(lat(), [this, &t, height, v, h, vote] { on_prepare(t, height, v, h, vote); });
    }

    void on_prepare(TaskRun& t, std::uint64_t height, const std::string& v, Digest h,
                    const chain::Vote& vote) {
        Round& r = t.rounds[height];
        r.votes.push_back(vote);
        r.prepares[h].insert(v);
        std::uint64_t q = chain::quorum_threshold(t.validators.ids.size());
        if (r.prepares[h].size() >= q && !r.commit_started.contains(h)) {
            r.commit_started.insert(h);
            for (const auto& u : t.validators.ids)
                after(lat(), [this, &t, height, u, h] { on_prepare_quorum(t, height, u, h); });
        }
    }

    void on_prepare_quorum(TaskRun& t, std::uint64_t height, const std::string& u, Digest h) {
        Round& r = t.rounds[height];
        if (behavior(u) == Behavior::Silent) return;
        if (equivocates(t, u)) {
            send_commit(t, height, u, h);
            return;
        }
        if (!r.lock.contains(u)) r.lock[u] = h;  // adopt the quorum value
        if (r.lock[u] == h) send_commit(t, height, u, h);
    }

    void send_commit(TaskRun& t, std::uint64_t height, const std::string& u, Digest h) {
        chain::Vote vote = make_vote(t, height, u, h, chain::VoteType::Commit);
        after(lat(), [this, &t, height, u, h, vote] { on_commit(t, height, u, h, vote); });
    }

    void on_commit(TaskRun& t, std::uint64_t height, const std::string& u, Digest h,
                   const chain::Vote& vote) {
        Round& r = t.rounds[height];
        r.votes.push_back(vote);
        r.commits[h].insert(u);
        std::uint64_t q = chain::quorum_threshold(t.validators.ids.size());
        if (r.commits[h].size() >= q && !r.finalized.contains(h)) finalize(t, height, h);
    }

    std::vector<chain::Vote> collect_votes(const Round& r, Digest h) const {
        std::vector<chain::Vote> out;
        for (const auto& v : r.votes)
            if (v.vote_hash == h) out.push_back(v);
        return out;
    }

    void finalize(TaskRun& t, std::uint64_t height, Digest h) {
        Round& r = t.rounds[height];
        r.finalized.insert(h);
        const CandidateBlock& cand = r.candidates.at(h);
        ++res_.finalized_blocks;
        if (cand.variant == "fake") res_.fake_block_finalized = true;
        if (r.finalized.size() > 1) {
            res_.fork_detected = true;
            log("task=" + t.cfg->id + " event=conflicting-finalization height=" +
                std::to_string(height) + " variant=" + cand.variant);
        }
        log("task=" + t.cfg->id + " event=finalized height=" + std::to_string(height) +
            " hash=" + hex(h).substr(0, 12) +
            (cand.variant.empty() ? "" : " variant=" + cand.variant));
        if (r.continued) return;
        r.continued = true;

        if (cand.is_root) {
            chain::Block root = chain::propose_root_block(cand.spec);
            root.votes = collect_votes(r, h);
            root.seal();
            t.chain.emplace(t.cfg->id, std::move(root));
            t.next_height = 1;
            after(lat(), [this, &t] { start_distribution(t); });
            return;
        }
        if (cand.is_close) {
            t.chain->close_task(cand.updates, now_, collect_votes(r, h));
            finish_task(t);
            return;
        }
        t.chain->append_status_block(cand.updates, now_, collect_votes(r, h));
        ++t.next_height;
        if (t.phase == Phase::AcceptConsensus) {
            after(lat(), [this, &t] { start_execution(t); });
        } else if (t.phase == Phase::CompleteConsensus) {
            after(lat(), [this, &t] { propose_close(t); });
        }
    }

    // --- assignment distribution ---

    std::vector<std::string> ranked_resources(chain::AssignType type, double task_score) {
        NodeRole want =
            type == chain::AssignType::Computing ? NodeRole::Computing : NodeRole::Storage;
        std::vector<err::Candidate> cands;
        for (const auto& n : cfg_.nodes) {
            if (n.role != want) continue;
            err::NodeRankingProfile np(n.profile);
            cands.push_back({n.id, err::node_err_score(np), wealth_[n.id]});
        }
        std::sort(cands.begin(), cands.end(), [&](const auto& a, const auto& b) {
            return err::closer_candidate(task_score, a, b);
        });
        std::vector<std::string> out;
        for (const auto& c : cands) out.push_back(c.id);
        return out;
    }

    void start_distribution(TaskRun& t) {
        t.phase = Phase::Distributing;
        bool any = false;
        for (auto& a : t.assigns) {
            if (!a.needs_resource()) continue;
            any = true;
            a.ranked = ranked_resources(a.cfg.type, t.score);
            offer_more(t, a);
        }
        if (!any) {
            propose_acceptance(t);
            return;
        }
        arm_ack_timer(t);
    }

    void arm_ack_timer(TaskRun& t) {
        std::uint64_t gen = ++t.ack_gen;
        after(cfg_.ack_timeout_us, [this, &t, gen] { on_ack_timer(t, gen); });
    }

    void offer_more(TaskRun& t, AssignRun& a) {
        std::size_t want = a.cfg.nodes_required - a.accepted.size();
        for (const auto& v : a.ranked) {
            if (want == 0) break;
            if (a.offered.contains(v)) continue;
            a.offered.insert(v);
            --want;
            log("task=" + t.cfg->id + " event=offer assign=" + a.cfg.id + " to=" + v);
            after(lat(), [this, &t, &a, v] { on_offer(t, a, v); });
        }
    }

    void on_offer(TaskRun& t, AssignRun& a, const std::string& v) {
        if (behavior(v) == Behavior::Silent) return;
        after(lat(), [this, &t, &a, v] { on_ack(t, a, v); });
    }

    void on_ack(TaskRun& t, AssignRun& a, const std::string& v) {
        if (t.phase != Phase::Distributing || a.abandoned) return;
        a.accepted.insert(v);
        log("task=" + t.cfg->id + " event=ack assign=" + a.cfg.id + " from=" + v);
        if (distribution_complete(t)) propose_acceptance(t);
    }

    bool distribution_complete(const TaskRun& t) const {
        for (const auto& a : t.assigns)
            if (a.active() && !a.ack_satisfied()) return false;
        return true;
    }

    void on_ack_timer(TaskRun& t, std::uint64_t gen) {
        if (gen != t.ack_gen || t.phase != Phase::Distributing) return;
        bool pending = false;
        for (auto& a : t.assigns) {
            if (!a.active() || a.ack_satisfied()) continue;
            if (t.retry_round < cfg_.ack_retries) {
                log("task=" + t.cfg->id + " event=retry assign=" + a.cfg.id +
                    " round=" + std::to_string(t.retry_round + 1));
                offer_more(t, a);
                pending = true;
            } else {
                log("task=" + t.cfg->id + " event=tasking-node-query assign=" + a.cfg.id);
                a.abandoned = true;
                ++res_.abandoned_assignments;
                log("task=" + t.cfg->id + " event=abandoned assign=" + a.cfg.id);
            }
        }
        if (pending) {
            ++t.retry_round;
            arm_ack_timer(t);
            return;
        }
        if (distribution_complete(t)) propose_acceptance(t);
    }

    // --- execution and closing ---

    void propose_acceptance(TaskRun& t) {
        ++t.ack_gen;  // cancels any armed timer
        t.phase = Phase::AcceptConsensus;
        CandidateBlock c;
        for (const auto& a : t.assigns) {
            if (!a.active()) continue;
            if (a.abandoned)
                c.updates.push_back({a.cfg.id, chain::TranState::Acceptance, true});
            else
                c.updates.push_back({a.cfg.id, chain::TranState::Acceptance, false});
        }
        start_consensus(t, t.next_height, {c}, false);
    }

    void start_execution(TaskRun& t) {
        t.phase = Phase::Executing;
        bool all_abandoned = true;
        for (const auto& a : t.assigns)
            if (a.active() && !a.abandoned) all_abandoned = false;
        if (all_abandoned) {
            propose_close(t);
            return;
        }
        for (auto& a : t.assigns) {
            if (!a.active() || a.abandoned || a.cfg.type == chain::AssignType::Null) continue;
            for (const auto& v : a.accepted) {
                after(a.cfg.exec_us + lat(), [this, &t, &a, v] { on_result(t, a, v); });
            }
        }
        if (execution_complete(t)) propose_completion(t);
    }

    bool execution_complete(const TaskRun& t) const {
        for (const auto& a : t.assigns)
            if (!a.exec_done()) return false;
        return true;
    }

    void on_result(TaskRun& t, AssignRun& a, const std::string& v) {
        if (t.phase != Phase::Executing) return;
        a.results.insert(v);
        log("task=" + t.cfg->id + " event=result assign=" + a.cfg.id + " from=" + v);
        if (execution_complete(t)) propose_completion(t);
    }

    void propose_completion(TaskRun& t) {
        t.phase = Phase::CompleteConsensus;
        CandidateBlock c;
        for (const auto& a : t.assigns)
            if (a.active() && !a.abandoned)
                c.updates.push_back({a.cfg.id, chain::TranState::Completion, false});
        start_consensus(t, t.next_height, {c}, false);
    }

    void propose_close(TaskRun& t) {
        t.phase = Phase::CloseConsensus;
        CandidateBlock c;
        c.is_close = true;
        bool any = false;
        for (const auto& a : t.assigns) {
            if (a.active() && !a.abandoned) {
                c.updates.push_back({a.cfg.id, chain::TranState::Close, false});
                any = true;
            }
        }
        c.spec.ts = any ? 0 : 1;  // distinguishes the all-abandoned close candidate
        start_consensus(t, t.next_height, {c}, false);
    }

    void finish_task(TaskRun& t) {
        t.phase = Phase::Closed;
        t.close_time = now_;
        --open_shards_;
        ++res_.closed_tasks;
        settle_rewards(t);
        apply_transfers(t);
        log("task=" + t.cfg->id + " event=closed height=" +
            std::to_string(t.chain->tip().header.height));
    }

    void settle_rewards(TaskRun& t) {
        Cftx increment;
        for (const auto& a : t.assigns)
            if (a.active() && !a.abandoned) increment += a.cfg.wealth;
        if (increment == kZeroCftx) return;

        Cftx issued_before = supply_.issued;
        dpoev::task_issue(supply_, increment, vat_, &res_.audit);
        Cftx net = supply_.issued - issued_before;
        if (net == kZeroCftx) return;

        dpoev::RewardSplit split;
        split.task_wealth = net;
        split.super_share = cfg_.policy.super_share;
        for (const auto& v : t.validators.ids)
            split.super_weights[v] = v == t.validators.handler ? cfg_.handler_weight : 1.0;
        for (const auto& a : t.assigns) {
            if (!a.active() || a.abandoned || a.cfg.type == chain::AssignType::Null) continue;
            for (const auto& v : a.accepted) split.resource_weights[v] += 1.0;
        }

        Cftx dust;
        auto awards = dpoev::distribute_rewards(split, &dust, &res_.audit);
        std::size_t tariff_before = 0;
        for (const auto& ev : res_.audit)
            if (ev.type == "tariff") ++tariff_before;
        Cftx held;
        auto final_awards =
            dpoev::apply_fairness_tariff(awards, cfg_.policy.dominance_threshold,
                                         cfg_.policy.tariff_rate, cumulative_, &held, &res_.audit);
        std::size_t tariff_after = 0;
        for (const auto& ev : res_.audit)
            if (ev.type == "tariff") ++tariff_after;
        if (tariff_after > tariff_before) {
            res_.tariff_events += tariff_after - tariff_before;
            log("task=" + t.cfg->id + " event=fairness-tariff levies=" +
                std::to_string(tariff_after - tariff_before));
        }

        Cftx paid;
        for (const auto& [id, amt] : final_awards) {
            wealth_[id] += amt;
            cumulative_[id] += amt;
            paid += amt;
        }
        if (paid + dust + held != net)
            res_.invariant_failures.push_back("rewards: task " + t.cfg->id +
                                              " split does not add up");
        dpoev::true_up(supply_, dust + held, &res_.audit);
        log("task=" + t.cfg->id + " event=rewards issued=" + net.str() + " paid=" + paid.str() +
            " burned=" + (dust + held).str());
    }

    void apply_transfers(TaskRun& t) {
        for (const auto& a : t.assigns) {
            if (!a.active() || a.abandoned || a.cfg.type != chain::AssignType::Null) continue;
            if (a.cfg.from.empty() || a.cfg.to.empty() || a.cfg.value == kZeroCftx) continue;
            if (wealth_[a.cfg.from] < a.cfg.value) {
                log("task=" + t.cfg->id + " event=transfer-rejected assign=" + a.cfg.id);
                continue;
            }
            wealth_[a.cfg.from] -= a.cfg.value;
            wealth_[a.cfg.to] += a.cfg.value;
            std::string rec = a.cfg.from + "->" + a.cfg.to + " " + a.cfg.value.str() +
                              " nonce=" + std::to_string(a.cfg.nonce);
            res_.applied_transfers.push_back(rec);
            log("task=" + t.cfg->id + " event=transfer " + rec);
        }
    }

    // --- adaptive protocol selection ---

    struct ProtoTrack {
        std::vector<dcc::Vec> history;
        std::optional<dcc::DccState> state;
        std::optional<dcc::Vec> last_predicted;
    };

    std::string select_protocol() {
        std::vector<dabft::ProtocolProfile> refreshed = cfg_.bft.protocols;
        for (auto& p : refreshed) {
            ProtoTrack& tr = protos_[p.name];
            // observations are tracked relative to the configured baseline so
            // the variance recursion operates on bounded fluctuations
            dcc::Vec observed(static_cast<int>(p.kpi_row.size()));
            for (std::size_t j = 0; j < p.kpi_row.size(); ++j) {
                double u = (static_cast<double>(rng_() % 2001) - 1000.0) / 1000.0;
                observed[static_cast<int>(j)] = 1.0 + 0.05 * u;
            }
            if (tr.last_predicted) {
                dcc::KpiResidual r = dcc::residual(*tr.last_predicted, observed);
                dcc::DccOutput out = dcc::dcc_step(*tr.state, r);
                tr.history.push_back(observed);
                dcc::Vec base = dcc::base_predict(tr.history, cfg_.ema_alpha);
                dcc::Vec pred = dcc::predict(base, out);
                tr.last_predicted = pred;
                for (std::size_t j = 0; j < p.kpi_row.size(); ++j)
                    p.kpi_row[j] *= std::max(0.0, pred[static_cast<int>(j)]);
            } else {
                tr.history.push_back(observed);
                tr.last_predicted = observed;
            }
        }
        dabft::Evaluation ev = dabft::evaluate(refreshed, cfg_.bft.prefs);
        return refreshed[dabft::select(ev.E)].name;
    }

    ScenarioConfig cfg_;
    std::mt19937_64 rng_;
    std::priority_queue<Evt, std::vector<Evt>, EvtAfter> queue_;
    std::uint64_t now_ = 0;
    std::uint64_t seq_ = 0;
    std::vector<TaskRun> tasks_;
    std::map<std::string, Cftx> wealth_;
    std::map<std::string, Cftx> cumulative_;
    dpoev::TokenSupply supply_;
    dpoev::VatLedger vat_;
    std::map<std::string, ProtoTrack> protos_;
    int open_shards_ = 0;
    RunResult res_;
};

inline RunResult run_scenario(const ScenarioConfig& cfg) { return Simulator(cfg).run(); }

/// Outcome of one Byzantine consensus trial.
struct FaultTrial {
    bool forked = false;
    bool evidence_ok = false;
};

/// Builds an n-validator single-task scenario where `byz` validators,
/// including the proposer, equivocate, then reports whether two conflicting
/// blocks finalized and whether signed double-vote evidence was recovered.
inline FaultTrial run_fault_trial(std::size_t n_validators, std::size_t byz, std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.validator_set_size = n_validators;
    cfg.attack.kind = AttackKind::Equivocation;
    cfg.bft = ScenarioConfig::default_bft();

    auto profile3 = [](double s) {
        std::array<err::FactorScore, 3> p{};
        for (auto& f : p) f = {s, 1.0 / 3.0, 1.0};
        return p;
    };
    for (std::size_t i = 0; i < n_validators; ++i) {
        NodeConfig n;
        char id[16];
        std::snprintf(id, sizeof id, "v%02zu", i);
        n.id = id;
        n.role = NodeRole::Super;
        // equivocators get the lowest wealth so one of them is the handler
        n.wealth = Cftx::from_units(static_cast<std::int64_t>(i < byz ? 10 + i : 100 + i));
        n.profile = profile3(0.5);
        n.behavior = i < byz ? Behavior::Equivocator : Behavior::Honest;
        cfg.nodes.push_back(std::move(n));
    }
    NodeConfig tasker{"tasker", NodeRole::Tasking, Cftx::from_units(50), profile3(0.5),
                      Behavior::Honest};
    NodeConfig worker{"worker", NodeRole::Computing, Cftx::from_units(50), profile3(0.5),
                      Behavior::Honest};
    cfg.nodes.push_back(tasker);
    cfg.nodes.push_back(worker);

    TaskConfig t;
    t.id = "trial";
    t.tasking_node = "tasker";
    t.wealth = Cftx::from_units(100);
    for (auto& f : t.profile) f = {0.5, 1.0 / 6.0, 1.0};
    AssignmentConfig a;
    a.id = "a0";
    a.type = chain::AssignType::Computing;
    a.wealth = Cftx::from_units(100);
    t.assignments.push_back(a);
    cfg.tasks.push_back(std::move(t));
    cfg.validate();

    RunResult res = run_scenario(cfg);
    FaultTrial out;
    out.forked = res.fork_detected;
    out.evidence_ok = false;
    for (const auto& ev : res.evidence)
        if (ev.valid()) out.evidence_ok = true;
    return out;
}

/// Repeated shard formation over randomized task profiles; returns the
/// fraction of shards one fixed node ends up in.
inline double shard_membership_fraction(std::size_t n_supers, std::size_t shard_size,
                                        std::size_t target_index, std::size_t trials,
                                        std::uint64_t seed) {
    if (target_index >= n_supers) throw std::invalid_argument("target index out of range");
    std::mt19937_64 rng(seed);
    std::vector<dpoev::ServiceCandidate> supers;
    for (std::size_t i = 0; i < n_supers; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "s%02zu", i);
        double score = static_cast<double>(i + 1) / static_cast<double>(n_supers + 1);
        supers.push_back({id, score, Cftx::from_units(static_cast<std::int64_t>(100 + i))});
    }
    std::string target = supers[target_index].id;
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        double task_score = static_cast<double>(rng() % 10001) / 10000.0;
        auto set = dpoev::select_service_nodes(task_score, supers, shard_size);
        for (const auto& id : set.ids)
            if (id == target) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
}

}  // namespace blockcloud::sim

#endif
