#ifndef BLOCKCLOUD_CHAIN_HPP
#define BLOCKCLOUD_CHAIN_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockcloud/fixed.hpp"
#include "blockcloud/sha256.hpp"

namespace blockcloud::chain {

using Bytes = std::vector<std::uint8_t>;

inline Bytes to_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

/// Canonical byte writer: integers big-endian fixed width, byte fields
/// length-prefixed. The block hash is defined over exactly this encoding.
class Encoder {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 3; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 7; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof v);
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    void digest(const Digest& d) { out_.insert(out_.end(), d.begin(), d.end()); }
    void bytes(const Bytes& b) {
        u32(static_cast<std::uint32_t>(b.size()));
        out_.insert(out_.end(), b.begin(), b.end());
    }
    void str(const std::string& s) { bytes(to_bytes(s)); }

    const Bytes& data() const { return out_; }

private:
    Bytes out_;
};

enum class AssignType : std::uint8_t { Computing = 0, Storage = 1, Null = 2 };

/// The four assignment states, strictly ordered; a transaction may only move
/// forward one state at a time.
enum class TranState : std::uint8_t {
    Initiation = 0,
    Acceptance = 1,
    Completion = 2,
    Close = 3,
};

enum class VoteType : std::uint8_t { Prepare = 0, Commit = 1 };

struct Transaction {
    AssignType assign_type = AssignType::Null;
    std::string assign_id;
    Cftx assign_wealth;
    TranState tran_state = TranState::Initiation;
    std::string from;
    std::string to;
    Cftx value;
    Bytes data;  // opaque smart-contract payload
    Bytes signature;
    std::int64_t gas = 0;
    std::int64_t gas_price = 0;
    std::uint64_t nonce = 0;
    std::uint64_t t_timer = 0;

    void encode(Encoder& e) const {
        e.u8(static_cast<std::uint8_t>(assign_type));
        e.str(assign_id);
        e.i64(assign_wealth.micro());
        e.u8(static_cast<std::uint8_t>(tran_state));
        e.str(from);
        e.str(to);
        e.i64(value.micro());
        e.bytes(data);
        e.bytes(signature);
        e.i64(gas);
        e.i64(gas_price);
        e.u64(nonce);
        e.u64(t_timer);
    }

    Digest hash() const {
        Encoder e;
        encode(e);
        return Sha256::hash(e.data());
    }
};

struct Vote {
    std::string type_bft;
    std::string from;
    Digest vote_hash{};
    std::uint64_t hv = 0;   // 1-based height of the block voted for
    std::uint64_t hvs = 0;  // height of an ancestral block, hv > hvs
    VoteType vote_type = VoteType::Prepare;
    Bytes signature;

    void encode(Encoder& e) const {
        e.str(type_bft);
        e.str(from);
        e.digest(vote_hash);
        e.u64(hv);
        e.u64(hvs);
        e.u8(static_cast<std::uint8_t>(vote_type));
        e.bytes(signature);
    }
};

struct VersionCode {
    Digest hash{};
    Bytes code;
    std::uint64_t ini_block = 0;
    Bytes signature;
    std::uint64_t version = 0;
    std::uint64_t nonce = 0;

    void encode(Encoder& e) const {
        e.digest(hash);
        e.bytes(code);
        e.u64(ini_block);
        e.bytes(signature);
        e.u64(version);
        e.u64(nonce);
    }
};

struct BlockHeader {
    std::uint64_t height = 0;
    Digest parent_hash{};
    std::uint64_t ts = 0;  // simulated time, integer microseconds
    std::string tnad;      // tasking node address
    std::string thad;      // task handler address
    std::uint64_t epoch = 0;
    std::uint64_t b_timer = 0;
    std::uint64_t assign_num = 0;
    Digest state_root{};
    Digest tx_root{};
    Digest receipts_root{};
};

struct CftxIndex {
    Cftx global_wealth;
    Cftx task_wealth;
    Cftx th_wealth;
    double t_relevancy = 0.0;
};

/// Merkle root over an ordered list of digests. Odd levels duplicate the
/// last entry; the empty list maps to the all-zero sentinel.
inline Digest merkle_root(std::vector<Digest> level) {
    if (level.empty()) return Digest{};
    while (level.size() > 1) {
        if (level.size() % 2 != 0) level.push_back(level.back());
        std::vector<Digest> next;
        next.reserve(level.size() / 2);
        for (std::size_t i = 0; i < level.size(); i += 2) {
            Sha256 h;
            h.update(level[i].data(), level[i].size());
            h.update(level[i + 1].data(), level[i + 1].size());
            next.push_back(h.finish());
        }
        level = std::move(next);
    }
    return level[0];
}

struct Block {
    BlockHeader header;
    CftxIndex cftx_index;
    std::vector<Transaction> transactions;
    std::vector<Vote> votes;
    VersionCode version_code;

    Digest tx_merkle_root() const {
        std::vector<Digest> hashes;
        hashes.reserve(transactions.size());
        for (const auto& tx : transactions) hashes.push_back(tx.hash());
        return merkle_root(std::move(hashes));
    }

    std::uint64_t distinct_assignments() const {
        std::set<std::string> ids;
        for (const auto& tx : transactions) ids.insert(tx.assign_id);
        return ids.size();
    }

    /// Recomputes the derived header fields before sealing.
    void seal() {
        header.tx_root = tx_merkle_root();
        header.assign_num = distinct_assignments();
    }
};

inline Digest canonical_hash(const Block& b) {
    Encoder e;
    e.u64(b.header.height);
    e.digest(b.header.parent_hash);
    e.u64(b.header.ts);
    e.str(b.header.tnad);
    e.str(b.header.thad);
    e.u64(b.header.epoch);
    e.u64(b.header.b_timer);
    e.u64(b.header.assign_num);
    e.digest(b.header.state_root);
    e.digest(b.header.tx_root);
    e.digest(b.header.receipts_root);
    e.i64(b.cftx_index.global_wealth.micro());
    e.i64(b.cftx_index.task_wealth.micro());
    e.i64(b.cftx_index.th_wealth.micro());
    e.f64(b.cftx_index.t_relevancy);
    e.u32(static_cast<std::uint32_t>(b.transactions.size()));
    for (const auto& tx : b.transactions) tx.encode(e);
    e.u32(static_cast<std::uint32_t>(b.votes.size()));
    for (const auto& v : b.votes) v.encode(e);
    b.version_code.encode(e);
    return Sha256::hash(e.data());
}

/// Deterministic keyed-digest signer. It identifies equivocation in the
/// simulator; it is not adversarial cryptography.
struct Signer {
    std::string key;

    Bytes sign(const Bytes& message) const {
        Sha256 h;
        h.update(key.data(), key.size());
        h.update(message.data(), message.size());
        Digest d = h.finish();
        return Bytes(d.begin(), d.end());
    }

    bool verify(const Bytes& message, const Bytes& signature) const {
        return sign(message) == signature;
    }
};

inline Bytes vote_message(const Vote& v) {
    Vote unsigned_copy = v;
    unsigned_copy.signature.clear();
    Encoder e;
    unsigned_copy.encode(e);
    return e.data();
}

struct AssignmentSpec {
    std::string id;
    AssignType type = AssignType::Computing;
    Cftx wealth;
    Bytes data;
    std::string from;
    std::string to;
    std::uint64_t t_timer = 0;
    std::uint64_t nonce = 0;
};

struct TaskSpec {
    std::string task_id;
    std::string tasking_node;
    std::string task_handler;
    std::uint64_t ts = 0;
    std::uint64_t b_timer = 0;
    Cftx task_wealth;
    double relevancy = 0.0;
    std::vector<AssignmentSpec> assignments;
};

/// Builds the height-0 root block: one initiation transaction per assignment.
inline Block propose_root_block(const TaskSpec& spec) {
    if (spec.tasking_node.empty())
        throw std::invalid_argument("propose_root_block: missing tasking-node address");
    if (spec.task_handler.empty())
        throw std::invalid_argument("propose_root_block: missing task-handler address");
    if (spec.assignments.empty())
        throw std::invalid_argument("propose_root_block: task has no assignments");
    std::set<std::string> ids;
    for (const auto& a : spec.assignments)
        if (!ids.insert(a.id).second)
            throw std::invalid_argument("propose_root_block: duplicate assignment id " + a.id);

    Block b;
    b.header.height = 0;
    b.header.parent_hash = Digest{};
    b.header.ts = spec.ts;
    b.header.tnad = spec.tasking_node;
    b.header.thad = spec.task_handler;
    b.header.b_timer = spec.b_timer;
    b.cftx_index.task_wealth = spec.task_wealth;
    b.cftx_index.t_relevancy = spec.relevancy;
    for (const auto& a : spec.assignments) {
        Transaction tx;
        tx.assign_type = a.type;
        tx.assign_id = a.id;
        tx.assign_wealth = a.wealth;
        tx.tran_state = TranState::Initiation;
        tx.from = a.from.empty() ? spec.tasking_node : a.from;
        tx.to = a.to.empty() ? spec.task_handler : a.to;
        tx.data = a.data;
        tx.t_timer = a.t_timer;
        tx.nonce = a.nonce;
        b.transactions.push_back(std::move(tx));
    }
    b.seal();
    return b;
}

struct AssignmentUpdate {
    std::string assign_id;
    TranState new_state = TranState::Acceptance;
    bool abandon = false;  // terminal flag, freezes the assignment where it is
};

/// Per-task side chain. Closed chains are immutable.
class SideChain {
public:
    SideChain(std::string id, Block root) : id_(std::move(id)) {
        if (root.header.height != 0)
            throw std::invalid_argument("SideChain: root block must be height 0");
        for (const auto& tx : root.transactions)
            status_[tx.assign_id] = {tx.tran_state, false};
        blocks_.push_back(std::move(root));
    }

    const std::string& id() const { return id_; }
    bool closed() const { return closed_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    const Block& tip() const { return blocks_.back(); }

    TranState assignment_state(const std::string& id) const { return status_at(id).state; }
    bool assignment_abandoned(const std::string& id) const { return status_at(id).abandoned; }

    /// Appends a progress block whose transactions advance assignment states
    /// one step forward each.
    void append_status_block(const std::vector<AssignmentUpdate>& updates, std::uint64_t ts,
                             std::vector<Vote> votes = {}) {
        require_open();
        Block b = make_child(ts);
        apply_updates(b, updates);
        b.votes = std::move(votes);
        b.seal();
        link_and_push(std::move(b));
    }

    /// Applies the final updates, requires every assignment closed or
    /// abandoned, appends the final block and closes the chain permanently.
    void close_task(const std::vector<AssignmentUpdate>& final_updates, std::uint64_t ts,
                    std::vector<Vote> votes = {}) {
        require_open();
        for (const auto& u : final_updates) {
            const auto& st = status_at(u.assign_id);
            if (!u.abandon && !st.abandoned && st.state != TranState::Completion)
                throw std::domain_error("close_task: assignment " + u.assign_id +
                                        " not in completion state");
        }
        Block b = make_child(ts);
        apply_updates(b, final_updates);
        for (const auto& [id, st] : status_) {
            if (!st.abandoned && st.state != TranState::Close)
                throw std::domain_error("close_task: open assignment " + id + " remains");
        }
        b.votes = std::move(votes);
        b.seal();
        link_and_push(std::move(b));
        closed_ = true;
    }

    bool verify_linkage() const {
        for (std::size_t i = 1; i < blocks_.size(); ++i) {
            if (blocks_[i].header.height != blocks_[i - 1].header.height + 1) return false;
            if (blocks_[i].header.parent_hash != canonical_hash(blocks_[i - 1])) return false;
        }
        return true;
    }

    /// Line-delimited block-record dump for inspection.
    std::string serialize() const {
        std::string out;
        for (const auto& b : blocks_) {
            out += id_ + ' ' + std::to_string(b.header.height) + ' ' + hex(canonical_hash(b)) +
                   ' ' + std::to_string(b.header.ts) + ' ' + b.cftx_index.task_wealth.str() +
                   ' ' + std::to_string(b.transactions.size()) + '\n';
        }
        return out;
    }

private:
    struct Status {
        TranState state;
        bool abandoned;
    };

    const Status& status_at(const std::string& id) const {
        auto it = status_.find(id);
        if (it == status_.end())
            throw std::invalid_argument("SideChain: unknown assignment " + id);
        return it->second;
    }

    void require_open() const {
        if (closed_) throw std::domain_error("SideChain: chain " + id_ + " closed permanently");
    }

    Block make_child(std::uint64_t ts) const {
        Block b;
        const Block& parent = blocks_.back();
        b.header = parent.header;
        b.header.height = parent.header.height + 1;
        b.header.parent_hash = canonical_hash(parent);
        b.header.ts = ts;
        b.header.epoch = parent.header.epoch + 1;
        b.cftx_index = parent.cftx_index;
        return b;
    }

    void apply_updates(Block& b, const std::vector<AssignmentUpdate>& updates) {
        for (const auto& u : updates) {
            auto it = status_.find(u.assign_id);
            if (it == status_.end())
                throw std::invalid_argument("SideChain: unknown assignment " + u.assign_id);
            Status& st = it->second;
            if (st.abandoned)
                throw std::domain_error("SideChain: assignment " + u.assign_id + " abandoned");
            if (u.abandon) {
                st.abandoned = true;
            } else {
                auto cur = static_cast<std::uint8_t>(st.state);
                auto next = static_cast<std::uint8_t>(u.new_state);
                if (next != cur + 1)
                    throw std::domain_error("SideChain: assignment " + u.assign_id +
                                            " state must advance exactly one step");
                st.state = u.new_state;
            }
            Transaction tx;
            tx.assign_id = u.assign_id;
            tx.tran_state = st.state;
            tx.from = b.header.thad;
            tx.to = b.header.tnad;
            b.transactions.push_back(std::move(tx));
        }
    }

    void link_and_push(Block b) { blocks_.push_back(std::move(b)); }

    std::string id_;
    std::vector<Block> blocks_;
    std::map<std::string, Status> status_;
    bool closed_ = false;
};

/// A fork candidate: the forked block and its descendants.
struct Branch {
    std::vector<Block> blocks;

    Cftx wealth() const {
        Cftx w;
        for (const auto& b : blocks) w += b.cftx_index.task_wealth;
        return w;
    }
    Digest tip_hash() const { return canonical_hash(blocks.back()); }
};

/// Picks the branch with the highest summed task wealth; ties break to the
/// lexicographically smaller tip hash for deterministic replay.
inline std::size_t fork_select(const std::vector<Branch>& candidates) {
    if (candidates.empty()) throw std::invalid_argument("fork_select: no candidates");
    std::size_t best = 0;
    Cftx best_w = candidates[0].wealth();
    Digest best_tip = candidates[0].tip_hash();
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        Cftx w = candidates[i].wealth();
        Digest tip = candidates[i].tip_hash();
        if (w > best_w || (w == best_w && tip < best_tip)) {
            best = i;
            best_w = w;
            best_tip = tip;
        }
    }
    return best;
}

inline std::uint64_t quorum_threshold(std::uint64_t n_validators) {
    return (2 * n_validators) / 3 + 1;
}

enum class VoteStage : std::uint8_t { Prepare = 0, Commit = 1 };

/// Pure quorum predicate: a stage is reached at floor(2N/3) + 1 votes.
inline bool quorum(std::uint64_t n_validators, std::uint64_t votes_received, VoteStage) {
    if (votes_received > n_validators) throw std::invalid_argument("quorum: votes exceed N");
    return votes_received >= quorum_threshold(n_validators);
}

/// Per-block vote bookkeeping with stage ordering: Commit votes only count
/// once Prepare has reached quorum. prepare_quorum() doubles as the gate for
/// pipelining the next block's consensus.
class VoteTally {
public:
    explicit VoteTally(std::uint64_t n_validators) : n_(n_validators) {}

    void add_prepare(const std::string& validator) { prepare_.insert(validator); }

    void add_commit(const std::string& validator) {
        if (!prepare_quorum())
            throw std::domain_error("VoteTally: Commit before Prepare quorum");
        commit_.insert(validator);
    }

    bool prepare_quorum() const { return quorum(n_, prepare_.size(), VoteStage::Prepare); }
    bool commit_quorum() const {
        return prepare_quorum() && quorum(n_, commit_.size(), VoteStage::Commit);
    }

    std::uint64_t prepare_count() const { return prepare_.size(); }
    std::uint64_t commit_count() const { return commit_.size(); }

private:
    std::uint64_t n_;
    std::set<std::string> prepare_;
    std::set<std::string> commit_;
};

struct FlatEntry {
    std::string chain_id;
    Block block;
};

struct FlatChain {
    std::vector<FlatEntry> entries;  // ordered by (ts, chain id, height)
    Digest root;
};

/// Flattens the 2D structure into the 1D main-chain order and roots it with
/// a Merkle tree over the ordered block hashes.
inline FlatChain flatten(const std::vector<SideChain>& chains) {
    FlatChain flat;
    for (const auto& c : chains)
        for (const auto& b : c.blocks()) flat.entries.push_back({c.id(), b});
    std::stable_sort(flat.entries.begin(), flat.entries.end(), [](const auto& a, const auto& b) {
        if (a.block.header.ts != b.block.header.ts) return a.block.header.ts < b.block.header.ts;
        if (a.chain_id != b.chain_id) return a.chain_id < b.chain_id;
        return a.block.header.height < b.block.header.height;
    });
    std::vector<Digest> hashes;
    hashes.reserve(flat.entries.size());
    for (const auto& e : flat.entries) hashes.push_back(canonical_hash(e.block));
    flat.root = merkle_root(std::move(hashes));
    return flat;
}

/// Re-derives the per-chain block sequences from the flat order.
inline std::map<std::string, std::vector<Block>> reconstruct(const FlatChain& flat) {
    std::map<std::string, std::vector<Block>> chains;
    for (const auto& e : flat.entries) chains[e.chain_id].push_back(e.block);
    for (auto& [id, blocks] : chains) {
        std::sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) {
            return a.header.height < b.header.height;
        });
        for (std::size_t i = 1; i < blocks.size(); ++i)
            if (blocks[i].header.parent_hash != canonical_hash(blocks[i - 1]))
                throw std::domain_error("reconstruct: broken linkage in chain " + id);
    }
    return chains;
}

}  // namespace blockcloud::chain

#endif
