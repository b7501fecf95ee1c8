#ifndef BLOCKCLOUD_DSOL_HPP
#define BLOCKCLOUD_DSOL_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockcloud/fixed.hpp"
#include "blockcloud/sha256.hpp"

namespace blockcloud::dsol {

using Bytes = std::vector<std::uint8_t>;

/// One indivisible ownership token of a DSOL.
struct DsolToken {
    std::string serial;  // e.g. DSOL1000
    std::string owner;
    Cftx book_value;
};

/// A distributed industry solution with its fixed set of unique tokens.
/// Token book values always sum to the DSOL book value exactly.
class Dsol {
public:
    Dsol(std::string id, Cftx initial_book_value, std::size_t token_count = 1000,
         std::string initial_owner = "founder")
        : id_(std::move(id)), book_value_(initial_book_value) {
        if (token_count == 0) throw std::invalid_argument("Dsol: token count must be > 0");
        if (initial_book_value.is_negative())
            throw std::invalid_argument("Dsol: negative book value");
        tokens_.reserve(token_count);
        for (std::size_t i = 0; i < token_count; ++i)
            tokens_.push_back({id_ + std::to_string(1000 + i), initial_owner, kZeroCftx});
        respread_uniform();
    }

    const std::string& id() const { return id_; }
    Cftx book_value() const { return book_value_; }
    double market_multiplier() const { return market_multiplier_; }
    void set_market_multiplier(double m) {
        if (!(m > 0.0)) throw std::invalid_argument("Dsol: multiplier must be positive");
        market_multiplier_ = m;
    }
    const std::vector<DsolToken>& tokens() const { return tokens_; }

    /// Books a task's incremental value; per-token values respread uniformly
    /// unless explicit weights were set.
    void record_task_outcome(Cftx increment) {
        Cftx next = book_value_ + increment;
        if (next.is_negative()) throw std::domain_error("Dsol: book value would go negative");
        book_value_ = next;
        if (!custom_weights_) respread_uniform();
    }

    /// Sets explicit per-token book values; they must sum to the book value.
    void set_token_values(const std::vector<Cftx>& values) {
        if (values.size() != tokens_.size())
            throw std::invalid_argument("Dsol: value count mismatch");
        Cftx sum;
        for (Cftx v : values) {
            if (v.is_negative()) throw std::invalid_argument("Dsol: negative token value");
            sum += v;
        }
        if (sum != book_value_)
            throw std::invalid_argument("Dsol: token values must sum to book value");
        for (std::size_t i = 0; i < values.size(); ++i) tokens_[i].book_value = values[i];
        custom_weights_ = true;
    }

    Cftx market_value() const { return book_value_.scaled_round(market_multiplier_); }

    Cftx token_sum() const {
        Cftx s;
        for (const auto& t : tokens_) s += t.book_value;
        return s;
    }

    /// Sealed-bid highest-price transfer of one token. Ties break to the
    /// lexicographically smaller bidder.
    void auction_token(const std::string& serial,
                       const std::vector<std::pair<std::string, Cftx>>& bids) {
        if (bids.empty()) throw std::invalid_argument("Dsol: auction with no bids");
        auto it = std::find_if(tokens_.begin(), tokens_.end(),
                               [&](const DsolToken& t) { return t.serial == serial; });
        if (it == tokens_.end()) throw std::invalid_argument("Dsol: unknown token " + serial);
        const auto* best = &bids[0];
        for (const auto& b : bids)
            if (b.second > best->second || (b.second == best->second && b.first < best->first))
                best = &b;
        it->owner = best->first;
    }

private:
    void respread_uniform() {
        auto count = static_cast<std::int64_t>(tokens_.size());
        std::int64_t q = book_value_.micro() / count;
        std::int64_t r = book_value_.micro() % count;
        for (std::int64_t i = 0; i < count; ++i)
            tokens_[static_cast<std::size_t>(i)].book_value =
                Cftx::from_micro(q + (i < r ? 1 : 0));
    }

    std::string id_;
    Cftx book_value_;
    double market_multiplier_ = 1.0;
    std::vector<DsolToken> tokens_;
    bool custom_weights_ = false;
};

/// Anchor position: minted CFTX never exceeds the pledged asset value.
class AnchorPosition {
public:
    explicit AnchorPosition(Cftx asset_value) : asset_value_(asset_value) {
        if (asset_value.is_negative()) throw std::invalid_argument("AnchorPosition: negative asset");
    }

    Cftx asset_value() const { return asset_value_; }
    Cftx minted() const { return minted_; }

    void mint(Cftx amount) {
        if (amount.is_negative()) throw std::invalid_argument("AnchorPosition: negative mint");
        if (minted_ + amount > asset_value_)
            throw std::domain_error("AnchorPosition: mint would exceed asset value");
        minted_ += amount;
    }

    void redeem(Cftx amount) {
        if (amount.is_negative() || amount > minted_)
            throw std::domain_error("AnchorPosition: bad redeem amount");
        minted_ -= amount;
    }

    /// Revalues the pledged asset; an excess of minted tokens is force-burned.
    /// Returns the burned amount.
    Cftx adjust(Cftx new_asset_value) {
        if (new_asset_value.is_negative())
            throw std::invalid_argument("AnchorPosition: negative asset value");
        asset_value_ = new_asset_value;
        Cftx burned;
        if (minted_ > asset_value_) {
            burned = minted_ - asset_value_;
            minted_ = asset_value_;
        }
        return burned;
    }

private:
    Cftx asset_value_;
    Cftx minted_;
};

enum class XTokenStatus : std::uint8_t { Normal = 0, Exchange = 1, Disabled = 2 };
enum class XTokenType : std::uint8_t { Collection = 0, NonCollection = 1 };

struct ExchangeRecord {
    std::uint64_t time = 0;
    std::string prior_owner;
    std::string new_owner;
    std::string private_attr_address;  // empty when no authorization was packaged
};

/// Cross-chain token record. BaseID never changes and traces the token's
/// full history across chains.
struct XToken {
    std::string id;
    std::string base_id;
    XTokenType xtype = XTokenType::Collection;
    std::string current_owner;
    std::string current_chain;
    std::map<std::string, std::string> owner_history;  // chain -> last owner on that chain
    std::vector<ExchangeRecord> path;
    XTokenStatus status = XTokenStatus::Normal;
    Bytes public_data;
    Bytes private_data;  // present only on the home chain or inside an authorized package
    Cftx value;          // CFTX valuation carried across exchanges
};

/// Keystream cipher for authorization packaging; the per-exchange key is
/// recorded in the Path so the home chain can restore private data.
inline Bytes xor_keystream(const Bytes& data, const std::string& key) {
    Bytes out = data;
    std::uint64_t counter = 0;
    std::size_t pos = 0;
    while (pos < out.size()) {
        Sha256 h;
        h.update(key.data(), key.size());
        std::uint8_t ctr[8];
        for (int i = 0; i < 8; ++i) ctr[i] = static_cast<std::uint8_t>(counter >> (56 - 8 * i));
        h.update(ctr, 8);
        Digest block = h.finish();
        for (std::size_t i = 0; i < block.size() && pos < out.size(); ++i, ++pos)
            out[pos] ^= block[i];
        ++counter;
    }
    return out;
}

struct ExchangeRequest {
    std::string token_id;
    XTokenType xtype = XTokenType::Collection;
    std::uint64_t timestamp = 0;
    std::uint64_t expiry = 0;
    Cftx price;
};

struct AuthorizedPackage {
    std::string base_id;
    Bytes public_data;
    Bytes encrypted_private;
    std::string key;  // per-exchange symmetric key
    Cftx value;
    Digest payload_digest{};
};

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One simulated chain's XToken ledger with the permission-based exchange
/// state machine.
class XChain {
public:
    explicit XChain(std::string id) : id_(std::move(id)) {}

    const std::string& id() const { return id_; }

    XToken& mint_token(const std::string& id, XTokenType type, const std::string& owner,
                       Bytes public_data, Bytes private_data, Cftx value) {
        if (tokens_.contains(id)) throw std::invalid_argument("XChain: duplicate token " + id);
        XToken t;
        t.id = id;
        t.base_id = id_ + ":" + id;
        t.xtype = type;
        t.current_owner = owner;
        t.current_chain = id_;
        t.owner_history[id_] = owner;
        t.public_data = std::move(public_data);
        t.private_data = std::move(private_data);
        t.value = value;
        return tokens_.emplace(id, std::move(t)).first->second;
    }

    bool has_token(const std::string& id) const { return tokens_.contains(id); }
    XToken& token(const std::string& id) {
        auto it = tokens_.find(id);
        if (it == tokens_.end()) throw std::invalid_argument("XChain: unknown token " + id);
        return it->second;
    }
    const XToken& token(const std::string& id) const {
        return const_cast<XChain*>(this)->token(id);
    }
    const std::map<std::string, XToken>& tokens() const { return tokens_; }

    bool blacklisted(const std::string& chain_id) const { return blacklist_.contains(chain_id); }
    void add_to_blacklist(const std::string& chain_id) { blacklist_.insert(chain_id); }

private:
    std::string id_;
    std::map<std::string, XToken> tokens_;
    std::set<std::string> blacklist_;
};

/// Failure injection points for the exchange protocol walk.
enum class ExchangeFault : std::uint8_t {
    None = 0,
    CancelAtConfirm = 1,    // counterpart declines, single lock unwinds
    BreachAtShadowMint = 2, // protocol breach: counterpart chain blacklisted
    Expired = 3,            // expiry passed before confirmation
};

struct ExchangeResult {
    bool completed = false;
    std::string shadow_on_b;  // BXA id
    std::string shadow_on_a;  // AXB id
    std::string cancel_reason;
};

/// Runs the permission-based exchange of token XA on chain A against token
/// XB on chain B: lock, request, confirm/lock, disable + authorization
/// package, shadow mint on each side, final confirmation. On fault paths the
/// locks unwind, and a breach blacklists the offending pair.
inline ExchangeResult xchain_exchange(XChain& a, const std::string& xa_id, XChain& b,
                                      const std::string& xb_id, std::uint64_t now,
                                      std::uint64_t expiry,
                                      ExchangeFault fault = ExchangeFault::None) {
    if (a.blacklisted(b.id()) || b.blacklisted(a.id()))
        throw ProtocolError("xchain_exchange: pair barred by blacklist");
    XToken& xa = a.token(xa_id);
    XToken& xb = b.token(xb_id);
    if (xa.status != XTokenStatus::Normal || xb.status != XTokenStatus::Normal)
        throw ProtocolError("xchain_exchange: both tokens must be Normal");

    ExchangeResult result;

    // Step 5: lock XA.
    xa.status = XTokenStatus::Exchange;

    // Step 6: exchange request.
    ExchangeRequest request{xa.id, xa.xtype, now, expiry, xa.value};

    if (now >= request.expiry || fault == ExchangeFault::Expired) {
        xa.status = XTokenStatus::Normal;  // abort: release the lock
        result.cancel_reason = "expired";
        return result;
    }

    // Step 7: chain B confirms and locks XB, or cancels with a reason.
    if (fault == ExchangeFault::CancelAtConfirm) {
        xa.status = XTokenStatus::Normal;
        result.cancel_reason = "counterpart declined";
        return result;
    }
    xb.status = XTokenStatus::Exchange;

    auto package = [now](XChain& home, XToken& t, const std::string& counter_chain) {
        AuthorizedPackage pkg;
        pkg.base_id = t.base_id;
        pkg.public_data = t.public_data;
        pkg.key = "xk:" + t.base_id + ":" + std::to_string(now) + ":" + counter_chain;
        pkg.encrypted_private = xor_keystream(t.private_data, pkg.key);
        pkg.value = t.value;
        Sha256 h;
        h.update(pkg.encrypted_private.data(), pkg.encrypted_private.size());
        h.update(pkg.public_data.data(), pkg.public_data.size());
        pkg.payload_digest = h.finish();
        t.status = XTokenStatus::Disabled;
        t.path.push_back({now, t.current_owner, "chain:" + counter_chain, pkg.key});
        (void)home;
        return pkg;
    };

    auto verify_and_mint = [now](XChain& dest, const XToken& original,
                                 const AuthorizedPackage& pkg) -> std::string {
        Sha256 h;
        h.update(pkg.encrypted_private.data(), pkg.encrypted_private.size());
        h.update(pkg.public_data.data(), pkg.public_data.size());
        if (h.finish() != pkg.payload_digest)
            throw ProtocolError("xchain_exchange: package verification failed");
        std::string shadow_id = dest.id() + "X" + original.id;
        // A disabled shadow from an earlier round-trip is reactivated in place.
        bool existed = dest.has_token(shadow_id);
        XToken& shadow = existed
                             ? dest.token(shadow_id)
                             : dest.mint_token(shadow_id, original.xtype,
                                               original.current_owner, {}, {}, original.value);
        if (existed && shadow.status == XTokenStatus::Normal)
            throw ProtocolError("xchain_exchange: shadow already active");
        shadow.xtype = original.xtype;
        shadow.current_owner = original.current_owner;
        shadow.value = original.value;
        shadow.base_id = original.base_id;  // shadow continues the base lineage
        shadow.public_data = pkg.public_data;
        shadow.private_data = pkg.encrypted_private;  // held encrypted off the home chain
        shadow.status = XTokenStatus::Exchange;
        shadow.owner_history = original.owner_history;
        shadow.owner_history[dest.id()] = original.current_owner;
        shadow.path = original.path;
        shadow.path.push_back({now, original.current_owner, original.current_owner, pkg.key});
        return shadow_id;
    };

    // Steps 8-9: disable XA, package it, verify and mint BXA on chain B.
    AuthorizedPackage pkg_a = package(a, xa, b.id());
    result.shadow_on_b = verify_and_mint(b, xa, pkg_a);

    // Step 10 (and the symmetric 8-10 for XB).
    if (fault == ExchangeFault::BreachAtShadowMint) {
        // Chain B broke the protocol after receiving XA's package.
        a.add_to_blacklist(b.id());
        b.add_to_blacklist(a.id());
        throw ProtocolError("xchain_exchange: protocol breach, counterpart blacklisted");
    }
    AuthorizedPackage pkg_b = package(b, xb, a.id());
    result.shadow_on_a = verify_and_mint(a, xb, pkg_b);

    // Step 11: final confirmations flip both shadows to Normal.
    b.token(result.shadow_on_b).status = XTokenStatus::Normal;
    a.token(result.shadow_on_a).status = XTokenStatus::Normal;
    result.completed = true;
    return result;
}

/// Returns a shadow to its home chain: the original is restored with its
/// private data bit-identical, and the shadow is disabled.
inline void xchain_return(XChain& shadow_chain, const std::string& shadow_id, XChain& home,
                          const std::string& original_id) {
    XToken& shadow = shadow_chain.token(shadow_id);
    if (shadow.status != XTokenStatus::Normal)
        throw ProtocolError("xchain_return: shadow not in Normal state");
    if (!home.has_token(original_id))
        throw ProtocolError("xchain_return: missing original token");
    XToken& original = home.token(original_id);
    if (original.status != XTokenStatus::Disabled)
        throw ProtocolError("xchain_return: original not disabled on home chain");
    if (original.base_id != shadow.base_id)
        throw ProtocolError("xchain_return: base id mismatch");
    // The authorization key recorded at packaging time restores the bytes.
    const std::string& key = original.path.back().private_attr_address;
    Bytes restored = xor_keystream(shadow.private_data, key);
    if (restored != original.private_data)
        throw ProtocolError("xchain_return: integrity failure restoring private data");
    original.status = XTokenStatus::Normal;
    shadow.status = XTokenStatus::Disabled;
}

/// At most one Normal instance per base_id across all chains.
inline bool single_normal_per_base(const std::vector<const XChain*>& chains) {
    std::map<std::string, int> normals;
    for (const auto* c : chains)
        for (const auto& [_, t] : c->tokens())
            if (t.status == XTokenStatus::Normal) ++normals[t.base_id];
    for (const auto& [_, n] : normals)
        if (n > 1) return false;
    return true;
}

}  // namespace blockcloud::dsol

#endif
