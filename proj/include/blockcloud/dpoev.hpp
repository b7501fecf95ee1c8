#ifndef BLOCKCLOUD_DPOEV_HPP
#define BLOCKCLOUD_DPOEV_HPP

#include <algorithm>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockcloud/econ_err.hpp"
#include "blockcloud/fixed.hpp"

namespace blockcloud::dpoev {

/// CFTX token supply book. circulating == genesis + issued - burned always.
struct TokenSupply {
    Cftx genesis;
    Cftx issued;
    Cftx burned;

    Cftx circulating() const { return genesis + issued - burned; }
};

/// Separate VAT ledger: liability positive, credit negative. The balance is
/// applied exactly once, against the next issuance round.
struct VatLedger {
    Cftx balance;
};

struct RewardSplit {
    Cftx task_wealth;
    double super_share = 0.2;                       // fraction of wealth for the validator set
    std::map<std::string, double> super_weights;    // contribution weights, >= 0
    std::map<std::string, double> resource_weights;
};

struct PolicyParams {
    double super_share = 0.2;
    double dominance_threshold = 0.5;
    double tariff_rate = 0.1;
};

/// One audit record per issuance / award / burn.
struct AuditEvent {
    std::string type;  // "genesis" | "issue" | "vat" | "award" | "tariff" | "burn"
    std::string node;  // empty for supply-level events
    Cftx amount;
};

inline TokenSupply genesis_issue(Cftx initial_wealth) {
    if (initial_wealth.is_negative()) throw std::invalid_argument("genesis_issue: negative V0");
    return TokenSupply{initial_wealth, kZeroCftx, kZeroCftx};
}

/// Issues fresh tokens for a task's incremental value. A pending VAT
/// liability nets against a positive issuance and then resets; a negative
/// increment posts to the VAT ledger as a credit.
inline void task_issue(TokenSupply& supply, Cftx increment, VatLedger& vat,
                       std::vector<AuditEvent>* audit = nullptr) {
    if (increment.micro() > 0) {
        Cftx net = increment - vat.balance;
        if (net.is_negative()) {
            // liability larger than the round: carry the remainder forward
            vat.balance = -net;
            net = kZeroCftx;
        } else {
            vat.balance = kZeroCftx;
        }
        if ((supply.circulating() + net).is_negative())
            throw std::domain_error("task_issue: circulating would go negative");
        supply.issued += net;
        if (audit) audit->push_back({"issue", "", net});
    } else if (increment.micro() < 0) {
        vat.balance += increment;  // deflationary round: post a credit
        if (audit) audit->push_back({"vat", "", increment});
    }
}

/// Splits task wealth into a super-node pool and a resource pool, then each
/// pool proportionally to normalized contribution weights. Awards round
/// down; the leftover dust is returned for the true-up burn.
inline std::map<std::string, Cftx> distribute_rewards(const RewardSplit& split,
                                                      Cftx* dust_out = nullptr,
                                                      std::vector<AuditEvent>* audit = nullptr) {
    if (split.task_wealth.is_negative())
        throw std::invalid_argument("distribute_rewards: negative task wealth");
    if (split.super_share < 0.0 || split.super_share > 1.0)
        throw std::invalid_argument("distribute_rewards: super_share outside [0,1]");

    Cftx super_pool = split.task_wealth.scaled_floor(split.super_share);
    Cftx resource_pool = split.task_wealth - super_pool;
    if (split.resource_weights.empty()) {
        super_pool = split.task_wealth;
        resource_pool = kZeroCftx;
    }

    std::map<std::string, Cftx> awards;
    Cftx dust;

    auto split_pool = [&](Cftx pool, const std::map<std::string, double>& weights) {
        if (pool == kZeroCftx) return;
        if (weights.empty()) {
            dust += pool;
            return;
        }
        double total_w = 0.0;
        for (const auto& [_, w] : weights) {
            if (w < 0.0) throw std::invalid_argument("distribute_rewards: negative weight");
            total_w += w;
        }
        if (total_w <= 0.0)
            throw std::domain_error("distribute_rewards: degenerate all-zero weights");
        Cftx remaining = pool;
        for (const auto& [id, w] : weights) {
            Cftx share = pool.scaled_floor(w / total_w);
            if (share > remaining) share = remaining;
            awards[id] += share;
            remaining -= share;
        }
        dust += remaining;
    };

    split_pool(super_pool, split.super_weights);
    split_pool(resource_pool, split.resource_weights);

    if (audit)
        for (const auto& [id, amt] : awards) audit->push_back({"award", id, amt});
    if (dust_out) *dust_out = dust;
    return awards;
}

struct ServiceCandidate {
    std::string id;
    double err_score = 0.0;
    Cftx wealth;
};

struct ValidatorSet {
    std::vector<std::string> ids;  // in selection order
    std::string handler;           // lowest-wealth member
};

/// Chooses the k most relevant candidates (matchmake gap ascending, wealth
/// then id breaking ties) and designates the lowest-wealth member handler.
inline ValidatorSet select_service_nodes(double task_score,
                                         std::span<const ServiceCandidate> candidates,
                                         std::size_t k) {
    if (k < 1) throw std::invalid_argument("select_service_nodes: k must be >= 1");
    if (candidates.size() < k)
        throw std::domain_error("select_service_nodes: insufficient candidates");
    std::vector<err::Candidate> order;
    order.reserve(candidates.size());
    for (const auto& c : candidates) order.push_back({c.id, c.err_score, c.wealth});
    std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
        return err::closer_candidate(task_score, a, b);
    });
    ValidatorSet out;
    for (std::size_t i = 0; i < k; ++i) out.ids.push_back(order[i].id);
    std::size_t h = 0;
    for (std::size_t i = 1; i < k; ++i) {
        if (order[i].wealth < order[h].wealth ||
            (order[i].wealth == order[h].wealth && order[i].id < order[h].id))
            h = i;
    }
    out.handler = order[h].id;
    return out;
}

inline ValidatorSet select_service_nodes(double task_score,
                                         const std::vector<ServiceCandidate>& c, std::size_t k) {
    return select_service_nodes(task_score, std::span<const ServiceCandidate>(c), k);
}

/// Rule of fairness. Nodes whose cumulative award share exceeds the
/// dominance threshold pay tariff_rate of this round's award; the levy is
/// redistributed equally among the non-dominating participants. When every
/// participant dominates the levy is held for the true-up burn instead.
inline std::map<std::string, Cftx> apply_fairness_tariff(
    const std::map<std::string, Cftx>& awards, double dominance_threshold, double tariff_rate,
    const std::map<std::string, Cftx>& cumulative = {}, Cftx* held_out = nullptr,
    std::vector<AuditEvent>* audit = nullptr) {
    if (dominance_threshold < 0.0 || dominance_threshold > 1.0 || tariff_rate < 0.0 ||
        tariff_rate > 1.0)
        throw std::invalid_argument("apply_fairness_tariff: rates outside [0,1]");

    // Cumulative totals after this round decide who dominates.
    std::map<std::string, Cftx> totals = cumulative;
    for (const auto& [id, amt] : awards) totals[id] += amt;
    Cftx grand;
    for (const auto& [_, t] : totals) grand += t;

    std::map<std::string, Cftx> out = awards;
    if (held_out) *held_out = kZeroCftx;
    if (grand == kZeroCftx) return out;

    std::vector<std::string> dominating, eligible;
    for (const auto& [id, _] : awards) {
        double share = static_cast<double>(totals[id].micro()) / grand.micro();
        (share > dominance_threshold ? dominating : eligible).push_back(id);
    }
    if (dominating.empty()) return out;

    Cftx levy;
    for (const auto& id : dominating) {
        Cftx pay = awards.at(id).scaled_floor(tariff_rate);
        out[id] -= pay;
        levy += pay;
        if (audit) audit->push_back({"tariff", id, pay});
    }
    if (eligible.empty()) {
        if (held_out) *held_out = levy;  // burned at true-up
        return out;
    }
    Cftx each = Cftx::from_micro(levy.micro() / static_cast<std::int64_t>(eligible.size()));
    Cftx rem = Cftx::from_micro(levy.micro() % static_cast<std::int64_t>(eligible.size()));
    for (const auto& id : eligible) {
        Cftx grant = each;
        if (rem.micro() > 0) {
            grant += Cftx::from_micro(1);
            rem -= Cftx::from_micro(1);
        }
        out[id] += grant;
    }
    return out;
}

/// Burns tokens that were created but never awarded.
inline void true_up(TokenSupply& supply, Cftx unawarded,
                    std::vector<AuditEvent>* audit = nullptr) {
    if (unawarded.is_negative()) throw std::invalid_argument("true_up: negative burn");
    if (unawarded > supply.circulating()) throw std::domain_error("true_up: over-burn");
    supply.burned += unawarded;
    if (audit && unawarded.micro() > 0) audit->push_back({"burn", "", unawarded});
}

}  // namespace blockcloud::dpoev

#endif
