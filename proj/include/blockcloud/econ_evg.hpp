#ifndef BLOCKCLOUD_ECON_EVG_HPP
#define BLOCKCLOUD_ECON_EVG_HPP

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockcloud/fixed.hpp"

namespace blockcloud::evg {

/// A pre-quantified knowledge atom: its CFTX value and the conditional
/// probability of the piece given everything before it.
class KnowledgePiece {
public:
    KnowledgePiece(double cond_prob, Cftx value) : cond_prob_(cond_prob), value_(value) {
        if (value.is_negative()) throw std::invalid_argument("KnowledgePiece: negative value");
        if (cond_prob < 0.0 || cond_prob > 1.0)
            throw std::invalid_argument("KnowledgePiece: cond_prob outside [0,1]");
    }
    double cond_prob() const { return cond_prob_; }
    Cftx value() const { return value_; }

private:
    double cond_prob_;
    Cftx value_;
};

/// Task knowledge atom carrying both the probability and the covariance
/// weight of the piece given its predecessors.
class TaskKnowledgePiece {
public:
    TaskKnowledgePiece(double cond_prob, double cond_cov, Cftx value)
        : cond_prob_(cond_prob), cond_cov_(cond_cov), value_(value) {
        if (value.is_negative()) throw std::invalid_argument("TaskKnowledgePiece: negative value");
        if (cond_prob < 0.0 || cond_prob > 1.0)
            throw std::invalid_argument("TaskKnowledgePiece: cond_prob outside [0,1]");
        if (cond_cov < 0.0 || cond_cov > 1.0)
            throw std::invalid_argument("TaskKnowledgePiece: cond_cov outside [0,1]");
    }
    double cond_prob() const { return cond_prob_; }
    double cond_cov() const { return cond_cov_; }
    Cftx value() const { return value_; }

private:
    double cond_prob_;
    double cond_cov_;
    Cftx value_;
};

/// Initial economic value of one node: the product of probability-weighted
/// piece values. An empty sequence values to zero, not the empty product.
inline Cftx node_initial_value(std::span<const KnowledgePiece> pieces) {
    if (pieces.empty()) return kZeroCftx;
    double acc = 1.0;
    for (const auto& p : pieces) acc *= p.cond_prob() * p.value().real();
    return Cftx::from_real(acc);
}

inline Cftx node_initial_value(const std::vector<KnowledgePiece>& pieces) {
    return node_initial_value(std::span<const KnowledgePiece>(pieces));
}

/// Ecosystem base wealth: plain sum of node-level initial values.
inline Cftx ecosystem_initial_value(std::span<const Cftx> node_values) {
    Cftx total;
    for (Cftx v : node_values) {
        if (v.is_negative()) throw std::invalid_argument("ecosystem_initial_value: negative entry");
        total += v;
    }
    return total;
}

inline Cftx ecosystem_initial_value(const std::vector<Cftx>& v) {
    return ecosystem_initial_value(std::span<const Cftx>(v));
}

/// Incremental economic value of a task: probability-weighted product minus
/// the covariance-weighted product. May be negative (knowledge destruction).
inline Cftx task_incremental_value(std::span<const TaskKnowledgePiece> pieces) {
    if (pieces.empty()) return kZeroCftx;
    double prob_term = 1.0;
    double cov_term = 1.0;
    for (const auto& p : pieces) {
        prob_term *= p.cond_prob() * p.value().real();
        cov_term *= p.cond_cov() * p.value().real();
    }
    return Cftx::from_real(prob_term - cov_term);
}

inline Cftx task_incremental_value(const std::vector<TaskKnowledgePiece>& pieces) {
    return task_incremental_value(std::span<const TaskKnowledgePiece>(pieces));
}

/// Per-node credit table: initial value plus the ordered per-task increments.
/// Node totals are floored at zero; an update that would breach the floor is
/// rejected as a mis-valuation.
class CreditTable {
public:
    struct Row {
        Cftx initial_value;
        std::vector<Cftx> increments;
        Cftx total;
    };

    void add_node(const std::string& id, Cftx initial_value) {
        if (initial_value.is_negative())
            throw std::invalid_argument("CreditTable: negative initial value");
        if (rows_.contains(id)) throw std::invalid_argument("CreditTable: duplicate node " + id);
        rows_[id] = Row{initial_value, {}, initial_value};
    }

    bool has_node(const std::string& id) const { return rows_.contains(id); }

    void apply_increment(const std::string& id, Cftx delta) {
        auto it = rows_.find(id);
        if (it == rows_.end()) throw std::invalid_argument("CreditTable: unknown node " + id);
        Cftx next = it->second.total + delta;
        if (next.is_negative())
            throw std::domain_error("CreditTable: increment would drive node " + id + " below 0");
        it->second.increments.push_back(delta);
        it->second.total = next;
    }

    const Row& row(const std::string& id) const {
        auto it = rows_.find(id);
        if (it == rows_.end()) throw std::invalid_argument("CreditTable: unknown node " + id);
        return it->second;
    }

    Cftx ecosystem_total() const {
        Cftx t;
        for (const auto& [_, r] : rows_) t += r.total;
        return t;
    }

    const std::map<std::string, Row>& rows() const { return rows_; }

    /// Line-delimited dump, one node per line: id, initial, increments, total.
    std::string serialize() const {
        std::string out;
        for (const auto& [id, r] : rows_) {
            out += id;
            out += ' ' + r.initial_value.str();
            for (Cftx inc : r.increments) out += ' ' + inc.str();
            out += ' ' + r.total.str() + '\n';
        }
        return out;
    }

private:
    std::map<std::string, Row> rows_;
};

}  // namespace blockcloud::evg

#endif
