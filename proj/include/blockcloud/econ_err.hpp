#ifndef BLOCKCLOUD_ECON_ERR_HPP
#define BLOCKCLOUD_ECON_ERR_HPP

#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockcloud/fixed.hpp"

namespace blockcloud::err {

/// One weighted, normalized ranking factor.
struct FactorScore {
    double score = 0.0;   // raw factor score, >= 0
    double weight = 0.0;  // in [0,1], weights of a profile sum to 1
    double norm = 1.0;    // normalization coefficient, > 0

    void validate() const {
        if (score < 0.0) throw std::invalid_argument("FactorScore: negative score");
        if (weight < 0.0 || weight > 1.0) throw std::invalid_argument("FactorScore: weight outside [0,1]");
        if (norm <= 0.0) throw std::invalid_argument("FactorScore: norm must be positive");
    }
};

namespace detail {
template <std::size_t N>
inline void validate_profile(const std::array<FactorScore, N>& f) {
    double sum = 0.0;
    for (const auto& s : f) {
        s.validate();
        sum += s.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("ranking profile weights must sum to 1");
}
}  // namespace detail

/// Six task factors, fixed order: time criticalness, computing intensity,
/// frequency of transactions, scale of transactions, required propagation,
/// data requirement.
class TaskRankingProfile {
public:
    static constexpr std::size_t kFactors = 6;

    explicit TaskRankingProfile(std::array<FactorScore, kFactors> factors) : factors_(factors) {
        detail::validate_profile(factors_);
    }
    const std::array<FactorScore, kFactors>& factors() const { return factors_; }

private:
    std::array<FactorScore, kFactors> factors_;
};

/// Three service-node properties, fixed order: consistency, computability,
/// deterministicness.
class NodeRankingProfile {
public:
    static constexpr std::size_t kFactors = 3;

    explicit NodeRankingProfile(std::array<FactorScore, kFactors> factors) : factors_(factors) {
        detail::validate_profile(factors_);
    }
    const std::array<FactorScore, kFactors>& factors() const { return factors_; }

private:
    std::array<FactorScore, kFactors> factors_;
};

inline double task_err_score(const TaskRankingProfile& profile) {
    double s = 0.0;
    for (const auto& f : profile.factors()) s += f.weight * f.score / f.norm;
    return s;
}

inline double node_err_score(const NodeRankingProfile& profile) {
    double s = 0.0;
    for (const auto& f : profile.factors()) s += f.weight * f.score / f.norm;
    return s;
}

struct Candidate {
    std::string id;
    double score = 0.0;
    Cftx wealth;
};

/// Candidate ordering for matchmaking: closest score first, then lower
/// wealth (rule of wealth), then lexicographically smaller id.
inline bool closer_candidate(double task_score, const Candidate& a, const Candidate& b) {
    double ga = std::abs(a.score - task_score);
    double gb = std::abs(b.score - task_score);
    if (ga != gb) return ga < gb;
    if (a.wealth != b.wealth) return a.wealth < b.wealth;
    return a.id < b.id;
}

/// Pairs a task with the service node whose ranking score is closest.
inline std::string matchmake(double task_score, std::span<const Candidate> candidates) {
    if (candidates.empty()) throw std::invalid_argument("matchmake: no candidates");
    const Candidate* best = &candidates[0];
    for (const auto& c : candidates.subspan(1))
        if (closer_candidate(task_score, c, *best)) best = &c;
    return best->id;
}

inline std::string matchmake(double task_score, const std::vector<Candidate>& candidates) {
    return matchmake(task_score, std::span<const Candidate>(candidates));
}

enum class RankingKind { Task, ServiceNode };

/// Append-only score table; entries change only through new profile
/// submissions so that a recorded score cannot be bought.
class RankingTable {
public:
    void submit_task(const std::string& id, const TaskRankingProfile& p) {
        entries_[id] = {RankingKind::Task, task_err_score(p)};
    }
    void submit_node(const std::string& id, const NodeRankingProfile& p) {
        entries_[id] = {RankingKind::ServiceNode, node_err_score(p)};
    }
    double score(const std::string& id) const {
        auto it = entries_.find(id);
        if (it == entries_.end()) throw std::invalid_argument("RankingTable: unknown id " + id);
        return it->second.second;
    }
    bool has(const std::string& id) const { return entries_.contains(id); }

    /// Line-delimited dump: id, kind, score.
    std::string serialize() const {
        std::string out;
        char buf[64];
        for (const auto& [id, e] : entries_) {
            std::snprintf(buf, sizeof buf, " %s %.6f\n",
                          e.first == RankingKind::Task ? "task" : "service-node", e.second);
            out += id;
            out += buf;
        }
        return out;
    }

private:
    std::map<std::string, std::pair<RankingKind, double>> entries_;
};

}  // namespace blockcloud::err

#endif
