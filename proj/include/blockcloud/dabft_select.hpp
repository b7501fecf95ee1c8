#ifndef BLOCKCLOUD_DABFT_SELECT_HPP
#define BLOCKCLOUD_DABFT_SELECT_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace blockcloud::dabft {

enum class KpiDirection : std::uint8_t { HigherBetter, LowerBetter };

/// Candidate BFT protocol: binary characteristic profile plus raw KPI row
/// (throughput tx/s, latency s, capacity clients by default).
struct ProtocolProfile {
    std::string name;
    std::vector<int> kci_row;     // entries in {0,1}
    std::vector<double> kpi_row;  // entries >= 0

    void validate() const {
        for (int v : kci_row)
            if (v != 0 && v != 1) throw std::invalid_argument("ProtocolProfile: KCI not binary");
        for (double v : kpi_row)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("ProtocolProfile: bad KPI entry");
    }
};

struct Preferences {
    std::vector<int> kci_prefs;             // U, binary
    std::vector<double> kpi_weights;        // V, nonnegative, sums to 1
    std::vector<double> heuristic_weights;  // W; identity (all ones) when heuristic mode off
    std::vector<KpiDirection> directions;   // per-KPI normalization direction

    void validate(std::size_t kci_dim, std::size_t kpi_dim) const {
        if (kci_prefs.size() != kci_dim || kpi_weights.size() != kpi_dim ||
            directions.size() != kpi_dim ||
            (!heuristic_weights.empty() && heuristic_weights.size() != kpi_dim))
            throw std::invalid_argument("Preferences: dimension mismatch");
        for (int v : kci_prefs)
            if (v != 0 && v != 1) throw std::invalid_argument("Preferences: KCI pref not binary");
        double sum = 0.0;
        for (double w : kpi_weights) {
            if (w < 0.0) throw std::invalid_argument("Preferences: negative KPI weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("Preferences: KPI weights must sum to 1");
        if (!heuristic_weights.empty()) {
            double hsum = 0.0;
            for (double w : heuristic_weights) {
                if (w < 0.0) throw std::invalid_argument("Preferences: negative heuristic weight");
                hsum += w;
            }
            if (std::abs(hsum - 1.0) > 1e-9)
                throw std::invalid_argument("Preferences: heuristic weights must sum to 1");
        }
    }
};

struct Evaluation {
    std::vector<int> C;     // KCI pass/fail per protocol
    std::vector<double> P;  // KPI score per protocol
    std::vector<double> E;  // E = C o P
};

/// KCI gate: protocol i passes iff it offers every selected characteristic.
/// No selected preferences means no constraints, so everything passes.
inline std::vector<int> kci_filter(const std::vector<ProtocolProfile>& profiles,
                                   const Preferences& prefs) {
    std::vector<int> c;
    c.reserve(profiles.size());
    for (const auto& p : profiles) {
        if (p.kci_row.size() != prefs.kci_prefs.size())
            throw std::invalid_argument("kci_filter: dimension mismatch");
        int pass = 1;
        for (std::size_t j = 0; j < p.kci_row.size(); ++j)
            if (prefs.kci_prefs[j] == 1 && p.kci_row[j] != 1) pass = 0;
        c.push_back(pass);
    }
    return c;
}

/// Normalizes each KPI column to [0,1] by its best value (column max for
/// higher-better KPIs, column min over the entry for lower-better ones) and
/// takes the weighted sum. A degenerate column (best value 0) scores 0.
inline std::vector<double> kpi_score(const std::vector<ProtocolProfile>& profiles,
                                     const Preferences& prefs) {
    const std::size_t n = profiles.size();
    const std::size_t m = prefs.kpi_weights.size();
    std::vector<double> p(n, 0.0);
    if (n == 0 || m == 0) return p;
    for (const auto& prof : profiles)
        if (prof.kpi_row.size() != m) throw std::invalid_argument("kpi_score: dimension mismatch");

    for (std::size_t j = 0; j < m; ++j) {
        double best = profiles[0].kpi_row[j];
        for (const auto& prof : profiles) {
            double v = prof.kpi_row[j];
            if (prefs.directions[j] == KpiDirection::HigherBetter)
                best = std::max(best, v);
            else
                best = std::min(best, v);
        }
        double w = prefs.kpi_weights[j] *
                   (prefs.heuristic_weights.empty() ? 1.0 : prefs.heuristic_weights[j]);
        for (std::size_t i = 0; i < n; ++i) {
            double v = profiles[i].kpi_row[j];
            double norm;
            if (best == 0.0)
                norm = 0.0;
            else if (prefs.directions[j] == KpiDirection::HigherBetter)
                norm = v / best;
            else
                norm = best / v;
            p[i] += w * norm;
        }
    }
    return p;
}

inline Evaluation evaluate(const std::vector<ProtocolProfile>& profiles,
                           const Preferences& prefs) {
    Evaluation ev;
    ev.C = kci_filter(profiles, prefs);
    ev.P = kpi_score(profiles, prefs);
    ev.E.resize(profiles.size());
    for (std::size_t i = 0; i < profiles.size(); ++i) ev.E[i] = ev.C[i] * ev.P[i];
    return ev;
}

/// Argmax over E; ties break toward the earliest declared protocol. An
/// all-zero E means nothing passed the KCI gate.
inline std::size_t select(const std::vector<double>& e) {
    if (e.empty()) throw std::invalid_argument("select: empty evaluation");
    std::size_t best = 0;
    bool any = false;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (e[i] > 0.0) any = true;
        if (e[i] > e[best]) best = i;
    }
    if (!any) throw std::domain_error("select: no viable protocol");
    return best;
}

}  // namespace blockcloud::dabft

#endif
