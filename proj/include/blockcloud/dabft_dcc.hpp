#ifndef BLOCKCLOUD_DABFT_DCC_HPP
#define BLOCKCLOUD_DABFT_DCC_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace blockcloud::dcc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Per-KPI residual: predicted minus observed.
struct KpiResidual {
    Vec e;
};

inline KpiResidual residual(const Vec& predicted, const Vec& observed) {
    if (predicted.size() != observed.size())
        throw std::invalid_argument("residual: length mismatch");
    for (Eigen::Index i = 0; i < predicted.size(); ++i)
        if (!std::isfinite(predicted[i]) || !std::isfinite(observed[i]))
            throw std::invalid_argument("residual: non-finite entry");
    return {predicted - observed};
}

struct DccParams {
    double a = 0.05;       // news weight on the correlation recursion
    double b = 0.90;       // persistence weight, a + b < 1
    double kappa = 0.2;    // per-KPI GARCH news coefficient
    double lambda = 0.7;   // per-KPI GARCH persistence coefficient
    double h0_sq = 0.1;    // per-KPI baseline variance
};

/// State of the one-lag conditional-correlation recursion. K and Lambda are
/// diagonal, so the variance recursion runs per coordinate; only one step of
/// history (the previous standardized residual) is retained.
class DccState {
public:
    DccState(int m, const DccParams& params, const Mat& o_bar)
        : m_(m), a_(params.a), b_(params.b), o_bar_(o_bar) {
        if (m < 1) throw std::invalid_argument("DccState: dimension must be >= 1");
        if (params.a < 0.0 || params.b < 0.0 || params.a + params.b >= 1.0)
            throw std::invalid_argument("DccState: need a, b >= 0 and a + b < 1");
        if (o_bar.rows() != m || o_bar.cols() != m || !o_bar.isApprox(o_bar.transpose(), 1e-12))
            throw std::invalid_argument("DccState: O_bar must be m x m symmetric");
        if (params.h0_sq <= 0.0 || params.kappa < 0.0 || params.lambda < 0.0)
            throw std::invalid_argument("DccState: bad variance parameters");
        kappa_ = Vec::Constant(m, params.kappa);
        lambda_ = Vec::Constant(m, params.lambda);
        h0_sq_ = Vec::Constant(m, params.h0_sq);
        h_sq_ = h0_sq_;
        o_ = o_bar;
    }

    static DccState with_defaults(int m) {
        return DccState(m, DccParams{}, Mat::Identity(m, m));
    }

    int dim() const { return m_; }
    double a() const { return a_; }
    double b() const { return b_; }
    const Mat& o() const { return o_; }
    const Mat& o_bar() const { return o_bar_; }
    const Vec& h_sq() const { return h_sq_; }

    /// Snapshot for replay: parameters plus the mutable recursion state.
    std::string serialize() const;
    friend struct DccStep;

private:
    int m_;
    double a_, b_;
    Vec kappa_, lambda_, h0_sq_;
    Vec h_sq_;   // current diagonal of H^2
    Mat o_bar_;  // unconditional correlation target
    Mat o_;      // previous O_t
};

struct DccOutput {
    Mat P;      // correlation matrix, unit diagonal
    Mat Omega;  // covariance H P H
    Vec h;      // updated diagonal of H
};

/// One recursion step driven by the previous task's residual.
struct DccStep {
    static DccOutput advance(DccState& state, const KpiResidual& prev_residual) {
        const int m = state.m_;
        if (prev_residual.e.size() != m) throw std::invalid_argument("dcc_step: length mismatch");

        // Standardize against the previous H before updating it.
        Vec h_prev = state.h_sq_.cwiseSqrt();
        Vec xi = prev_residual.e.cwiseQuotient(h_prev);

        Vec h_sq_next = state.h0_sq_ +
                        state.kappa_.cwiseProduct(prev_residual.e.cwiseProduct(prev_residual.e)) +
                        state.lambda_.cwiseProduct(state.h_sq_);
        for (int i = 0; i < m; ++i)
            if (!(h_sq_next[i] > 0.0) || !std::isfinite(h_sq_next[i]))
                throw std::domain_error("dcc_step: nonpositive conditional variance");

        Mat o_next = (1.0 - state.a_ - state.b_) * state.o_bar_ +
                     state.a_ * (xi * xi.transpose()) + state.b_ * state.o_;
        Vec inv_sqrt(m);
        for (int i = 0; i < m; ++i) {
            double d = o_next(i, i);
            if (!(d > 0.0) || !std::isfinite(d))
                throw std::domain_error("dcc_step: nonpositive O diagonal");
            inv_sqrt[i] = 1.0 / std::sqrt(d);
        }
        Mat p = inv_sqrt.asDiagonal() * o_next * inv_sqrt.asDiagonal();

        state.h_sq_ = h_sq_next;
        state.o_ = o_next;

        DccOutput out;
        out.h = h_sq_next.cwiseSqrt();
        out.P = p;
        out.Omega = out.h.asDiagonal() * p * out.h.asDiagonal();
        return out;
    }
};

inline DccOutput dcc_step(DccState& state, const KpiResidual& prev_residual) {
    return DccStep::advance(state, prev_residual);
}

/// Corrected prediction: the base prediction plus the variance diagonal of
/// the conditional covariance.
inline Vec predict(const Vec& base_prediction, const DccOutput& output) {
    if (base_prediction.size() != output.Omega.rows())
        throw std::invalid_argument("predict: dimension mismatch");
    return base_prediction + output.Omega.diagonal();
}

/// Pluggable base KPI predictor: exponential moving average over observed
/// vectors. A single observation returns itself.
inline Vec base_predict(const std::vector<Vec>& history, double alpha = 0.3) {
    if (history.empty()) throw std::invalid_argument("base_predict: empty history");
    Vec s = history.front();
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (history[i].size() != s.size())
            throw std::invalid_argument("base_predict: length mismatch");
        s = (1.0 - alpha) * s + alpha * history[i];
    }
    return s;
}

inline std::string DccState::serialize() const {
    std::string out;
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g ", v);
        out += buf;
    };
    std::snprintf(buf, sizeof buf, "dcc %d ", m_);
    out += buf;
    put(a_);
    put(b_);
    for (int i = 0; i < m_; ++i) put(kappa_[i]);
    for (int i = 0; i < m_; ++i) put(lambda_[i]);
    for (int i = 0; i < m_; ++i) put(h0_sq_[i]);
    for (int i = 0; i < m_; ++i) put(h_sq_[i]);
    for (int i = 0; i < m_; ++i)
        for (int j = 0; j < m_; ++j) put(o_bar_(i, j));
    for (int i = 0; i < m_; ++i)
        for (int j = 0; j < m_; ++j) put(o_(i, j));
    out += '\n';
    return out;
}

}  // namespace blockcloud::dcc

#endif
