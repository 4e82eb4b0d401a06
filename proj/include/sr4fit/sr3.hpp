#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sr4fit {

struct HyperParams {
    double lambda = 0.1; // l1 weight on w
    double kappa = 1.0;  // coupling weight, > 0
    std::size_t r_max = 100;
};

struct OptimizerConfig {
    int max_outer_iters = 500;
    double outer_tol = 1e-6;
    int max_inner_iters = 100;
    double inner_tol = 1e-8;
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    double initial_step = 1.0;
};

// Coupled coefficient pair: beta carries the predictive weights, w the sparse
// relaxation. The intercept is unpenalized and excluded from both penalty
// terms.
struct SparseLinearModel {
    Eigen::VectorXd beta;
    double intercept = 0.0;
    Eigen::VectorXd w;
    std::vector<Eigen::Index> support; // {j : w_j != 0}
    std::vector<double> objective_trace;
};

struct FitDiagnostics {
    int outer_iterations = 0;
    bool converged = false;
    double final_objective = 0.0;
    int nnz = 0;
};

inline nlohmann::json diagnostics_to_json(const FitDiagnostics& d) {
    return {{"outer_iterations", d.outer_iterations},
            {"converged", d.converged},
            {"final_objective", d.final_objective},
            {"nnz", d.nnz}};
}

inline FitDiagnostics diagnostics_from_json(const nlohmann::json& j) {
    FitDiagnostics d;
    d.outer_iterations = j.at("outer_iterations").get<int>();
    d.converged = j.at("converged").get<bool>();
    d.final_objective = j.at("final_objective").get<double>();
    d.nnz = j.at("nnz").get<int>();
    return d;
}

inline double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow for large t.
inline double log1p_exp(double t) {
    if (t > 0.0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

inline double logistic_loss(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& beta, double intercept) {
    const Eigen::ArrayXd margins = -(y.array() * ((Z * beta).array() + intercept));
    double loss = 0.0;
    for (Eigen::Index i = 0; i < margins.size(); ++i) loss += log1p_exp(margins(i));
    return loss;
}

// grad_j = sum_i -y_i Z_ij sigma(-y_i s_i); last return value is the
// intercept gradient.
inline std::pair<Eigen::VectorXd, double> logistic_gradient(const Eigen::MatrixXd& Z,
                                                            const Eigen::VectorXd& y,
                                                            const Eigen::VectorXd& beta,
                                                            double intercept) {
    Eigen::VectorXd coeff(y.size());
    const Eigen::VectorXd scores = (Z * beta).array() + intercept;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        coeff(i) = -y(i) * sigmoid(-y(i) * scores(i));
    return {Z.transpose() * coeff, coeff.sum()};
}

// Full objective: logistic loss + lambda ||w||_1 + (kappa/2) ||beta - w||^2.
inline double objective(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& beta, double intercept,
                        const Eigen::VectorXd& w, const HyperParams& hp) {
    return logistic_loss(Z, y, beta, intercept) + hp.lambda * w.lpNorm<1>() +
           0.5 * hp.kappa * (beta - w).squaredNorm();
}

// Gradient descent with Armijo backtracking on
// F(beta, b0) = logistic loss + (kappa/2) ||beta - w||^2, w fixed.
// Never increases F.
inline std::pair<Eigen::VectorXd, double> beta_step(const Eigen::MatrixXd& Z,
                                                    const Eigen::VectorXd& y,
                                                    Eigen::VectorXd beta, double intercept,
                                                    const Eigen::VectorXd& w,
                                                    const HyperParams& hp,
                                                    const OptimizerConfig& cfg) {
    // Scores Z beta are cached and updated along the fixed descent direction,
    // so each backtracking probe costs O(n) instead of a fresh matvec.
    auto value_at = [&](const Eigen::VectorXd& zb, double b0, const Eigen::VectorXd& b) {
        double loss = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) loss += log1p_exp(-y(i) * (zb(i) + b0));
        return loss + 0.5 * hp.kappa * (b - w).squaredNorm();
    };
    Eigen::VectorXd zb = Z * beta;
    Eigen::VectorXd coeff(y.size());
    double f = value_at(zb, intercept, beta);
    for (int it = 0; it < cfg.max_inner_iters; ++it) {
        for (Eigen::Index i = 0; i < y.size(); ++i)
            coeff(i) = -y(i) * sigmoid(-y(i) * (zb(i) + intercept));
        Eigen::VectorXd grad = Z.transpose() * coeff + hp.kappa * (beta - w);
        const double grad0 = coeff.sum();
        const double grad_inf = std::max(grad.lpNorm<Eigen::Infinity>(), std::abs(grad0));
        if (grad_inf < cfg.inner_tol) break;

        const Eigen::VectorXd zg = Z * grad;
        const double grad_sq = grad.squaredNorm() + grad0 * grad0;
        double step = cfg.initial_step;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            const Eigen::VectorXd cand_zb = zb - step * zg;
            const Eigen::VectorXd cand = beta - step * grad;
            const double cand0 = intercept - step * grad0;
            const double fc = value_at(cand_zb, cand0, cand);
            if (fc <= f - cfg.armijo_c * step * grad_sq) {
                beta = cand;
                intercept = cand0;
                zb = cand_zb;
                f = fc;
                accepted = true;
                break;
            }
            step *= cfg.backtrack_factor;
        }
        if (!accepted) break; // no descent step found at machine precision
    }
    return {beta, intercept};
}

// Closed-form prox of the l1 term: w_j = sign(beta_j) max(|beta_j| - lambda/kappa, 0).
inline Eigen::VectorXd soft_threshold(const Eigen::VectorXd& beta, const HyperParams& hp) {
    if (hp.kappa <= 0.0) throw std::runtime_error("soft_threshold: kappa must be positive");
    const double shrink = hp.lambda / hp.kappa;
    Eigen::VectorXd w(beta.size());
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        const double mag = std::abs(beta(j)) - shrink;
        w(j) = mag > 0.0 ? (beta(j) > 0.0 ? mag : -mag) : 0.0;
    }
    return w;
}

inline std::vector<Eigen::Index> support_of(const Eigen::VectorXd& w) {
    std::vector<Eigen::Index> s;
    for (Eigen::Index j = 0; j < w.size(); ++j)
        if (w(j) != 0.0) s.push_back(j);
    return s;
}

// Alternating minimization: beta-step (descent on the smooth part), then the
// exact w-step. Stops when neither beta nor w moves more than outer_tol in
// the infinity norm.
inline std::pair<SparseLinearModel, FitDiagnostics> fit_sr3(const Eigen::MatrixXd& Z,
                                                            const Eigen::VectorXd& y,
                                                            const HyperParams& hp,
                                                            const OptimizerConfig& cfg = {}) {
    if (Z.rows() != y.size() || Z.rows() < 1)
        throw std::runtime_error("fit_sr3: bad dimensions");

    SparseLinearModel model;
    model.beta = Eigen::VectorXd::Zero(Z.cols());
    model.w = Eigen::VectorXd::Zero(Z.cols());
    model.intercept = 0.0;

    FitDiagnostics diag;
    for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
        const Eigen::VectorXd beta_prev = model.beta;
        const Eigen::VectorXd w_prev = model.w;

        std::tie(model.beta, model.intercept) =
            beta_step(Z, y, model.beta, model.intercept, model.w, hp, cfg);
        model.w = soft_threshold(model.beta, hp);

        const double obj = objective(Z, y, model.beta, model.intercept, model.w, hp);
        if (!std::isfinite(obj))
            throw std::runtime_error("fit_sr3: non-finite objective at outer iteration " +
                                     std::to_string(outer));
        model.objective_trace.push_back(obj);
        diag.outer_iterations = outer + 1;

        const double delta = std::max((model.beta - beta_prev).lpNorm<Eigen::Infinity>(),
                                      (model.w - w_prev).lpNorm<Eigen::Infinity>());
        if (delta < cfg.outer_tol) {
            diag.converged = true;
            break;
        }
    }
    model.support = support_of(model.w);
    diag.final_objective = model.objective_trace.empty()
                               ? objective(Z, y, model.beta, model.intercept, model.w, hp)
                               : model.objective_trace.back();
    diag.nnz = static_cast<int>(model.support.size());
    return {model, diag};
}

// Zero out beta outside support(w); intercept and w untouched.
inline SparseLinearModel prune(const SparseLinearModel& model) {
    SparseLinearModel out = model;
    out.beta = Eigen::VectorXd::Zero(model.beta.size());
    for (Eigen::Index j : model.support) out.beta(j) = model.beta(j);
    return out;
}

} // namespace sr4fit
