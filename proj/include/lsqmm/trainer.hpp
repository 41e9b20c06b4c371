#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "dual_qp.hpp"
#include "errors.hpp"
#include "qmatrix.hpp"
#include "qsvd.hpp"

namespace lsqmm {

struct TrainConfig {
    double C = 1.0;          ///< soft-margin penalty
    double lambda = 1e-3;    ///< nuclear-norm weight
    double rho = 1.0;        ///< augmented-Lagrangian penalty
    double tau = 1.0;        ///< dual stepsize in (0, 1.618]
    double tol = 1e-3;       ///< relative-residual stopping tolerance
    int max_iter = 1000;     ///< outer iteration cap
    double qp_tol = 1e-8;    ///< support margin relative to C; S* = {i : qp_tol*C < alpha_i < C - qp_tol*C}
};

inline void validate_config(const TrainConfig &cfg) {
    if (!(cfg.C > 0.0))
        throw ParameterError("train config: C must be positive");
    if (!(cfg.lambda >= 0.0))
        throw ParameterError("train config: lambda must be nonnegative");
    if (!(cfg.rho > 0.0))
        throw ParameterError("train config: rho must be positive");
    if (!(cfg.tau > 0.0) || cfg.tau > 1.618)
        throw ParameterError("train config: tau must lie in (0, 1.618]");
    if (!(cfg.tol > 0.0))
        throw ParameterError("train config: tol must be positive");
    if (cfg.max_iter < 1)
        throw ParameterError("train config: max_iter must be at least 1");
    if (!(cfg.qp_tol > 0.0))
        throw ParameterError("train config: qp_tol must be positive");
}

struct IterationRecord {
    int iter = 0;          ///< 1-based outer iteration
    double objective = 0.0;
    double residual = 0.0;
    double seconds = 0.0;  ///< wall time of this iteration (not serialized)
};

struct TrainedModel {
    QMatrix W;
    double b = 0.0;
    Eigen::VectorXd alpha;
    std::vector<int> support_indices;
    bool converged = false;
    int iterations = 0;
    std::vector<IterationRecord> trace;
    TrainConfig config;
};

struct AdmmState {
    QMatrix W, Z, U;
    double b = 0.0;
    int k = 0;
};

struct WbUpdate {
    QMatrix W;
    double b = 0.0;
    Eigen::VectorXd alpha;
    std::vector<int> support_indices;
    DualSolution qp;
};

namespace detail {

inline constexpr double kQpSolverTol = 1e-6;

/// Decision values without bias, f_i = <W, X_i>.
inline Eigen::VectorXd margins(const QMatrix &w, const std::vector<QMatrix> &samples) {
    Eigen::VectorXd f(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i)
        f(static_cast<Eigen::Index>(i)) = real_inner(w, samples[i]);
    return f;
}

/// Bias from KKT interval bounds when no alpha is strictly inside the box:
/// y=+1 at the lower bound and y=-1 at the upper bound give b >= y_i - f_i;
/// the mirrored sets give the upper bounds. Midpoint of the bracket, or the
/// previous b when the bracket is empty or unbounded.
inline double fallback_bias(const Eigen::VectorXd &alpha, const std::vector<int> &y, const Eigen::VectorXd &f,
                            double c, double margin, double previous_b) {
    const double inf = std::numeric_limits<double>::infinity();
    double lo = -inf, hi = inf;
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        const int yi = y[static_cast<std::size_t>(i)];
        const bool at_zero = alpha(i) <= margin;
        const bool at_c = alpha(i) >= c - margin;
        if ((at_zero && yi == 1) || (at_c && yi == -1))
            lo = std::max(lo, yi - f(i));
        if ((at_c && yi == 1) || (at_zero && yi == -1))
            hi = std::min(hi, yi - f(i));
    }
    if (lo == -inf || hi == inf || lo > hi)
        return previous_b;
    return 0.5 * (lo + hi);
}

} // namespace detail

/// One (W, b) update: solve the dual QP at the current (U, Z), then
/// W = (rho Z + U + sum_i alpha_i y_i X_i) / (1 + rho) and b from the support
/// set S* (mean of y_i - <W, X_i>), with the KKT-interval fallback when S* is
/// empty.
inline WbUpdate update_wb(const AdmmState &state, const std::vector<QMatrix> &samples, const std::vector<int> &y,
                          const TrainConfig &cfg, const GramMatrix &k, const Eigen::VectorXd *warm_start = nullptr) {
    DualQpProblem p = build_dual(samples, y, state.U, state.Z, cfg.rho, cfg.C, k);
    DualSolution qp = solve_dual_qp(p, detail::kQpSolverTol, 0, warm_start);

    WbUpdate out;
    out.qp = qp;
    out.alpha = qp.alpha;

    QMatrix acc = cfg.rho * state.Z + state.U;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double w = qp.alpha(static_cast<Eigen::Index>(i)) * y[i];
        if (w != 0.0)
            acc = acc + w * samples[i];
    }
    out.W = (1.0 / (1.0 + cfg.rho)) * acc;

    const double margin = cfg.qp_tol * cfg.C;
    const Eigen::VectorXd f = detail::margins(out.W, samples);
    double bsum = 0.0;
    for (Eigen::Index i = 0; i < out.alpha.size(); ++i) {
        if (out.alpha(i) > margin && out.alpha(i) < cfg.C - margin) {
            out.support_indices.push_back(static_cast<int>(i));
            bsum += y[static_cast<std::size_t>(i)] - f(i);
        }
    }
    if (!out.support_indices.empty())
        out.b = bsum / static_cast<double>(out.support_indices.size());
    else
        out.b = detail::fallback_bias(out.alpha, y, f, cfg.C, margin, state.b);
    return out;
}

/// Z update: prox of (lambda/rho) times the nuclear norm at W - U/rho.
/// lambda = 0 short-circuits to the identity.
inline ProxResult update_z_with_norm(const QMatrix &w, const QMatrix &u, const TrainConfig &cfg) {
    const QMatrix target = w - (1.0 / cfg.rho) * u;
    if (cfg.lambda == 0.0)
        return {target, 0.0}; // nuclear value unused at lambda = 0
    return prox_nuclear_with_norm(target, cfg.lambda / cfg.rho);
}

inline QMatrix update_z(const QMatrix &w, const QMatrix &u, const TrainConfig &cfg) {
    return update_z_with_norm(w, u, cfg).z;
}

/// Scaled dual update U <- U - tau rho (W - Z).
inline QMatrix update_u(const QMatrix &u, const QMatrix &w, const QMatrix &z, const TrainConfig &cfg) {
    return u - (cfg.tau * cfg.rho) * (w - z);
}

inline double relative_residual(const QMatrix &w, const QMatrix &z) {
    return fro_norm(w - z) / std::max({fro_norm(w), fro_norm(z), 1e-12});
}

/// Model objective 1/2 |W|^2 + lambda |Z|_* + C sum_i max(0, 1 - y_i(<W,X_i> + b)).
inline double model_objective(const QMatrix &w, double b, double z_nuclear, const std::vector<QMatrix> &samples,
                              const std::vector<int> &y, const TrainConfig &cfg) {
    double hinge = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
        hinge += std::max(0.0, 1.0 - y[i] * (real_inner(w, samples[i]) + b));
    return 0.5 * fro_norm(w) * fro_norm(w) + cfg.lambda * z_nuclear + cfg.C * hinge;
}

using TrainObserver = std::function<void(const AdmmState &, const Eigen::VectorXd &alpha)>;

/// ADMM training loop from zero initialization. The reported residual is the
/// relative split consistency |W - Z| / max(|W|, |Z|); termination additionally
/// requires the dual update to have stalled, rho |Z_k - Z_{k-1}| on the same
/// scale < tol. The second check matters when lambda = 0: there Z tracks W
/// exactly and the split residual is identically zero, yet the iterates are
/// still moving (the loop degenerates to a proximal-point pass over the plain
/// soft-margin objective), so stopping on the first check alone would freeze
/// the weights at their first, rho-damped half-step.
inline TrainedModel train(const std::vector<QMatrix> &samples, const std::vector<int> &y, const TrainConfig &cfg,
                          const TrainObserver &observer = nullptr) {
    validate_config(cfg);
    if (samples.size() != y.size())
        throw DimensionError("train: samples and labels differ in length");
    if (samples.size() < 2)
        throw ParameterError("train: at least two samples required");
    for (const QMatrix &x : samples) {
        require_same_shape(samples[0], x, "train: sample shapes");
        if (!x.all_finite())
            throw NumericError("train: sample contains non-finite entries");
    }
    for (int label : y)
        if (label != 1 && label != -1)
            throw ValidationError("train: labels must be -1 or +1");

    const GramMatrix k = gram_matrix(samples);
    const Eigen::Index m = samples[0].rows(), n = samples[0].cols();

    AdmmState state{QMatrix(m, n), QMatrix(m, n), QMatrix(m, n), 0.0, 0};
    QMatrix z_prev(m, n);
    Eigen::VectorXd alpha_prev = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(samples.size()));

    TrainedModel model;
    model.config = cfg;
    model.trace.reserve(static_cast<std::size_t>(cfg.max_iter));

    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        const auto t0 = std::chrono::steady_clock::now();
        WbUpdate wb = update_wb(state, samples, y, cfg, k, &alpha_prev);
        ProxResult zr = update_z_with_norm(wb.W, state.U, cfg);
        state.U = update_u(state.U, wb.W, zr.z, cfg);
        state.W = wb.W;
        state.Z = zr.z;
        state.b = wb.b;
        state.k = iter;
        alpha_prev = wb.alpha;

        const double residual = relative_residual(state.W, state.Z);
        const double dual_residual =
            cfg.rho * fro_norm(state.Z - z_prev) / std::max({fro_norm(state.W), fro_norm(state.Z), 1e-12});
        z_prev = state.Z;
        const double objective = model_objective(state.W, state.b, zr.nuclear, samples, y, cfg);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        model.trace.push_back({iter, objective, residual, seconds});
        if (observer)
            observer(state, wb.alpha);

        model.iterations = iter;
        model.W = state.W;
        model.b = state.b;
        model.alpha = wb.alpha;
        model.support_indices = wb.support_indices;
        if (residual < cfg.tol && dual_residual < cfg.tol) {
            model.converged = true;
            break;
        }
    }
    return model;
}

inline double decision_value(const TrainedModel &model, const QMatrix &x) {
    require_same_shape(model.W, x, "decision_value");
    return real_inner(model.W, x) + model.b;
}

/// Sign rule with the tie at exactly zero mapped to +1.
inline int predict(const TrainedModel &model, const QMatrix &x) {
    return decision_value(model, x) >= 0.0 ? 1 : -1;
}

} // namespace lsqmm
