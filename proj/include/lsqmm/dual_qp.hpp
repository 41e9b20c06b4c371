#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "qmatrix.hpp"

namespace lsqmm {

/// N x N matrix of pairwise real inner products of the samples.
using GramMatrix = Eigen::MatrixXd;

inline GramMatrix gram_matrix(const std::vector<QMatrix> &samples) {
    const std::size_t n = samples.size();
    if (n == 0)
        throw DimensionError("gram matrix of an empty sample list");
    for (const QMatrix &x : samples)
        require_same_shape(samples[0], x, "gram matrix");
    GramMatrix k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = real_inner(samples[i], samples[j]);
            k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            k(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }
    return k;
}

/// Box- and equality-constrained concave QP in alpha:
///   maximize  q.alpha - 1/(2(1+rho)) * sum_ij alpha_i alpha_j y_i y_j K_ij
///   s.t.      sum_i alpha_i y_i = 0,  0 <= alpha_i <= C.
struct DualQpProblem {
    GramMatrix K;
    std::vector<int> y;
    Eigen::VectorXd q;
    double C = 1.0;
    double rho = 1.0;

    Eigen::Index size() const { return K.rows(); }
};

struct DualSolution {
    Eigen::VectorXd alpha;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline void validate_problem(const DualQpProblem &p) {
    const Eigen::Index n = p.K.rows();
    if (p.K.cols() != n)
        throw DimensionError("dual QP: Gram matrix must be square");
    if (static_cast<Eigen::Index>(p.y.size()) != n || p.q.size() != n)
        throw DimensionError("dual QP: lengths of q and y must match the Gram dimension");
    if (!(p.C > 0.0))
        throw ParameterError("dual QP: C must be positive");
    if (!(p.rho >= 0.0))
        throw ParameterError("dual QP: rho must be nonnegative");
    for (int label : p.y)
        if (label != 1 && label != -1)
            throw ValidationError("dual QP: labels must be -1 or +1");
}

/// Assemble the per-iteration dual problem. The linear coefficients are
/// q_i = 1 - y_i <U + rho Z, X_i> / (rho + 1).
inline DualQpProblem build_dual(const std::vector<QMatrix> &samples, const std::vector<int> &y, const QMatrix &u,
                                const QMatrix &z, double rho, double c, GramMatrix k) {
    if (samples.size() != y.size())
        throw DimensionError("build_dual: samples and labels differ in length");
    if (!(rho > 0.0))
        throw ParameterError("build_dual: rho must be positive");
    if (!(c > 0.0))
        throw ParameterError("build_dual: C must be positive");
    for (const QMatrix &x : samples) {
        require_same_shape(u, x, "build_dual: U vs sample");
        require_same_shape(z, x, "build_dual: Z vs sample");
    }
    DualQpProblem p;
    p.K = std::move(k);
    p.y = y;
    p.C = c;
    p.rho = rho;
    p.q.resize(static_cast<Eigen::Index>(samples.size()));
    const QMatrix uz = u + rho * z;
    for (std::size_t i = 0; i < samples.size(); ++i)
        p.q(static_cast<Eigen::Index>(i)) = 1.0 - y[i] * real_inner(uz, samples[i]) / (rho + 1.0);
    validate_problem(p);
    return p;
}

inline double dual_objective(const DualQpProblem &p, const Eigen::VectorXd &alpha) {
    const Eigen::Index n = p.size();
    double quad = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            quad += alpha(i) * alpha(j) * p.y[static_cast<std::size_t>(i)] * p.y[static_cast<std::size_t>(j)] *
                    p.K(i, j);
    return p.q.dot(alpha) - quad / (2.0 * (1.0 + p.rho));
}

namespace detail {

/// Gradient of the dual objective: g = q - H alpha with H_ij = y_i y_j K_ij / (1+rho).
inline Eigen::VectorXd dual_gradient(const DualQpProblem &p, const Eigen::VectorXd &alpha) {
    const Eigen::Index n = p.size();
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            s += p.y[static_cast<std::size_t>(j)] * p.K(i, j) * alpha(j);
        g(i) = p.q(i) - p.y[static_cast<std::size_t>(i)] * s / (1.0 + p.rho);
    }
    return g;
}

} // namespace detail

namespace detail {

/// Residual evaluation given a precomputed gradient (shared by kkt_residual
/// and the solver's incremental path).
inline double residual_from_gradient(const DualQpProblem &p, const Eigen::VectorXd &alpha, const Eigen::VectorXd &g) {
    const Eigen::Index n = p.size();
    const double inf = std::numeric_limits<double>::infinity();
    // beta bracket: yg <= beta over the upward-movable set, yg >= beta over the
    // downward-movable set at optimality.
    double m_up = -inf, m_low = inf;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int yi = p.y[static_cast<std::size_t>(i)];
        const double yg = yi * g(i);
        const bool up = (yi == 1 && alpha(i) < p.C) || (yi == -1 && alpha(i) > 0.0);
        const bool low = (yi == -1 && alpha(i) < p.C) || (yi == 1 && alpha(i) > 0.0);
        if (up)
            m_up = std::max(m_up, yg);
        if (low)
            m_low = std::min(m_low, yg);
    }
    double beta;
    if (m_up > -inf && m_low < inf)
        beta = 0.5 * (m_up + m_low);
    else if (m_up > -inf)
        beta = m_up;
    else if (m_low < inf)
        beta = m_low;
    else
        beta = 0.0;
    double r = 0.0;
    double eq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int yi = p.y[static_cast<std::size_t>(i)];
        const double target = std::clamp(alpha(i) + g(i) - beta * yi, 0.0, p.C);
        r = std::max(r, std::abs(alpha(i) - target));
        eq += alpha(i) * yi;
    }
    return r + std::abs(eq);
}

} // namespace detail

/// Projected-optimality residual: bracket the equality multiplier beta from the
/// movable index sets, then measure how far each alpha_i sits from its
/// box-projected gradient-step target, plus the equality violation.
inline double kkt_residual(const DualQpProblem &p, const Eigen::VectorXd &alpha) {
    validate_problem(p);
    if (alpha.size() != p.size())
        throw DimensionError("kkt_residual: alpha length mismatch");
    return detail::residual_from_gradient(p, alpha, detail::dual_gradient(p, alpha));
}

/// SMO-style pairwise coordinate ascent. Picks the maximal-violating pair,
/// solves the 1-D subproblem in closed form, clips to the box. Lowest index
/// wins ties. max_iter <= 0 selects the default 10 N^2 inner updates.
inline DualSolution solve_dual_qp(const DualQpProblem &p, double tol = 1e-6, int max_iter = 0,
                                  const Eigen::VectorXd *warm_start = nullptr,
                                  const std::function<void(double)> &on_objective = nullptr) {
    validate_problem(p);
    if (!(tol > 0.0))
        throw ParameterError("solve_dual_qp: tol must be positive");
    const Eigen::Index n = p.size();
    if (max_iter <= 0)
        max_iter = static_cast<int>(10 * n * n);

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    if (warm_start != nullptr && warm_start->size() == n) {
        alpha = warm_start->cwiseMax(0.0).cwiseMin(p.C);
        double drift = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            drift += alpha(i) * p.y[static_cast<std::size_t>(i)];
        if (std::abs(drift) > 1e-9 * std::max(1.0, alpha.sum()))
            alpha.setZero();
    }

    Eigen::VectorXd g = detail::dual_gradient(p, alpha);
    const double scale = 1.0 + p.rho;

    DualSolution sol;
    sol.converged = false;
    int it = 0;
    for (; it < max_iter; ++it) {
        const double res = detail::residual_from_gradient(p, alpha, g);
        if (res <= tol) {
            sol.converged = true;
            break;
        }

        // Movable sets ordered by violation; fall through flat directions.
        std::vector<Eigen::Index> ups, lows;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int yi = p.y[static_cast<std::size_t>(i)];
            if ((yi == 1 && alpha(i) < p.C) || (yi == -1 && alpha(i) > 0.0))
                ups.push_back(i);
            if ((yi == -1 && alpha(i) < p.C) || (yi == 1 && alpha(i) > 0.0))
                lows.push_back(i);
        }
        auto yg = [&](Eigen::Index i) { return p.y[static_cast<std::size_t>(i)] * g(i); };
        std::stable_sort(ups.begin(), ups.end(), [&](Eigen::Index a, Eigen::Index b) { return yg(a) > yg(b); });
        std::stable_sort(lows.begin(), lows.end(), [&](Eigen::Index a, Eigen::Index b) { return yg(a) < yg(b); });

        bool stepped = false;
        for (std::size_t ui = 0; ui < ups.size() && !stepped; ++ui) {
            for (std::size_t li = 0; li < lows.size() && !stepped; ++li) {
                const Eigen::Index i = ups[ui], j = lows[li];
                if (i == j)
                    continue;
                const double v = yg(i) - yg(j);
                if (v <= 0.0)
                    break; // sorted: no ascent left for this i or any later one
                const int yi = p.y[static_cast<std::size_t>(i)], yj = p.y[static_cast<std::size_t>(j)];
                // Step alpha_i += yi*delta, alpha_j -= yj*delta along the equality manifold.
                const double hi_i = (yi == 1) ? p.C - alpha(i) : alpha(i);
                const double hi_j = (yj == 1) ? alpha(j) : p.C - alpha(j);
                const double delta_hi = std::min(hi_i, hi_j);
                if (delta_hi <= 0.0)
                    continue;
                double eta = (p.K(i, i) + p.K(j, j) - 2.0 * p.K(i, j)) / scale;
                double delta;
                if (eta < 1e-12) {
                    delta = delta_hi; // flat but ascending direction: go to the box
                } else {
                    delta = std::min(v / eta, delta_hi);
                }
                if (delta <= 0.0)
                    continue;
                alpha(i) = std::clamp(alpha(i) + yi * delta, 0.0, p.C);
                alpha(j) = std::clamp(alpha(j) - yj * delta, 0.0, p.C);
                for (Eigen::Index t = 0; t < n; ++t)
                    g(t) -= p.y[static_cast<std::size_t>(t)] * (p.K(t, i) - p.K(t, j)) * delta / scale;
                stepped = true;
            }
        }
        if (!stepped)
            break;
        if (on_objective)
            on_objective(dual_objective(p, alpha));
    }

    sol.alpha = alpha;
    sol.iterations = it;
    sol.kkt_residual = kkt_residual(p, alpha);
    if (sol.kkt_residual <= tol)
        sol.converged = true;
    return sol;
}

} // namespace lsqmm
