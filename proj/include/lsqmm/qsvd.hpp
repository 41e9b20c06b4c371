#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "qmatrix.hpp"
#include "real_rep.hpp"

namespace lsqmm {

/// Artifact-wide tolerance constants, exposed read-only for tests.
namespace tolerances {
inline constexpr double kReconstruction = 1e-8;
inline constexpr double kGroupSpread = 1e-9;
} // namespace tolerances

/// Quaternion SVD A = U diag(sigma) V* with unitary quaternion factors and
/// real nonnegative singular values in descending order.
struct QsvdResult {
    QMatrix u;             ///< m x m unitary
    Eigen::VectorXd sigma; ///< min(m, n) values, descending
    QMatrix v;             ///< n x n unitary
};

namespace detail {

/// Real SVD factors of a real representation.
struct RealSvd {
    Eigen::VectorXd sigma;
    Eigen::MatrixXd u; ///< empty unless U was requested
    Eigen::MatrixXd v; ///< empty unless V was requested
};

/// Real SVD with a Jacobi fallback: the divide-and-conquer kernel can emit
/// non-finite factors on spectra whose singular values repeat in groups, and
/// every real representation built here has multiplicity-four spectra.
inline RealSvd real_svd(const Eigen::MatrixXd &a, unsigned options) {
    const bool want_u = options & (Eigen::ComputeThinU | Eigen::ComputeFullU);
    const bool want_v = options & (Eigen::ComputeThinV | Eigen::ComputeFullV);
    RealSvd out;
    {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(a, options);
        out.sigma = svd.singularValues();
        if (want_u)
            out.u = svd.matrixU();
        if (want_v)
            out.v = svd.matrixV();
        if (out.sigma.allFinite() && out.u.allFinite() && out.v.allFinite())
            return out;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, options);
    out.sigma = svd.singularValues();
    if (want_u)
        out.u = svd.matrixU();
    if (want_v)
        out.v = svd.matrixV();
    return out;
}

/// One modified Gram-Schmidt sweep: v minus its quaternion projections onto basis.
inline QMatrix mgs_deflate(QMatrix v, const std::vector<QMatrix> &basis) {
    for (const QMatrix &u : basis) {
        Quaternion c = qdot(u, v);
        v = v - scale_right(u, c);
    }
    return v;
}

/// Reinterpret one real 4*dim column as a quaternion column (stacked planes).
inline QMatrix decode_real_col(const Eigen::VectorXd &c, Eigen::Index dim) {
    QMatrix v(dim, 1);
    for (int p = 0; p < 4; ++p)
        v.plane(p) = c.segment(p * dim, dim);
    return v;
}

/// Fill every unassigned column with the standard-basis vector whose MGS
/// residual against the accepted basis is largest.
inline void complete_columns(std::vector<QMatrix> &cols, std::vector<bool> &filled, std::vector<QMatrix> &basis,
                             Eigen::Index dim) {
    for (std::size_t slot = 0; slot < cols.size(); ++slot) {
        if (filled[slot])
            continue;
        double best_rn = -1.0;
        QMatrix best;
        for (Eigen::Index e = 0; e < dim; ++e) {
            QMatrix cand(dim, 1);
            cand.plane(0)(e, 0) = 1.0;
            QMatrix r = mgs_deflate(cand, basis);
            double rn = fro_norm(r);
            if (rn > best_rn) {
                best_rn = rn;
                best = r;
            }
        }
        cols[slot] = (1.0 / best_rn) * best;
        filled[slot] = true;
        basis.push_back(cols[slot]);
    }
}

} // namespace detail

/// Quaternion singular values of A: every 4th singular value of the real
/// representation (they come in groups of four equal values).
inline Eigen::VectorXd singular_values(const QMatrix &a) {
    if (!a.all_finite())
        throw NumericError("singular values: input has non-finite entries");
    const Eigen::Index mn = std::min(a.rows(), a.cols());
    Eigen::VectorXd out(mn);
    if (mn == 0)
        return out;
    const detail::RealSvd svd = detail::real_svd(to_real_rep(a), 0);
    for (Eigen::Index g = 0; g < mn; ++g)
        out(g) = svd.sigma(4 * g);
    return out;
}

/// Quaternion nuclear norm: sum of the quaternion singular values.
inline double nuclear_norm(const QMatrix &a) {
    const Eigen::VectorXd s = singular_values(a);
    return s.size() ? s.sum() : 0.0;
}

/// Full quaternion SVD. The real SVD of the representation yields sigma
/// directly; unitary factors are recovered column by column. For each group of
/// four equal real singular values the candidate right vectors are the
/// structured projection of the 4-column block and its four raw columns, taken
/// in that order; the first candidate with a usable MGS residual wins. Left
/// vectors come from u = A v / |A v| for groups above the rank tolerance, and
/// any remaining slots in either factor are completed to a unitary basis.
inline QsvdResult qsvd(const QMatrix &a) {
    if (!a.all_finite())
        throw NumericError("qsvd: input has non-finite entries");
    const Eigen::Index m = a.rows(), n = a.cols(), mn = std::min(m, n);
    QsvdResult res{qeye(m), Eigen::VectorXd::Zero(mn), qeye(n)};
    if (mn == 0)
        return res;

    const detail::RealSvd svd = detail::real_svd(to_real_rep(a), Eigen::ComputeFullV);
    const Eigen::VectorXd &s = svd.sigma;
    const Eigen::MatrixXd &vfull = svd.v;
    for (Eigen::Index g = 0; g < mn; ++g)
        res.sigma(g) = s(4 * g);
    const double smax = s(0);

    std::vector<QMatrix> vcols(static_cast<std::size_t>(n)), ucols(static_cast<std::size_t>(m));
    std::vector<bool> vfill(static_cast<std::size_t>(n), false), ufill(static_cast<std::size_t>(m), false);
    std::vector<QMatrix> vbasis, ubasis;
    vbasis.reserve(static_cast<std::size_t>(n));
    ubasis.reserve(static_cast<std::size_t>(m));

    for (Eigen::Index g = 0; g < mn; ++g) {
        const Eigen::MatrixXd blk = vfull.block(0, 4 * g, 4 * n, 4);
        std::vector<QMatrix> cands;
        cands.push_back(from_real_rep(blk));
        for (int c = 0; c < 4; ++c)
            cands.push_back(detail::decode_real_col(blk.col(c), n));
        for (const QMatrix &cand : cands) {
            const double nr = fro_norm(cand);
            if (nr < 1e-6)
                continue;
            QMatrix r = detail::mgs_deflate((1.0 / nr) * cand, vbasis);
            const double rn = fro_norm(r);
            if (rn >= 1e-3) {
                vcols[static_cast<std::size_t>(g)] = (1.0 / rn) * r;
                vfill[static_cast<std::size_t>(g)] = true;
                vbasis.push_back(vcols[static_cast<std::size_t>(g)]);
                break;
            }
        }
    }

    const double eps = std::numeric_limits<double>::epsilon();
    const double rank_tol = 4.0 * static_cast<double>(std::max(m, n)) * eps * std::max(smax, 1e-300);
    const double sigma_floor = std::max(rank_tol, 1e-13 * std::max(1.0, smax));
    for (Eigen::Index g = 0; g < mn; ++g) {
        if (!vfill[static_cast<std::size_t>(g)] || res.sigma(g) <= sigma_floor)
            continue;
        QMatrix w = a * vcols[static_cast<std::size_t>(g)];
        const double nr = fro_norm(w);
        if (nr <= rank_tol)
            continue;
        QMatrix r = detail::mgs_deflate((1.0 / nr) * w, ubasis);
        const double rn = fro_norm(r);
        if (rn < 0.5)
            continue;
        ucols[static_cast<std::size_t>(g)] = (1.0 / rn) * r;
        ufill[static_cast<std::size_t>(g)] = true;
        ubasis.push_back(ucols[static_cast<std::size_t>(g)]);
    }

    detail::complete_columns(vcols, vfill, vbasis, n);
    detail::complete_columns(ucols, ufill, ubasis, m);

    for (Eigen::Index j = 0; j < n; ++j)
        res.v.set_col(j, vcols[static_cast<std::size_t>(j)]);
    for (Eigen::Index j = 0; j < m; ++j)
        res.u.set_col(j, ucols[static_cast<std::size_t>(j)]);
    return res;
}

/// Singular value thresholding result: the shrunk matrix plus its nuclear norm
/// (available for free from the shrunk spectrum).
struct ProxResult {
    QMatrix z;
    double nuclear = 0.0;
};

/// Proximal operator of tau * nuclear norm: soft-threshold the singular values
/// of the real representation and map back. Uniform thresholding keeps the
/// result inside the image of the representation, so one real SVD suffices.
inline ProxResult prox_nuclear_with_norm(const QMatrix &a, double tau) {
    if (!(tau > 0.0))
        throw ParameterError("prox_nuclear: threshold must be positive");
    if (!a.all_finite())
        throw NumericError("prox_nuclear: input has non-finite entries");
    const Eigen::Index mn = std::min(a.rows(), a.cols());
    if (mn == 0)
        return {QMatrix(a.rows(), a.cols()), 0.0};
    const detail::RealSvd svd = detail::real_svd(to_real_rep(a), Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd sh = (svd.sigma.array() - tau).max(0.0);
    ProxResult out;
    out.z = from_real_rep(svd.u * sh.asDiagonal() * svd.v.transpose());
    for (Eigen::Index g = 0; g < mn; ++g)
        out.nuclear += sh(4 * g);
    return out;
}

inline QMatrix prox_nuclear(const QMatrix &a, double tau) { return prox_nuclear_with_norm(a, tau).z; }

} // namespace lsqmm
