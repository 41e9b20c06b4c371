#pragma once

#include <Eigen/Dense>

#include "errors.hpp"
#include "qmatrix.hpp"

namespace lsqmm {

/// 4m x 4n real block representation of a quaternion matrix.
using RealRep = Eigen::MatrixXd;

/// Real representation: a 4x4 block matrix over the planes (W0..W3) of A.
/// It is a ring homomorphism: to_real_rep(A*B) = to_real_rep(A) * to_real_rep(B).
inline RealRep to_real_rep(const QMatrix &a) {
    const Eigen::Index m = a.rows(), n = a.cols();
    const Eigen::MatrixXd &w0 = a.plane(0), &w1 = a.plane(1), &w2 = a.plane(2), &w3 = a.plane(3);
    RealRep b(4 * m, 4 * n);
    b.block(0 * m, 0 * n, m, n) = w0;
    b.block(0 * m, 1 * n, m, n) = -w1;
    b.block(0 * m, 2 * n, m, n) = -w2;
    b.block(0 * m, 3 * n, m, n) = -w3;
    b.block(1 * m, 0 * n, m, n) = w1;
    b.block(1 * m, 1 * n, m, n) = w0;
    b.block(1 * m, 2 * n, m, n) = -w3;
    b.block(1 * m, 3 * n, m, n) = w2;
    b.block(2 * m, 0 * n, m, n) = w2;
    b.block(2 * m, 1 * n, m, n) = w3;
    b.block(2 * m, 2 * n, m, n) = w0;
    b.block(2 * m, 3 * n, m, n) = -w1;
    b.block(3 * m, 0 * n, m, n) = w3;
    b.block(3 * m, 1 * n, m, n) = -w2;
    b.block(3 * m, 2 * n, m, n) = w1;
    b.block(3 * m, 3 * n, m, n) = w0;
    return b;
}

/// Inverse of to_real_rep by signed block averaging. On matrices that are not
/// exactly structured this is the orthogonal projection onto the range of
/// to_real_rep, i.e. the least-squares closest quaternion matrix.
inline QMatrix from_real_rep(const RealRep &b) {
    if (b.rows() < 4 || b.cols() < 4 || b.rows() % 4 != 0 || b.cols() % 4 != 0)
        throw DimensionError("real representation must have positive dimensions divisible by 4");
    const Eigen::Index m = b.rows() / 4, n = b.cols() / 4;
    auto blk = [&](int i, int j) { return b.block(i * m, j * n, m, n); };
    QMatrix a(m, n);
    a.plane(0) = (blk(0, 0) + blk(1, 1) + blk(2, 2) + blk(3, 3)) / 4.0;
    a.plane(1) = (-blk(0, 1) + blk(1, 0) - blk(2, 3) + blk(3, 2)) / 4.0;
    a.plane(2) = (-blk(0, 2) + blk(1, 3) + blk(2, 0) - blk(3, 1)) / 4.0;
    a.plane(3) = (-blk(0, 3) - blk(1, 2) + blk(2, 1) + blk(3, 0)) / 4.0;
    return a;
}

} // namespace lsqmm
