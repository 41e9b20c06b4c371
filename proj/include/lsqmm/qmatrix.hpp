#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>

#include "errors.hpp"
#include "quaternion.hpp"

namespace lsqmm {

/// Dense quaternion matrix A = A0 + A1 i + A2 j + A3 k stored as four real planes
/// of identical shape. Plane 0 is the real part; planes 1..3 are the i/j/k parts.
class QMatrix {
  public:
    QMatrix() = default;

    QMatrix(Eigen::Index rows, Eigen::Index cols) {
        for (auto &p : planes_)
            p = Eigen::MatrixXd::Zero(rows, cols);
    }

    static QMatrix from_planes(Eigen::MatrixXd w, Eigen::MatrixXd x, Eigen::MatrixXd y, Eigen::MatrixXd z) {
        if (x.rows() != w.rows() || x.cols() != w.cols() || y.rows() != w.rows() || y.cols() != w.cols() ||
            z.rows() != w.rows() || z.cols() != w.cols())
            throw DimensionError("quaternion matrix planes must share one shape");
        QMatrix a;
        a.planes_ = {std::move(w), std::move(x), std::move(y), std::move(z)};
        return a;
    }

    /// Pure quaternion matrix: zero real plane, given i/j/k planes.
    static QMatrix pure(const Eigen::MatrixXd &x, const Eigen::MatrixXd &y, const Eigen::MatrixXd &z) {
        return from_planes(Eigen::MatrixXd::Zero(x.rows(), x.cols()), x, y, z);
    }

    Eigen::Index rows() const { return planes_[0].rows(); }
    Eigen::Index cols() const { return planes_[0].cols(); }
    Eigen::Index size() const { return planes_[0].size(); }

    Eigen::MatrixXd &plane(int p) { return planes_[static_cast<std::size_t>(p)]; }
    const Eigen::MatrixXd &plane(int p) const { return planes_[static_cast<std::size_t>(p)]; }

    Quaternion operator()(Eigen::Index i, Eigen::Index j) const {
        return {planes_[0](i, j), planes_[1](i, j), planes_[2](i, j), planes_[3](i, j)};
    }

    void set(Eigen::Index i, Eigen::Index j, const Quaternion &q) {
        planes_[0](i, j) = q.w;
        planes_[1](i, j) = q.x;
        planes_[2](i, j) = q.y;
        planes_[3](i, j) = q.z;
    }

    QMatrix col(Eigen::Index j) const {
        QMatrix c(rows(), 1);
        for (int p = 0; p < 4; ++p)
            c.planes_[static_cast<std::size_t>(p)] = planes_[static_cast<std::size_t>(p)].col(j);
        return c;
    }

    void set_col(Eigen::Index j, const QMatrix &c) {
        if (c.rows() != rows() || c.cols() != 1)
            throw DimensionError("column assignment shape mismatch");
        for (int p = 0; p < 4; ++p)
            planes_[static_cast<std::size_t>(p)].col(j) = c.planes_[static_cast<std::size_t>(p)];
    }

    bool all_finite() const {
        for (const auto &p : planes_)
            if (!p.allFinite())
                return false;
        return true;
    }

    bool same_shape(const QMatrix &o) const { return rows() == o.rows() && cols() == o.cols(); }

  private:
    std::array<Eigen::MatrixXd, 4> planes_{};
};

inline void require_same_shape(const QMatrix &a, const QMatrix &b, const char *what) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(what) + ": shapes (" + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + ") and (" + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + ") differ");
}

inline QMatrix operator+(const QMatrix &a, const QMatrix &b) {
    require_same_shape(a, b, "matrix sum");
    QMatrix c(a.rows(), a.cols());
    for (int p = 0; p < 4; ++p)
        c.plane(p) = a.plane(p) + b.plane(p);
    return c;
}

inline QMatrix operator-(const QMatrix &a, const QMatrix &b) {
    require_same_shape(a, b, "matrix difference");
    QMatrix c(a.rows(), a.cols());
    for (int p = 0; p < 4; ++p)
        c.plane(p) = a.plane(p) - b.plane(p);
    return c;
}

inline QMatrix operator-(const QMatrix &a) {
    QMatrix c(a.rows(), a.cols());
    for (int p = 0; p < 4; ++p)
        c.plane(p) = -a.plane(p);
    return c;
}

inline QMatrix operator*(double s, const QMatrix &a) {
    QMatrix c(a.rows(), a.cols());
    for (int p = 0; p < 4; ++p)
        c.plane(p) = s * a.plane(p);
    return c;
}

inline QMatrix operator*(const QMatrix &a, double s) { return s * a; }

/// Hamilton matrix product, expanded plane-wise.
inline QMatrix operator*(const QMatrix &a, const QMatrix &b) {
    if (a.cols() != b.rows())
        throw DimensionError("matrix product: inner dimensions " + std::to_string(a.cols()) + " and " +
                             std::to_string(b.rows()) + " differ");
    const Eigen::MatrixXd &a0 = a.plane(0), &a1 = a.plane(1), &a2 = a.plane(2), &a3 = a.plane(3);
    const Eigen::MatrixXd &b0 = b.plane(0), &b1 = b.plane(1), &b2 = b.plane(2), &b3 = b.plane(3);
    QMatrix c(a.rows(), b.cols());
    c.plane(0) = a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3;
    c.plane(1) = a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2;
    c.plane(2) = a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1;
    c.plane(3) = a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0;
    return c;
}

/// Right-multiply every entry of a by the scalar quaternion q.
inline QMatrix scale_right(const QMatrix &a, const Quaternion &q) {
    QMatrix c(a.rows(), a.cols());
    c.plane(0) = a.plane(0) * q.w - a.plane(1) * q.x - a.plane(2) * q.y - a.plane(3) * q.z;
    c.plane(1) = a.plane(0) * q.x + a.plane(1) * q.w + a.plane(2) * q.z - a.plane(3) * q.y;
    c.plane(2) = a.plane(0) * q.y - a.plane(1) * q.z + a.plane(2) * q.w + a.plane(3) * q.x;
    c.plane(3) = a.plane(0) * q.z + a.plane(1) * q.y - a.plane(2) * q.x + a.plane(3) * q.w;
    return c;
}

/// Conjugate transpose A* (transpose planes, negate the imaginary ones).
inline QMatrix conj_transpose(const QMatrix &a) {
    QMatrix c(a.cols(), a.rows());
    c.plane(0) = a.plane(0).transpose();
    for (int p = 1; p < 4; ++p)
        c.plane(p) = -a.plane(p).transpose();
    return c;
}

/// Real inner product <A,B> = sum over planes and entries of A_p .* B_p.
/// Equals Re tr(A* B); it is the Euclidean inner product of the stacked planes.
inline double real_inner(const QMatrix &a, const QMatrix &b) {
    require_same_shape(a, b, "real inner product");
    double s = 0.0;
    for (int p = 0; p < 4; ++p)
        s += a.plane(p).cwiseProduct(b.plane(p)).sum();
    return s;
}

/// Frobenius norm over all four planes.
inline double fro_norm(const QMatrix &a) {
    double s = 0.0;
    for (int p = 0; p < 4; ++p)
        s += a.plane(p).squaredNorm();
    return std::sqrt(s);
}

/// True when the real plane is bounded by tol entrywise.
inline bool is_pure(const QMatrix &a, double tol = 0.0) {
    if (a.size() == 0)
        return true;
    return a.plane(0).cwiseAbs().maxCoeff() <= tol;
}

/// Quaternion identity matrix (real plane = I, imaginary planes zero).
inline QMatrix qeye(Eigen::Index n) {
    QMatrix a(n, n);
    a.plane(0) = Eigen::MatrixXd::Identity(n, n);
    return a;
}

/// Entrywise quaternion inner product <x,y> = x* . y for column vectors (m x 1).
inline Quaternion qdot(const QMatrix &x, const QMatrix &y) {
    require_same_shape(x, y, "quaternion dot");
    if (x.cols() != 1)
        throw DimensionError("quaternion dot expects column vectors");
    QMatrix r = conj_transpose(x) * y;
    return r(0, 0);
}

} // namespace lsqmm
