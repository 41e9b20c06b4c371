#pragma once

#include <cmath>

namespace lsqmm {

/// Scalar quaternion q = w + x i + y j + z k.
struct Quaternion {
    double w = 0.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Quaternion() = default;
    constexpr Quaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

    constexpr bool operator==(const Quaternion &) const = default;
};

constexpr Quaternion operator+(const Quaternion &a, const Quaternion &b) {
    return {a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z};
}

constexpr Quaternion operator-(const Quaternion &a, const Quaternion &b) {
    return {a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z};
}

constexpr Quaternion operator-(const Quaternion &a) { return {-a.w, -a.x, -a.y, -a.z}; }

/// Hamilton product. Non-commutative: ij = k but ji = -k.
constexpr Quaternion operator*(const Quaternion &a, const Quaternion &b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

constexpr Quaternion operator*(double s, const Quaternion &q) { return {s * q.w, s * q.x, s * q.y, s * q.z}; }
constexpr Quaternion operator*(const Quaternion &q, double s) { return s * q; }

constexpr Quaternion conj(const Quaternion &q) { return {q.w, -q.x, -q.y, -q.z}; }

inline double modulus(const Quaternion &q) { return std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z); }

/// True when the real part vanishes (|w| <= tol).
inline bool is_pure(const Quaternion &q, double tol = 0.0) { return std::abs(q.w) <= tol; }

} // namespace lsqmm
