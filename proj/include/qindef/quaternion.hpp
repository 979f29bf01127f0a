#pragma once

#include <cmath>
#include <complex>
#include <iosfwd>

namespace qindef {

/// Real quaternion x0 + x1*i + x2*j + x3*k with Hamilton multiplication.
struct Quaternion {
    double x0 = 0.0;
    double x1 = 0.0;
    double x2 = 0.0;
    double x3 = 0.0;

    constexpr Quaternion() = default;
    constexpr Quaternion(double a) : x0(a) {}
    constexpr Quaternion(double a, double b, double c, double d) : x0(a), x1(b), x2(c), x3(d) {}
    Quaternion(std::complex<double> z) : x0(z.real()), x1(z.imag()) {}

    static constexpr Quaternion unit_i() { return {0, 1, 0, 0}; }
    static constexpr Quaternion unit_j() { return {0, 0, 1, 0}; }
    static constexpr Quaternion unit_k() { return {0, 0, 0, 1}; }

    // Split q = c1 + j*c2 with c1, c2 complex. Note j*(a+bi) = a*j - b*k,
    // so c2 = x2 - x3*i.
    std::complex<double> c1() const { return {x0, x1}; }
    std::complex<double> c2() const { return {x2, -x3}; }
    static Quaternion from_parts(std::complex<double> c1, std::complex<double> c2) {
        return {c1.real(), c1.imag(), c2.real(), -c2.imag()};
    }

    constexpr Quaternion conj() const { return {x0, -x1, -x2, -x3}; }
    double norm2() const { return x0 * x0 + x1 * x1 + x2 * x2 + x3 * x3; }
    double abs() const { return std::sqrt(norm2()); }
    double real() const { return x0; }

    Quaternion inverse() const {
        const double n2 = norm2();
        return {x0 / n2, -x1 / n2, -x2 / n2, -x3 / n2};
    }

    constexpr Quaternion operator-() const { return {-x0, -x1, -x2, -x3}; }
    constexpr Quaternion& operator+=(const Quaternion& r) {
        x0 += r.x0; x1 += r.x1; x2 += r.x2; x3 += r.x3;
        return *this;
    }
    constexpr Quaternion& operator-=(const Quaternion& r) {
        x0 -= r.x0; x1 -= r.x1; x2 -= r.x2; x3 -= r.x3;
        return *this;
    }
};

constexpr Quaternion operator+(Quaternion a, const Quaternion& b) { return a += b; }
constexpr Quaternion operator-(Quaternion a, const Quaternion& b) { return a -= b; }

/// Hamilton product; non-commutative.
constexpr Quaternion operator*(const Quaternion& a, const Quaternion& b) {
    return {a.x0 * b.x0 - a.x1 * b.x1 - a.x2 * b.x2 - a.x3 * b.x3,
            a.x0 * b.x1 + a.x1 * b.x0 + a.x2 * b.x3 - a.x3 * b.x2,
            a.x0 * b.x2 - a.x1 * b.x3 + a.x2 * b.x0 + a.x3 * b.x1,
            a.x0 * b.x3 + a.x1 * b.x2 - a.x2 * b.x1 + a.x3 * b.x0};
}

constexpr Quaternion operator*(double s, const Quaternion& q) {
    return {s * q.x0, s * q.x1, s * q.x2, s * q.x3};
}
constexpr Quaternion operator*(const Quaternion& q, double s) { return s * q; }
constexpr Quaternion operator/(const Quaternion& q, double s) {
    return {q.x0 / s, q.x1 / s, q.x2 / s, q.x3 / s};
}

inline Quaternion conj(const Quaternion& q) { return q.conj(); }
inline double abs(const Quaternion& q) { return q.abs(); }

inline bool approx_equal(const Quaternion& a, const Quaternion& b, double tol) {
    return (a - b).abs() <= tol;
}

std::ostream& operator<<(std::ostream& os, const Quaternion& q);

}  // namespace qindef
