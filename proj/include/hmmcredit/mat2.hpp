#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace hmmcredit {

/// Row vector over the two hidden states.
struct Vec2 {
    std::array<double, 2> v{0.0, 0.0};

    constexpr Vec2() = default;
    constexpr Vec2(double v0, double v1) : v{v0, v1} {}

    constexpr double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
    constexpr double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }

    constexpr double sum() const { return v[0] + v[1]; }

    constexpr Vec2& operator+=(const Vec2& o) {
        v[0] += o.v[0];
        v[1] += o.v[1];
        return *this;
    }
    constexpr Vec2& operator-=(const Vec2& o) {
        v[0] -= o.v[0];
        v[1] -= o.v[1];
        return *this;
    }
    constexpr Vec2& operator*=(double s) {
        v[0] *= s;
        v[1] *= s;
        return *this;
    }
    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

inline double max_abs(const Vec2& x) { return std::max(std::abs(x[0]), std::abs(x[1])); }

/// Dense 2x2 matrix, row-major.
struct Mat2 {
    std::array<double, 4> m{0.0, 0.0, 0.0, 0.0};

    constexpr Mat2() = default;
    constexpr Mat2(double a00, double a01, double a10, double a11) : m{a00, a01, a10, a11} {}

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 diag(double d0, double d1) { return {d0, 0.0, 0.0, d1}; }
    static constexpr Mat2 diag(const Vec2& d) { return {d[0], 0.0, 0.0, d[1]}; }

    constexpr double& operator()(int i, int j) { return m[static_cast<std::size_t>(2 * i + j)]; }
    constexpr double operator()(int i, int j) const { return m[static_cast<std::size_t>(2 * i + j)]; }

    constexpr Vec2 row(int i) const { return {(*this)(i, 0), (*this)(i, 1)}; }
    constexpr Vec2 row_sums() const { return {m[0] + m[1], m[2] + m[3]}; }

    constexpr Mat2& operator+=(const Mat2& o) {
        for (std::size_t k = 0; k < 4; ++k) m[k] += o.m[k];
        return *this;
    }
    constexpr Mat2& operator-=(const Mat2& o) {
        for (std::size_t k = 0; k < 4; ++k) m[k] -= o.m[k];
        return *this;
    }
    constexpr Mat2& operator*=(double s) {
        for (auto& x : m) x *= s;
        return *this;
    }
    friend constexpr Mat2 operator+(Mat2 a, const Mat2& b) { return a += b; }
    friend constexpr Mat2 operator-(Mat2 a, const Mat2& b) { return a -= b; }
    friend constexpr Mat2 operator*(Mat2 a, double s) { return a *= s; }
    friend constexpr Mat2 operator*(double s, Mat2 a) { return a *= s; }

    friend constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
        return {a.m[0] * b.m[0] + a.m[1] * b.m[2], a.m[0] * b.m[1] + a.m[1] * b.m[3],
                a.m[2] * b.m[0] + a.m[3] * b.m[2], a.m[2] * b.m[1] + a.m[3] * b.m[3]};
    }
    friend constexpr Mat2& operator*=(Mat2& a, const Mat2& b) { return a = a * b; }

    /// Row vector times matrix.
    friend constexpr Vec2 operator*(const Vec2& x, const Mat2& a) {
        return {x[0] * a.m[0] + x[1] * a.m[2], x[0] * a.m[1] + x[1] * a.m[3]};
    }
    /// Matrix times column vector.
    friend constexpr Vec2 operator*(const Mat2& a, const Vec2& x) {
        return {a.m[0] * x[0] + a.m[1] * x[1], a.m[2] * x[0] + a.m[3] * x[1]};
    }
    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

/// Scales column j of `a` by d[j], i.e. a * diag(d).
constexpr Mat2 scale_columns(Mat2 a, const Vec2& d) {
    a(0, 0) *= d[0];
    a(1, 0) *= d[0];
    a(0, 1) *= d[1];
    a(1, 1) *= d[1];
    return a;
}

inline double max_abs(const Mat2& a) {
    double r = 0.0;
    for (double x : a.m) r = std::max(r, std::abs(x));
    return r;
}

/// exp(A t) for a real 2x2 matrix in closed form.
///
/// Uses exp(At) = e^{tau t}[cosh(d t) I + sinh(d t)/d (A - tau I)] with
/// tau = tr(A)/2 and d^2 = ((a00-a11)/2)^2 + a01 a10, rewritten in terms of
/// the larger eigenvalue so nothing overflows before the final product.
/// When the eigenvalue gap 2d falls below 1e-8 the repeated-eigenvalue limit
/// sinh(dt)/d -> t (1 + (dt)^2/6) is used instead.
inline Mat2 expm(const Mat2& a, double t) {
    if (t == 0.0) return Mat2::identity();
    const double tau = 0.5 * (a(0, 0) + a(1, 1));
    const double half_diff = 0.5 * (a(0, 0) - a(1, 1));
    const double disc = half_diff * half_diff + a(0, 1) * a(1, 0);
    Mat2 centred = a - Mat2::diag(tau, tau);

    double c_coef;  // multiplies I
    double s_coef;  // multiplies (A - tau I)
    if (disc >= 0.0) {
        const double d = std::sqrt(disc);
        const double lead = std::exp((tau + d) * t);
        if (2.0 * d < 1e-8) {
            const double dt = d * t;
            c_coef = std::exp(tau * t) * (1.0 + 0.5 * dt * dt);
            s_coef = std::exp(tau * t) * t * (1.0 + dt * dt / 6.0);
        } else {
            const double em = std::expm1(-2.0 * d * t);  // e^{-2dt} - 1
            c_coef = lead * (2.0 + em) * 0.5;
            s_coef = lead * (-em) / (2.0 * d);
        }
    } else {
        // Complex pair; cannot occur for generators with nonnegative rates.
        const double w = std::sqrt(-disc);
        const double e = std::exp(tau * t);
        c_coef = e * std::cos(w * t);
        s_coef = e * std::sin(w * t) / w;
    }
    Mat2 r = centred * s_coef;
    r(0, 0) += c_coef;
    r(1, 1) += c_coef;
    return r;
}

}  // namespace hmmcredit
