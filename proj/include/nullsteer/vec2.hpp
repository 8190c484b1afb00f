#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nullsteer {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr Vec2 operator/(const Vec2& a, double s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

// Positions in the plane are plain 2-vectors in meters.
using PlanarPoint = Vec2;

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
constexpr double squared_norm(const Vec2& a) { return dot(a, a); }
inline double inf_norm(const Vec2& a) { return std::max(std::abs(a.x), std::abs(a.y)); }

// Row-major 2x2 matrix, used for the velocity penalty weights.
struct Mat2 {
    double xx = 0.0, xy = 0.0;
    double yx = 0.0, yy = 0.0;

    static constexpr Mat2 identity(double s = 1.0) { return {s, 0.0, 0.0, s}; }
    static constexpr Mat2 zero() { return {}; }

    constexpr Vec2 operator*(const Vec2& v) const { return {xx * v.x + xy * v.y, yx * v.x + yy * v.y}; }
    constexpr double quadratic(const Vec2& v) const { return dot(v, (*this) * v); }

    bool is_symmetric_psd(double tol = 1e-12) const
    {
        if (std::abs(xy - yx) > tol * (1.0 + std::abs(xy))) {
            return false;
        }
        return xx >= -tol && yy >= -tol && xx * yy - xy * yx >= -tol;
    }
    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::remainder(a, two_pi);
    if (w <= -std::numbers::pi) {
        w += two_pi;
    }
    return w;
}

} // namespace nullsteer
