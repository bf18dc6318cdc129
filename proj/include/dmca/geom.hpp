#pragma once

#include <cmath>

namespace dmca {

inline constexpr double kPi = 3.14159265358979323846;

/// 2D vector (meters for positions, m/s for velocities).
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(const Vec2& r) const { return {x + r.x, y + r.y}; }
    constexpr Vec2 operator-(const Vec2& r) const { return {x - r.x, y - r.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    friend constexpr Vec2 operator*(double s, const Vec2& v) { return {v.x * s, v.y * s}; }
    Vec2& operator+=(const Vec2& r) { x += r.x; y += r.y; return *this; }
    Vec2& operator-=(const Vec2& r) { x -= r.x; y -= r.y; return *this; }

    constexpr double dot(const Vec2& r) const { return x * r.x + y * r.y; }
    /// z-component of the cross product (this x r).
    constexpr double det(const Vec2& r) const { return x * r.y - y * r.x; }
    double norm() const { return std::hypot(x, y); }
    constexpr double norm_sq() const { return x * x + y * y; }

    Vec2 normalized(double eps = 1e-12) const {
        double n = norm();
        if (n <= eps) return {0.0, 0.0};
        return {x / n, y / n};
    }
};

/// Rotate v by angle (counterclockwise).
inline Vec2 rotate(const Vec2& v, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Wrap an angle to (-pi, pi]; exactly pi maps to +pi.
inline double wrap_angle(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a <= 0.0) a += 2.0 * kPi;
    return a - kPi;
}

/// Local coordinate frame: origin plus the world angle of its x-axis.
struct Frame {
    Vec2 origin;
    double angle = 0.0;

    /// World point -> frame coordinates.
    Vec2 to_frame(const Vec2& p) const { return rotate(p - origin, -angle); }
    /// Frame point -> world coordinates.
    Vec2 to_world(const Vec2& p) const { return rotate(p, angle) + origin; }
    /// Rotate a free vector (velocity) into the frame.
    Vec2 vec_to_frame(const Vec2& v) const { return rotate(v, -angle); }
};

} // namespace dmca
