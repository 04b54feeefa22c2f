#pragma once

#include <cmath>
#include <numbers>

namespace shrinker_lab {

inline constexpr double pi = std::numbers::pi;

struct Vec2 {
    double x = 0.0, y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double a) const { return {a * x, a * y}; }
    constexpr Vec2 operator/(double a) const { return {x / a, y / a}; }
    Vec2 &operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2 &operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr bool operator==(const Vec2 &) const = default;
};

constexpr Vec2 operator*(double a, Vec2 v) { return v * a; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
constexpr double norm2(Vec2 a) { return dot(a, a); }
inline Vec2 normalized(Vec2 a) { return a / norm(a); }

// Quarter turn counter-clockwise.
constexpr Vec2 rot90(Vec2 a) { return {-a.y, a.x}; }

inline Vec2 rotate(Vec2 a, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * a.x - s * a.y, s * a.x + c * a.y};
}

inline Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Reflection across the line through the origin spanned by unit vector axis.
constexpr Vec2 reflect(Vec2 a, Vec2 axis) { return 2.0 * dot(a, axis) * axis - a; }

inline double angle_between(Vec2 a, Vec2 b) { return std::atan2(std::abs(cross(a, b)), dot(a, b)); }

// Wrap to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * pi);
    return a <= -pi ? a + 2.0 * pi : a;
}

} // namespace shrinker_lab
