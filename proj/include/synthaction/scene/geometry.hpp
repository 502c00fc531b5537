#pragma once

#include <array>
#include <cmath>

namespace synthaction::scene {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }

struct Vec3 {
    double x = 0, y = 0, z = 0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr bool operator==(const Vec3&) const = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) {
    const double n = norm(a);
    return n > 0 ? a * (1.0 / n) : a;
}
constexpr Vec3 lerp(const Vec3& a, const Vec3& b, double t) { return a + (b - a) * t; }

/// Row-major 3x3 rotation matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    constexpr Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    constexpr Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += m[i * 3 + k] * o.m[k * 3 + j];
                r.m[i * 3 + j] = s;
            }
        return r;
    }
    constexpr Vec3 column(int j) const { return {m[j], m[3 + j], m[6 + j]}; }
};

inline Mat3 rot_x(double deg) {
    const double c = std::cos(deg2rad(deg)), s = std::sin(deg2rad(deg));
    return {{1, 0, 0, 0, c, -s, 0, s, c}};
}
inline Mat3 rot_y(double deg) {
    const double c = std::cos(deg2rad(deg)), s = std::sin(deg2rad(deg));
    return {{c, 0, s, 0, 1, 0, -s, 0, c}};
}
inline Mat3 rot_z(double deg) {
    const double c = std::cos(deg2rad(deg)), s = std::sin(deg2rad(deg));
    return {{c, -s, 0, s, c, 0, 0, 0, 1}};
}

/// Joint rotation from (x, y, z) degrees: twist about the bone (y) first,
/// then abduction (z), then flexion (x).
inline Mat3 euler_xzy(const Vec3& deg) { return rot_x(deg.x) * rot_z(deg.z) * rot_y(deg.y); }

}  // namespace synthaction::scene
