#pragma once

#include <array>
#include <cmath>

#include "avdiff/errors.hpp"

namespace avdiff {

struct Vec3 {
    float x = 0.0f, y = 0.0f, z = 0.0f;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(float s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
};

inline float dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline float norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(const Vec3& v) {
    const float n = norm(v);
    if (n < 1e-12f) throw DegeneracyError("cannot normalize near-zero vector");
    return v * (1.0f / n);
}

inline Vec3 lerp(const Vec3& a, const Vec3& b, float t) { return a + (b - a) * t; }

// Column-major-free 3x3: m[r][c].
struct Mat3 {
    std::array<std::array<float, 3>, 3> m{};

    static Mat3 identity() {
        Mat3 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0f;
        return r;
    }

    static Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
        Mat3 r;
        r.m[0] = {c0.x, c1.x, c2.x};
        r.m[1] = {c0.y, c1.y, c2.y};
        r.m[2] = {c0.z, c1.z, c2.z};
        return r;
    }

    Vec3 col(int c) const { return {m[0][c], m[1][c], m[2][c]}; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
            }
        }
        return r;
    }

    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        }
        return r;
    }
};

// Rotation about a unit axis by angle (radians), Rodrigues form.
inline Mat3 axis_angle(const Vec3& axis, float angle) {
    const Vec3 u = normalized(axis);
    const float c = std::cos(angle), s = std::sin(angle), t = 1.0f - c;
    Mat3 r;
    r.m[0] = {c + u.x * u.x * t, u.x * u.y * t - u.z * s, u.x * u.z * t + u.y * s};
    r.m[1] = {u.y * u.x * t + u.z * s, c + u.y * u.y * t, u.y * u.z * t - u.x * s};
    r.m[2] = {u.z * u.x * t - u.y * s, u.z * u.y * t + u.x * s, c + u.z * u.z * t};
    return r;
}

// Rigid/affine transform p -> R p + t.
struct Affine {
    Mat3 rot = Mat3::identity();
    Vec3 trans{};

    Vec3 operator*(const Vec3& p) const { return rot * p + trans; }

    // (this o other): apply other first.
    Affine operator*(const Affine& o) const { return {rot * o.rot, rot * o.trans + trans}; }
};

}  // namespace avdiff
