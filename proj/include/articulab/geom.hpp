#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>

namespace articulab {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) {
  double n = norm(a);
  return n > 0 ? a * (1.0 / n) : Vec3{};
}

// Row-major 3x3 rotation matrix.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return {}; }

  double operator()(int r, int c) const { return m[3 * r + c]; }
  double& operator()(int r, int c) { return m[3 * r + c]; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }

  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }

  Vec3 col(int c) const { return {m[c], m[3 + c], m[6 + c]}; }
};

// Rodrigues' formula; axis must be unit length.
inline Mat3 axis_angle(const Vec3& axis, double angle) {
  double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  double x = axis.x, y = axis.y, z = axis.z;
  Mat3 r;
  r.m = {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
         t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
         t * x * z - s * y, t * y * z + s * x, t * z * z + c};
  return r;
}

struct Pose {
  Mat3 R;
  Vec3 p;

  static Pose identity() { return {}; }
  static Pose translation(const Vec3& t) { return {Mat3::identity(), t}; }

  Vec3 apply(const Vec3& v) const { return R * v + p; }
  Pose operator*(const Pose& o) const { return {R * o.R, R * o.p + p}; }
  Pose inverse() const {
    Mat3 rt = R.transposed();
    return {rt, -(rt * p)};
  }
};

// Unit quaternion (w, x, y, z) from a rotation matrix.
inline std::array<double, 4> to_quat(const Mat3& R) {
  double tr = R(0, 0) + R(1, 1) + R(2, 2);
  std::array<double, 4> q;
  if (tr > 0) {
    double s = std::sqrt(tr + 1.0) * 2;
    q = {0.25 * s, (R(2, 1) - R(1, 2)) / s, (R(0, 2) - R(2, 0)) / s, (R(1, 0) - R(0, 1)) / s};
  } else if (R(0, 0) > R(1, 1) && R(0, 0) > R(2, 2)) {
    double s = std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2)) * 2;
    q = {(R(2, 1) - R(1, 2)) / s, 0.25 * s, (R(0, 1) + R(1, 0)) / s, (R(0, 2) + R(2, 0)) / s};
  } else if (R(1, 1) > R(2, 2)) {
    double s = std::sqrt(1.0 + R(1, 1) - R(0, 0) - R(2, 2)) * 2;
    q = {(R(0, 2) - R(2, 0)) / s, (R(0, 1) + R(1, 0)) / s, 0.25 * s, (R(1, 2) + R(2, 1)) / s};
  } else {
    double s = std::sqrt(1.0 + R(2, 2) - R(0, 0) - R(1, 1)) * 2;
    q = {(R(1, 0) - R(0, 1)) / s, (R(0, 2) + R(2, 0)) / s, (R(1, 2) + R(2, 1)) / s, 0.25 * s};
  }
  return q;
}

// Signed rotation of R about unit axis `w`, in [-pi, pi]. Off-axis components
// of R are discarded (swing-twist decomposition, twist part).
inline double twist_about(const Mat3& R, const Vec3& w) {
  auto q = to_quat(R);
  double proj = q[1] * w.x + q[2] * w.y + q[3] * w.z;
  double ang = 2.0 * std::atan2(proj, q[0]);
  while (ang > M_PI) ang -= 2.0 * M_PI;
  while (ang < -M_PI) ang += 2.0 * M_PI;
  return ang;
}

inline double rotation_angle(const Mat3& R) {
  double c = std::clamp((R(0, 0) + R(1, 1) + R(2, 2) - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

// Interpolates translation linearly and rotation along the relative geodesic.
inline Pose pose_interp(const Pose& a, const Pose& b, double t) {
  Mat3 rel = b.R * a.R.transposed();
  double ang = rotation_angle(rel);
  Mat3 R = a.R;
  if (ang > 1e-12) {
    Vec3 axis{rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1)};
    axis = normalized(axis);
    R = axis_angle(axis, ang * t) * a.R;
  }
  return {R, a.p + (b.p - a.p) * t};
}

// First two columns of the rotation matrix, column-major.
inline std::array<double, 6> rot6d_encode(const Mat3& R) {
  return {R(0, 0), R(1, 0), R(2, 0), R(0, 1), R(1, 1), R(2, 1)};
}

// Gram-Schmidt: normalize a1, orthogonalize a2 against it, cross for the
// third column. Valid for any input with non-degenerate first two columns.
inline Mat3 rot6d_decode(std::span<const double, 6> v) {
  Vec3 a1{v[0], v[1], v[2]}, a2{v[3], v[4], v[5]};
  Vec3 b1 = normalized(a1);
  Vec3 b2 = normalized(a2 - b1 * dot(b1, a2));
  Vec3 b3 = cross(b1, b2);
  Mat3 R;
  R.m = {b1.x, b2.x, b3.x, b1.y, b2.y, b3.y, b1.z, b2.z, b3.z};
  return R;
}

}  // namespace articulab
