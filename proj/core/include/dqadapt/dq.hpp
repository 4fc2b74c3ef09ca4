#pragma once

// Quaternion and dual quaternion algebra.
//
// Coefficient order is w-first everywhere: a quaternion maps to (w, x, y, z)
// and a dual quaternion to (w, x, y, z | w', x', y', z'). All Hamilton
// matrices and Jacobians in the library use this order.

#include <Eigen/Dense>

namespace dqadapt {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat8 = Eigen::Matrix<double, 8, 8>;

/// Below this rotation angle (rad) log/exp switch to their series branch.
inline constexpr double kSmallAngle = 1e-8;

struct Quaternion {
  double w{0.0};
  double x{0.0};
  double y{0.0};
  double z{0.0};

  static Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }
  static Quaternion pure(const Vec3& v) { return {0.0, v.x(), v.y(), v.z()}; }
  /// Unit quaternion for a rotation of `angle` rad about the unit `axis`.
  static Quaternion from_axis_angle(const Vec3& axis, double angle);
  /// Unit quaternion with non-negative w for a proper rotation matrix.
  static Quaternion from_rotation_matrix(const Mat3& R);

  Vec3 vec() const { return {x, y, z}; }
  double norm() const;
  Quaternion conj() const { return {w, -x, -y, -z}; }
  Quaternion normalized() const;
  /// Rotates v by this unit quaternion (q v q*).
  Vec3 rotate(const Vec3& v) const;
  Mat3 to_rotation_matrix() const;
  /// Rotation angle in [0, 2pi) of a unit quaternion.
  double angle() const;
};

Quaternion operator+(const Quaternion& a, const Quaternion& b);
Quaternion operator-(const Quaternion& a, const Quaternion& b);
Quaternion operator-(const Quaternion& a);
Quaternion operator*(const Quaternion& a, const Quaternion& b);
Quaternion operator*(double s, const Quaternion& a);
Quaternion operator*(const Quaternion& a, double s);
double dot(const Quaternion& a, const Quaternion& b);

Vec4 vec4(const Quaternion& q);
Quaternion from_vec4(const Vec4& v);

/// vec4(a * b) == hamilton_plus(a) * vec4(b).
Mat4 hamilton_plus(const Quaternion& a);
/// vec4(a * b) == hamilton_minus(b) * vec4(a).
Mat4 hamilton_minus(const Quaternion& b);

Quaternion quat_log(const Quaternion& q);
Quaternion quat_exp(const Quaternion& a);

struct DualQuaternion {
  Quaternion primary{Quaternion::identity()};
  Quaternion dual{};

  static DualQuaternion identity() { return {}; }
  static DualQuaternion zero() { return {Quaternion{}, Quaternion{}}; }
  static DualQuaternion from_translation(const Vec3& t);
  static DualQuaternion from_rotation(const Quaternion& r);
  /// Rotation followed by translation in the parent frame: (1 + e t/2) r.
  static DualQuaternion from_pose(const Quaternion& r, const Vec3& t);

  Quaternion rotation() const { return primary; }
  /// Translation of a unit dual quaternion, 2 D(x) P(x)*.
  Vec3 translation() const;
  DualQuaternion conj() const { return {primary.conj(), dual.conj()}; }
  Vec3 transform_point(const Vec3& p) const;
  bool is_unit(double tol = 1e-9) const;
  DualQuaternion normalized() const;
};

DualQuaternion operator+(const DualQuaternion& a, const DualQuaternion& b);
DualQuaternion operator-(const DualQuaternion& a, const DualQuaternion& b);
DualQuaternion operator-(const DualQuaternion& a);
DualQuaternion operator*(const DualQuaternion& a, const DualQuaternion& b);
DualQuaternion operator*(double s, const DualQuaternion& a);

Vec8 vec8(const DualQuaternion& x);
DualQuaternion from_vec8(const Vec8& v);
Mat8 hamilton_plus8(const DualQuaternion& a);
Mat8 hamilton_minus8(const DualQuaternion& b);

/// Flips x when its primary part points away from ref (double cover).
DualQuaternion canonicalize(const DualQuaternion& x, const DualQuaternion& ref);

DualQuaternion dq_log(const DualQuaternion& x);
DualQuaternion dq_exp(const DualQuaternion& g);
DualQuaternion dq_pow(const DualQuaternion& x, double tau);
/// Screw interpolation x0 (conj(x0) x1)^tau along the shortest screw.
DualQuaternion sclerp(const DualQuaternion& x0, const DualQuaternion& x1, double tau);

/// Pluecker line l + e (p x l); d must be unit.
DualQuaternion line_from_point_direction(const Vec3& p, const Vec3& d);
/// Plane n + e (p . n); n must be unit.
DualQuaternion plane_from_point_normal(const Vec3& p, const Vec3& n);

inline Vec3 line_direction(const DualQuaternion& l) { return l.primary.vec(); }
inline Vec3 line_moment(const DualQuaternion& l) { return l.dual.vec(); }
inline Vec3 plane_normal(const DualQuaternion& pi) { return pi.primary.vec(); }
inline double plane_offset(const DualQuaternion& pi) { return pi.dual.w; }

/// Rigidly transforms a Pluecker line: x l x*.
DualQuaternion transform_line(const DualQuaternion& x, const DualQuaternion& line);

/// Cross-product matrix, skew(a) b == a x b.
Mat3 skew(const Vec3& a);

}  // namespace dqadapt
