#include "dqadapt/dq.hpp"

#include <cmath>
#include <stdexcept>

namespace dqadapt {

Quaternion Quaternion::from_rotation_matrix(const Mat3& R) {
  const Eigen::Quaterniond e(R);
  const double sign = e.w() < 0.0 ? -1.0 : 1.0;
  return Quaternion{sign * e.w(), sign * e.x(), sign * e.y(), sign * e.z()}.normalized();
}

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0) {
    return identity();
  }
  const Vec3 u = axis / n;
  const double s = std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), s * u.x(), s * u.y(), s * u.z()};
}

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::normalized() const {
  const double n = norm();
  return {w / n, x / n, y / n, z / n};
}

Vec3 Quaternion::rotate(const Vec3& v) const {
  return ((*this) * pure(v) * conj()).vec();
}

Mat3 Quaternion::to_rotation_matrix() const {
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

double Quaternion::angle() const { return 2.0 * std::atan2(vec().norm(), w); }

Quaternion operator+(const Quaternion& a, const Quaternion& b) {
  return {a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z};
}

Quaternion operator-(const Quaternion& a, const Quaternion& b) {
  return {a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z};
}

Quaternion operator-(const Quaternion& a) { return {-a.w, -a.x, -a.y, -a.z}; }

Quaternion operator*(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quaternion operator*(double s, const Quaternion& a) { return {s * a.w, s * a.x, s * a.y, s * a.z}; }
Quaternion operator*(const Quaternion& a, double s) { return s * a; }

double dot(const Quaternion& a, const Quaternion& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

Vec4 vec4(const Quaternion& q) { return {q.w, q.x, q.y, q.z}; }
Quaternion from_vec4(const Vec4& v) { return {v(0), v(1), v(2), v(3)}; }

Mat4 hamilton_plus(const Quaternion& a) {
  Mat4 h;
  h << a.w, -a.x, -a.y, -a.z,
       a.x, a.w, -a.z, a.y,
       a.y, a.z, a.w, -a.x,
       a.z, -a.y, a.x, a.w;
  return h;
}

Mat4 hamilton_minus(const Quaternion& b) {
  Mat4 h;
  h << b.w, -b.x, -b.y, -b.z,
       b.x, b.w, b.z, -b.y,
       b.y, -b.z, b.w, b.x,
       b.z, b.y, -b.x, b.w;
  return h;
}

Quaternion quat_log(const Quaternion& q) {
  const Vec3 v = q.vec();
  const double s = v.norm();
  if (s < kSmallAngle) {
    return Quaternion::pure(v);
  }
  const double phi = std::atan2(s, q.w);
  return Quaternion::pure(v * (phi / s));
}

Quaternion quat_exp(const Quaternion& a) {
  const Vec3 v = a.vec();
  const double phi = v.norm();
  if (phi < kSmallAngle) {
    return Quaternion{1.0, v.x(), v.y(), v.z()}.normalized();
  }
  const Vec3 u = v * (std::sin(phi) / phi);
  return {std::cos(phi), u.x(), u.y(), u.z()};
}

DualQuaternion DualQuaternion::from_translation(const Vec3& t) {
  return {Quaternion::identity(), Quaternion::pure(0.5 * t)};
}

DualQuaternion DualQuaternion::from_rotation(const Quaternion& r) { return {r, Quaternion{}}; }

DualQuaternion DualQuaternion::from_pose(const Quaternion& r, const Vec3& t) {
  return {r, 0.5 * (Quaternion::pure(t) * r)};
}

Vec3 DualQuaternion::translation() const { return (2.0 * (dual * primary.conj())).vec(); }

Vec3 DualQuaternion::transform_point(const Vec3& p) const {
  return primary.rotate(p) + translation();
}

bool DualQuaternion::is_unit(double tol) const {
  return std::abs(primary.norm() - 1.0) <= tol && std::abs(dot(primary, dual)) <= tol;
}

DualQuaternion DualQuaternion::normalized() const {
  const double n = primary.norm();
  const Quaternion p = (1.0 / n) * primary;
  Quaternion d = (1.0 / n) * dual;
  d = d - dot(p, d) * p;
  return {p, d};
}

DualQuaternion operator+(const DualQuaternion& a, const DualQuaternion& b) {
  return {a.primary + b.primary, a.dual + b.dual};
}

DualQuaternion operator-(const DualQuaternion& a, const DualQuaternion& b) {
  return {a.primary - b.primary, a.dual - b.dual};
}

DualQuaternion operator-(const DualQuaternion& a) { return {-a.primary, -a.dual}; }

DualQuaternion operator*(const DualQuaternion& a, const DualQuaternion& b) {
  return {a.primary * b.primary, a.primary * b.dual + a.dual * b.primary};
}

DualQuaternion operator*(double s, const DualQuaternion& a) { return {s * a.primary, s * a.dual}; }

Vec8 vec8(const DualQuaternion& x) {
  Vec8 v;
  v << x.primary.w, x.primary.x, x.primary.y, x.primary.z, x.dual.w, x.dual.x, x.dual.y, x.dual.z;
  return v;
}

DualQuaternion from_vec8(const Vec8& v) {
  return {{v(0), v(1), v(2), v(3)}, {v(4), v(5), v(6), v(7)}};
}

Mat8 hamilton_plus8(const DualQuaternion& a) {
  Mat8 h = Mat8::Zero();
  const Mat4 hp = hamilton_plus(a.primary);
  h.topLeftCorner<4, 4>() = hp;
  h.bottomRightCorner<4, 4>() = hp;
  h.bottomLeftCorner<4, 4>() = hamilton_plus(a.dual);
  return h;
}

Mat8 hamilton_minus8(const DualQuaternion& b) {
  Mat8 h = Mat8::Zero();
  const Mat4 hm = hamilton_minus(b.primary);
  h.topLeftCorner<4, 4>() = hm;
  h.bottomRightCorner<4, 4>() = hm;
  h.bottomLeftCorner<4, 4>() = hamilton_minus(b.dual);
  return h;
}

DualQuaternion canonicalize(const DualQuaternion& x, const DualQuaternion& ref) {
  return dot(x.primary, ref.primary) < 0.0 ? -x : x;
}

DualQuaternion dq_log(const DualQuaternion& x) {
  const Quaternion rot = quat_log(x.primary);
  const Vec3 half_t = 0.5 * x.translation();
  return {rot, Quaternion::pure(half_t)};
}

DualQuaternion dq_exp(const DualQuaternion& g) {
  const Quaternion r = quat_exp(g.primary);
  return {r, Quaternion::pure(g.dual.vec()) * r};
}

DualQuaternion dq_pow(const DualQuaternion& x, double tau) {
  const DualQuaternion l = dq_log(x);
  return dq_exp({tau * l.primary, tau * l.dual});
}

DualQuaternion sclerp(const DualQuaternion& x0, const DualQuaternion& x1, double tau) {
  const DualQuaternion target = canonicalize(x1, x0);
  const DualQuaternion rel = x0.conj() * target;
  const Vec8 diff = vec8(rel) - vec8(DualQuaternion::identity());
  if (diff.norm() < 1e-14) {
    return x0;
  }
  return x0 * dq_pow(rel, tau);
}

DualQuaternion line_from_point_direction(const Vec3& p, const Vec3& d) {
  if (std::abs(d.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("line direction must be a unit vector");
  }
  return {Quaternion::pure(d), Quaternion::pure(p.cross(d))};
}

DualQuaternion plane_from_point_normal(const Vec3& p, const Vec3& n) {
  if (std::abs(n.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("plane normal must be a unit vector");
  }
  return {Quaternion::pure(n), Quaternion{p.dot(n), 0.0, 0.0, 0.0}};
}

DualQuaternion transform_line(const DualQuaternion& x, const DualQuaternion& line) {
  return x * line * x.conj();
}

Mat3 skew(const Vec3& a) {
  Mat3 s;
  s << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return s;
}

}  // namespace dqadapt
