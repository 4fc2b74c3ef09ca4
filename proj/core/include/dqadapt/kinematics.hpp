#pragma once

// Serial-arm kinematics over an uncertain parameter vector.
//
// The chain is base(a) * dh_1(q_1, a) * ... * dh_6(q_6, a) * effector(a) with
// standard DH joints Rz(q + theta) Tz(d) Tx(a) Rx(alpha) and six-parameter
// offsets Tx Ty Tz Rx Ry Rz for the base and effector. Every factor depends on
// exactly one scalar, so all Jacobians (joint and parametric) are assembled
// from per-factor world twists.

#include <array>
#include <string>

#include "dqadapt/dq.hpp"

namespace dqadapt {

inline constexpr int kJointCount = 6;
inline constexpr int kParamCount = 36;
/// Frames 0 (base) ... 6 (flange) and 7 (effector).
inline constexpr int kFrameCount = 8;
inline constexpr int kEffectorFrame = 7;

using JointVector = Eigen::Matrix<double, kJointCount, 1>;
using ParameterVector = Eigen::Matrix<double, kParamCount, 1>;
using PoseJacobian = Eigen::Matrix<double, 8, kJointCount>;
using ParametricJacobian = Eigen::Matrix<double, 8, kParamCount>;
using JointRow = Eigen::Matrix<double, 1, kJointCount>;
using ParameterRow = Eigen::Matrix<double, 1, kParamCount>;

enum class DhField { ThetaOffset = 0, D = 1, A = 2, Alpha = 3 };

/// Parameter layout: 24 DH entries (joint-major), base offset, effector offset.
namespace param {
constexpr int dh(int joint, DhField field) { return 4 * joint + static_cast<int>(field); }
constexpr int base(int i) { return 24 + i; }
constexpr int effector(int i) { return 30 + i; }
/// True for translation-type entries (d, a, and the offset translations).
bool is_length(int index);
}  // namespace param

enum class TaskMode { Pose, Line };

const char* to_string(TaskMode mode);
TaskMode task_mode_from_string(const std::string& s);

struct TaskVector {
  TaskMode mode{TaskMode::Pose};
  DualQuaternion value{};

  Vec8 coeffs() const { return vec8(value); }
};

/// What the camera reports. Full: the task vector itself (a pose in pose
/// mode, the beam line in line mode). Pose: the complete effector pose in
/// either mode. PositionOnly: the effector position.
enum class MeasurementModel { Full, Pose, PositionOnly };

struct ParameterBounds {
  ParameterVector lower = ParameterVector::Constant(-1e9);
  ParameterVector upper = ParameterVector::Constant(1e9);

  bool contains(const ParameterVector& a, double tol = 0.0) const;
  /// Box of +/- length_tol on lengths and +/- angle_tol on angles around center.
  static ParameterBounds around(const ParameterVector& center, double length_tol, double angle_tol);
};

/// Velocity of a rigid factor expressed in the world frame: a point p moves
/// with v + omega x p per unit change of the factor's scalar.
struct Twist {
  Vec3 omega{Vec3::Zero()};
  Vec3 v{Vec3::Zero()};

  Vec3 point_velocity(const Vec3& p) const { return v + omega.cross(p); }
  /// Pure dual quaternion w with d(x)/ds = w x.
  DualQuaternion as_dq() const;
};

/// One forward pass of the chain: frame poses plus every factor twist.
struct ChainState {
  std::array<DualQuaternion, kFrameCount> frames{};
  std::array<Twist, kParamCount> twists{};  // indexed by factor

  const DualQuaternion& effector() const { return frames[kEffectorFrame]; }
};

class KinematicModel {
 public:
  KinematicModel() = default;
  KinematicModel(ParameterVector nominal, ParameterBounds bounds, Vec3 beam_axis = Vec3::UnitZ());

  const ParameterVector& nominal() const { return nominal_; }
  const ParameterBounds& bounds() const { return bounds_; }
  /// Beam direction in the effector frame.
  const Vec3& beam_axis() const { return beam_axis_; }

  ChainState evaluate(const JointVector& q, const ParameterVector& a) const;
  DualQuaternion fk(const JointVector& q, const ParameterVector& a) const;
  DualQuaternion frame_pose(const JointVector& q, const ParameterVector& a, int frame) const;

  /// World-frame beam line of an effector pose.
  DualQuaternion beam_line(const DualQuaternion& effector) const;
  TaskVector task(const JointVector& q, const ParameterVector& a, TaskMode mode) const;
  TaskVector task(const ChainState& s, TaskMode mode) const;

  PoseJacobian pose_jacobian(const JointVector& q, const ParameterVector& a) const;
  PoseJacobian line_jacobian(const JointVector& q, const ParameterVector& a) const;
  PoseJacobian line_jacobian(const JointVector& q, const ParameterVector& a, const Vec3& axis) const;
  PoseJacobian task_jacobian(const ChainState& s, TaskMode mode) const;

  ParametricJacobian parametric_jacobian(const JointVector& q, const ParameterVector& a,
                                         TaskMode mode) const;
  ParametricJacobian parametric_jacobian(const ChainState& s, TaskMode mode) const;

  /// Rows of the parametric Jacobian seen by the measurement: all 8 for Full,
  /// the pose Jacobian for Pose, the translation quaternion (0, t) for
  /// PositionOnly.
  Eigen::MatrixXd measurement_jacobian(const ChainState& s, TaskMode mode,
                                       MeasurementModel model) const;
  Eigen::MatrixXd measurement_jacobian(const JointVector& q, const ParameterVector& a,
                                       TaskMode mode, MeasurementModel model) const;
  Eigen::VectorXd measurement_vector(const ChainState& s, TaskMode mode,
                                     MeasurementModel model) const;

  /// Factor index that carries parameter `p` (factors run base, joints, effector).
  static int factor_of_param(int p);
  static int factor_of_joint(int j) { return factor_of_param(param::dh(j, DhField::ThetaOffset)); }
  /// Number of leading factors composing frame k.
  static int factors_in_frame(int frame);

 private:
  ParameterVector nominal_ = ParameterVector::Zero();
  ParameterBounds bounds_{};
  Vec3 beam_axis_ = Vec3::UnitZ();
};

/// Derivative of the Pluecker line L with respect to a factor of twist w.
DualQuaternion line_derivative(const Twist& w, const DualQuaternion& line);

/// Smallest singular value of J strictly above `zero_threshold` (0 if none).
double smallest_singular_value(const Eigen::MatrixXd& J, double zero_threshold = 1e-8);

}  // namespace dqadapt
