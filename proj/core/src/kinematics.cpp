#include "dqadapt/kinematics.hpp"

#include <stdexcept>

namespace dqadapt {

namespace {

enum class FactorKind { Tx, Ty, Tz, Rx, Ry, Rz };

constexpr std::array<FactorKind, 6> kOffsetKinds{FactorKind::Tx, FactorKind::Ty, FactorKind::Tz,
                                                 FactorKind::Rx, FactorKind::Ry, FactorKind::Rz};
constexpr std::array<FactorKind, 4> kDhKinds{FactorKind::Rz, FactorKind::Tz, FactorKind::Tx,
                                             FactorKind::Rx};

FactorKind kind_of_factor(int f) {
  if (f < 6) {
    return kOffsetKinds[static_cast<size_t>(f)];
  }
  if (f < 30) {
    return kDhKinds[static_cast<size_t>((f - 6) % 4)];
  }
  return kOffsetKinds[static_cast<size_t>(f - 30)];
}

int param_of_factor(int f) {
  if (f < 6) {
    return 24 + f;
  }
  if (f < 30) {
    return f - 6;
  }
  return f;
}

Vec3 axis_of(FactorKind k) {
  switch (k) {
    case FactorKind::Tx:
    case FactorKind::Rx:
      return Vec3::UnitX();
    case FactorKind::Ty:
    case FactorKind::Ry:
      return Vec3::UnitY();
    case FactorKind::Tz:
    case FactorKind::Rz:
      return Vec3::UnitZ();
  }
  return Vec3::UnitZ();
}

bool is_rotation(FactorKind k) {
  return k == FactorKind::Rx || k == FactorKind::Ry || k == FactorKind::Rz;
}

DualQuaternion factor_pose(FactorKind k, double value) {
  const Vec3 axis = axis_of(k);
  if (is_rotation(k)) {
    return DualQuaternion::from_rotation(Quaternion::from_axis_angle(axis, value));
  }
  return DualQuaternion::from_translation(axis * value);
}

}  // namespace

namespace param {
bool is_length(int index) {
  if (index < 24) {
    const auto field = static_cast<DhField>(index % 4);
    return field == DhField::D || field == DhField::A;
  }
  return ((index - 24) % 6) < 3;
}
}  // namespace param

const char* to_string(TaskMode mode) { return mode == TaskMode::Pose ? "acpo" : "aclo"; }

TaskMode task_mode_from_string(const std::string& s) {
  if (s == "acpo" || s == "pose") {
    return TaskMode::Pose;
  }
  if (s == "aclo" || s == "line") {
    return TaskMode::Line;
  }
  throw std::invalid_argument("unknown task mode '" + s + "'");
}

bool ParameterBounds::contains(const ParameterVector& a, double tol) const {
  return ((a - lower).array() >= -tol).all() && ((upper - a).array() >= -tol).all();
}

ParameterBounds ParameterBounds::around(const ParameterVector& center, double length_tol,
                                        double angle_tol) {
  ParameterBounds b;
  for (int i = 0; i < kParamCount; ++i) {
    const double tol = param::is_length(i) ? length_tol : angle_tol;
    b.lower(i) = center(i) - tol;
    b.upper(i) = center(i) + tol;
  }
  return b;
}

DualQuaternion Twist::as_dq() const {
  return {Quaternion::pure(0.5 * omega), Quaternion::pure(0.5 * v)};
}

KinematicModel::KinematicModel(ParameterVector nominal, ParameterBounds bounds, Vec3 beam_axis)
    : nominal_(std::move(nominal)), bounds_(std::move(bounds)), beam_axis_(beam_axis) {
  if (std::abs(beam_axis_.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("beam axis must be a unit vector");
  }
}

int KinematicModel::factor_of_param(int p) {
  if (p < 0 || p >= kParamCount) {
    throw std::out_of_range("parameter index out of range");
  }
  if (p < 24) {
    return 6 + p;
  }
  if (p < 30) {
    return p - 24;
  }
  return p;
}

int KinematicModel::factors_in_frame(int frame) {
  if (frame < 0 || frame >= kFrameCount) {
    throw std::out_of_range("frame index out of range");
  }
  if (frame == kEffectorFrame) {
    return kParamCount;
  }
  return 6 + 4 * frame;
}

ChainState KinematicModel::evaluate(const JointVector& q, const ParameterVector& a) const {
  ChainState s;
  DualQuaternion pose = DualQuaternion::identity();
  int next_frame = 0;
  for (int f = 0; f < kParamCount; ++f) {
    const FactorKind kind = kind_of_factor(f);
    double value = a(param_of_factor(f));
    if (f >= 6 && f < 30 && (f - 6) % 4 == 0) {
      value += q((f - 6) / 4);
    }
    pose = pose * factor_pose(kind, value);

    const Vec3 axis_world = pose.primary.rotate(axis_of(kind));
    Twist& w = s.twists[static_cast<size_t>(f)];
    if (is_rotation(kind)) {
      w.omega = axis_world;
      w.v = pose.translation().cross(axis_world);
    } else {
      w.omega.setZero();
      w.v = axis_world;
    }

    while (next_frame < kFrameCount && factors_in_frame(next_frame) == f + 1) {
      s.frames[static_cast<size_t>(next_frame)] = pose;
      ++next_frame;
    }
  }
  return s;
}

DualQuaternion KinematicModel::fk(const JointVector& q, const ParameterVector& a) const {
  return evaluate(q, a).effector();
}

DualQuaternion KinematicModel::frame_pose(const JointVector& q, const ParameterVector& a,
                                          int frame) const {
  return evaluate(q, a).frames.at(static_cast<size_t>(frame));
}

DualQuaternion KinematicModel::beam_line(const DualQuaternion& effector) const {
  const DualQuaternion axis{Quaternion::pure(beam_axis_), Quaternion{}};
  return transform_line(effector, axis);
}

TaskVector KinematicModel::task(const ChainState& s, TaskMode mode) const {
  if (mode == TaskMode::Pose) {
    return {mode, s.effector()};
  }
  return {mode, beam_line(s.effector())};
}

TaskVector KinematicModel::task(const JointVector& q, const ParameterVector& a,
                                TaskMode mode) const {
  return task(evaluate(q, a), mode);
}

DualQuaternion line_derivative(const Twist& w, const DualQuaternion& line) {
  const DualQuaternion wd = w.as_dq();
  return wd * line - line * wd;
}

PoseJacobian KinematicModel::task_jacobian(const ChainState& s, TaskMode mode) const {
  PoseJacobian J;
  if (mode == TaskMode::Pose) {
    const Mat8 hm = hamilton_minus8(s.effector());
    for (int j = 0; j < kJointCount; ++j) {
      J.col(j) = hm * vec8(s.twists[static_cast<size_t>(factor_of_joint(j))].as_dq());
    }
  } else {
    const DualQuaternion line = beam_line(s.effector());
    for (int j = 0; j < kJointCount; ++j) {
      J.col(j) = vec8(line_derivative(s.twists[static_cast<size_t>(factor_of_joint(j))], line));
    }
  }
  return J;
}

PoseJacobian KinematicModel::pose_jacobian(const JointVector& q, const ParameterVector& a) const {
  return task_jacobian(evaluate(q, a), TaskMode::Pose);
}

PoseJacobian KinematicModel::line_jacobian(const JointVector& q, const ParameterVector& a) const {
  return task_jacobian(evaluate(q, a), TaskMode::Line);
}

PoseJacobian KinematicModel::line_jacobian(const JointVector& q, const ParameterVector& a,
                                           const Vec3& axis) const {
  const KinematicModel other(nominal_, bounds_, axis);
  return other.line_jacobian(q, a);
}

ParametricJacobian KinematicModel::parametric_jacobian(const ChainState& s, TaskMode mode) const {
  ParametricJacobian J;
  if (mode == TaskMode::Pose) {
    const Mat8 hm = hamilton_minus8(s.effector());
    for (int p = 0; p < kParamCount; ++p) {
      J.col(p) = hm * vec8(s.twists[static_cast<size_t>(factor_of_param(p))].as_dq());
    }
  } else {
    const DualQuaternion line = beam_line(s.effector());
    for (int p = 0; p < kParamCount; ++p) {
      J.col(p) = vec8(line_derivative(s.twists[static_cast<size_t>(factor_of_param(p))], line));
    }
  }
  return J;
}

ParametricJacobian KinematicModel::parametric_jacobian(const JointVector& q,
                                                       const ParameterVector& a,
                                                       TaskMode mode) const {
  return parametric_jacobian(evaluate(q, a), mode);
}

Eigen::MatrixXd KinematicModel::measurement_jacobian(const ChainState& s, TaskMode mode,
                                                     MeasurementModel model) const {
  if (model == MeasurementModel::Full) {
    return parametric_jacobian(s, mode);
  }
  if (model == MeasurementModel::Pose) {
    return parametric_jacobian(s, TaskMode::Pose);
  }
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(4, kParamCount);
  const Vec3 t = s.effector().translation();
  for (int p = 0; p < kParamCount; ++p) {
    J.block<3, 1>(1, p) = s.twists[static_cast<size_t>(factor_of_param(p))].point_velocity(t);
  }
  return J;
}

Eigen::MatrixXd KinematicModel::measurement_jacobian(const JointVector& q,
                                                     const ParameterVector& a, TaskMode mode,
                                                     MeasurementModel model) const {
  return measurement_jacobian(evaluate(q, a), mode, model);
}

Eigen::VectorXd KinematicModel::measurement_vector(const ChainState& s, TaskMode mode,
                                                   MeasurementModel model) const {
  if (model == MeasurementModel::Full) {
    return task(s, mode).coeffs();
  }
  if (model == MeasurementModel::Pose) {
    return task(s, TaskMode::Pose).coeffs();
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
  y.tail<3>() = s.effector().translation();
  return y;
}

double smallest_singular_value(const Eigen::MatrixXd& J, double zero_threshold) {
  if (J.size() == 0) {
    return 0.0;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const Eigen::VectorXd& sv = svd.singularValues();
  double smallest = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > zero_threshold && (smallest == 0.0 || sv(i) < smallest)) {
      smallest = sv(i);
    }
  }
  return smallest;
}

}  // namespace dqadapt
