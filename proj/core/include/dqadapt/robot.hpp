#pragma once

// Robot description: the nominal 36-entry parameter vector, its bounds, the
// beam axis in the effector frame and a few joint-space conveniences.

#include <iosfwd>
#include <string>

#include "dqadapt/kinematics.hpp"

namespace dqadapt {

struct RobotDescription {
  std::string name{"robot"};
  ParameterVector nominal{ParameterVector::Zero()};
  ParameterBounds bounds{};
  Vec3 beam_axis{Vec3::UnitZ()};
  /// Range used when sampling configurations; not enforced by the controller.
  JointVector q_lower{JointVector::Constant(-M_PI)};
  JointVector q_upper{JointVector::Constant(M_PI)};
  JointVector q_home{JointVector::Zero()};

  KinematicModel model() const { return KinematicModel(nominal, bounds, beam_axis); }
  /// Throws std::invalid_argument on inconsistent fields.
  void validate() const;
};

/// UR3e standard DH table from the manufacturer's published data, with a
/// torch mounted perpendicular to the flange.
RobotDescription default_robot();

RobotDescription parse_robot(std::istream& is);
RobotDescription load_robot(const std::string& path);
void write_robot(std::ostream& os, const RobotDescription& r);

}  // namespace dqadapt
