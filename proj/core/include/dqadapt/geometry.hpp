#pragma once

// Geometric primitives, signed distances and vector-field-inequality rows.
//
// A VFI bounds how fast a signed distance d between a robot primitive and
// another primitive may shrink (keep-outside) or grow (keep-inside):
//   keep-outside:  -(dd/du) u <= eta * d
//   keep-inside:   +(dd/du) u <= -eta * d
// where u is either the joint velocity or the parameter rate.

#include <optional>
#include <string>
#include <vector>

#include "dqadapt/kinematics.hpp"

namespace dqadapt {

enum class PrimitiveKind { Point, Sphere, Line, Cylinder, Plane };

const char* to_string(PrimitiveKind k);
PrimitiveKind primitive_kind_from_string(const std::string& s);

/// A primitive is either rigidly attached to a robot frame or fixed in the
/// world. `point` and `direction` are expressed in the attachment frame; the
/// direction is the axis for lines/cylinders and the normal for planes.
struct Primitive {
  std::string name;
  PrimitiveKind kind{PrimitiveKind::Point};
  double radius{0.0};
  std::optional<int> robot_frame;  // empty: workspace primitive
  Vec3 point{Vec3::Zero()};
  Vec3 direction{Vec3::UnitZ()};

  bool on_robot() const { return robot_frame.has_value(); }
  bool point_like() const { return kind == PrimitiveKind::Point || kind == PrimitiveKind::Sphere; }
  bool line_like() const { return kind == PrimitiveKind::Line || kind == PrimitiveKind::Cylinder; }

  static Primitive sphere(std::string name, double radius, int frame, const Vec3& local_center);
  static Primitive robot_cylinder(std::string name, double radius, int frame, const Vec3& local_point,
                                  const Vec3& local_axis);
  static Primitive world_cylinder(std::string name, double radius, const Vec3& point, const Vec3& axis);
  static Primitive world_plane(std::string name, const Vec3& point, const Vec3& normal);
  static Primitive world_point(std::string name, const Vec3& point);

  /// Throws std::invalid_argument when radii or directions are malformed.
  void validate() const;
};

enum class VfiDirection { KeepOutside, KeepInside };

const char* to_string(VfiDirection d);
VfiDirection vfi_direction_from_string(const std::string& s);

/// Constraint between a point-like robot primitive and any other primitive.
struct PrimitivePair {
  std::string robot;
  std::string other;
  VfiDirection direction{VfiDirection::KeepOutside};
};

class Scene {
 public:
  void add_primitive(Primitive p);
  /// Throws on duplicate pairs or unknown/unsupported primitives.
  void add_pair(PrimitivePair pair);

  const std::vector<Primitive>& primitives() const { return primitives_; }
  const std::vector<PrimitivePair>& pairs() const { return pairs_; }
  const Primitive& find(const std::string& name) const;
  Primitive& find_mutable(const std::string& name);
  bool contains(const std::string& name) const;

  /// Copy without any pair that involves the named primitive.
  Scene without(const std::string& name) const;

 private:
  std::vector<Primitive> primitives_;
  std::vector<PrimitivePair> pairs_;
};

/// World-frame geometry of a primitive at one chain evaluation.
struct PlacedPrimitive {
  Vec3 point{Vec3::Zero()};
  Vec3 direction{Vec3::UnitZ()};
  DualQuaternion line{};  // Pluecker form, line-like primitives only
  double offset{0.0};     // planes only
};

PlacedPrimitive place(const Primitive& p, const ChainState& s);

double dist_point_plane(const Vec3& p, const DualQuaternion& plane);
double dist_point_line(const Vec3& p, const DualQuaternion& line);
double dist_sphere_cylinder(const Vec3& center, double sphere_radius, const DualQuaternion& axis,
                            double cylinder_radius);
double dist_sphere_plane(const Vec3& center, double radius, const DualQuaternion& plane);

/// Signed distance of a pair together with its gradients.
struct DistanceEval {
  double distance{0.0};
  JointRow grad_q{JointRow::Zero()};
  ParameterRow grad_a{ParameterRow::Zero()};
  /// Point-line distance was exactly zero; gradients were zeroed.
  bool gradient_undefined{false};
};

DistanceEval evaluate_pair(const Scene& scene, const PrimitivePair& pair, const ChainState& s);
double pair_distance(const Scene& scene, const PrimitivePair& pair, const ChainState& s);

enum class Wrt { Joints, Parameters };

struct VfiRow {
  VfiDirection direction{VfiDirection::KeepOutside};
  Eigen::RowVectorXd row;
  double bound{0.0};
  double gain{0.0};
  double distance{0.0};
  bool gradient_undefined{false};
};

/// Row and bound from an already evaluated distance.
VfiRow make_vfi_row(const DistanceEval& eval, VfiDirection direction, double eta, Wrt wrt);
VfiRow build_vfi_row(const Scene& scene, const PrimitivePair& pair, double eta, const ChainState& s,
                     Wrt wrt);

struct ConstraintSet {
  Eigen::MatrixXd B;
  Eigen::VectorXd b;
  std::vector<double> distances;
  int undefined_gradients{0};

  Eigen::Index rows() const { return B.rows(); }
};

ConstraintSet build_constraint_stack(const Scene& scene, double eta, const ChainState& s, Wrt wrt);

}  // namespace dqadapt
