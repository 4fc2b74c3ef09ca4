#include "dqadapt/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace dqadapt {

namespace {

constexpr double kZeroDistance = 1e-12;

int factors_of(const Primitive& p) {
  return p.on_robot() ? KinematicModel::factors_in_frame(*p.robot_frame) : 0;
}

}  // namespace

const char* to_string(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::Point:
      return "point";
    case PrimitiveKind::Sphere:
      return "sphere";
    case PrimitiveKind::Line:
      return "line";
    case PrimitiveKind::Cylinder:
      return "cylinder";
    case PrimitiveKind::Plane:
      return "plane";
  }
  return "point";
}

PrimitiveKind primitive_kind_from_string(const std::string& s) {
  if (s == "point") return PrimitiveKind::Point;
  if (s == "sphere") return PrimitiveKind::Sphere;
  if (s == "line") return PrimitiveKind::Line;
  if (s == "cylinder") return PrimitiveKind::Cylinder;
  if (s == "plane") return PrimitiveKind::Plane;
  throw std::invalid_argument("unknown primitive kind '" + s + "'");
}

const char* to_string(VfiDirection d) {
  return d == VfiDirection::KeepOutside ? "keep_outside" : "keep_inside";
}

VfiDirection vfi_direction_from_string(const std::string& s) {
  if (s == "keep_outside" || s == "outside") return VfiDirection::KeepOutside;
  if (s == "keep_inside" || s == "inside") return VfiDirection::KeepInside;
  throw std::invalid_argument("unknown VFI direction '" + s + "'");
}

Primitive Primitive::sphere(std::string name, double radius, int frame, const Vec3& local_center) {
  return {std::move(name), PrimitiveKind::Sphere, radius, frame, local_center, Vec3::UnitZ()};
}

Primitive Primitive::robot_cylinder(std::string name, double radius, int frame,
                                    const Vec3& local_point, const Vec3& local_axis) {
  return {std::move(name), PrimitiveKind::Cylinder, radius, frame, local_point, local_axis};
}

Primitive Primitive::world_cylinder(std::string name, double radius, const Vec3& point,
                                    const Vec3& axis) {
  return {std::move(name), PrimitiveKind::Cylinder, radius, std::nullopt, point, axis};
}

Primitive Primitive::world_plane(std::string name, const Vec3& point, const Vec3& normal) {
  return {std::move(name), PrimitiveKind::Plane, 0.0, std::nullopt, point, normal};
}

Primitive Primitive::world_point(std::string name, const Vec3& point) {
  return {std::move(name), PrimitiveKind::Point, 0.0, std::nullopt, point, Vec3::UnitZ()};
}

void Primitive::validate() const {
  if ((kind == PrimitiveKind::Sphere || kind == PrimitiveKind::Cylinder) && !(radius > 0.0)) {
    throw std::invalid_argument("primitive '" + name + "' needs a positive radius");
  }
  if ((line_like() || kind == PrimitiveKind::Plane) && std::abs(direction.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("primitive '" + name + "' needs a unit direction");
  }
  if (robot_frame && (*robot_frame < 0 || *robot_frame >= kFrameCount)) {
    throw std::invalid_argument("primitive '" + name + "' is attached to an invalid frame");
  }
}

void Scene::add_primitive(Primitive p) {
  p.validate();
  if (contains(p.name)) {
    throw std::invalid_argument("duplicate primitive '" + p.name + "'");
  }
  primitives_.push_back(std::move(p));
}

void Scene::add_pair(PrimitivePair pair) {
  const Primitive& a = find(pair.robot);
  const Primitive& b = find(pair.other);
  if (!a.point_like()) {
    throw std::invalid_argument("pair '" + pair.robot + "/" + pair.other +
                                "': first primitive must be a point or sphere");
  }
  if (b.kind == PrimitiveKind::Plane && b.on_robot()) {
    throw std::invalid_argument("robot-attached planes are not supported");
  }
  const bool duplicate = std::any_of(pairs_.begin(), pairs_.end(), [&](const PrimitivePair& p) {
    return p.robot == pair.robot && p.other == pair.other;
  });
  if (duplicate) {
    throw std::invalid_argument("duplicate pair '" + pair.robot + "/" + pair.other + "'");
  }
  pairs_.push_back(std::move(pair));
}

const Primitive& Scene::find(const std::string& name) const {
  for (const auto& p : primitives_) {
    if (p.name == name) {
      return p;
    }
  }
  throw std::invalid_argument("unknown primitive '" + name + "'");
}

Primitive& Scene::find_mutable(const std::string& name) {
  for (auto& p : primitives_) {
    if (p.name == name) {
      return p;
    }
  }
  throw std::invalid_argument("unknown primitive '" + name + "'");
}

bool Scene::contains(const std::string& name) const {
  return std::any_of(primitives_.begin(), primitives_.end(),
                     [&](const Primitive& p) { return p.name == name; });
}

Scene Scene::without(const std::string& name) const {
  Scene out;
  out.primitives_ = primitives_;
  for (const auto& pair : pairs_) {
    if (pair.robot != name && pair.other != name) {
      out.pairs_.push_back(pair);
    }
  }
  return out;
}

PlacedPrimitive place(const Primitive& p, const ChainState& s) {
  PlacedPrimitive out;
  if (p.on_robot()) {
    const DualQuaternion& frame = s.frames[static_cast<size_t>(*p.robot_frame)];
    out.point = frame.transform_point(p.point);
    out.direction = frame.primary.rotate(p.direction).normalized();
  } else {
    out.point = p.point;
    out.direction = p.direction;
  }
  if (p.line_like()) {
    out.line = line_from_point_direction(out.point, out.direction);
  }
  if (p.kind == PrimitiveKind::Plane) {
    out.offset = out.point.dot(out.direction);
  }
  return out;
}

double dist_point_plane(const Vec3& p, const DualQuaternion& plane) {
  return plane_normal(plane).dot(p) - plane_offset(plane);
}

double dist_point_line(const Vec3& p, const DualQuaternion& line) {
  return (p.cross(line_direction(line)) - line_moment(line)).norm();
}

double dist_sphere_cylinder(const Vec3& center, double sphere_radius, const DualQuaternion& axis,
                            double cylinder_radius) {
  return dist_point_line(center, axis) - sphere_radius - cylinder_radius;
}

double dist_sphere_plane(const Vec3& center, double radius, const DualQuaternion& plane) {
  return dist_point_plane(center, plane) - radius;
}

DistanceEval evaluate_pair(const Scene& scene, const PrimitivePair& pair, const ChainState& s) {
  const Primitive& a = scene.find(pair.robot);
  const Primitive& b = scene.find(pair.other);
  const PlacedPrimitive pa = place(a, s);
  const PlacedPrimitive pb = place(b, s);
  const int na = factors_of(a);
  const int nb = factors_of(b);
  const int nf = std::max(na, nb);

  DistanceEval out;
  std::array<double, kParamCount> grad{};

  if (b.kind == PrimitiveKind::Plane) {
    const Vec3& n = pb.direction;
    out.distance = n.dot(pa.point) - pb.offset - a.radius;
    for (int f = 0; f < na; ++f) {
      grad[static_cast<size_t>(f)] = n.dot(s.twists[static_cast<size_t>(f)].point_velocity(pa.point));
    }
  } else if (b.line_like()) {
    const Vec3 l = line_direction(pb.line);
    const Vec3 m = line_moment(pb.line);
    const Vec3 u = pa.point.cross(l) - m;
    const double un = u.norm();
    out.distance = un - a.radius - b.radius;
    if (un < kZeroDistance) {
      out.gradient_undefined = true;
    } else {
      const Vec3 uhat = u / un;
      for (int f = 0; f < nf; ++f) {
        const Twist& tw = s.twists[static_cast<size_t>(f)];
        Vec3 du = Vec3::Zero();
        if (f < na) {
          du += tw.point_velocity(pa.point).cross(l);
        }
        if (f < nb) {
          const Vec3 dl = tw.omega.cross(l);
          const Vec3 dm = tw.point_velocity(pb.point).cross(l) + pb.point.cross(dl);
          du += pa.point.cross(dl) - dm;
        }
        grad[static_cast<size_t>(f)] = uhat.dot(du);
      }
    }
  } else {
    const Vec3 diff = pa.point - pb.point;
    const double dn = diff.norm();
    out.distance = dn - a.radius - b.radius;
    if (dn < kZeroDistance) {
      out.gradient_undefined = true;
    } else {
      const Vec3 uhat = diff / dn;
      for (int f = 0; f < nf; ++f) {
        const Twist& tw = s.twists[static_cast<size_t>(f)];
        Vec3 dd = Vec3::Zero();
        if (f < na) dd += tw.point_velocity(pa.point);
        if (f < nb) dd -= tw.point_velocity(pb.point);
        grad[static_cast<size_t>(f)] = uhat.dot(dd);
      }
    }
  }

  for (int j = 0; j < kJointCount; ++j) {
    out.grad_q(j) = grad[static_cast<size_t>(KinematicModel::factor_of_joint(j))];
  }
  for (int p = 0; p < kParamCount; ++p) {
    out.grad_a(p) = grad[static_cast<size_t>(KinematicModel::factor_of_param(p))];
  }
  return out;
}

double pair_distance(const Scene& scene, const PrimitivePair& pair, const ChainState& s) {
  const Primitive& a = scene.find(pair.robot);
  const Primitive& b = scene.find(pair.other);
  const PlacedPrimitive pa = place(a, s);
  const PlacedPrimitive pb = place(b, s);
  if (b.kind == PrimitiveKind::Plane) {
    return pb.direction.dot(pa.point) - pb.offset - a.radius;
  }
  if (b.line_like()) {
    return dist_sphere_cylinder(pa.point, a.radius, pb.line, b.radius);
  }
  return (pa.point - pb.point).norm() - a.radius - b.radius;
}

VfiRow make_vfi_row(const DistanceEval& eval, VfiDirection direction, double eta, Wrt wrt) {
  VfiRow row;
  row.direction = direction;
  row.gain = eta;
  row.distance = eval.distance;
  row.gradient_undefined = eval.gradient_undefined;
  Eigen::RowVectorXd grad;
  if (wrt == Wrt::Joints) {
    grad = eval.grad_q;
  } else {
    grad = eval.grad_a;
  }
  if (direction == VfiDirection::KeepOutside) {
    row.row = -grad;
    row.bound = eta * eval.distance;
  } else {
    row.row = grad;
    row.bound = -eta * eval.distance;
  }
  return row;
}

VfiRow build_vfi_row(const Scene& scene, const PrimitivePair& pair, double eta, const ChainState& s,
                     Wrt wrt) {
  return make_vfi_row(evaluate_pair(scene, pair, s), pair.direction, eta, wrt);
}

ConstraintSet build_constraint_stack(const Scene& scene, double eta, const ChainState& s, Wrt wrt) {
  const auto rows = static_cast<Eigen::Index>(scene.pairs().size());
  const Eigen::Index cols = wrt == Wrt::Joints ? kJointCount : kParamCount;
  ConstraintSet out;
  out.B.resize(rows, cols);
  out.b.resize(rows);
  out.distances.reserve(scene.pairs().size());
  Eigen::Index i = 0;
  for (const auto& pair : scene.pairs()) {
    const VfiRow row = build_vfi_row(scene, pair, eta, s, wrt);
    out.B.row(i) = row.row;
    out.b(i) = row.bound;
    out.distances.push_back(row.distance);
    if (row.gradient_undefined) {
      ++out.undefined_gradients;
    }
    ++i;
  }
  return out;
}

}  // namespace dqadapt
