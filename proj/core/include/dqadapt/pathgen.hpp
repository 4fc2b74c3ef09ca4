#pragma once

// Cutting sketches and the task-space trajectories derived from them.
//
// A sketch lives in normalized face coordinates [0,1]^2. The face frame puts
// the sketch origin at its origin, the sketch u and v axes along its x and y
// axes, and the outward surface normal along its z axis.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dqadapt/kinematics.hpp"

namespace dqadapt {

using Vec2 = Eigen::Vector2d;

struct SketchSegment {
  Vec2 start{Vec2::Zero()};
  Vec2 end{Vec2::Zero()};
};

struct CuttingSketch {
  std::string name{"sketch"};
  std::vector<SketchSegment> segments;
  int circulations{1};

  /// Throws std::invalid_argument on an empty sketch, a zero-length segment,
  /// coordinates outside [0,1] or fewer than one circulation.
  void validate() const;
};

CuttingSketch parse_sketch(std::istream& is);
CuttingSketch load_sketch(const std::string& path);
void write_sketch(std::ostream& os, const CuttingSketch& s);

/// The four sketches of the cutting experiments, keyed "line", "square",
/// "triangle" and "diamond", each with one circulation.
const std::map<std::string, CuttingSketch>& builtin_sketches();
/// Looks up a built-in sketch; "vertical_line" is accepted for "line".
CuttingSketch builtin_sketch(const std::string& name);

struct FaceFrame {
  DualQuaternion pose{};
  Vec2 dims{0.3, 0.3};

  Vec3 normal() const { return pose.primary.rotate(Vec3::UnitZ()); }
  Vec3 point(const Vec2& uv) const {
    return pose.transform_point(Vec3(uv.x() * dims.x(), uv.y() * dims.y(), 0.0));
  }
  DualQuaternion plane() const { return plane_from_point_normal(pose.translation(), normal()); }
};

/// Piecewise-linear constant-speed path on a face. Consecutive sketch
/// segments that do not share an endpoint are joined by a straight transit.
class CuttingPath {
 public:
  CuttingPath() = default;
  CuttingPath(std::vector<Vec3> vertices, Vec3 normal, double speed);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const Vec3& normal() const { return normal_; }
  double speed() const { return speed_; }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  double duration() const { return length() / speed_; }

  /// Point at time t, clamped to [0, duration].
  Vec3 point_at(double t) const;
  /// Index of the segment that holds time t and the fraction along it.
  std::pair<size_t, double> locate(double t) const;
  /// Samples at t = k / rate up to the duration; the final vertex closes the list.
  std::vector<double> sample_times(double rate) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<double> cumulative_;
  Vec3 normal_{Vec3::UnitZ()};
  double speed_{0.01};
};

CuttingPath project_sketch(const CuttingSketch& sketch, const FaceFrame& face, double speed);

/// Effector orientation for a face normal: z along -normal, x along world
/// up projected onto the face (world x when up is parallel to the normal),
/// then an extra roll about the beam.
Quaternion face_orientation(const Vec3& normal, double roll = 0.0);

struct TimedTask {
  double t{0.0};
  TaskVector x{};
};

using TaskTrajectory = std::vector<TimedTask>;

/// Effector poses standing `standoff` off the path, sclerp-interpolated
/// between the poses at consecutive vertices.
TaskTrajectory pose_path(const CuttingPath& path, double standoff, double rate, double roll = 0.0);
DualQuaternion pose_at(const CuttingPath& path, double standoff, double t, double roll = 0.0);

/// Beam lines through each path point, pointing into the face.
TaskTrajectory line_path(const CuttingPath& path, double rate);
DualQuaternion line_at(const CuttingPath& path, double t);

/// CSV with header "t,mode,x0,...,x7".
void write_trajectory_csv(std::ostream& os, const TaskTrajectory& traj);
TaskTrajectory read_trajectory_csv(std::istream& is);

}  // namespace dqadapt
