#include "dqadapt/pathgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json_util.hpp"

namespace dqadapt {

using detail::json;

void CuttingSketch::validate() const {
  if (segments.empty()) {
    throw std::invalid_argument("sketch '" + name + "' has no segments");
  }
  if (circulations < 1) {
    throw std::invalid_argument("sketch '" + name + "' needs at least one circulation");
  }
  for (const auto& s : segments) {
    if ((s.end - s.start).norm() < 1e-12) {
      throw std::invalid_argument("sketch '" + name + "' has a zero-length segment");
    }
    for (const Vec2& p : {s.start, s.end}) {
      if ((p.array() < 0.0).any() || (p.array() > 1.0).any()) {
        throw std::invalid_argument("sketch '" + name + "' leaves the unit square");
      }
    }
  }
}

CuttingSketch parse_sketch(std::istream& is) {
  const json j = detail::parse_stream(is, "sketch");
  CuttingSketch s;
  s.name = j.value("name", std::string("sketch"));
  s.circulations = j.value("circulations", 1);
  for (const auto& seg : detail::require(j, "segments")) {
    if (!seg.is_array() || seg.size() != 2) {
      throw std::invalid_argument("sketch segments are pairs of points");
    }
    s.segments.push_back({detail::fixed_vector<2>(seg[0], "segment start"),
                          detail::fixed_vector<2>(seg[1], "segment end")});
  }
  s.validate();
  return s;
}

CuttingSketch load_sketch(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_sketch(in);
}

void write_sketch(std::ostream& os, const CuttingSketch& s) {
  json j;
  j["name"] = s.name;
  j["circulations"] = s.circulations;
  j["segments"] = json::array();
  for (const auto& seg : s.segments) {
    j["segments"].push_back({detail::to_array(seg.start), detail::to_array(seg.end)});
  }
  os << std::setw(2) << j << '\n';
}

namespace {

CuttingSketch closed_polygon(std::string name, const std::vector<Vec2>& corners) {
  CuttingSketch s;
  s.name = std::move(name);
  for (size_t i = 0; i < corners.size(); ++i) {
    s.segments.push_back({corners[i], corners[(i + 1) % corners.size()]});
  }
  return s;
}

std::map<std::string, CuttingSketch> make_builtins() {
  std::map<std::string, CuttingSketch> out;
  out["line"] = closed_polygon("line", {{0.5, 0.2}, {0.5, 0.8}});
  const std::vector<Vec2> square{{0.25, 0.25}, {0.75, 0.25}, {0.75, 0.75}, {0.25, 0.75}};
  out["square"] = closed_polygon("square", square);
  out["triangle"] = closed_polygon("triangle", {{0.25, 0.25}, {0.75, 0.25}, {0.5, 0.75}});
  const Eigen::Rotation2Dd r(M_PI / 4.0);
  const Vec2 c(0.5, 0.5);
  std::vector<Vec2> diamond;
  for (const Vec2& p : square) diamond.push_back(c + r * (p - c));
  out["diamond"] = closed_polygon("diamond", diamond);
  return out;
}

}  // namespace

const std::map<std::string, CuttingSketch>& builtin_sketches() {
  static const std::map<std::string, CuttingSketch> sketches = make_builtins();
  return sketches;
}

CuttingSketch builtin_sketch(const std::string& name) {
  const std::string key = name == "vertical_line" ? "line" : name;
  const auto& all = builtin_sketches();
  const auto it = all.find(key);
  if (it == all.end()) {
    throw std::invalid_argument("unknown built-in sketch '" + name + "'");
  }
  return it->second;
}

CuttingPath::CuttingPath(std::vector<Vec3> vertices, Vec3 normal, double speed)
    : vertices_(std::move(vertices)), normal_(std::move(normal)), speed_(speed) {
  if (vertices_.size() < 2) {
    throw std::invalid_argument("a cutting path needs at least two vertices");
  }
  if (!(speed_ > 0.0)) {
    throw std::invalid_argument("path speed must be positive");
  }
  cumulative_.reserve(vertices_.size());
  cumulative_.push_back(0.0);
  for (size_t i = 1; i < vertices_.size(); ++i) {
    cumulative_.push_back(cumulative_.back() + (vertices_[i] - vertices_[i - 1]).norm());
  }
}

std::pair<size_t, double> CuttingPath::locate(double t) const {
  const double s = std::clamp(t * speed_, 0.0, length());
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  size_t seg = static_cast<size_t>(std::distance(cumulative_.begin(), it));
  seg = std::clamp<size_t>(seg, 1, vertices_.size() - 1) - 1;
  const double len = cumulative_[seg + 1] - cumulative_[seg];
  const double frac = len > 0.0 ? std::clamp((s - cumulative_[seg]) / len, 0.0, 1.0) : 1.0;
  return {seg, frac};
}

Vec3 CuttingPath::point_at(double t) const {
  const auto [seg, frac] = locate(t);
  return vertices_[seg] + frac * (vertices_[seg + 1] - vertices_[seg]);
}

std::vector<double> CuttingPath::sample_times(double rate) const {
  if (!(rate > 0.0)) {
    throw std::invalid_argument("sample rate must be positive");
  }
  const double T = duration();
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor(T * rate + 1e-9));
  out.reserve(static_cast<size_t>(n) + 2);
  for (long k = 0; k <= n; ++k) out.push_back(static_cast<double>(k) / rate);
  if (T - out.back() > 1e-12) out.push_back(T);
  return out;
}

CuttingPath project_sketch(const CuttingSketch& sketch, const FaceFrame& face, double speed) {
  sketch.validate();
  if (!((face.dims.array() > 0.0).all())) {
    throw std::invalid_argument("face dimensions must be positive");
  }
  std::vector<Vec3> vertices;
  for (int c = 0; c < sketch.circulations; ++c) {
    for (const auto& seg : sketch.segments) {
      const Vec3 a = face.point(seg.start);
      if (vertices.empty() || (vertices.back() - a).norm() > 1e-12) {
        vertices.push_back(a);
      }
      vertices.push_back(face.point(seg.end));
    }
  }
  return CuttingPath(std::move(vertices), face.normal(), speed);
}

Quaternion face_orientation(const Vec3& normal, double roll) {
  if (!(normal.norm() > 1e-9)) {
    throw std::invalid_argument("degenerate face normal");
  }
  const Vec3 z = -normal.normalized();
  Vec3 x = Vec3::UnitZ() - Vec3::UnitZ().dot(z) * z;
  if (x.norm() < 1e-6) {
    x = Vec3::UnitX() - Vec3::UnitX().dot(z) * z;
  }
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R << x, y, z;
  const Quaternion base = Quaternion::from_rotation_matrix(R);
  return base * Quaternion::from_axis_angle(Vec3::UnitZ(), roll);
}

namespace {

DualQuaternion vertex_pose(const CuttingPath& path, size_t i, double standoff, const Quaternion& r) {
  return DualQuaternion::from_pose(r, path.vertices()[i] + standoff * path.normal());
}

}  // namespace

DualQuaternion pose_at(const CuttingPath& path, double standoff, double t, double roll) {
  if (!(standoff > 0.0)) {
    throw std::invalid_argument("standoff must be positive");
  }
  const Quaternion r = face_orientation(path.normal(), roll);
  const auto [seg, frac] = path.locate(t);
  return sclerp(vertex_pose(path, seg, standoff, r), vertex_pose(path, seg + 1, standoff, r), frac);
}

TaskTrajectory pose_path(const CuttingPath& path, double standoff, double rate, double roll) {
  TaskTrajectory out;
  for (double t : path.sample_times(rate)) {
    out.push_back({t, {TaskMode::Pose, pose_at(path, standoff, t, roll)}});
  }
  return out;
}

DualQuaternion line_at(const CuttingPath& path, double t) {
  return line_from_point_direction(path.point_at(t), -path.normal().normalized());
}

TaskTrajectory line_path(const CuttingPath& path, double rate) {
  TaskTrajectory out;
  for (double t : path.sample_times(rate)) {
    out.push_back({t, {TaskMode::Line, line_at(path, t)}});
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const TaskTrajectory& traj) {
  os << "t,mode,x0,x1,x2,x3,x4,x5,x6,x7\n";
  char buf[32];
  for (const auto& s : traj) {
    std::snprintf(buf, sizeof buf, "%.17g", s.t);
    os << buf << ',' << to_string(s.x.mode);
    const Vec8 c = s.x.coeffs();
    for (int i = 0; i < 8; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", c(i));
      os << ',' << buf;
    }
    os << '\n';
  }
}

TaskTrajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("t,mode", 0) != 0) {
    throw std::runtime_error("trajectory CSV: missing header");
  }
  TaskTrajectory out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    TimedTask s;
    Vec8 c;
    try {
      std::getline(ss, cell, ',');
      s.t = std::stod(cell);
      std::getline(ss, cell, ',');
      s.x.mode = task_mode_from_string(cell);
      for (int i = 0; i < 8; ++i) {
        if (!std::getline(ss, cell, ',')) throw std::runtime_error("short row");
        c(i) = std::stod(cell);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("trajectory CSV: bad row '" + line + "': " + e.what());
    }
    s.x.value = from_vec8(c);
    out.push_back(s);
  }
  return out;
}

}  // namespace dqadapt
