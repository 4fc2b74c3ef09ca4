#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "dqadapt/sim.hpp"
#include "json_util.hpp"

namespace dqadapt {

using detail::json;

namespace {

constexpr double kDeg = M_PI / 180.0;

FaceFrame make_face(const Vec3& origin, const Vec3& normal, const Vec3& u_axis, const Vec2& dims) {
  const Vec3 z = normal.normalized();
  Vec3 x = u_axis - u_axis.dot(z) * z;
  if (x.norm() < 1e-9) {
    throw std::invalid_argument("scene: face u-axis is parallel to its normal");
  }
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R << x, y, z;
  FaceFrame f;
  f.pose = DualQuaternion::from_pose(Quaternion::from_rotation_matrix(R), origin);
  f.dims = dims;
  return f;
}

std::vector<RobotCylinder> default_cylinders() {
  // The wrist cylinders c5 and c6 sit next to the measured effector and get
  // no margin; c6 is the flange axis, at a fixed distance from both spheres.
  return {
      {"c1", 0, Vec3::Zero(), Vec3::UnitZ(), 0.005, 0.025}, {"c2", 2, Vec3::Zero(), Vec3::UnitX(), 0.005, 0.025},
      {"c3", 3, Vec3::Zero(), Vec3::UnitX(), 0.005, 0.025}, {"c4", 3, Vec3::Zero(), Vec3::UnitZ(), 0.045, 0.025},
      {"c5", 4, Vec3::Zero(), Vec3::UnitZ(), 0.04, 0.0},    {"c6", 5, Vec3::Zero(), Vec3::UnitZ(), 0.04, 0.0},
  };
}

// Strings are file names relative to base_dir; objects are inline.
json resolve(const json& j, const std::string& base_dir) {
  if (j.is_string()) {
    const std::filesystem::path p = std::filesystem::path(base_dir) / j.get<std::string>();
    auto in = detail::open_input(p.string());
    return detail::parse_stream(in, p.string());
  }
  return j;
}

SceneConfig parse_scene_json(const json& j) {
  SceneConfig c = default_scenario().scene;
  if (j.contains("face")) {
    const json& f = j.at("face");
    c.face = make_face(detail::fixed_vector<3>(detail::require(f, "origin"), "face.origin"),
                       detail::fixed_vector<3>(detail::require(f, "normal"), "face.normal"),
                       detail::fixed_vector<3>(detail::require(f, "u_axis"), "face.u_axis"),
                       detail::fixed_vector<2>(detail::require(f, "size"), "face.size"));
  }
  if (j.contains("box_pivot")) c.box_pivot = detail::fixed_vector<3>(j.at("box_pivot"), "box_pivot");
  c.box_tilt = j.value("box_tilt_deg", c.box_tilt / kDeg) * kDeg;
  c.table_height = j.value("table_height", c.table_height);
  c.back_plane_offset = j.value("back_plane_offset", c.back_plane_offset);
  c.work_plane_offset = j.value("work_plane_offset", c.work_plane_offset);
  c.sphere_radius = j.value("sphere_radius", c.sphere_radius);
  c.safety_margin = j.value("safety_margin", c.safety_margin);
  if (j.contains("s1_center")) c.s1_center = detail::fixed_vector<3>(j.at("s1_center"), "s1_center");
  if (j.contains("s2_center")) c.s2_center = detail::fixed_vector<3>(j.at("s2_center"), "s2_center");
  if (j.contains("cylinders")) {
    c.cylinders.clear();
    for (const json& cj : j.at("cylinders")) {
      RobotCylinder cyl;
      cyl.name = detail::require(cj, "name").get<std::string>();
      cyl.frame = detail::require(cj, "frame").get<int>();
      cyl.point = detail::fixed_vector<3>(cj.value("point", json::array({0, 0, 0})), "cylinder point");
      cyl.axis = detail::fixed_vector<3>(detail::require(cj, "axis"), "cylinder axis");
      cyl.radius = detail::require(cj, "radius").get<double>();
      cyl.margin = cj.value("margin", 0.0);
      c.cylinders.push_back(cyl);
    }
  }
  if (j.contains("obstacle")) {
    const json& o = j.at("obstacle");
    c.obstacle_point = detail::fixed_vector<3>(detail::require(o, "point"), "obstacle.point");
    c.obstacle_axis = detail::fixed_vector<3>(detail::require(o, "axis"), "obstacle.axis");
    c.obstacle_radius = detail::require(o, "radius").get<double>();
    if (o.contains("amplitude")) {
      c.obstacle_amplitude = detail::fixed_vector<3>(o.at("amplitude"), "obstacle.amplitude");
    }
    c.obstacle_period = o.value("period", c.obstacle_period);
  }
  return c;
}

ControllerGains parse_gains_json(const json& j) {
  std::istringstream in(j.dump());
  return parse_gains(in);
}

RobotDescription parse_robot_json(const json& j) {
  std::istringstream in(j.dump());
  return parse_robot(in);
}

}  // namespace

void ScenarioConfig::validate() const {
  robot.validate();
  gains.validate();
  if (!(rate > 0.0)) throw std::invalid_argument("scenario: rate must be positive");
  if (!(warmup >= 0.0)) throw std::invalid_argument("scenario: warm-up must be non-negative");
  if (!(approach_timeout >= 0.0)) throw std::invalid_argument("scenario: approach timeout must be non-negative");
  if (!(path.standoff > 0.0)) throw std::invalid_argument("scenario: standoff must be positive");
  if (!(path.speed > 0.0)) throw std::invalid_argument("scenario: path speed must be positive");
  if (path.circulations < 1) throw std::invalid_argument("scenario: at least one circulation");
  if (!(noise.position_sigma >= 0.0 && noise.orientation_sigma >= 0.0)) {
    throw std::invalid_argument("scenario: noise sigmas must be non-negative");
  }
  if (!(noise.spike_probability >= 0.0 && noise.spike_probability <= 1.0)) {
    throw std::invalid_argument("scenario: spike probability must lie in [0, 1]");
  }
  const ParameterBounds& b = robot.bounds;
  if (true_parameters && !b.contains(*true_parameters, 1e-12)) {
    throw std::invalid_argument("scenario: true parameters lie outside the bounds");
  }
  if (initial_estimate && !b.contains(*initial_estimate, 1e-12)) {
    throw std::invalid_argument("scenario: initial estimate lies outside the bounds");
  }
  if (!(scene.safety_margin >= 0.0)) throw std::invalid_argument("scenario: safety margin must be non-negative");
  for (const auto& cyl : scene.cylinders) {
    if (!(cyl.radius > 0.0 && cyl.margin >= 0.0)) {
      throw std::invalid_argument("scenario: cylinder '" + cyl.name + "' needs a positive radius and margin >= 0");
    }
  }
  if (scene.sphere_radius <= 0.0 || scene.obstacle_radius <= 0.0) {
    throw std::invalid_argument("scenario: radii must be positive");
  }
}

ScenarioConfig default_scenario() {
  ScenarioConfig c;
  c.scene.face = make_face(Vec3(0.68, 0.15, 0.10), -Vec3::UnitX(), -Vec3::UnitY(), Vec2(0.3, 0.3));
  c.scene.box_pivot = Vec3(0.83, 0.0, 0.10);
  c.scene.box_tilt = 1.0 * kDeg;
  c.scene.cylinders = default_cylinders();
  c.scene.obstacle_point = Vec3(0.55, 0.0, 0.482);
  c.scene.obstacle_axis = Vec3::UnitY();
  c.scene.obstacle_radius = 0.1;
  c.q_start = c.robot.q_home;
  return c;
}

ScenarioConfig parse_scenario(std::istream& is, const std::string& base_dir) {
  const json j = detail::parse_stream(is, "scenario");
  ScenarioConfig c = default_scenario();
  c.name = j.value("name", c.name);
  if (j.contains("robot")) {
    c.robot = parse_robot_json(resolve(j.at("robot"), base_dir));
    c.q_start = c.robot.q_home;
  }
  if (j.contains("gains")) c.gains = parse_gains_json(resolve(j.at("gains"), base_dir));
  if (j.contains("scene")) c.scene = parse_scene_json(resolve(j.at("scene"), base_dir));
  if (j.contains("true_parameters")) {
    c.true_parameters = detail::fixed_vector<kParamCount>(j.at("true_parameters"), "true_parameters");
  }
  if (j.contains("initial_estimate")) {
    c.initial_estimate = detail::fixed_vector<kParamCount>(j.at("initial_estimate"), "initial_estimate");
  }
  if (j.contains("perturbation")) {
    const json& p = j.at("perturbation");
    c.perturbation.offset_length = p.value("offset_length", c.perturbation.offset_length);
    c.perturbation.offset_angle = p.value("offset_angle_deg", c.perturbation.offset_angle / kDeg) * kDeg;
    c.perturbation.dh_length = p.value("dh_length", c.perturbation.dh_length);
    c.perturbation.dh_angle = p.value("dh_angle_deg", c.perturbation.dh_angle / kDeg) * kDeg;
  }
  if (j.contains("path")) {
    const json& p = j.at("path");
    if (p.contains("sketch")) {
      const json& s = p.at("sketch");
      if (s.is_string()) {
        const std::string name = s.get<std::string>();
        if (builtin_sketches().count(name) || name == "vertical_line") {
          c.path.sketch_name = name;
        } else {
          c.path.sketch = load_sketch((std::filesystem::path(base_dir) / name).string());
        }
      } else {
        std::istringstream in(s.dump());
        c.path.sketch = parse_sketch(in);
      }
    }
    if (p.contains("mode")) c.path.mode = task_mode_from_string(p.at("mode").get<std::string>());
    c.path.standoff = p.value("standoff", c.path.standoff);
    c.path.speed = p.value("speed", c.path.speed);
    c.path.circulations = p.value("circulations", c.path.circulations);
    c.path.roll = p.value("roll_deg", c.path.roll / kDeg) * kDeg;
  }
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    c.noise.position_sigma = n.value("position_sigma", c.noise.position_sigma);
    c.noise.orientation_sigma = n.value("orientation_sigma_deg", c.noise.orientation_sigma / kDeg) * kDeg;
    c.noise.spike_probability = n.value("spike_probability", c.noise.spike_probability);
    c.noise.spike_magnitude = n.value("spike_magnitude", c.noise.spike_magnitude);
  }
  if (j.contains("marker_error")) c.marker_error = detail::fixed_vector<6>(j.at("marker_error"), "marker_error");
  if (j.contains("measurement")) {
    const std::string m = j.at("measurement").get<std::string>();
    if (m == "full") {
      c.measurement = MeasurementModel::Full;
    } else if (m == "pose") {
      c.measurement = MeasurementModel::Pose;
    } else if (m == "position_only") {
      c.measurement = MeasurementModel::PositionOnly;
    } else {
      throw std::invalid_argument("scenario: unknown measurement model '" + m + "'");
    }
  }
  if (j.contains("q_start")) c.q_start = detail::fixed_vector<kJointCount>(j.at("q_start"), "q_start");
  c.rate = j.value("rate", c.rate);
  c.warmup = j.value("warmup", c.warmup);
  c.approach_timeout = j.value("approach_timeout", c.approach_timeout);
  c.approach_tolerance = j.value("approach_tolerance", c.approach_tolerance);
  c.abort_penetration = j.value("abort_penetration", c.abort_penetration);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_scenario(in, std::filesystem::path(path).parent_path().string());
}

}  // namespace dqadapt
