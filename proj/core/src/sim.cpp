#include "dqadapt/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dqadapt {

ParameterVector perturb_parameters(const ParameterVector& nominal, const ParameterBounds& bounds,
                                   const PerturbationModel& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  ParameterVector out = nominal;
  for (int i = 0; i < kParamCount; ++i) {
    const bool offset = i >= 24;
    const bool length = param::is_length(i);
    const double mag = offset ? (length ? m.offset_length : m.offset_angle) : (length ? m.dh_length : m.dh_angle);
    out(i) += mag * unit(rng);
  }
  return out.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
}

namespace {

DualQuaternion offset_pose(const Vec6& o) {
  const Quaternion r = Quaternion::from_axis_angle(Vec3::UnitX(), o(3)) *
                       Quaternion::from_axis_angle(Vec3::UnitY(), o(4)) *
                       Quaternion::from_axis_angle(Vec3::UnitZ(), o(5));
  return DualQuaternion::from_pose(r, o.head<3>());
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-9) v = Vec3(n(rng), n(rng), n(rng));
  return v.normalized();
}

Vec3 axis_or(const Vec3& v, const Vec3& fallback) { return v.norm() > 1e-12 ? v.normalized() : fallback; }

// Rotates the face about the pivot by a random axis and an angle up to max_tilt.
FaceFrame tilt_face(const FaceFrame& face, const Vec3& pivot, double max_tilt, std::mt19937_64& rng) {
  const Vec3 axis = random_unit(rng);
  const double angle = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * max_tilt;
  if (max_tilt <= 0.0) return face;
  const DualQuaternion about = DualQuaternion::from_translation(pivot) *
                               DualQuaternion::from_rotation(Quaternion::from_axis_angle(axis, angle)) *
                               DualQuaternion::from_translation(-pivot);
  FaceFrame out = face;
  out.pose = (about * face.pose).normalized();
  return out;
}

}  // namespace

Scene build_scene(const SceneConfig& c, const FaceFrame& face) {
  Scene s;
  const Vec3 n = face.normal();
  const Vec3 origin = face.pose.translation();
  s.add_primitive(Primitive::sphere("s1", c.sphere_radius, kEffectorFrame, c.s1_center));
  s.add_primitive(Primitive::sphere("s2", c.sphere_radius, kEffectorFrame, c.s2_center));
  s.add_primitive(Primitive::world_plane("pi_t", Vec3(0, 0, c.table_height), Vec3::UnitZ()));
  s.add_primitive(Primitive::world_plane("pi_b", origin + c.back_plane_offset * n, n));
  // keep-inside: the normal points out of the operating area
  s.add_primitive(Primitive::world_plane(scene_names::kWorkPlane, origin + c.work_plane_offset * n, n));
  for (const auto& cyl : c.cylinders) {
    s.add_primitive(Primitive::robot_cylinder(cyl.name, cyl.radius, cyl.frame, cyl.point, axis_or(cyl.axis, Vec3::UnitZ())));
  }
  s.add_primitive(Primitive::world_cylinder(scene_names::kObstacle, c.obstacle_radius, c.obstacle_point,
                                            axis_or(c.obstacle_axis, Vec3::UnitY())));

  for (const char* sphere : {"s1", "s2"}) {
    s.add_pair({sphere, "pi_t", VfiDirection::KeepOutside});
    s.add_pair({sphere, "pi_b", VfiDirection::KeepOutside});
  }
  for (const char* sphere : {"s1", "s2"}) {
    for (const auto& cyl : c.cylinders) {
      s.add_pair({sphere, cyl.name, VfiDirection::KeepOutside});
    }
  }
  for (const char* sphere : {"s1", "s2"}) {
    s.add_pair({sphere, scene_names::kObstacle, VfiDirection::KeepOutside});
  }
  s.add_pair({"s1", scene_names::kWorkPlane, VfiDirection::KeepInside});
  return s;
}

Scene build_controller_scene(const SceneConfig& config, const FaceFrame& face) {
  SceneConfig inflated = config;
  inflated.sphere_radius += config.safety_margin;
  for (auto& cyl : inflated.cylinders) cyl.radius += cyl.margin;
  return build_scene(inflated, face);
}

CuttingSketch PathConfig::resolved_sketch() const {
  CuttingSketch s = sketch ? *sketch : builtin_sketch(sketch_name);
  s.circulations = circulations;
  return s;
}

JointVector simulate_plant(const JointVector& q, const JointVector& u, double dt, const JointVector& lo,
                           const JointVector& hi) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("plant step needs dt > 0");
  }
  return q + u.cwiseMax(lo).cwiseMin(hi) * dt;
}

DualQuaternion measure(const KinematicModel& model, const JointVector& q, const ParameterVector& true_params,
                       const DualQuaternion& marker_error, const NoiseModel& noise, std::mt19937_64& rng) {
  const DualQuaternion x = model.fk(q, true_params) * marker_error;
  std::normal_distribution<double> n(0.0, 1.0);
  // draws happen unconditionally so the stream does not depend on the sigmas
  const Vec3 dt(n(rng), n(rng), n(rng));
  const Vec3 dw(n(rng), n(rng), n(rng));
  const double spike_draw = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const Vec3 spike_dir = random_unit(rng);

  Vec3 t = x.translation() + noise.position_sigma * dt;
  if (spike_draw < noise.spike_probability) {
    t += noise.spike_magnitude * spike_dir;
  }
  const Vec3 w = noise.orientation_sigma * dw;
  const double angle = w.norm();
  Quaternion r = x.rotation();
  if (angle > 0.0) {
    r = r * Quaternion::from_axis_angle(w / angle, angle);
  }
  return DualQuaternion::from_pose(r.normalized(), t);
}

std::optional<Vec3> beam_trace(const KinematicModel& model, const JointVector& q,
                               const ParameterVector& true_params, const DualQuaternion& face_plane) {
  const DualQuaternion line = model.beam_line(model.fk(q, true_params));
  const Vec3 l = line_direction(line);
  const Vec3 n = plane_normal(face_plane);
  const double den = n.dot(l);
  if (std::abs(den) <= 1e-6) {
    return std::nullopt;
  }
  const Vec3 p0 = l.cross(line_moment(line));  // closest point to the origin
  return p0 + ((plane_offset(face_plane) - n.dot(p0)) / den) * l;
}

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Warmup:
      return "warmup";
    case Phase::Approach:
      return "approach";
    case Phase::Tracking:
      return "tracking";
  }
  return "warmup";
}

std::vector<const LogRow*> RunRecord::tracking() const {
  std::vector<const LogRow*> out;
  for (const auto& r : rows) {
    if (r.phase == Phase::Tracking && r.traced_valid) out.push_back(&r);
  }
  return out;
}

namespace {

double true_min_distance(const Scene& scene, const ChainState& s) {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& pair : scene.pairs()) {
    if (pair.direction == VfiDirection::KeepOutside) {
      out = std::min(out, pair_distance(scene, pair, s));
    }
  }
  return out;
}

class Experiment {
 public:
  Experiment(const ScenarioConfig& c, const CycleCallback& cb, const ControllerCallback& inspect)
      : c_(c), cb_(cb), inspect_(inspect), rng_(c.seed) {}

  RunRecord run();

 private:
  bool cycle(Phase phase, const TaskVector& x_d, bool move, double t_track);
  void move_obstacle();

  const ScenarioConfig& c_;
  const CycleCallback& cb_;
  const ControllerCallback& inspect_;
  std::mt19937_64 rng_;
  KinematicModel model_;
  ParameterVector a_true_;
  DualQuaternion marker_;
  FaceFrame face_;
  Scene scene_full_;        // true radii: the safety check and the adaptation rows
  Scene scene_controller_;  // task rows, with the safety margin
  Scene scene_approach_;
  CuttingPath path_;
  std::optional<AdaptiveController> ctrl_;
  JointVector q_;
  double t_{0.0};
  RunRecord rec_;
};

void Experiment::move_obstacle() {
  if (c_.scene.obstacle_amplitude.norm() == 0.0) return;
  const Vec3 p = c_.scene.obstacle_point +
                 c_.scene.obstacle_amplitude * std::sin(2.0 * M_PI * t_ / c_.scene.obstacle_period);
  scene_full_.find_mutable(scene_names::kObstacle).point = p;
  ctrl_->scene().find_mutable(scene_names::kObstacle).point = p;
  if (Scene* a = ctrl_->mutable_adaptation_scene()) a->find_mutable(scene_names::kObstacle).point = p;
}

bool Experiment::cycle(Phase phase, const TaskVector& x_d, bool move, double t_track) {
  const double dt = 1.0 / c_.rate;
  move_obstacle();
  LogRow row;
  row.t = t_;
  row.phase = phase;
  row.q = q_;
  row.a_hat = ctrl_->estimate();

  const ChainState s_true = model_.evaluate(q_, a_true_);
  const TaskVector x_true = model_.task(s_true, ctrl_->mode());
  const DualQuaternion y = measure(model_, q_, a_true_, marker_, c_.noise, rng_);
  const TaskVector x_hat = ctrl_->estimated_task(q_);
  row.true_estimation_error = make_task_error(x_hat, x_true).norm();
  row.x_true = canonicalize(x_true, x_hat).coeffs();
  row.y = vec8(canonicalize(y, model_.fk(q_, row.a_hat)));
  row.true_min_distance = true_min_distance(scene_full_, s_true);

  row.out = ctrl_->step(q_, x_d, {TaskMode::Pose, y}, dt, move);
  if (phase == Phase::Tracking) {
    row.nominal = path_.point_at(t_track);
    if (const auto hit = beam_trace(model_, q_, a_true_, face_.plane())) {
      row.traced = *hit;
      row.traced_valid = true;
    } else {
      row.out.flags |= flag::kBeamParallel;
    }
  }
  const bool abort = row.true_min_distance < -c_.abort_penetration;
  if (abort) row.out.flags |= flag::kSafetyAbort;

  q_ = simulate_plant(q_, row.out.u_q, dt, c_.gains.qdot_min, c_.gains.qdot_max);
  t_ += dt;
  if (cb_) cb_(row);
  if (inspect_) inspect_(row, *ctrl_);
  rec_.rows.push_back(std::move(row));
  if (abort) {
    rec_.aborted = true;
    rec_.abort_reason = "true penetration beyond " + std::to_string(c_.abort_penetration) + " m at t=" +
                        std::to_string(t_ - dt) + " s";
  }
  return !abort;
}

RunRecord Experiment::run() {
  c_.validate();
  rec_.scenario = c_.name;
  const CuttingSketch sketch = c_.path.resolved_sketch();
  rec_.path = sketch.name;
  rec_.mode = c_.path.mode;
  rec_.seed = c_.seed;
  rec_.rate = c_.rate;

  // Draw order is fixed: true parameters, then box placement, then noise.
  model_ = c_.robot.model();
  a_true_ = c_.true_parameters ? *c_.true_parameters
                               : perturb_parameters(c_.robot.nominal, model_.bounds(), c_.perturbation, rng_);
  face_ = tilt_face(c_.scene.face, c_.scene.box_pivot, c_.scene.box_tilt, rng_);
  marker_ = offset_pose(c_.marker_error);
  scene_full_ = build_scene(c_.scene, face_);
  scene_controller_ = build_controller_scene(c_.scene, face_);
  scene_approach_ = scene_controller_.without(scene_names::kWorkPlane);
  path_ = project_sketch(sketch, face_, c_.path.speed);

  const ParameterVector a0 = c_.initial_estimate ? *c_.initial_estimate : c_.robot.nominal;
  ctrl_.emplace(model_, scene_approach_, c_.gains, TaskMode::Pose, a0, c_.measurement);
  ctrl_->set_adaptation_scene(scene_full_.without(scene_names::kWorkPlane));
  q_ = c_.q_start;

  const TaskVector start{TaskMode::Pose, pose_at(path_, c_.path.standoff, 0.0, c_.path.roll)};
  const auto warmup_cycles = static_cast<long>(std::llround(c_.warmup * c_.rate));
  for (long k = 0; k < warmup_cycles; ++k) {
    if (!cycle(Phase::Warmup, ctrl_->estimated_task(q_), false, 0.0)) return rec_;
  }

  const auto approach_cycles = static_cast<long>(std::llround(c_.approach_timeout * c_.rate));
  for (long k = 0; k < approach_cycles; ++k) {
    if (!cycle(Phase::Approach, start, true, 0.0)) return rec_;
    if (rec_.rows.back().out.task_error_norm < c_.approach_tolerance) break;
  }

  ctrl_->set_mode(c_.path.mode);
  ctrl_->scene() = scene_controller_;
  ctrl_->set_adaptation_scene(scene_full_);
  for (double t : path_.sample_times(c_.rate)) {
    const TaskVector x_d = c_.path.mode == TaskMode::Pose
                               ? TaskVector{TaskMode::Pose, pose_at(path_, c_.path.standoff, t, c_.path.roll)}
                               : TaskVector{TaskMode::Line, line_at(path_, t)};
    if (!cycle(Phase::Tracking, x_d, true, t)) return rec_;
  }
  return rec_;
}

}  // namespace

RunRecord run_experiment(const ScenarioConfig& config, const CycleCallback& on_cycle,
                         const ControllerCallback& inspect) {
  Experiment e(config, on_cycle, inspect);
  return e.run();
}

}  // namespace dqadapt
