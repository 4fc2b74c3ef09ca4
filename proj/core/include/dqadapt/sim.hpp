#pragma once

// Closed-loop simulation of the cutting experiments: a kinematic plant at the
// true parameters, a noisy marker measurement, the box scene, the three-phase
// protocol (adaptation warm-up, approach, tracking) and the accuracy metrics.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dqadapt/controller.hpp"
#include "dqadapt/pathgen.hpp"
#include "dqadapt/robot.hpp"

namespace dqadapt {

using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Uniform true-vs-nominal perturbation magnitudes.
struct PerturbationModel {
  double offset_length{0.02};
  double offset_angle{5.0 * M_PI / 180.0};
  double dh_length{0.002};
  double dh_angle{0.5 * M_PI / 180.0};
};

/// Nominal plus a uniform draw in +/- the model's magnitudes, clipped to `bounds`.
ParameterVector perturb_parameters(const ParameterVector& nominal, const ParameterBounds& bounds,
                                   const PerturbationModel& m, std::mt19937_64& rng);

struct NoiseModel {
  double position_sigma{1e-3};                   // m, per axis
  double orientation_sigma{0.5 * M_PI / 180.0};  // rad, per axis
  /// Outliers: with this probability a measurement is displaced by
  /// `spike_magnitude` metres in a random direction.
  double spike_probability{0.0};
  double spike_magnitude{0.02};
};

struct RobotCylinder {
  std::string name;
  int frame{0};
  Vec3 point{Vec3::Zero()};
  Vec3 axis{Vec3::UnitZ()};
  double radius{0.01};
  /// Added to the radius in the controller's copy of the scene. Frames far
  /// up the chain are estimated less accurately than the measured effector.
  double margin{0.0};
};

struct SceneConfig {
  FaceFrame face;           // nominal box face; sketch origin at its lower corner
  Vec3 box_pivot{Vec3::Zero()};
  double box_tilt{0.0};     // max random tilt of the box about the pivot, rad
  double table_height{0.0};
  double back_plane_offset{0.08};  // keep-outside plane in front of the face
  double work_plane_offset{0.30};  // keep-inside plane bounding the operating area
  double sphere_radius{0.075};
  /// Added to the sphere radii in the controller's copy of the scene only;
  /// the harness checks safety against the true radii.
  double safety_margin{0.003};
  Vec3 s1_center{0.0, 0.0, -0.04};  // in the effector frame
  Vec3 s2_center{0.0, 0.0, -0.10};
  std::vector<RobotCylinder> cylinders;
  Vec3 obstacle_point{Vec3::Zero()};
  Vec3 obstacle_axis{Vec3::UnitY()};
  double obstacle_radius{0.1};
  /// Moving-obstacle mode: sinusoidal offset amplitude * sin(2 pi t / period).
  Vec3 obstacle_amplitude{Vec3::Zero()};
  double obstacle_period{10.0};
};

/// The 19-pair scene for a (possibly tilted) face: planes pi_t, pi_b, pi_w,
/// the link cylinders, the obstacle cylinder and the two torch spheres.
Scene build_scene(const SceneConfig& config, const FaceFrame& face);
/// The same scene with the sphere and cylinder radii grown by their margins.
Scene build_controller_scene(const SceneConfig& config, const FaceFrame& face);

/// Names used in the built scene.
namespace scene_names {
inline constexpr const char* kWorkPlane = "pi_w";
inline constexpr const char* kObstacle = "c_o";
}  // namespace scene_names

struct PathConfig {
  std::string sketch_name{"square"};
  std::optional<CuttingSketch> sketch;  // overrides the built-in name
  TaskMode mode{TaskMode::Pose};
  double standoff{0.15};
  double speed{0.01};
  int circulations{3};
  double roll{0.0};  // extra roll about the beam, rad

  CuttingSketch resolved_sketch() const;
};

struct ScenarioConfig {
  std::string name{"default"};
  RobotDescription robot{default_robot()};
  std::optional<ParameterVector> true_parameters;     // drawn from `perturbation` when empty
  std::optional<ParameterVector> initial_estimate;    // nominal when empty
  PerturbationModel perturbation;
  SceneConfig scene;
  ControllerGains gains;
  PathConfig path;
  NoiseModel noise;
  Vec6 marker_error{Vec6::Zero()};  // fixed marker offset, Tx Ty Tz Rx Ry Rz
  MeasurementModel measurement{MeasurementModel::Pose};
  JointVector q_start{JointVector::Zero()};
  double rate{100.0};
  double warmup{5.0};
  double approach_timeout{30.0};
  double approach_tolerance{2e-3};  // task-error norm that ends the approach
  double abort_penetration{0.005};
  std::uint64_t seed{1};

  void validate() const;
};

/// Default scenario: UR3e with torch, box face at x = 0.68 facing the robot.
ScenarioConfig default_scenario();

ScenarioConfig parse_scenario(std::istream& is, const std::string& base_dir = ".");
ScenarioConfig load_scenario(const std::string& path);

/// Velocity-integrator plant with the command clamped to [lo, hi].
JointVector simulate_plant(const JointVector& q, const JointVector& u, double dt, const JointVector& lo,
                           const JointVector& hi);

/// Marker measurement of the effector pose at the true parameters.
DualQuaternion measure(const KinematicModel& model, const JointVector& q, const ParameterVector& true_params,
                       const DualQuaternion& marker_error, const NoiseModel& noise, std::mt19937_64& rng);

/// Intersection of the effector beam with a plane; empty when |l.n| <= 1e-6.
std::optional<Vec3> beam_trace(const KinematicModel& model, const JointVector& q,
                               const ParameterVector& true_params, const DualQuaternion& face_plane);

enum class Phase { Warmup = 0, Approach = 1, Tracking = 2 };
const char* to_string(Phase p);

struct LogRow {
  double t{0.0};
  Phase phase{Phase::Warmup};
  JointVector q{JointVector::Zero()};
  ParameterVector a_hat{ParameterVector::Zero()};
  ControlCycleOutput out;
  double true_estimation_error{0.0};  // ||x_hat - x_true|| without noise
  double true_min_distance{0.0};      // smallest true keep-outside distance
  Vec8 x_true{Vec8::Zero()};
  Vec8 y{Vec8::Zero()};
  Vec3 nominal{Vec3::Zero()};
  Vec3 traced{Vec3::Zero()};
  bool traced_valid{false};
};

struct RunRecord {
  std::string scenario;
  std::string path;
  TaskMode mode{TaskMode::Pose};
  std::uint64_t seed{0};
  double rate{100.0};
  std::vector<LogRow> rows;
  bool aborted{false};
  std::string abort_reason;

  /// Tracking-phase samples with a valid trace.
  std::vector<const LogRow*> tracking() const;
};

using CycleCallback = std::function<void(const LogRow&)>;
/// Sees a row together with the controller that produced it.
using ControllerCallback = std::function<void(const LogRow&, const AdaptiveController&)>;

/// Runs warm-up, approach and tracking. `on_cycle`, when given, sees every
/// row as it is produced.
RunRecord run_experiment(const ScenarioConfig& config, const CycleCallback& on_cycle = {},
                         const ControllerCallback& inspect = {});

struct AccuracyStats {
  double mean{0.0};      // time average of the pointwise distance (trapezoid)
  double sd{0.0};        // sample standard deviation of the pointwise distances
  double duration{0.0};  // integration interval
  size_t samples{0};
};

/// (1/T) integral of |p_nom - p_traced| dt over matching timestamps.
AccuracyStats accuracy(const std::vector<double>& t, const std::vector<Vec3>& nominal,
                       const std::vector<Vec3>& traced);
AccuracyStats accuracy(const RunRecord& record);

struct RunSummary {
  AccuracyStats accuracy;
  double min_true_distance{0.0};
  double max_abs_qdot{0.0};
  double max_error_decrease{0.0};
  double min_smallest_sv{0.0};       // over the tracking phase
  double peak_task_error{0.0};       // over the tracking phase
  double warmup_initial_error{0.0};  // true estimation error at the first cycle
  double warmup_final_error{0.0};    // and at the end of the warm-up
  std::uint32_t flags{0};
};

RunSummary summarize(const RunRecord& record);

/// Per-cycle CSV with a '#'-comment metadata header; numbers as %.17g.
void write_log_csv(std::ostream& os, const RunRecord& record);
RunRecord read_log_csv(std::istream& is);

struct ReportCell {
  double mean{0.0};
  double sd{0.0};
  double duration{0.0};
  int runs{0};
};

struct Report {
  std::vector<std::string> paths;  // column order
  /// cells[mode][path]; the "overall" column is the duration-weighted mean.
  std::map<std::string, std::map<std::string, ReportCell>> cells;
};

Report make_report(const std::vector<RunRecord>& records);
/// Table with rows ACPO/ACLO and one column per path plus Overall, in mm.
void write_report_table(std::ostream& os, const Report& report);
/// Long-form summary: mode,path,runs,duration_s,mean_mm,sd_mm.
void write_report_summary(std::ostream& os, const Report& report);
/// Per-cycle series for plotting: run,t,phase,task_error,estimation_error,smallest_sv.
void write_report_series(std::ostream& os, const std::vector<RunRecord>& records);

}  // namespace dqadapt
