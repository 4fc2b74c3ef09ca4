#pragma once

// Task control law (joint velocities) and adaptation law (parameter rates),
// each a small dense QP built from the estimated model.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "dqadapt/geometry.hpp"
#include "dqadapt/kinematics.hpp"
#include "dqadapt/qp.hpp"

namespace dqadapt {

struct ControllerGains {
  double eta_q{50.0};
  double eta_a{5.0};
  double eta_vfi_q{5.0};
  double eta_vfi_a{5.0};
  JointVector lambda_q{JointVector::Constant(0.02)};          // diagonal of the damping matrix
  ParameterVector lambda_a{ParameterVector::Constant(0.02)};  // diagonal of the damping matrix
  JointVector qdot_min{JointVector::Constant(-0.2)};
  JointVector qdot_max{JointVector::Constant(0.2)};

  /// Throws std::invalid_argument if any gain is non-positive or a limit is empty.
  void validate() const;
};

ControllerGains parse_gains(std::istream& is);
ControllerGains load_gains(const std::string& path);
void write_gains(std::ostream& os, const ControllerGains& g);

namespace flag {
constexpr std::uint32_t kTaskInfeasible = 1u << 0;
constexpr std::uint32_t kAdaptInfeasible = 1u << 1;
constexpr std::uint32_t kTaskMaxIterations = 1u << 2;
constexpr std::uint32_t kAdaptMaxIterations = 1u << 3;
constexpr std::uint32_t kGradientUndefined = 1u << 4;
constexpr std::uint32_t kBeamParallel = 1u << 5;
constexpr std::uint32_t kSafetyAbort = 1u << 6;
}  // namespace flag

struct ControlCycleOutput {
  JointVector u_q{JointVector::Zero()};
  ParameterVector u_a{ParameterVector::Zero()};
  double task_error_norm{0.0};
  double estimation_error_norm{0.0};
  double min_distance{0.0};  // smallest estimated keep-outside distance
  double smallest_sv{0.0};   // of the estimated task Jacobian
  int active_constraints{0};
  /// x_err' J_xa u_a, which the adaptation law keeps non-positive.
  double error_decrease{0.0};
  std::uint32_t flags{0};
};

/// x_d (or y) flipped against the estimate: primary-part dot product for
/// poses, line-direction dot product for lines.
TaskVector canonicalize(const TaskVector& candidate, const TaskVector& reference);

/// vec8(x_hat) - vec8(x_d) after canonicalization. Throws on a mode mismatch.
Vec8 make_task_error(const TaskVector& x_hat, const TaskVector& x_d);

struct TaskStep {
  JointVector u{JointVector::Zero()};
  Vec8 error{Vec8::Zero()};
  double smallest_sv{0.0};
  double min_distance{0.0};
  int active_constraints{0};
  std::uint32_t flags{0};
  QpProblem problem;
};

/// Solves the task QP at the estimated chain state `s_hat`.
TaskStep task_control_step(const KinematicModel& model, const ChainState& s_hat, const TaskVector& x_d,
                           const Scene& scene, const ControllerGains& gains, QpSolver& solver);

struct AdaptStep {
  ParameterVector u{ParameterVector::Zero()};
  double estimation_error_norm{0.0};
  double error_decrease{0.0};
  std::uint32_t flags{0};
  QpProblem problem;
};

/// Solves the adaptation QP. `x_err` is the task error at the current
/// estimate. With full measurement `y` is the measured task vector in `mode`;
/// with pose measurement it is the measured effector pose and the estimate
/// is corrected in pose space whatever the task mode;
/// with position-only measurement it is the measured effector pose.
AdaptStep adaptation_step(const KinematicModel& model, const ChainState& s_hat, const ParameterVector& a_hat,
                          TaskMode mode, const Vec8& x_err, const TaskVector& y, MeasurementModel measurement,
                          const Scene& scene, const ControllerGains& gains, QpSolver& solver);

/// Equality block that freezes the estimate of unmeasured task components.
/// Empty for full and pose measurement; otherwise an orthonormal basis of the rows of
/// the parametric Jacobian that the measurement does not observe.
Eigen::MatrixXd unmeasured_projector(const ParametricJacobian& J_task, MeasurementModel measurement);

class AdaptiveController {
 public:
  AdaptiveController(KinematicModel model, Scene scene, ControllerGains gains, TaskMode mode,
                     ParameterVector a0, MeasurementModel measurement = MeasurementModel::Full);

  const KinematicModel& model() const { return model_; }
  const Scene& scene() const { return scene_; }
  Scene& scene() { return scene_; }
  /// Scene for the adaptation VFI rows; the task scene unless one was set.
  /// Giving it tighter primitives than the task scene lets the estimate
  /// follow a measurement into the task scene's margin, so the task rows
  /// push the arm back out instead of the estimate lagging at the boundary.
  const Scene& adaptation_scene() const { return adapt_scene_ ? *adapt_scene_ : scene_; }
  void set_adaptation_scene(Scene scene) { adapt_scene_ = std::move(scene); }
  Scene* mutable_adaptation_scene() { return adapt_scene_ ? &*adapt_scene_ : nullptr; }
  const ControllerGains& gains() const { return gains_; }
  TaskMode mode() const { return mode_; }
  /// Switches the task objective; the estimate carries over.
  void set_mode(TaskMode mode) { mode_ = mode; }
  MeasurementModel measurement() const { return measurement_; }
  const ParameterVector& estimate() const { return a_hat_; }
  void set_estimate(const ParameterVector& a) { a_hat_ = a; }

  /// Estimated task vector at q.
  TaskVector estimated_task(const JointVector& q) const;

  /// One control cycle: both QPs at the current estimate, then the estimate
  /// advances by u_a * dt. `y` is the measured effector pose. With `move`
  /// false the joint command is forced to zero.
  ControlCycleOutput step(const JointVector& q, const TaskVector& x_d, const TaskVector& y, double dt,
                          bool move = true);

  /// The two QPs of the most recent step, for dumps and regression fixtures.
  const QpProblem& last_task_problem() const { return last_task_problem_; }
  const QpProblem& last_adaptation_problem() const { return last_adapt_problem_; }

 private:
  KinematicModel model_;
  Scene scene_;
  std::optional<Scene> adapt_scene_;
  ControllerGains gains_;
  TaskMode mode_;
  ParameterVector a_hat_;
  MeasurementModel measurement_;
  QpSolver task_solver_;
  QpSolver adapt_solver_;
  QpProblem last_task_problem_;
  QpProblem last_adapt_problem_;
};

/// Adaptation-only phase with the robot at rest: `duration * rate` cycles,
/// each fed by a pose from `measure()`. Returns the improved estimate.
/// The setpoint follows the estimate, so the task error is zero and the
/// error-decrease row never binds while the arm is not being controlled.
ParameterVector run_warmup(AdaptiveController& controller, const JointVector& q,
                           const std::function<TaskVector()>& measure, double duration, double rate,
                           const std::function<void(const ControlCycleOutput&)>& on_cycle = {});

}  // namespace dqadapt
