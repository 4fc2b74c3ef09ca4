#include "dqadapt/controller.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "json_util.hpp"

namespace dqadapt {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using detail::json;

void ControllerGains::validate() const {
  if (!(eta_q > 0 && eta_a > 0 && eta_vfi_q > 0 && eta_vfi_a > 0)) {
    throw std::invalid_argument("gains: all eta values must be positive");
  }
  if (!((lambda_q.array() > 0).all() && (lambda_a.array() > 0).all())) {
    throw std::invalid_argument("gains: damping diagonals must be positive");
  }
  if (!((qdot_min.array() < qdot_max.array()).all())) {
    throw std::invalid_argument("gains: qdot_min must be below qdot_max");
  }
}

namespace {

// A scalar expands to a constant diagonal; an array gives it entry by entry.
template <int N>
Eigen::Matrix<double, N, 1> diagonal_field(const json& j, const char* key) {
  const json& v = detail::require(j, key);
  if (v.is_number()) {
    return Eigen::Matrix<double, N, 1>::Constant(v.get<double>());
  }
  return detail::fixed_vector<N>(v, key);
}

}  // namespace

ControllerGains parse_gains(std::istream& is) {
  const json j = detail::parse_stream(is, "gains");
  ControllerGains g;
  g.eta_q = detail::require(j, "eta_q").get<double>();
  g.eta_vfi_q = detail::require(j, "eta_vfi_q").get<double>();
  g.eta_a = detail::require(j, "eta_a").get<double>();
  g.eta_vfi_a = detail::require(j, "eta_vfi_a").get<double>();
  g.lambda_q = diagonal_field<kJointCount>(j, "lambda_q");
  g.lambda_a = diagonal_field<kParamCount>(j, "lambda_a");
  g.qdot_min = diagonal_field<kJointCount>(j, "qdot_min");
  g.qdot_max = diagonal_field<kJointCount>(j, "qdot_max");
  g.validate();
  return g;
}

ControllerGains load_gains(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_gains(in);
}

void write_gains(std::ostream& os, const ControllerGains& g) {
  json j;
  j["eta_q"] = g.eta_q;
  j["eta_vfi_q"] = g.eta_vfi_q;
  j["eta_a"] = g.eta_a;
  j["eta_vfi_a"] = g.eta_vfi_a;
  j["lambda_q"] = detail::to_array(g.lambda_q);
  j["lambda_a"] = detail::to_array(g.lambda_a);
  j["qdot_min"] = detail::to_array(g.qdot_min);
  j["qdot_max"] = detail::to_array(g.qdot_max);
  os << std::setw(2) << j << '\n';
}

TaskVector canonicalize(const TaskVector& candidate, const TaskVector& reference) {
  if (candidate.mode != reference.mode) {
    throw std::invalid_argument("task vectors have different modes");
  }
  double d = 0.0;
  if (candidate.mode == TaskMode::Pose) {
    d = dot(candidate.value.primary, reference.value.primary);
  } else {
    d = line_direction(candidate.value).dot(line_direction(reference.value));
  }
  return d < 0.0 ? TaskVector{candidate.mode, -candidate.value} : candidate;
}

Vec8 make_task_error(const TaskVector& x_hat, const TaskVector& x_d) {
  return x_hat.coeffs() - canonicalize(x_d, x_hat).coeffs();
}

namespace {

std::uint32_t status_flags(QpStatus s, std::uint32_t infeasible, std::uint32_t max_iter) {
  switch (s) {
    case QpStatus::Optimal:
      return 0;
    case QpStatus::Infeasible:
      return infeasible;
    case QpStatus::MaxIterations:
      return max_iter;
  }
  return infeasible;
}

double min_keep_outside(const Scene& scene, const ConstraintSet& cs) {
  double out = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < scene.pairs().size(); ++i) {
    if (scene.pairs()[i].direction == VfiDirection::KeepOutside) {
      out = std::min(out, cs.distances[i]);
    }
  }
  return out;
}

}  // namespace

TaskStep task_control_step(const KinematicModel& model, const ChainState& s_hat, const TaskVector& x_d,
                           const Scene& scene, const ControllerGains& gains, QpSolver& solver) {
  TaskStep out;
  const TaskVector x_hat = model.task(s_hat, x_d.mode);
  out.error = make_task_error(x_hat, x_d);
  const PoseJacobian J = model.task_jacobian(s_hat, x_d.mode);
  out.smallest_sv = smallest_singular_value(J);

  const ConstraintSet vfi = build_constraint_stack(scene, gains.eta_vfi_q, s_hat, Wrt::Joints);
  out.min_distance = min_keep_outside(scene, vfi);
  if (vfi.undefined_gradients > 0) out.flags |= flag::kGradientUndefined;

  const Eigen::Index s = vfi.rows();
  MatrixXd A(s + 2 * kJointCount, kJointCount);
  VectorXd b(s + 2 * kJointCount);
  A.topRows(s) = vfi.B;
  b.head(s) = vfi.b;
  A.block(s, 0, kJointCount, kJointCount) = -MatrixXd::Identity(kJointCount, kJointCount);
  b.segment(s, kJointCount) = -gains.qdot_min;
  A.bottomRows(kJointCount) = MatrixXd::Identity(kJointCount, kJointCount);
  b.tail(kJointCount) = gains.qdot_max;

  out.problem = assemble(J, gains.eta_q, out.error, gains.lambda_q.asDiagonal().toDenseMatrix(), A, b);
  const QpSolution sol = solver.solve(out.problem);
  out.flags |= status_flags(sol.status, flag::kTaskInfeasible, flag::kTaskMaxIterations);
  out.active_constraints = static_cast<int>(sol.active_set.size());
  if (sol.optimal()) {
    out.u = sol.u;
  }
  return out;
}

Eigen::MatrixXd unmeasured_projector(const ParametricJacobian& J_task, MeasurementModel measurement) {
  if (measurement != MeasurementModel::PositionOnly) {
    return MatrixXd(0, kParamCount);
  }
  // Position-only: the primary part (orientation, or line direction) is unobserved.
  const MatrixXd rows = J_task.topRows(4);
  const Eigen::JacobiSVD<MatrixXd> svd(rows, Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  const double threshold = 1e-9 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > threshold) ++rank;
  return svd.matrixV().leftCols(rank).transpose();
}

AdaptStep adaptation_step(const KinematicModel& model, const ChainState& s_hat, const ParameterVector& a_hat,
                          TaskMode mode, const Vec8& x_err, const TaskVector& y, MeasurementModel measurement,
                          const Scene& scene, const ControllerGains& gains, QpSolver& solver) {
  AdaptStep out;
  VectorXd y_tilde;
  if (measurement == MeasurementModel::Full) {
    if (y.mode != mode) {
      throw std::invalid_argument("full measurement must be given in the task mode");
    }
    const TaskVector x_hat = model.task(s_hat, mode);
    y_tilde = x_hat.coeffs() - canonicalize(y, x_hat).coeffs();
  } else if (measurement == MeasurementModel::Pose) {
    if (y.mode != TaskMode::Pose) {
      throw std::invalid_argument("pose measurement must be given as a pose");
    }
    const TaskVector x_hat = model.task(s_hat, TaskMode::Pose);
    y_tilde = x_hat.coeffs() - canonicalize(y, x_hat).coeffs();
  } else {
    // only the effector position is observed, whatever the task mode
    if (y.mode != TaskMode::Pose) {
      throw std::invalid_argument("position-only measurement must be given as a pose");
    }
    y_tilde = VectorXd::Zero(4);
    y_tilde.tail<3>() = s_hat.effector().translation() - y.value.translation();
  }
  out.estimation_error_norm = y_tilde.norm();

  const MatrixXd J_y = model.measurement_jacobian(s_hat, mode, measurement);
  const ParametricJacobian J_x = model.parametric_jacobian(s_hat, mode);

  const ConstraintSet vfi = build_constraint_stack(scene, gains.eta_vfi_a, s_hat, Wrt::Parameters);
  if (vfi.undefined_gradients > 0) out.flags |= flag::kGradientUndefined;

  const Eigen::Index s = vfi.rows();
  const Eigen::Index rows = s + 2 * kParamCount + 1;
  MatrixXd A(rows, kParamCount);
  VectorXd b(rows);
  A.topRows(s) = vfi.B;
  b.head(s) = vfi.b;
  const ParameterBounds& bounds = model.bounds();
  A.block(s, 0, kParamCount, kParamCount) = MatrixXd::Identity(kParamCount, kParamCount);
  b.segment(s, kParamCount) = gains.eta_vfi_a * (bounds.upper - a_hat);
  A.block(s + kParamCount, 0, kParamCount, kParamCount) = -MatrixXd::Identity(kParamCount, kParamCount);
  b.segment(s + kParamCount, kParamCount) = gains.eta_vfi_a * (a_hat - bounds.lower);
  const Eigen::RowVectorXd decrease = x_err.transpose() * J_x;
  A.row(rows - 1) = decrease;
  b(rows - 1) = 0.0;

  const MatrixXd N = unmeasured_projector(J_x, measurement);
  out.problem = assemble(J_y, gains.eta_a, y_tilde, gains.lambda_a.asDiagonal().toDenseMatrix(), A, b, N,
                         VectorXd::Zero(N.rows()));
  const QpSolution sol = solver.solve(out.problem);
  out.flags |= status_flags(sol.status, flag::kAdaptInfeasible, flag::kAdaptMaxIterations);
  if (sol.optimal()) {
    out.u = sol.u;
    // The solver stops once the summed violation of the inactive rows is
    // below a roundoff bound that can reach 1e-8 here. Put u back on the
    // decrease half-space, moving inside the null space of N.
    const double excess = decrease.dot(out.u);
    if (excess > 0.0) {
      VectorXd dir = decrease.transpose();
      if (N.rows() > 0) dir -= N.transpose() * (N * dir);
      const double dd = decrease.dot(dir);
      if (dd > 0.0) out.u -= (excess / dd) * dir;
    }
  }
  out.error_decrease = decrease.dot(out.u);
  return out;
}

AdaptiveController::AdaptiveController(KinematicModel model, Scene scene, ControllerGains gains, TaskMode mode,
                                       ParameterVector a0, MeasurementModel measurement)
    : model_(std::move(model)),
      scene_(std::move(scene)),
      gains_(std::move(gains)),
      mode_(mode),
      a_hat_(std::move(a0)),
      measurement_(measurement) {
  gains_.validate();
  if (!model_.bounds().contains(a_hat_, 1e-12)) {
    throw std::invalid_argument("initial parameter estimate lies outside the bounds");
  }
}

TaskVector AdaptiveController::estimated_task(const JointVector& q) const {
  return model_.task(q, a_hat_, mode_);
}

ControlCycleOutput AdaptiveController::step(const JointVector& q, const TaskVector& x_d, const TaskVector& y,
                                            double dt, bool move) {
  if (x_d.mode != mode_) {
    throw std::invalid_argument("desired task vector does not match the controller mode");
  }
  ControlCycleOutput out;
  const ChainState s_hat = model_.evaluate(q, a_hat_);

  TaskStep task = task_control_step(model_, s_hat, x_d, scene_, gains_, task_solver_);
  out.task_error_norm = task.error.norm();
  out.smallest_sv = task.smallest_sv;
  out.min_distance = task.min_distance;
  if (move) {
    out.u_q = task.u;
    out.active_constraints = task.active_constraints;
    out.flags |= task.flags;
  } else {
    out.flags |= task.flags & flag::kGradientUndefined;
  }

  // y is a measured effector pose; full measurement compares in task space
  TaskVector y_in = y;
  if (measurement_ == MeasurementModel::Full && mode_ == TaskMode::Line) {
    y_in = {TaskMode::Line, model_.beam_line(y.value)};
  }
  AdaptStep adapt = adaptation_step(model_, s_hat, a_hat_, mode_, task.error, y_in, measurement_,
                                          adaptation_scene(), gains_, adapt_solver_);
  out.u_a = adapt.u;
  out.estimation_error_norm = adapt.estimation_error_norm;
  out.error_decrease = adapt.error_decrease;
  out.flags |= adapt.flags;
  last_task_problem_ = std::move(task.problem);
  last_adapt_problem_ = std::move(adapt.problem);

  a_hat_ += out.u_a * dt;
  return out;
}

ParameterVector run_warmup(AdaptiveController& controller, const JointVector& q,
                           const std::function<TaskVector()>& measure, double duration, double rate,
                           const std::function<void(const ControlCycleOutput&)>& on_cycle) {
  if (!(duration >= 0.0) || !(rate > 0.0)) {
    throw std::invalid_argument("warm-up needs a non-negative duration and a positive rate");
  }
  const auto cycles = static_cast<long>(std::llround(duration * rate));
  const double dt = 1.0 / rate;
  for (long k = 0; k < cycles; ++k) {
    const ControlCycleOutput out = controller.step(q, controller.estimated_task(q), measure(), dt, false);
    if (on_cycle) on_cycle(out);
  }
  return controller.estimate();
}

}  // namespace dqadapt
