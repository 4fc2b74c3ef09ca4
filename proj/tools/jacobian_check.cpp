#include "jacobian_check.hpp"

#include <functional>
#include <random>

namespace dqadapt::tools {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd central_difference(const std::function<VectorXd(const VectorXd&)>& f, const VectorXd& x, double h) {
  const VectorXd f0 = f(x);
  MatrixXd J(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    J.col(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

double max_abs(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

std::vector<JacobianFamilyResult> check_jacobians(const RobotDescription& robot, const Scene& scene, int samples,
                                                  std::uint64_t seed, double step) {
  const KinematicModel model = robot.model();
  std::mt19937_64 rng(seed);
  std::vector<JacobianFamilyResult> out = {
      {"pose (q)", 0, 0.0},          {"line (q)", 0, 0.0},
      {"parametric pose (a)", 0, 0.0}, {"parametric line (a)", 0, 0.0},
      {"measurement position (a)", 0, 0.0}, {"distance (q)", 0, 0.0},
      {"distance (a)", 0, 0.0},
  };
  auto record = [&](size_t k, double err) {
    out[k].samples++;
    out[k].max_abs_error = std::max(out[k].max_abs_error, err);
  };

  for (int n = 0; n < samples; ++n) {
    JointVector q;
    ParameterVector a;
    for (int i = 0; i < kJointCount; ++i) {
      q(i) = std::uniform_real_distribution<double>(robot.q_lower(i), robot.q_upper(i))(rng);
    }
    for (int i = 0; i < kParamCount; ++i) {
      a(i) = std::uniform_real_distribution<double>(robot.bounds.lower(i), robot.bounds.upper(i))(rng);
    }
    const ChainState s = model.evaluate(q, a);

    const auto task_of_q = [&](TaskMode mode) {
      return [&, mode](const VectorXd& qq) -> VectorXd { return model.task(qq, a, mode).coeffs(); };
    };
    const auto task_of_a = [&](TaskMode mode) {
      return [&, mode](const VectorXd& aa) -> VectorXd { return model.task(q, aa, mode).coeffs(); };
    };
    record(0, max_abs(model.task_jacobian(s, TaskMode::Pose) - central_difference(task_of_q(TaskMode::Pose), q, step)));
    record(1, max_abs(model.task_jacobian(s, TaskMode::Line) - central_difference(task_of_q(TaskMode::Line), q, step)));
    record(2, max_abs(model.parametric_jacobian(s, TaskMode::Pose) -
                      central_difference(task_of_a(TaskMode::Pose), a, step)));
    record(3, max_abs(model.parametric_jacobian(s, TaskMode::Line) -
                      central_difference(task_of_a(TaskMode::Line), a, step)));
    const auto position = [&](const VectorXd& aa) -> VectorXd {
      return model.measurement_vector(model.evaluate(q, aa), TaskMode::Pose, MeasurementModel::PositionOnly);
    };
    record(4, max_abs(model.measurement_jacobian(s, TaskMode::Pose, MeasurementModel::PositionOnly) -
                      central_difference(position, a, step)));

    for (const auto& pair : scene.pairs()) {
      const DistanceEval e = evaluate_pair(scene, pair, s);
      if (e.gradient_undefined) continue;
      const auto dq = [&](const VectorXd& qq) -> VectorXd {
        return VectorXd::Constant(1, pair_distance(scene, pair, model.evaluate(qq, a)));
      };
      const auto da = [&](const VectorXd& aa) -> VectorXd {
        return VectorXd::Constant(1, pair_distance(scene, pair, model.evaluate(q, aa)));
      };
      record(5, max_abs(MatrixXd(e.grad_q) - central_difference(dq, q, step)));
      record(6, max_abs(MatrixXd(e.grad_a) - central_difference(da, a, step)));
    }
  }
  return out;
}

}  // namespace dqadapt::tools
