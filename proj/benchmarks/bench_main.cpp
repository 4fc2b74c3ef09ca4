#include <random>

#include <benchmark/benchmark.h>

#include "dqadapt/sim.hpp"

using namespace dqadapt;

namespace {

const RobotDescription robot = default_robot();
const KinematicModel model = robot.model();
const ScenarioConfig scenario = default_scenario();
const Scene scene = build_scene(scenario.scene, scenario.scene.face);

JointVector sample_q(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  JointVector q = robot.q_home;
  for (int i = 0; i < kJointCount; ++i) q(i) += u(rng);
  return q;
}

void BM_ChainEvaluate(benchmark::State& st) {
  std::mt19937_64 rng(1);
  const JointVector q = sample_q(rng);
  for (auto _ : st) benchmark::DoNotOptimize(model.evaluate(q, robot.nominal));
}
BENCHMARK(BM_ChainEvaluate);

void BM_TaskJacobian(benchmark::State& st) {
  const auto mode = static_cast<TaskMode>(st.range(0));
  const ChainState s = model.evaluate(robot.q_home, robot.nominal);
  for (auto _ : st) benchmark::DoNotOptimize(model.task_jacobian(s, mode));
}
BENCHMARK(BM_TaskJacobian)->Arg(0)->Arg(1);

void BM_ParametricJacobian(benchmark::State& st) {
  const auto mode = static_cast<TaskMode>(st.range(0));
  const ChainState s = model.evaluate(robot.q_home, robot.nominal);
  for (auto _ : st) benchmark::DoNotOptimize(model.parametric_jacobian(s, mode));
}
BENCHMARK(BM_ParametricJacobian)->Arg(0)->Arg(1);

void BM_ConstraintStack(benchmark::State& st) {
  const Wrt wrt = st.range(0) == 0 ? Wrt::Joints : Wrt::Parameters;
  const ChainState s = model.evaluate(robot.q_home, robot.nominal);
  for (auto _ : st) benchmark::DoNotOptimize(build_constraint_stack(scene, 5.0, s, wrt));
}
BENCHMARK(BM_ConstraintStack)->Arg(0)->Arg(1);

// One full cycle: both QPs plus the estimate update, at a tracking pose.
void BM_ControllerStep(benchmark::State& st) {
  const auto mode = static_cast<TaskMode>(st.range(0));
  AdaptiveController ctrl(model, scene, scenario.gains, mode, robot.nominal, MeasurementModel::Pose);
  const JointVector q = robot.q_home;
  const TaskVector x_hat = model.task(q, robot.nominal, mode);
  TaskVector x_d = x_hat;
  x_d.value = x_d.value * DualQuaternion::from_translation(Vec3(0.0, 0.002, 0.0));
  if (mode == TaskMode::Line) x_d = {TaskMode::Line, model.beam_line(model.fk(q, robot.nominal))};
  const TaskVector y{TaskMode::Pose, model.fk(q, robot.nominal) * DualQuaternion::from_translation(Vec3(1e-3, 0, 0))};
  for (auto _ : st) {
    ctrl.set_estimate(robot.nominal);
    benchmark::DoNotOptimize(ctrl.step(q, x_d, y, 0.01));
  }
}
BENCHMARK(BM_ControllerStep)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_TaskQpSolve(benchmark::State& st) {
  AdaptiveController ctrl(model, scene, scenario.gains, TaskMode::Pose, robot.nominal);
  const JointVector q = robot.q_home;
  const TaskVector x_d{TaskMode::Pose,
                       model.fk(q, robot.nominal) * DualQuaternion::from_translation(Vec3(0.0, 0.01, 0.0))};
  ctrl.step(q, x_d, {TaskMode::Pose, model.fk(q, robot.nominal)}, 0.01);
  const QpProblem task = ctrl.last_task_problem();
  const QpProblem adapt = ctrl.last_adaptation_problem();
  const QpProblem& p = st.range(0) == 0 ? task : adapt;
  QpSolver solver;
  for (auto _ : st) benchmark::DoNotOptimize(solver.solve(p));
  st.SetLabel(st.range(0) == 0 ? "task" : "adaptation");
}
BENCHMARK(BM_TaskQpSolve)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
