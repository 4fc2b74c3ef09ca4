#include <random>

#include <gtest/gtest.h>

#include "dqadapt/kinematics.hpp"
#include "dqadapt/robot.hpp"
#include "oracles.hpp"

using namespace dqadapt;

namespace {

const RobotDescription robot = default_robot();
const KinematicModel model = robot.model();

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

Eigen::VectorXd as_dynamic(const Vec8& v) { return v; }

}  // namespace

TEST(Kinematics, ZeroChainIsIdentity) {
  const KinematicModel zero(ParameterVector::Zero(), ParameterBounds::around(ParameterVector::Zero(), 1, 1));
  const Vec8 x = vec8(zero.fk(JointVector::Zero(), ParameterVector::Zero()));
  EXPECT_EQ(x, vec8(DualQuaternion::identity()));
}

TEST(Kinematics, FirstJointQuarterTurnMapsXOntoY) {
  const KinematicModel zero(ParameterVector::Zero(), ParameterBounds::around(ParameterVector::Zero(), 1, 1));
  JointVector q = JointVector::Zero();
  q(0) = M_PI / 2;
  const DualQuaternion x = zero.fk(q, ParameterVector::Zero());
  EXPECT_LE((x.primary.rotate(Vec3::UnitX()) - Vec3::UnitY()).norm(), 1e-12);
}

TEST(Kinematics, MatchesMatrixChainAtNominal) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 50; ++k) {
    const JointVector q = k == 0 ? JointVector::Zero() : oracle::random_joints(rng, robot);
    const ParameterVector a = k < 2 ? robot.nominal : oracle::random_parameters(rng, robot.bounds);
    const Eigen::Matrix4d T = oracle::matrix_fk(q, a);
    const DualQuaternion x = model.fk(q, a);
    EXPECT_TRUE(x.is_unit(1e-9));
    EXPECT_LE((x.translation() - T.block<3, 1>(0, 3)).norm(), 1e-9);
    EXPECT_LE((x.primary.to_rotation_matrix() - T.block<3, 3>(0, 0)).norm(), 1e-9);
  }
}

TEST(Kinematics, FramesMatchPartialChains) {
  std::mt19937_64 rng(3);
  const JointVector q = oracle::random_joints(rng, robot);
  const ChainState s = model.evaluate(q, robot.nominal);
  // frame 6 is the flange: everything except the effector offset
  const Eigen::Matrix4d flange =
      oracle::matrix_fk(q, robot.nominal) *
      oracle::offset_matrix(robot.nominal.data() + 30).inverse();
  EXPECT_LE((s.frames[6].translation() - flange.block<3, 1>(0, 3)).norm(), 1e-12);
  EXPECT_LE((s.frames[0].translation()).norm(), 1e-15);
}

TEST(Kinematics, PoseJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  EXPECT_EQ(max_abs(model.pose_jacobian(robot.q_home, robot.nominal) * JointVector::Zero()), 0.0);
  for (int k = 0; k < 100; ++k) {
    const JointVector q = oracle::random_joints(rng, robot);
    const ParameterVector a = oracle::random_parameters(rng, robot.bounds);
    const auto f = [&](const Eigen::VectorXd& qq) { return as_dynamic(vec8(model.fk(qq, a))); };
    EXPECT_LE(max_abs(model.pose_jacobian(q, a) - oracle::central_difference(f, q)), 1e-5);
  }
}

TEST(Kinematics, LineJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 100; ++k) {
    const JointVector q = oracle::random_joints(rng, robot);
    const ParameterVector a = oracle::random_parameters(rng, robot.bounds);
    const auto f = [&](const Eigen::VectorXd& qq) {
      return as_dynamic(model.task(qq, a, TaskMode::Line).coeffs());
    };
    EXPECT_LE(max_abs(model.line_jacobian(q, a) - oracle::central_difference(f, q)), 1e-5);
  }
}

TEST(Kinematics, ParametricJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (TaskMode mode : {TaskMode::Pose, TaskMode::Line}) {
    for (int k = 0; k < 50; ++k) {
      const JointVector q = oracle::random_joints(rng, robot);
      const ParameterVector a = oracle::random_parameters(rng, robot.bounds);
      const auto f = [&](const Eigen::VectorXd& aa) {
        return as_dynamic(model.task(q, aa, mode).coeffs());
      };
      EXPECT_LE(max_abs(model.parametric_jacobian(q, a, mode) - oracle::central_difference(f, a)), 1e-5);
    }
  }
}

TEST(Kinematics, PoseJacobianRank) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(model.pose_jacobian(robot.q_home, robot.nominal));
  EXPECT_EQ(svd.rank(), 6);
}

TEST(Kinematics, LineTaskHasFourDegreesOfFreedom) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(model.line_jacobian(robot.q_home, robot.nominal));
  svd.setThreshold(1e-8);
  EXPECT_EQ(svd.rank(), 4);
  // sliding along and rolling about the beam leave the line unchanged
  const DualQuaternion x = model.fk(robot.q_home, robot.nominal);
  const Vec3 axis = model.beam_axis();
  const DualQuaternion slid = x * DualQuaternion::from_translation(0.07 * axis);
  const DualQuaternion rolled =
      x * DualQuaternion::from_rotation(Quaternion::from_axis_angle(axis, 0.8));
  EXPECT_LE((vec8(model.beam_line(slid)) - vec8(model.beam_line(x))).norm(), 1e-12);
  EXPECT_LE((vec8(model.beam_line(rolled)) - vec8(model.beam_line(x))).norm(), 1e-12);
}

TEST(Kinematics, BaseTranslationHasUnitSensitivity) {
  const double delta = 1e-3;
  ParameterVector a = robot.nominal;
  const Vec3 t0 = model.fk(robot.q_home, a).translation();
  a(param::base(0)) += delta;
  const Vec3 t1 = model.fk(robot.q_home, a).translation();
  EXPECT_LE((t1 - t0 - Vec3(delta, 0, 0)).norm(), 1e-14);
  // the analytic column agrees: the translation rate of the column is x-hat
  const Eigen::MatrixXd Jm = model.measurement_jacobian(robot.q_home, robot.nominal, TaskMode::Pose,
                                                        MeasurementModel::PositionOnly);
  EXPECT_LE((Jm.col(param::base(0)).tail<3>() - Vec3::UnitX()).norm(), 1e-14);
}

TEST(Kinematics, RollAboutBeamDoesNotMoveLine) {
  const ParametricJacobian J = model.parametric_jacobian(robot.q_home, robot.nominal, TaskMode::Line);
  EXPECT_LE(J.col(param::effector(5)).norm(), 1e-12);
  ParameterVector a = robot.nominal;
  const Vec8 before = model.task(robot.q_home, a, TaskMode::Line).coeffs();
  a(param::effector(5)) += 0.1;
  EXPECT_LE((model.task(robot.q_home, a, TaskMode::Line).coeffs() - before).norm(), 1e-9);
}

TEST(Kinematics, AxialBeamReleasesLastJoint) {
  // torch mounted along the flange axis: the last joint only rolls the beam
  ParameterVector a = robot.nominal;
  a.segment<6>(param::effector(0)).setZero();
  a(param::effector(2)) = 0.1;
  const PoseJacobian J = model.line_jacobian(robot.q_home, a, Vec3::UnitZ());
  EXPECT_LE(J.col(5).norm(), 1e-12);
  EXPECT_GT(J.col(4).norm(), 1e-3);
}

TEST(Kinematics, MeasurementJacobian) {
  std::mt19937_64 rng(9);
  const JointVector q = oracle::random_joints(rng, robot);
  const ParameterVector a = oracle::random_parameters(rng, robot.bounds);
  for (TaskMode mode : {TaskMode::Pose, TaskMode::Line}) {
    EXPECT_EQ(model.measurement_jacobian(q, a, mode, MeasurementModel::Full),
              Eigen::MatrixXd(model.parametric_jacobian(q, a, mode)));
    // a pose measurement sees the pose whatever the task mode
    EXPECT_EQ(model.measurement_jacobian(q, a, mode, MeasurementModel::Pose),
              Eigen::MatrixXd(model.parametric_jacobian(q, a, TaskMode::Pose)));
    EXPECT_EQ(model.measurement_vector(model.evaluate(q, a), mode, MeasurementModel::Pose),
              Eigen::VectorXd(vec8(model.fk(q, a))));
  }
  for (int k = 0; k < 20; ++k) {
    const JointVector qq = oracle::random_joints(rng, robot);
    const ParameterVector aa = oracle::random_parameters(rng, robot.bounds);
    const auto f = [&](const Eigen::VectorXd& p) {
      return model.measurement_vector(model.evaluate(qq, p), TaskMode::Pose, MeasurementModel::PositionOnly);
    };
    const Eigen::MatrixXd J =
        model.measurement_jacobian(qq, aa, TaskMode::Pose, MeasurementModel::PositionOnly);
    EXPECT_EQ(J.rows(), 4);
    EXPECT_LE(max_abs(J - oracle::central_difference(f, aa)), 1e-5);
    EXPECT_EQ(max_abs(J * ParameterVector::Zero()), 0.0);
  }
}

TEST(SmallestSingularValue, Definition) {
  EXPECT_DOUBLE_EQ(smallest_singular_value(Eigen::MatrixXd::Identity(6, 6)), 1.0);
  Eigen::VectorXd d(6);
  d << 3, 2, 1, 0, 0, 0;
  EXPECT_DOUBLE_EQ(smallest_singular_value(d.asDiagonal().toDenseMatrix()), 1.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int k = 0; k < 50; ++k) {
    Eigen::MatrixXd J(8, 6);
    for (Eigen::Index i = 0; i < J.size(); ++i) J(i) = n(rng);
    // oracle: square roots of the eigenvalues of J'J
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J.transpose() * J);
    EXPECT_NEAR(smallest_singular_value(J), std::sqrt(es.eigenvalues().minCoeff()), 1e-9);
  }
}

TEST(Parameters, LayoutAndBounds) {
  EXPECT_EQ(param::dh(2, DhField::A), 10);
  EXPECT_TRUE(param::is_length(param::dh(0, DhField::D)));
  EXPECT_FALSE(param::is_length(param::dh(0, DhField::Alpha)));
  EXPECT_TRUE(param::is_length(param::base(2)));
  EXPECT_FALSE(param::is_length(param::effector(3)));
  EXPECT_TRUE(robot.bounds.contains(robot.nominal));
  EXPECT_NEAR(robot.bounds.upper(param::base(0)) - robot.nominal(param::base(0)), 0.05, 1e-15);
  EXPECT_NEAR(robot.bounds.upper(param::base(4)) - robot.nominal(param::base(4)), 0.15, 1e-15);
}
