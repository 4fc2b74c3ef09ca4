#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dqadapt/qp.hpp"
#include "oracles.hpp"

using namespace dqadapt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(QpAssemble, TableGainsExample) {
  const MatrixXd J = MatrixXd::Identity(6, 6);
  VectorXd e = VectorXd::Zero(6);
  e(2) = 1.0;
  const QpProblem p = assemble(J, 50.0, e, 0.02 * MatrixXd::Identity(6, 6), MatrixXd(0, 6), VectorXd(0));
  EXPECT_LE((p.H - 1.0004 * MatrixXd::Identity(6, 6)).norm(), 1e-15);
  EXPECT_LE((p.f - 50.0 * e).norm(), 1e-15);
}

TEST(QpAssemble, ZeroErrorGivesZeroInput) {
  const QpProblem p = assemble(MatrixXd::Identity(8, 6), 50.0, VectorXd::Zero(8),
                               0.02 * MatrixXd::Identity(6, 6), MatrixXd(0, 6), VectorXd(0));
  const QpSolution s = solve(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_EQ(s.u.norm(), 0.0);
}

TEST(QpAssemble, RandomHessianIsPositiveDefinite) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int k = 0; k < 50; ++k) {
    MatrixXd J(8, 36);
    for (Eigen::Index i = 0; i < J.size(); ++i) J(i) = g(rng);
    VectorXd e(8);
    for (int i = 0; i < 8; ++i) e(i) = g(rng);
    const QpProblem p = assemble(J, 5.0, e, 0.02 * MatrixXd::Identity(36, 36), MatrixXd(0, 36), VectorXd(0));
    EXPECT_EQ(Eigen::LLT<MatrixXd>(p.H).info(), Eigen::Success);
    EXPECT_LE((p.H - p.H.transpose()).norm(), 1e-10);
  }
}

TEST(QpAssemble, RejectsBadInputs) {
  const MatrixXd J = MatrixXd::Identity(6, 6);
  MatrixXd L = 0.02 * MatrixXd::Identity(6, 6);
  L(0, 1) = 0.01;
  EXPECT_THROW(assemble(J, 1.0, VectorXd::Zero(6), L, MatrixXd(0, 6), VectorXd(0)), std::invalid_argument);
  EXPECT_THROW(assemble(J, 1.0, VectorXd::Zero(6), MatrixXd::Zero(6, 6), MatrixXd(0, 6), VectorXd(0)),
               std::invalid_argument);
  EXPECT_THROW(assemble(J, 1.0, VectorXd::Zero(5), 0.02 * MatrixXd::Identity(6, 6), MatrixXd(0, 6),
                        VectorXd(0)),
               std::invalid_argument);
  EXPECT_THROW(assemble(J, 1.0, VectorXd::Zero(6), 0.02 * MatrixXd::Identity(6, 6), MatrixXd::Ones(2, 6),
                        VectorXd::Ones(3)),
               std::invalid_argument);
}

TEST(QpSolve, Unconstrained) {
  QpProblem p;
  p.H = MatrixXd::Identity(4, 4);
  const VectorXd c = (VectorXd(4) << 1, -2, 3, 0.5).finished();
  p.f = -c;
  const QpSolution s = solve(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_LE((s.u - c).norm(), 1e-15);
  EXPECT_TRUE(s.active_set.empty());
}

TEST(QpSolve, Projection) {
  QpProblem p;
  p.H = MatrixXd::Identity(3, 3);
  p.f = VectorXd::Zero(3);
  p.A_ineq = (MatrixXd(1, 3) << 1, 0, 0).finished();
  p.b_ineq = VectorXd::Constant(1, -1.0);
  const QpSolution s = solve(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_LE((s.u - VectorXd::Unit(3, 0) * -1.0).norm(), 1e-15);
  ASSERT_EQ(s.active_set.size(), 1u);
  EXPECT_NEAR(s.ineq_multipliers(0), 1.0, 1e-15);
}

TEST(QpSolve, MatchesEnumerationOracle) {
  std::mt19937_64 rng(2024);
  int nontrivial = 0;
  for (int k = 0; k < 200; ++k) {
    const QpProblem p = oracle::random_qp(rng);
    const oracle::EnumeratedQp ref = oracle::enumerate_qp(p);
    ASSERT_TRUE(ref.feasible);
    const QpSolution s = solve(p);
    ASSERT_TRUE(s.optimal()) << "problem " << k;
    EXPECT_NEAR(s.objective, ref.objective, 1e-6) << "problem " << k;
    EXPECT_LE(s.kkt_residual, 1e-8);
    EXPECT_EQ(static_cast<int>(s.active_set.size()), ref.active_size);
    if (ref.active_size > 1) ++nontrivial;
  }
  EXPECT_GT(nontrivial, 50);
}

TEST(QpSolve, ObjectiveTraceIsMonotone) {
  std::mt19937_64 rng(77);
  QpSolver solver({1e-8, 200, true});
  for (int k = 0; k < 100; ++k) {
    const QpSolution s = solver.solve(oracle::random_qp(rng));
    ASSERT_TRUE(s.optimal());
    for (size_t i = 1; i < s.objective_trace.size(); ++i) {
      EXPECT_GE(s.objective_trace[i], s.objective_trace[i - 1] - 1e-12);
    }
    EXPECT_NEAR(s.objective_trace.back(), s.objective, 1e-9 * std::max(1.0, std::abs(s.objective)));
  }
}

TEST(QpSolve, Infeasible) {
  QpProblem p;
  p.H = MatrixXd::Identity(2, 2);
  p.f = VectorXd::Zero(2);
  p.A_ineq = (MatrixXd(2, 2) << 1, 0, -1, 0).finished();
  p.b_ineq = (VectorXd(2) << -1, -1).finished();
  EXPECT_EQ(solve(p).status, QpStatus::Infeasible);

  QpProblem q;
  q.H = MatrixXd::Identity(2, 2);
  q.f = VectorXd::Zero(2);
  q.A_eq = (MatrixXd(2, 2) << 1, 1, 2, 2).finished();
  q.b_eq = (VectorXd(2) << 1, 3).finished();
  EXPECT_EQ(solve(q).status, QpStatus::Infeasible);
}

TEST(QpSolve, DependentConsistentEqualities) {
  QpProblem q;
  q.H = MatrixXd::Identity(3, 3);
  q.f = VectorXd::Zero(3);
  q.A_eq = (MatrixXd(2, 3) << 1, 1, 0, 2, 2, 0).finished();
  q.b_eq = (VectorXd(2) << 1, 2).finished();
  const QpSolution s = solve(q);
  ASSERT_TRUE(s.optimal());
  EXPECT_LE((s.u - VectorXd((VectorXd(3) << 0.5, 0.5, 0).finished())).norm(), 1e-14);
  EXPECT_LE(s.kkt_residual, 1e-12);
}

TEST(QpSolve, MaxIterationsIsFlagged) {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 50; ++k) {
    const QpProblem p = oracle::random_qp(rng);
    const QpSolution full = solve(p);
    if (full.active_set.size() < 3) continue;
    const QpSolution cut = solve(p, 1e-8, 2);
    EXPECT_EQ(cut.status, QpStatus::MaxIterations);
    EXPECT_EQ(cut.u.size(), p.variables());
    return;
  }
  FAIL() << "no problem with a large enough active set";
}

TEST(QpSolve, RejectsIndefiniteHessian) {
  QpProblem p;
  p.H = (MatrixXd(2, 2) << 1, 0, 0, -1).finished();
  p.f = VectorXd::Zero(2);
  EXPECT_THROW(solve(p), std::invalid_argument);
}

TEST(QpSolve, Deterministic) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const QpProblem p = oracle::random_qp(rng);
    const QpSolution a = solve(p), b = solve(p);
    EXPECT_EQ(a.u, b.u);
    EXPECT_EQ(a.iterations, b.iterations);
  }
}

TEST(QpDump, RoundTrip) {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 20; ++k) {
    const QpProblem p = oracle::random_qp(rng);
    std::stringstream ss;
    write_qp_dump(ss, p);
    const QpProblem r = read_qp_dump(ss);
    EXPECT_EQ(r.H, p.H);
    EXPECT_EQ(r.f, p.f);
    EXPECT_EQ(r.A_ineq, p.A_ineq);
    EXPECT_EQ(r.b_ineq, p.b_ineq);
    EXPECT_EQ(r.A_eq, p.A_eq);
    EXPECT_EQ(r.b_eq, p.b_eq);
  }
}

TEST(QpDump, CommentsAndErrors) {
  std::istringstream ok("# two variables\nH 2 2\n1 0\n0 1  # identity\nf 2\n-1 -1\n");
  const QpProblem p = read_qp_dump(ok);
  EXPECT_EQ(p.A_ineq.rows(), 0);
  EXPECT_LE((solve(p).u - VectorXd::Ones(2)).norm(), 1e-15);
  std::istringstream bad("H 2 2\n1 0 0\n");
  EXPECT_THROW(read_qp_dump(bad), std::runtime_error);
  std::istringstream unknown("H 1 1\n1\nG 1\n");
  EXPECT_THROW(read_qp_dump(unknown), std::runtime_error);
}
