#pragma once

// Dense strictly convex quadratic programs
//
//   minimize    1/2 u' H u + f' u
//   subject to  A_ineq u <= b_ineq
//               A_eq   u == b_eq
//
// solved with the Goldfarb-Idnani dual active-set method. H must be positive
// definite; the controller guarantees this through its damping term.

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dqadapt {

struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd A_ineq;
  Eigen::VectorXd b_ineq;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;

  Eigen::Index variables() const { return H.rows(); }
  double objective(const Eigen::VectorXd& u) const { return 0.5 * u.dot(H * u) + f.dot(u); }
  /// Throws std::invalid_argument on inconsistent block sizes.
  void check_dimensions() const;
};

enum class QpStatus { Optimal, Infeasible, MaxIterations };

const char* to_string(QpStatus s);

struct QpSolution {
  Eigen::VectorXd u;
  QpStatus status{QpStatus::Infeasible};
  /// Indices into the inequality block that are active at u.
  std::vector<int> active_set;
  int iterations{0};
  double kkt_residual{0.0};
  double objective{0.0};
  Eigen::VectorXd ineq_multipliers;
  Eigen::VectorXd eq_multipliers;
  /// Objective after every active-set change (non-decreasing for the dual method).
  std::vector<double> objective_trace;

  bool optimal() const { return status == QpStatus::Optimal; }
};

struct QpOptions {
  double tolerance{1e-8};
  int max_iterations{200};
  bool record_trace{false};
};

/// H = J'J + L'L and f = eta J'e; the rest of the blocks are copied.
/// Lambda must be diagonal with a positive diagonal.
QpProblem assemble(const Eigen::MatrixXd& J, double eta, const Eigen::VectorXd& e,
                   const Eigen::MatrixXd& Lambda, const Eigen::MatrixXd& A_ineq,
                   const Eigen::VectorXd& b_ineq, const Eigen::MatrixXd& A_eq = {},
                   const Eigen::VectorXd& b_eq = {});

/// Scaled KKT residual of (u, multipliers): stationarity, primal and dual
/// feasibility, and complementary slackness, each relative to the problem norms.
double kkt_residual(const QpProblem& p, const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                    const Eigen::VectorXd& nu);

class QpSolver {
 public:
  explicit QpSolver(QpOptions options = {}) : options_(options) {}

  QpSolution solve(const QpProblem& p);
  const QpOptions& options() const { return options_; }

 private:
  QpOptions options_;
};

QpSolution solve(const QpProblem& p, double tol = 1e-8, int max_iter = 200);

/// Plain-text dump: blocks "H n n", "f n", "A_ineq s n", "b_ineq s",
/// "A_eq t n", "b_eq t", each followed by its values; '#' starts a comment.
void write_qp_dump(std::ostream& os, const QpProblem& p);
QpProblem read_qp_dump(std::istream& is);

}  // namespace dqadapt
