#include "dqadapt/qp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dqadapt {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Working state of the Goldfarb-Idnani iteration. Constraints are handled in
// the form n_i' x + c_i >= 0 (inequalities) and n_i' x + c_i == 0 (equalities).
class DualActiveSet {
 public:
  DualActiveSet(const MatrixXd& G, const VectorXd& g0, const MatrixXd& CE, const VectorXd& ce0,
                const MatrixXd& CI, const VectorXd& ci0, const QpOptions& opt)
      : G_(G), g0_(g0), CE_(CE), ce0_(ce0), CI_(CI), ci0_(ci0), opt_(opt) {}

  QpStatus run(QpSolution& out);

  const VectorXd& x() const { return x_; }
  double objective() const { return fval_; }
  int active_count() const { return iq_; }
  /// Constraint id (-i-1 for equality i, i for inequality i) and multiplier.
  int active_id(int k) const { return A_[static_cast<size_t>(k)]; }
  double active_multiplier(int k) const { return u_(k); }

 private:
  bool add_constraint(VectorXd& d);
  void delete_constraint(int l);
  void step_vectors(const VectorXd& np, VectorXd& d, VectorXd& z, VectorXd& r) const;
  void record(QpSolution& out) const {
    if (opt_.record_trace) {
      out.objective_trace.push_back(fval_);
    }
  }

  const MatrixXd& G_;
  const VectorXd& g0_;
  const MatrixXd& CE_;
  const VectorXd& ce0_;
  const MatrixXd& CI_;
  const VectorXd& ci0_;
  const QpOptions& opt_;

  Index n_{0};
  MatrixXd J_;
  MatrixXd R_;
  VectorXd x_;
  VectorXd u_;
  std::vector<int> A_;  // active constraints: -i-1 for equalities, i for inequalities
  int iq_{0};
  double R_norm_{1.0};
  double fval_{0.0};
};

void DualActiveSet::step_vectors(const VectorXd& np, VectorXd& d, VectorXd& z,
                                 VectorXd& r) const {
  d = J_.transpose() * np;
  z = J_.rightCols(n_ - iq_) * d.tail(n_ - iq_);
  if (iq_ > 0) {
    r.head(iq_) = R_.topLeftCorner(iq_, iq_).triangularView<Eigen::Upper>().solve(d.head(iq_));
  }
}

bool DualActiveSet::add_constraint(VectorXd& d) {
  const double eps = std::numeric_limits<double>::epsilon();
  for (Index j = n_ - 1; j >= iq_ + 1; --j) {
    double cc = d(j - 1);
    double ss = d(j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) {
      continue;
    }
    d(j) = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      d(j - 1) = -h;
    } else {
      d(j - 1) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (Index k = 0; k < n_; ++k) {
      const double t1 = J_(k, j - 1);
      const double t2 = J_(k, j);
      J_(k, j - 1) = t1 * cc + t2 * ss;
      J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
    }
  }
  ++iq_;
  R_.col(iq_ - 1).head(iq_) = d.head(iq_);
  if (std::abs(d(iq_ - 1)) <= eps * R_norm_) {
    return false;
  }
  R_norm_ = std::max(R_norm_, std::abs(d(iq_ - 1)));
  return true;
}

void DualActiveSet::delete_constraint(int l) {
  const int p = static_cast<int>(CE_.cols());
  int qq = -1;
  for (int i = p; i < iq_; ++i) {
    if (A_[static_cast<size_t>(i)] == l) {
      qq = i;
      break;
    }
  }
  if (qq < 0) {
    return;
  }
  for (int i = qq; i < iq_ - 1; ++i) {
    A_[static_cast<size_t>(i)] = A_[static_cast<size_t>(i + 1)];
    u_(i) = u_(i + 1);
    R_.col(i) = R_.col(i + 1);
  }
  A_[static_cast<size_t>(iq_ - 1)] = A_[static_cast<size_t>(iq_)];
  u_(iq_ - 1) = u_(iq_);
  A_[static_cast<size_t>(iq_)] = 0;
  u_(iq_) = 0.0;
  for (int j = 0; j < iq_; ++j) {
    R_(j, iq_ - 1) = 0.0;
  }
  --iq_;
  if (iq_ == 0) {
    return;
  }
  for (int j = qq; j < iq_; ++j) {
    double cc = R_(j, j);
    double ss = R_(j + 1, j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) {
      continue;
    }
    cc /= h;
    ss /= h;
    R_(j + 1, j) = 0.0;
    if (cc < 0.0) {
      R_(j, j) = -h;
      cc = -cc;
      ss = -ss;
    } else {
      R_(j, j) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = j + 1; k < iq_; ++k) {
      const double t1 = R_(j, k);
      const double t2 = R_(j + 1, k);
      R_(j, k) = t1 * cc + t2 * ss;
      R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
    }
    for (Index k = 0; k < n_; ++k) {
      const double t1 = J_(k, j);
      const double t2 = J_(k, j + 1);
      J_(k, j) = t1 * cc + t2 * ss;
      J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
    }
  }
}

QpStatus DualActiveSet::run(QpSolution& out) {
  n_ = G_.rows();
  const auto p = static_cast<int>(CE_.cols());
  const auto m = static_cast<int>(CI_.cols());
  const double eps = std::numeric_limits<double>::epsilon();

  const Eigen::LLT<MatrixXd> chol(G_);
  if (chol.info() != Eigen::Success) {
    throw std::invalid_argument("QP Hessian is not positive definite");
  }
  J_ = MatrixXd::Identity(n_, n_);
  chol.matrixU().solveInPlace(J_);
  R_ = MatrixXd::Zero(n_, n_);
  const double c1 = G_.trace();
  const double c2 = J_.trace();

  x_ = -chol.solve(g0_);
  fval_ = 0.5 * g0_.dot(x_);
  u_ = VectorXd::Zero(p + m + 1);
  A_.assign(static_cast<size_t>(p + m + 1), 0);
  iq_ = 0;
  R_norm_ = 1.0;
  record(out);

  VectorXd d(n_), z(n_), r = VectorXd::Zero(p + m + 1), np(n_);

  for (int i = 0; i < p; ++i) {
    np = CE_.col(i);
    step_vectors(np, d, z, r);
    double t2 = 0.0;
    if (std::abs(z.dot(z)) > eps) {
      t2 = (-np.dot(x_) - ce0_(i)) / z.dot(np);
    }
    x_ += t2 * z;
    u_(iq_) = t2;
    u_.head(iq_) -= t2 * r.head(iq_);
    fval_ += 0.5 * t2 * t2 * z.dot(np);
    A_[static_cast<size_t>(i)] = -i - 1;
    if (!add_constraint(d)) {
      return QpStatus::Infeasible;
    }
    record(out);
  }

  std::vector<int> iai(static_cast<size_t>(m));
  std::vector<bool> iaexcl(static_cast<size_t>(m), true);
  for (int i = 0; i < m; ++i) {
    iai[static_cast<size_t>(i)] = i;
  }
  VectorXd s(m);
  VectorXd x_old(n_), u_old(p + m + 1);
  std::vector<int> A_old(static_cast<size_t>(p + m + 1));
  int ip = 0;
  int iterations = 0;

  while (true) {  // step 1: check feasibility of the current iterate
    if (++iterations > opt_.max_iterations) {
      out.iterations = iterations - 1;
      return QpStatus::MaxIterations;
    }
    for (int i = p; i < iq_; ++i) {
      iai[static_cast<size_t>(A_[static_cast<size_t>(i)])] = -1;
    }
    double psi = 0.0;
    for (int i = 0; i < m; ++i) {
      iaexcl[static_cast<size_t>(i)] = true;
      s(i) = CI_.col(i).dot(x_) + ci0_(i);
      psi += std::min(0.0, s(i));
    }
    if (std::abs(psi) <= m * eps * c1 * c2 * 100.0) {
      out.iterations = iterations;
      return QpStatus::Optimal;
    }
    u_old.head(iq_) = u_.head(iq_);
    std::copy(A_.begin(), A_.begin() + iq_, A_old.begin());
    x_old = x_;

    bool restart = false;
    while (!restart) {  // step 2: pick the most violated constraint
      double ss = 0.0;
      for (int i = 0; i < m; ++i) {
        if (s(i) < ss && iai[static_cast<size_t>(i)] != -1 && iaexcl[static_cast<size_t>(i)]) {
          ss = s(i);
          ip = i;
        }
      }
      if (ss >= 0.0) {
        out.iterations = iterations;
        return QpStatus::Optimal;
      }
      np = CI_.col(ip);
      u_(iq_) = 0.0;
      A_[static_cast<size_t>(iq_)] = ip;

      while (true) {  // step 2a: step direction and length
        if (++iterations > opt_.max_iterations) {
          out.iterations = iterations - 1;
          return QpStatus::MaxIterations;
        }
        step_vectors(np, d, z, r);
        int l = 0;
        double t1 = kInf;
        for (int k = p; k < iq_; ++k) {
          if (r(k) > 0.0 && u_(k) / r(k) < t1) {
            t1 = u_(k) / r(k);
            l = A_[static_cast<size_t>(k)];
          }
        }
        const double t2 = std::abs(z.dot(z)) > eps ? -s(ip) / z.dot(np) : kInf;
        const double t = std::min(t1, t2);
        if (t >= kInf) {
          return QpStatus::Infeasible;
        }
        if (t2 >= kInf) {
          // dual step only
          u_.head(iq_) -= t * r.head(iq_);
          u_(iq_) += t;
          iai[static_cast<size_t>(l)] = l;
          delete_constraint(l);
          record(out);
          continue;
        }
        x_ += t * z;
        fval_ += t * z.dot(np) * (0.5 * t + u_(iq_));
        u_.head(iq_) -= t * r.head(iq_);
        u_(iq_) += t;
        record(out);

        if (t == t2) {
          if (!add_constraint(d)) {
            // degenerate: drop the candidate and restore the previous state
            iaexcl[static_cast<size_t>(ip)] = false;
            delete_constraint(ip);
            for (int i = 0; i < m; ++i) {
              iai[static_cast<size_t>(i)] = i;
            }
            for (int i = p; i < iq_; ++i) {
              A_[static_cast<size_t>(i)] = A_old[static_cast<size_t>(i)];
              u_(i) = u_old(i);
              iai[static_cast<size_t>(A_[static_cast<size_t>(i)])] = -1;
            }
            x_ = x_old;
            break;  // back to step 2
          }
          iai[static_cast<size_t>(ip)] = -1;
          restart = true;
          break;  // back to step 1
        }
        // partial step: drop the blocking constraint and retry
        iai[static_cast<size_t>(l)] = l;
        delete_constraint(l);
        s(ip) = CI_.col(ip).dot(x_) + ci0_(ip);
      }
    }
    if (restart) {
      continue;
    }
  }
}

}  // namespace

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal:
      return "optimal";
    case QpStatus::Infeasible:
      return "infeasible";
    case QpStatus::MaxIterations:
      return "max_iterations";
  }
  return "infeasible";
}

void QpProblem::check_dimensions() const {
  const Index n = H.rows();
  if (H.cols() != n || f.size() != n) {
    throw std::invalid_argument("QP: H must be n x n and f length n");
  }
  if (A_ineq.rows() != b_ineq.size() || (A_ineq.rows() > 0 && A_ineq.cols() != n)) {
    throw std::invalid_argument("QP: inequality block has inconsistent dimensions");
  }
  if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != n)) {
    throw std::invalid_argument("QP: equality block has inconsistent dimensions");
  }
}

QpProblem assemble(const MatrixXd& J, double eta, const VectorXd& e, const MatrixXd& Lambda,
                   const MatrixXd& A_ineq, const VectorXd& b_ineq, const MatrixXd& A_eq,
                   const VectorXd& b_eq) {
  const Index n = J.cols();
  if (J.rows() != e.size()) {
    throw std::invalid_argument("assemble: J rows must match error length");
  }
  if (Lambda.rows() != n || Lambda.cols() != n) {
    throw std::invalid_argument("assemble: damping must be n x n");
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j ? !(Lambda(i, j) > 0.0) : Lambda(i, j) != 0.0) {
        throw std::invalid_argument("assemble: damping must be diagonal and positive");
      }
    }
  }
  QpProblem p;
  p.H = J.transpose() * J + Lambda.transpose() * Lambda;
  p.f = eta * (J.transpose() * e);
  p.A_ineq = A_ineq.rows() > 0 ? A_ineq : MatrixXd(0, n);
  p.b_ineq = b_ineq;
  p.A_eq = A_eq.rows() > 0 ? A_eq : MatrixXd(0, n);
  p.b_eq = b_eq.size() > 0 ? b_eq : VectorXd(0);
  p.check_dimensions();
  return p;
}

double kkt_residual(const QpProblem& p, const VectorXd& u, const VectorXd& lambda,
                    const VectorXd& nu) {
  VectorXd grad = p.H * u + p.f;
  if (p.A_ineq.rows() > 0) grad += p.A_ineq.transpose() * lambda;
  if (p.A_eq.rows() > 0) grad += p.A_eq.transpose() * nu;

  const double u_norm = inf_norm(u);
  const double stat_scale = std::max({1.0, inf_norm(p.H) * u_norm, inf_norm(p.f),
                                      inf_norm(p.A_ineq) * inf_norm(lambda),
                                      inf_norm(p.A_eq) * inf_norm(nu)});
  double res = inf_norm(grad) / stat_scale;

  if (p.A_ineq.rows() > 0) {
    const VectorXd slack = p.A_ineq * u - p.b_ineq;
    const double primal_scale = std::max({1.0, inf_norm(p.b_ineq), inf_norm(p.A_ineq) * u_norm});
    res = std::max(res, std::max(0.0, slack.maxCoeff()) / primal_scale);
    res = std::max(res, std::max(0.0, -lambda.minCoeff()));
    const double comp = (lambda.array() * slack.array()).abs().maxCoeff();
    res = std::max(res, comp / (primal_scale * std::max(1.0, inf_norm(lambda))));
  }
  if (p.A_eq.rows() > 0) {
    const double eq_scale = std::max({1.0, inf_norm(p.b_eq), inf_norm(p.A_eq) * u_norm});
    res = std::max(res, inf_norm(VectorXd(p.A_eq * u - p.b_eq)) / eq_scale);
  }
  return res;
}

QpSolution QpSolver::solve(const QpProblem& p) {
  p.check_dimensions();
  const Index n = p.variables();
  const Index m = p.A_ineq.rows();

  // Keep an independent subset of the equality rows; dependent rows must be consistent.
  MatrixXd A_eq = p.A_eq;
  VectorXd b_eq = p.b_eq;
  std::vector<Index> eq_rows;
  QpSolution out;
  if (p.A_eq.rows() > 0) {
    const Eigen::ColPivHouseholderQR<MatrixXd> qr(p.A_eq.transpose());
    const Index rank = qr.rank();
    if (rank < p.A_eq.rows()) {
      const VectorXd u_ls = p.A_eq.colPivHouseholderQr().solve(p.b_eq);
      const double resid = inf_norm(VectorXd(p.A_eq * u_ls - p.b_eq));
      if (resid > options_.tolerance * std::max(1.0, inf_norm(p.b_eq))) {
        out.u = VectorXd::Zero(n);
        out.status = QpStatus::Infeasible;
        return out;
      }
    }
    for (Index i = 0; i < rank; ++i) {
      eq_rows.push_back(qr.colsPermutation().indices()(i));
    }
    std::sort(eq_rows.begin(), eq_rows.end());
    A_eq.resize(static_cast<Index>(eq_rows.size()), n);
    b_eq.resize(static_cast<Index>(eq_rows.size()));
    for (size_t k = 0; k < eq_rows.size(); ++k) {
      A_eq.row(static_cast<Index>(k)) = p.A_eq.row(eq_rows[k]);
      b_eq(static_cast<Index>(k)) = p.b_eq(eq_rows[k]);
    }
  }

  const MatrixXd CE = A_eq.transpose();
  const VectorXd ce0 = -b_eq;
  const MatrixXd CI = -p.A_ineq.transpose();
  const VectorXd ci0 = p.b_ineq;

  DualActiveSet gi(p.H, p.f, CE, ce0, CI, ci0, options_);
  out.status = gi.run(out);
  out.u = gi.x();
  out.ineq_multipliers = VectorXd::Zero(m);
  out.eq_multipliers = VectorXd::Zero(p.A_eq.rows());
  for (int k = 0; k < gi.active_count(); ++k) {
    const int id = gi.active_id(k);
    if (id < 0) {
      // n' x + c == 0 with n = A_eq row gives the opposite sign convention
      out.eq_multipliers(eq_rows[static_cast<size_t>(-id - 1)]) = -gi.active_multiplier(k);
    } else {
      out.ineq_multipliers(id) = gi.active_multiplier(k);
      out.active_set.push_back(id);
    }
  }
  std::sort(out.active_set.begin(), out.active_set.end());
  out.objective = p.objective(out.u);
  out.kkt_residual = kkt_residual(p, out.u, out.ineq_multipliers, out.eq_multipliers);
  return out;
}

QpSolution solve(const QpProblem& p, double tol, int max_iter) {
  QpOptions opt;
  opt.tolerance = tol;
  opt.max_iterations = max_iter;
  return QpSolver(opt).solve(p);
}

namespace {

void write_matrix(std::ostream& os, const char* tag, const MatrixXd& m) {
  os << tag << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      os << (j ? " " : "") << std::setprecision(17) << m(i, j);
    }
    os << '\n';
  }
}

void write_vector(std::ostream& os, const char* tag, const VectorXd& v) {
  os << tag << ' ' << v.size() << '\n';
  for (Index i = 0; i < v.size(); ++i) {
    os << (i ? " " : "") << std::setprecision(17) << v(i);
  }
  os << '\n';
}

// Whitespace-separated token stream with '#' comments stripped.
class Tokens {
 public:
  explicit Tokens(std::istream& is) {
    std::string line;
    while (std::getline(is, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) tokens_.push_back(tok);
    }
  }
  bool done() const { return pos_ >= tokens_.size(); }
  std::string next() {
    if (done()) throw std::runtime_error("QP dump: unexpected end of input");
    return tokens_[pos_++];
  }
  double number() {
    const std::string tok = next();
    try {
      size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("QP dump: bad number '" + tok + "'");
    }
  }
  Index count() {
    const double v = number();
    if (v < 0 || v != std::floor(v)) throw std::runtime_error("QP dump: bad dimension");
    return static_cast<Index>(v);
  }

 private:
  std::vector<std::string> tokens_;
  size_t pos_{0};
};

}  // namespace

void write_qp_dump(std::ostream& os, const QpProblem& p) {
  p.check_dimensions();
  os << "# dqadapt qp v1\n";
  write_matrix(os, "H", p.H);
  write_vector(os, "f", p.f);
  write_matrix(os, "A_ineq", p.A_ineq.rows() > 0 ? p.A_ineq : MatrixXd(0, p.variables()));
  write_vector(os, "b_ineq", p.b_ineq);
  write_matrix(os, "A_eq", p.A_eq.rows() > 0 ? p.A_eq : MatrixXd(0, p.variables()));
  write_vector(os, "b_eq", p.b_eq);
}

QpProblem read_qp_dump(std::istream& is) {
  Tokens tok(is);
  QpProblem p;
  bool seen_h = false;
  while (!tok.done()) {
    const std::string tag = tok.next();
    if (tag == "H" || tag == "A_ineq" || tag == "A_eq") {
      const Index r = tok.count();
      const Index c = tok.count();
      MatrixXd m(r, c);
      for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = tok.number();
      if (tag == "H") {
        p.H = m;
        seen_h = true;
      } else if (tag == "A_ineq") {
        p.A_ineq = m;
      } else {
        p.A_eq = m;
      }
    } else if (tag == "f" || tag == "b_ineq" || tag == "b_eq") {
      const Index n = tok.count();
      VectorXd v(n);
      for (Index i = 0; i < n; ++i) v(i) = tok.number();
      (tag == "f" ? p.f : tag == "b_ineq" ? p.b_ineq : p.b_eq) = v;
    } else {
      throw std::runtime_error("QP dump: unknown block '" + tag + "'");
    }
  }
  if (!seen_h) throw std::runtime_error("QP dump: missing H block");
  const Index n = p.H.rows();
  if (p.f.size() == 0) p.f = VectorXd::Zero(n);
  if (p.A_ineq.size() == 0) p.A_ineq = MatrixXd(0, n);
  if (p.A_eq.size() == 0) p.A_eq = MatrixXd(0, n);
  p.check_dimensions();
  return p;
}

}  // namespace dqadapt
