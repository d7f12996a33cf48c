#include <algorithm>
#include <cmath>
#include <vector>

#include "invopt/solvers.hpp"

namespace invopt {

void QpSpec::validate() const {
  const Eigen::Index n = q.size();
  if (P.rows() != n || P.cols() != n) throw DimensionError("P must be n x n");
  if (!P.allFinite() || !q.allFinite()) throw DimensionError("non-finite QP objective");
  if ((P - P.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * std::max(1.0, P.lpNorm<Eigen::Infinity>()))
    throw DimensionError("P is not symmetric");
  LinearProgramSpec lp = linear_part();
  lp.validate();
}

LinearProgramSpec QpSpec::linear_part() const {
  return {q, ineq_matrix, ineq_rhs, eq_matrix, eq_rhs, lower, upper};
}

namespace {

bool is_psd(const Eigen::MatrixXd& P) {
  if (P.size() == 0) return true;
  // only rows/columns that carry entries matter; the trainers pad P with zeros
  std::vector<Eigen::Index> live;
  for (Eigen::Index j = 0; j < P.cols(); ++j)
    if (!P.col(j).isZero(0.0) || !P.row(j).isZero(0.0)) live.push_back(j);
  if (live.empty()) return true;
  if (Eigen::Index(live.size()) < P.rows()) return is_psd(P(live, live));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, P.lpNorm<Eigen::Infinity>());
  return es.eigenvalues().minCoeff() >= -1e-10 * scale;
}

}  // namespace

SolveResult solve_qp(const QpSpec& spec, const QpOptions& opts) {
  spec.validate();
  if (!is_psd(spec.P)) throw DimensionError("P is not positive semidefinite");
  const Eigen::Index n = spec.q.size();

  if (spec.P.isZero(0.0)) {
    SolveResult r = solve_lp(spec.linear_part());
    r.delegated_to_lp = true;
    return r;
  }

  const Eigen::VectorXd lo = spec.lower.size() ? spec.lower : Eigen::VectorXd::Constant(n, -kInf);
  const Eigen::VectorXd hi = spec.upper.size() ? spec.upper : Eigen::VectorXd::Constant(n, kInf);
  const Eigen::Index mg = spec.ineq_matrix.rows(), me = spec.eq_matrix.rows();

  // All inequalities as rows of one matrix: G, then -x <= -lo, then x <= hi.
  std::vector<Eigen::Index> lo_idx, hi_idx;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isfinite(lo[j])) lo_idx.push_back(j);
    if (std::isfinite(hi[j])) hi_idx.push_back(j);
  }
  const Eigen::Index mi = mg + Eigen::Index(lo_idx.size() + hi_idx.size());
  Eigen::MatrixXd Ain(mi, n);
  Eigen::VectorXd bin(mi);
  if (mg) Ain.topRows(mg) = spec.ineq_matrix, bin.head(mg) = spec.ineq_rhs;
  Eigen::Index row = mg;
  for (auto j : lo_idx) {
    Ain.row(row).setZero();
    Ain(row, j) = -1.0;
    bin[row++] = -lo[j];
  }
  for (auto j : hi_idx) {
    Ain.row(row).setZero();
    Ain(row, j) = 1.0;
    bin[row++] = hi[j];
  }

  SolveResult res;
  Eigen::VectorXd x;
  auto violation = [&](const Eigen::VectorXd& z) {
    double v = 0.0;
    if (mi) v = std::max(v, (Ain * z - bin).maxCoeff());
    if (me) v = std::max(v, (spec.eq_matrix * z - spec.eq_rhs).lpNorm<Eigen::Infinity>());
    return v;
  };
  if (opts.start.size() == n && violation(opts.start) <= 1e-9) {
    x = opts.start;
  } else {
    LinearProgramSpec feas = spec.linear_part();
    feas.objective.setZero();
    const SolveResult f = solve_lp(feas);
    res.iterations += f.iterations;
    if (f.status != SolveStatus::optimal) {
      res.status = SolveStatus::infeasible;
      return res;
    }
    x = f.x;
  }

  std::vector<Eigen::Index> W;
  std::vector<char> in_w(mi, 0);
  Eigen::VectorXd lambda;  // multipliers of [eq; W] at termination
  const Eigen::MatrixXd& P = spec.P;
  const double pscale = std::max(1.0, P.lpNorm<Eigen::Infinity>());

  auto working_matrix = [&]() {
    Eigen::MatrixXd M(me + Eigen::Index(W.size()), n);
    if (me) M.topRows(me) = spec.eq_matrix;
    for (std::size_t k = 0; k < W.size(); ++k) M.row(me + Eigen::Index(k)) = Ain.row(W[k]);
    return M;
  };

  bool done = false;
  long it = 0;
  for (; it < opts.max_iterations; ++it) {
    const Eigen::VectorXd g = P * x + spec.q;
    const Eigen::MatrixXd M = working_matrix();
    Eigen::MatrixXd Z;
    if (M.rows() == 0) {
      Z = Eigen::MatrixXd::Identity(n, n);
    } else {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M.transpose());
      qr.setThreshold(1e-10);
      const Eigen::Index r = qr.rank();
      const Eigen::MatrixXd Q = qr.householderQ();
      Z = Q.rightCols(n - r);
    }

    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    bool ray = false;
    if (Z.cols() > 0) {
      const Eigen::MatrixXd H = Z.transpose() * P * Z;
      const Eigen::VectorXd rz = Z.transpose() * g;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
      const Eigen::VectorXd ev = es.eigenvalues();
      const Eigen::MatrixXd V = es.eigenvectors();
      const double ztol = 1e-10 * pscale;
      const double gtol = 1e-11 * (1.0 + g.lpNorm<Eigen::Infinity>());
      Eigen::VectorXd coef = V.transpose() * rz;
      Eigen::VectorXd flat = Eigen::VectorXd::Zero(Z.cols());
      for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (ev[k] <= ztol && std::abs(coef[k]) > gtol) flat += -coef[k] * V.col(k);
      if (!flat.isZero(0.0)) {
        ray = true;
        p = Z * flat;
      } else {
        Eigen::VectorXd pz = Eigen::VectorXd::Zero(Z.cols());
        for (Eigen::Index k = 0; k < ev.size(); ++k)
          if (ev[k] > ztol) pz += -(coef[k] / ev[k]) * V.col(k);
        p = Z * pz;
      }
    }

    if (!ray && p.norm() <= 1e-11 * (1.0 + x.norm())) {
      if (M.rows() == 0) {
        lambda.resize(0);
        done = true;
        break;
      }
      lambda = M.transpose().colPivHouseholderQr().solve(-g);
      Eigen::Index worst = -1;
      double wval = -1e-10 * (1.0 + g.lpNorm<Eigen::Infinity>());
      for (std::size_t k = 0; k < W.size(); ++k)
        if (lambda[me + Eigen::Index(k)] < wval) wval = lambda[me + Eigen::Index(k)], worst = Eigen::Index(k);
      if (worst < 0) {
        done = true;
        break;
      }
      in_w[W[worst]] = 0;
      W.erase(W.begin() + worst);
      continue;
    }

    double alpha = ray ? kInf : 1.0;
    Eigen::Index block = -1;
    if (mi) {
      const Eigen::VectorXd ap = Ain * p;
      const Eigen::VectorXd ax = Ain * x;
      const double pn = p.norm();
      for (Eigen::Index i = 0; i < mi; ++i) {
        if (in_w[i]) continue;
        if (ap[i] <= 1e-12 * Ain.row(i).norm() * pn) continue;
        const double a = std::max(0.0, bin[i] - ax[i]) / ap[i];
        if (a < alpha) alpha = a, block = i;
      }
    }
    if (!std::isfinite(alpha)) {
      res.status = SolveStatus::unbounded;
      res.iterations += it;
      return res;
    }
    x += alpha * p;
    if (block >= 0) {
      W.push_back(block);
      in_w[block] = 1;
    }
  }

  res.iterations += it;
  res.status = done ? SolveStatus::optimal : SolveStatus::iteration_limit;
  res.x = x;
  res.objective = 0.5 * x.dot(P * x) + spec.q.dot(x);

  Eigen::VectorXd mu_all = Eigen::VectorXd::Zero(mi);
  res.eq_duals = Eigen::VectorXd::Zero(me);
  if (done && lambda.size() > 0) {
    res.eq_duals = lambda.head(me);
    for (std::size_t k = 0; k < W.size(); ++k)
      mu_all[W[k]] = std::max(0.0, lambda[me + Eigen::Index(k)]);
  }
  res.ineq_duals = mu_all.head(mg);
  res.lower_duals = Eigen::VectorXd::Zero(n);
  res.upper_duals = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < lo_idx.size(); ++k) res.lower_duals[lo_idx[k]] = mu_all[mg + Eigen::Index(k)];
  for (std::size_t k = 0; k < hi_idx.size(); ++k)
    res.upper_duals[hi_idx[k]] = mu_all[mg + Eigen::Index(lo_idx.size() + k)];

  Eigen::VectorXd stat = P * x + spec.q;
  if (mi) stat += Ain.transpose() * mu_all;
  if (me) stat += spec.eq_matrix.transpose() * res.eq_duals;
  res.dual_residual = stat.lpNorm<Eigen::Infinity>();
  res.primal_residual = std::max(0.0, violation(x));
  double comp = 0.0;
  if (mi) comp = ((bin - Ain * x).array() * mu_all.array()).abs().maxCoeff();
  res.complementarity = comp;
  double lag = res.objective;
  if (mi) lag += mu_all.dot(Ain * x - bin);
  if (me) lag += res.eq_duals.dot(spec.eq_matrix * x - spec.eq_rhs);
  res.dual_objective = lag;
  return res;
}

}  // namespace invopt
