#include "invopt/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "invopt/solvers.hpp"

namespace invopt {

bool ConeDescription::contains(const CostVector& theta, double tol) const {
  if (theta.size() != dimension) throw DimensionError("cost vector does not match the cone");
  if (size() == 0) return true;
  return (rows * theta).maxCoeff() <= tol;
}

Eigen::VectorXd ConeDescription::row_norms() const { return rows.rowwise().norm(); }

ConeDescription build_cone(const IODataset& ds, const FeatureMap& phi, const DistanceFn& d,
                           bool normalize) {
  ConeDescription cone;
  cone.dimension = phi.dimension;
  cone.normalize = normalize;
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> dist;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const IOInstance& inst = ds[i];
    if (!inst.oracle || !inst.oracle->enumerable())
      throw OracleError("building the cone needs finite-enumerable oracles");
    const Eigen::VectorXd fh = phi(inst.signal, inst.response);
    const double scale = 1.0 + fh.lpNorm<Eigen::Infinity>();
    for (const Response& x : inst.oracle->enumerate(inst.signal)) {
      Eigen::VectorXd a = fh - phi(inst.signal, x);
      if (a.lpNorm<Eigen::Infinity>() <= 1e-12 * scale) continue;
      double dk = d(inst.response, x);
      if (normalize) {
        const double nrm = a.norm();
        a /= nrm;
        dk /= nrm;
      }
      rows.push_back(std::move(a));
      dist.push_back(dk);
      cone.provenance.push_back({i, x});
    }
  }
  cone.rows.resize(Eigen::Index(rows.size()), phi.dimension);
  for (std::size_t k = 0; k < rows.size(); ++k) cone.rows.row(Eigen::Index(k)) = rows[k].transpose();
  cone.distances = Eigen::Map<const Eigen::VectorXd>(dist.data(), Eigen::Index(dist.size()));
  return cone;
}

void write_cone_csv(std::ostream& os, const ConeDescription& cone) {
  const auto old = os.precision(17);
  os << "row,instance,response";
  for (int j = 0; j < cone.dimension; ++j) os << ",a_" << j;
  os << ",distance\n";
  for (Eigen::Index k = 0; k < cone.size(); ++k) {
    const auto& pr = cone.provenance[std::size_t(k)];
    os << k << ',' << pr.instance << ",\"" << pr.response.to_string() << '"';
    for (int j = 0; j < cone.dimension; ++j) os << ',' << cone.rows(k, j);
    os << ',' << cone.distances[k] << '\n';
  }
  os.precision(old);
}

CostVector feasibility_program(const ConeDescription& cone, const ThetaSet& set) {
  set.validate();
  const int p = cone.dimension;
  LinearProgramSpec lp;
  lp.objective = Eigen::VectorXd::Zero(p);
  lp.ineq_matrix = cone.rows;
  lp.ineq_rhs = Eigen::VectorXd::Zero(cone.size());
  lp.lower = set.lower(p);
  lp.upper = set.upper(p);

  if (set.kind == ThetaSet::Kind::nonneg || set.unit_sum) {
    // sum(theta) = 1 is the l1 normalization on the orthant
    lp.eq_matrix = Eigen::MatrixXd::Ones(1, p);
    lp.eq_rhs = Eigen::VectorXd::Ones(1);
    const SolveResult r = solve_lp(lp);
    if (r.status == SolveStatus::infeasible) throw InconsistentDataError();
    if (!r.optimal()) throw SolverError("feasibility LP ended with status " + to_string(r.status));
    return r.x;
  }
  if (set.kind == ThetaSet::Kind::box) throw ConfigError("feasibility program supports Theta = all or nonneg");

  for (int k = 0; k < p; ++k) {
    for (double sign : {1.0, -1.0}) {
      LinearProgramSpec f = lp;
      f.lower = Eigen::VectorXd::Constant(p, -1.0);
      f.upper = Eigen::VectorXd::Constant(p, 1.0);
      f.lower[k] = f.upper[k] = sign;
      const SolveResult r = solve_lp(f);
      if (r.status == SolveStatus::infeasible) continue;
      if (!r.optimal()) throw SolverError("feasibility LP ended with status " + to_string(r.status));
      return r.x / r.x.lpNorm<1>();
    }
  }
  throw InconsistentDataError();
}

IncenterResult incenter(const ConeDescription& cone, const ThetaSet& set, Regularizer reg,
                        const std::optional<Eigen::VectorXd>& offsets) {
  set.validate();
  const int p = cone.dimension;
  const Eigen::Index K = cone.size();
  if (K == 0) throw ConfigError("empty cone: every direction is interior");
  const Eigen::VectorXd d = offsets ? *offsets : cone.row_norms();
  if (d.size() != K) throw DimensionError("one offset per cone row is required");

  SolveResult r;
  if (reg == Regularizer::half_sq_l2) {
    QpSpec qp;
    qp.P = Eigen::MatrixXd::Identity(p, p);
    qp.q = Eigen::VectorXd::Zero(p);
    qp.ineq_matrix = cone.rows;
    qp.ineq_rhs = -d;
    qp.lower = set.lower(p);
    qp.upper = set.upper(p);
    if (set.unit_sum) {
      qp.eq_matrix = Eigen::MatrixXd::Ones(1, p);
      qp.eq_rhs = Eigen::VectorXd::Ones(1);
    }
    r = solve_qp(qp);
  } else {
    // variables (theta, t) with |theta| <= t; t is unused without a regularizer
    LinearProgramSpec lp;
    lp.objective = Eigen::VectorXd::Zero(2 * p);
    if (reg == Regularizer::l1) lp.objective.tail(p).setOnes();
    lp.ineq_matrix = Eigen::MatrixXd::Zero(K + 2 * p, 2 * p);
    lp.ineq_matrix.topLeftCorner(K, p) = cone.rows;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);
    lp.ineq_matrix.block(K, 0, p, p) = I;
    lp.ineq_matrix.block(K, p, p, p) = -I;
    lp.ineq_matrix.block(K + p, 0, p, p) = -I;
    lp.ineq_matrix.block(K + p, p, p, p) = -I;
    lp.ineq_rhs = Eigen::VectorXd::Zero(K + 2 * p);
    lp.ineq_rhs.head(K) = -d;
    lp.lower = Eigen::VectorXd::Constant(2 * p, -kInf);
    lp.upper = Eigen::VectorXd::Constant(2 * p, kInf);
    lp.lower.head(p) = set.lower(p);
    lp.upper.head(p) = set.upper(p);
    if (set.unit_sum) {
      lp.eq_matrix = Eigen::MatrixXd::Zero(1, 2 * p);
      lp.eq_matrix.leftCols(p).setOnes();
      lp.eq_rhs = Eigen::VectorXd::Ones(1);
    }
    r = solve_lp(lp);
    if (r.optimal()) r.x = r.x.head(p).eval();
  }
  if (r.status == SolveStatus::infeasible) throw NoInteriorError();
  if (!r.optimal()) throw SolverError("incenter program ended with status " + to_string(r.status));
  const double tol = 1e-6 * (1.0 + r.x.lpNorm<Eigen::Infinity>());
  if (r.primal_residual > tol || r.dual_residual > tol || r.complementarity > tol)
    throw SolverError("incenter program failed its KKT certificate");

  IncenterResult out;
  out.raw_theta = r.x;
  const double nrm = r.x.norm();
  if (!(nrm > 0)) throw ConfigError("incenter program returned theta = 0; offsets must be positive");
  out.theta = r.x / nrm;
  out.margin_r = 1.0 / nrm;
  return out;
}

namespace {

constexpr double kRankTol = 1e-9;
constexpr double kMergeAngle = 1e-7;

// Unit rows with duplicate directions merged, plus -e_k for the orthant.
Eigen::MatrixXd ray_constraints(const ConeDescription& cone, const ThetaSet& set) {
  const int p = cone.dimension;
  std::vector<Eigen::VectorXd> rows;
  auto add = [&](Eigen::VectorXd a) {
    const double n = a.norm();
    if (!(n > 0)) return;
    a /= n;
    for (const auto& b : rows)
      if (angle(a, b) < kMergeAngle) return;
    rows.push_back(std::move(a));
  };
  for (Eigen::Index k = 0; k < cone.size(); ++k) add(cone.rows.row(k).transpose());
  if (set.kind == ThetaSet::Kind::nonneg)
    for (int k = 0; k < p; ++k) add(-Eigen::VectorXd::Unit(p, k));
  Eigen::MatrixXd M(Eigen::Index(rows.size()), p);
  for (std::size_t k = 0; k < rows.size(); ++k) M.row(Eigen::Index(k)) = rows[k].transpose();
  return M;
}

// Rows whose removal enlarges the cone.
Eigen::MatrixXd drop_redundant(const Eigen::MatrixXd& R) {
  const Eigen::Index K = R.rows(), p = R.cols();
  std::vector<char> keep(std::size_t(K), 1);
  for (Eigen::Index k = 0; k < K; ++k) {
    std::vector<Eigen::Index> others;
    for (Eigen::Index j = 0; j < K; ++j)
      if (j != k && keep[std::size_t(j)]) others.push_back(j);
    LinearProgramSpec lp;
    lp.objective = Eigen::VectorXd::Zero(p);
    lp.ineq_matrix.resize(Eigen::Index(others.size()) + 1, p);
    for (std::size_t j = 0; j < others.size(); ++j) lp.ineq_matrix.row(Eigen::Index(j)) = R.row(others[j]);
    lp.ineq_matrix.row(Eigen::Index(others.size())) = -R.row(k);
    lp.ineq_rhs = Eigen::VectorXd::Zero(Eigen::Index(others.size()) + 1);
    lp.ineq_rhs[Eigen::Index(others.size())] = -1.0;
    // a point violating row k while meeting the others proves row k is needed
    if (solve_lp(lp).status == SolveStatus::infeasible) keep[std::size_t(k)] = 0;
  }
  Eigen::MatrixXd out(std::count(keep.begin(), keep.end(), 1), p);
  Eigen::Index r = 0;
  for (Eigen::Index k = 0; k < K; ++k)
    if (keep[std::size_t(k)]) out.row(r++) = R.row(k);
  return out;
}

double binomial(long n, long k) {
  if (k < 0 || k > n) return 0.0;
  double c = 1.0;
  for (long i = 1; i <= k; ++i) c = c * double(n - k + i) / double(i);
  return c;
}

}  // namespace

std::vector<Eigen::VectorXd> extreme_rays(const ConeDescription& cone, const ThetaSet& set) {
  if (set.kind == ThetaSet::Kind::box) throw ConfigError("extreme rays need a conic Theta (all or nonneg)");
  const int p = cone.dimension;
  Eigen::MatrixXd R = ray_constraints(cone, set);
  if (binomial(R.rows(), p - 1) > 2e4) R = drop_redundant(R);
  const Eigen::Index K = R.rows();
  std::vector<Eigen::VectorXd> rays;
  auto consider = [&](const Eigen::VectorXd& v) {
    for (double s : {1.0, -1.0}) {
      const Eigen::VectorXd r = s * v;
      if (K > 0 && (R * r).maxCoeff() > kRankTol) continue;
      bool dup = false;
      for (const auto& e : rays) dup = dup || angle(e, r) < kMergeAngle;
      if (!dup) rays.push_back(r);
    }
  };

  if (p == 1) {
    consider(Eigen::VectorXd::Ones(1));
    return rays;
  }
  if (K < p - 1) return rays;
  std::vector<Eigen::Index> idx(std::size_t(p - 1));
  for (int k = 0; k < p - 1; ++k) idx[std::size_t(k)] = k;
  Eigen::MatrixXd M(p - 1, p);
  while (true) {
    for (int k = 0; k < p - 1; ++k) M.row(k) = R.row(idx[std::size_t(k)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(kRankTol);
    if (lu.rank() == p - 1) {
      Eigen::VectorXd v = lu.kernel().col(0);
      consider(v / v.norm());
    }
    // next (p-1)-subset in lexicographic order
    int k = p - 2;
    while (k >= 0 && idx[std::size_t(k)] == K - (p - 1) + k) --k;
    if (k < 0) break;
    ++idx[std::size_t(k)];
    for (int j = k + 1; j < p - 1; ++j) idx[std::size_t(j)] = idx[std::size_t(j - 1)] + 1;
  }
  return rays;
}

CostVector circumcenter_desk(const ConeDescription& cone, int max_dim, const ThetaSet& set) {
  const int p = cone.dimension;
  if (p > max_dim)
    throw ConfigError("circumcenter is intractable in general; dimension " + std::to_string(p) +
                      " exceeds max_dim " + std::to_string(max_dim));
  const auto E = extreme_rays(cone, set);
  if (E.empty()) throw NoInteriorError("cone has no extreme rays");
  const Eigen::Index m = Eigen::Index(E.size());
  Eigen::MatrixXd Em(p, m);
  for (Eigen::Index k = 0; k < m; ++k) Em.col(k) = E[std::size_t(k)];
  if (m == 1) return Em.col(0);

  // the max-min problem over the ball is solved by the min-norm point of conv(E)
  QpSpec qp;
  qp.P = Em.transpose() * Em;
  qp.q = Eigen::VectorXd::Zero(m);
  qp.eq_matrix = Eigen::MatrixXd::Ones(1, m);
  qp.eq_rhs = Eigen::VectorXd::Ones(1);
  qp.lower = Eigen::VectorXd::Zero(m);
  QpOptions o;
  o.start = Eigen::VectorXd::Constant(m, 1.0 / double(m));
  const SolveResult r = solve_qp(qp, o);
  if (!r.optimal()) throw SolverError("circumcenter program ended with status " + to_string(r.status));
  const Eigen::VectorXd v = Em * r.x;
  if (v.norm() <= 1e-9) throw NoInteriorError("cone is not pointed");
  return v / v.norm();
}

double angle(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) throw DimensionError("angle needs vectors of equal length");
  const double nu = u.norm(), nv = v.norm();
  if (!(nu > 0) || !(nv > 0)) throw DimensionError("angle of a zero vector");
  return std::acos(std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0));
}

}  // namespace invopt
