#include <cmath>

#include "invopt/oracles.hpp"
#include "invopt/solvers.hpp"

namespace invopt {

Eigen::MatrixXd LinearHypothesis::Q(const CostVector& theta) const {
  if (theta.size() != dimension()) throw DimensionError("theta does not match the hypothesis");
  return Eigen::Map<const Eigen::MatrixXd>(theta.data(), u, m);
}

Eigen::VectorXd LinearHypothesis::q(const CostVector& theta) const {
  if (theta.size() != dimension()) throw DimensionError("theta does not match the hypothesis");
  return theta.tail(r);
}

FeatureMap LinearHypothesis::feature_map() const {
  const LinearHypothesis h = *this;
  return FeatureMap::custom(dimension(), [h](const Signal& s, const Response& x) {
    if (x.y.size() != h.u) throw DimensionError("continuous block has wrong length");
    const Eigen::VectorXd f1 = h.phi1(s.w, x.z);
    const Eigen::VectorXd f2 = h.phi2(s.w, x.z);
    if (f1.size() != h.m || f2.size() != h.r)
      throw DimensionError("phi1/phi2 output does not match the Q/q blocks");
    Eigen::VectorXd out(h.dimension());
    for (int k = 0; k < h.m; ++k) out.segment(Eigen::Index(k) * h.u, h.u) = f1[k] * x.y;
    out.tail(h.r) = f2;
    return out;
  });
}

LinearHypothesis LinearHypothesis::separable(int u, int v) {
  LinearHypothesis h;
  h.u = u;
  h.m = 1;
  h.r = v;
  h.phi1 = [](const Eigen::VectorXd&, const Eigen::VectorXi&) { return Eigen::VectorXd::Ones(1); };
  h.phi2 = [](const Eigen::VectorXd&, const Eigen::VectorXi& z) -> Eigen::VectorXd {
    return z.cast<double>();
  };
  return h;
}

MixedIntegerOracle::MixedIntegerOracle(LinearHypothesis h, bool penalize_y)
    : hyp_(std::move(h)), penalize_y_(penalize_y) {
  if (hyp_.u < 0 || hyp_.m < 0 || hyp_.r < 0) throw DimensionError("negative hypothesis size");
  if (!hyp_.phi1 || !hyp_.phi2) throw ConfigError("hypothesis feature functions missing");
}

void MixedIntegerOracle::y_polytope(const Signal& s, const Eigen::VectorXi& z, Eigen::MatrixXd& Ay,
                                    Eigen::VectorXd& by) {
  const Eigen::Index t = s.rhs.size(), u = s.A.cols();
  if (s.A.rows() != t) throw DimensionError("A rows must match c length");
  if (s.B.rows() != t || s.B.cols() != z.size()) throw DimensionError("B does not match z");
  if (s.y_lower.size() != u || s.y_upper.size() != u)
    throw DimensionError("y bounds do not match A");
  Ay.resize(t + 2 * u, u);
  by.resize(t + 2 * u);
  Ay.topRows(t) = s.A;
  by.head(t) = s.rhs - s.B * z.cast<double>();
  Ay.middleRows(t, u).setIdentity();
  by.segment(t, u) = s.y_upper;
  Ay.bottomRows(u) = -Eigen::MatrixXd::Identity(u, u);
  by.tail(u) = -s.y_lower;
}

bool MixedIntegerOracle::contains(const Signal& s, const Response& x) const {
  if (x.y.size() != s.A.cols() || x.z.size() != s.B.cols()) return false;
  bool in_z = false;
  for (const auto& z : s.z_set)
    if (z == x.z) {
      in_z = true;
      break;
    }
  if (!in_z) return false;
  Eigen::MatrixXd Ay;
  Eigen::VectorXd by;
  y_polytope(s, x.z, Ay, by);
  if (Ay.rows() == 0) return true;
  return ((Ay * x.y - by).array() <= kFeasTol).all();
}

std::vector<Response> MixedIntegerOracle::enumerate(const Signal& s) const {
  if (hyp_.u != 0 || s.A.cols() != 0)
    throw OracleError("mixed-integer set with continuous variables is not enumerable");
  std::vector<Response> out;
  for (const auto& z : s.z_set) {
    Response r(Eigen::VectorXd(), z);
    if (contains(s, r)) out.push_back(r);
  }
  return out;
}

InnerResult MixedIntegerOracle::inner_max(const Signal& s, const Response& xhat,
                                          const CostVector& theta, const FeatureMap&,
                                          const DistanceFn& d, const Budget& budget) const {
  return argmax_mixed_integer(*this, s, xhat, theta, d, budget);
}

Response MixedIntegerOracle::forward_min(const Signal& s, const CostVector& theta,
                                         const FeatureMap&) const {
  const Eigen::MatrixXd Q = hyp_.Q(theta);
  const Eigen::VectorXd q = hyp_.q(theta);
  Response best;
  double bv = kInf;
  for (const auto& z : s.z_set) {
    Eigen::MatrixXd Ay;
    Eigen::VectorXd by;
    y_polytope(s, z, Ay, by);
    const Eigen::VectorXd lin = Q * hyp_.phi1(s.w, z);
    double v = q.dot(hyp_.phi2(s.w, z));
    Eigen::VectorXd y(hyp_.u);
    if (hyp_.u == 0) {
      if ((by.array() < -kFeasTol).any()) continue;
    } else {
      LinearProgramSpec lp;
      lp.objective = lin;
      lp.ineq_matrix = Ay;
      lp.ineq_rhs = by;
      const SolveResult r = solve_lp(lp);
      if (r.status == SolveStatus::unbounded) throw OracleError("forward problem unbounded in y");
      if (r.status != SolveStatus::optimal) continue;
      y = r.x;
      v += r.objective;
    }
    if (v < bv) bv = v, best = Response(y, z);
  }
  if (bv == kInf) throw OracleError("empty feasible set");
  return best;
}

std::vector<Eigen::VectorXi> binary_cube(int v) {
  if (v > kDefaultEnumerationCap) throw OracleError("binary cube too large to enumerate");
  std::vector<Eigen::VectorXi> out;
  const long total = 1L << v;
  out.reserve(std::size_t(total));
  for (long code = 0; code < total; ++code) {
    Eigen::VectorXi z(v);
    for (int j = 0; j < v; ++j) z[j] = int((code >> (v - 1 - j)) & 1);
    out.push_back(z);
  }
  return out;
}

Signal make_mixed_integer_signal(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::VectorXd c,
                                 Eigen::VectorXd y_lower, Eigen::VectorXd y_upper,
                                 Eigen::VectorXd w) {
  Signal s;
  s.z_set = binary_cube(int(B.cols()));
  s.A = std::move(A);
  s.B = std::move(B);
  s.rhs = std::move(c);
  s.y_lower = std::move(y_lower);
  s.y_upper = std::move(y_upper);
  s.w = std::move(w);
  return s;
}

}  // namespace invopt
