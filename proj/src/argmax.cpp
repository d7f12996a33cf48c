#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "invopt/oracles.hpp"
#include "invopt/solvers.hpp"

namespace invopt {

double inner_objective(const CostVector& theta, const Eigen::VectorXd& phi_hat,
                       const FeatureMap& phi, const DistanceFn& d, const Signal& s,
                       const Response& xhat, const Response& x) {
  return theta.dot(phi_hat - phi(s, x)) + d(xhat, x);
}

InnerResult argmax_enumerate(const std::vector<Response>& feasible, const Signal& s,
                             const Response& xhat, const CostVector& theta, const FeatureMap& phi,
                             const DistanceFn& d) {
  if (feasible.empty()) throw OracleError("empty feasible set");
  const Eigen::VectorXd phi_hat = phi(s, xhat);
  check_cost_vector(theta, phi.dimension);
  InnerResult best;
  best.value = -kInf;
  for (const auto& x : feasible) {
    const double v = inner_objective(theta, phi_hat, phi, d, s, xhat, x);
    if (v > best.value) best.value = v, best.x = x;
  }
  return best;
}

namespace {

// Upper bound of <theta, phi_hat - x> + d(xhat, x) over the box lo <= x <= hi
// (identity features on the stacked response).
double box_upper_bound(const CostVector& theta, const Eigen::VectorXd& phi_hat,
                       const Eigen::VectorXd& xh, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi, const DistanceFn& d) {
  double v = theta.dot(phi_hat);
  Eigen::VectorXd far(lo.size());
  for (Eigen::Index j = 0; j < lo.size(); ++j) {
    v += std::max(-theta[j] * lo[j], -theta[j] * hi[j]);
    far[j] = std::max(std::abs(xh[j] - lo[j]), std::abs(xh[j] - hi[j]));
  }
  switch (d.kind) {
    case DistanceKind::zero: break;
    case DistanceKind::l1: v += far.sum(); break;
    case DistanceKind::euclidean: v += far.norm(); break;
    case DistanceKind::hamming: v += 1.0; break;
    case DistanceKind::custom: return kInf;
  }
  return v;
}

// Depth-first branch and bound over {0,1}^n with row-infeasibility pruning.
// Objective: constant + sum_j val(j, x_j) + psi(#{j : x_j != ref_j}); the
// leaf callback recomputes it exactly.
struct BinarySearch {
  BinarySearch(const Eigen::MatrixXd& A_, const Eigen::VectorXd& b_) : A(A_), b(b_) {}

  const Eigen::MatrixXd& A;
  const Eigen::VectorXd& b;
  Eigen::VectorXd v0, v1;
  Eigen::VectorXi ref;
  double constant = 0.0;
  std::function<double(int)> psi;
  std::function<double(const Eigen::VectorXi&)> leaf;
  std::optional<std::size_t> max_leaves;
  std::optional<double> gap_target;

  int n = 0;
  Eigen::VectorXi x;
  Eigen::VectorXd activity;  // A_fixed * x_fixed
  Eigen::MatrixXd free_min;  // free_min(r, k): sum_{j >= k} min(0, A(r,j))
  double inc = -kInf;
  Eigen::VectorXi best;
  std::size_t leaves = 0;
  bool stopped = false;
  double open_ub = -kInf;
  std::vector<std::pair<int, double>> pending;  // (depth, bound) of unexplored 1-branches

  void init() {
    n = int(A.cols());
    x = Eigen::VectorXi::Zero(n);
    activity = Eigen::VectorXd::Zero(A.rows());
    free_min = Eigen::MatrixXd::Zero(A.rows(), n + 1);
    for (int k = n - 1; k >= 0; --k)
      free_min.col(k) = free_min.col(k + 1) + A.col(k).cwiseMin(0.0);
  }

  bool row_feasible(int depth) const {
    for (Eigen::Index r = 0; r < A.rows(); ++r)
      if (activity[r] + free_min(r, depth) > b[r] + BinaryLpOracle::kFeasTol) return false;
    return true;
  }

  double bound(int depth, double fixed_val, int mism) const {
    double base = constant + fixed_val;
    std::vector<double> delta;
    delta.reserve(n - depth);
    for (int j = depth; j < n; ++j) {
      const double a = ref[j] ? v1[j] : v0[j];
      const double c = ref[j] ? v0[j] : v1[j];
      base += a;
      delta.push_back(c - a);
    }
    std::sort(delta.begin(), delta.end(), std::greater<>());
    double best_k = psi(mism), acc = 0.0;
    for (std::size_t k = 0; k < delta.size(); ++k) {
      acc += delta[k];
      best_k = std::max(best_k, acc + psi(mism + int(k) + 1));
    }
    return base + best_k;
  }

  bool prunable(double ub) const { return ub < inc - 1e-9 * (1.0 + std::abs(inc)); }

  double global_gap() const {
    double ub = -kInf;
    for (const auto& [d, v] : pending) ub = std::max(ub, v);
    return ub - inc;
  }

  void dfs(int depth, double fixed_val, int mism) {
    if (stopped) return;
    if (!row_feasible(depth)) return;
    if (depth == n) {
      const double v = leaf(x);
      ++leaves;
      if (v > inc) inc = v, best = x;
      if (max_leaves && leaves >= *max_leaves) stopped = true;
      if (gap_target && global_gap() <= *gap_target) stopped = true;
      return;
    }
    if (prunable(bound(depth, fixed_val, mism))) return;
    // 0 branch, with the 1 branch registered as pending.
    const double ub1 = child_bound(depth, 1, fixed_val, mism);
    pending.emplace_back(depth, ub1);
    descend(depth, 0, fixed_val, mism);
    pending.pop_back();
    if (stopped) {
      if (child_feasible(depth, 1)) open_ub = std::max(open_ub, ub1);
      return;
    }
    descend(depth, 1, fixed_val, mism);
  }

  double child_bound(int depth, int val, double fixed_val, int mism) const {
    const double fv = fixed_val + (val ? v1[depth] : v0[depth]);
    const int mm = mism + (val != ref[depth] ? 1 : 0);
    return bound(depth + 1, fv, mm);
  }

  bool child_feasible(int depth, int val) {
    x[depth] = val;
    if (val) activity += A.col(depth);
    const bool ok = row_feasible(depth + 1);
    if (val) activity -= A.col(depth);
    x[depth] = 0;
    return ok;
  }

  void descend(int depth, int val, double fixed_val, int mism) {
    x[depth] = val;
    if (val) activity += A.col(depth);
    dfs(depth + 1, fixed_val + (val ? v1[depth] : v0[depth]), mism + (val != ref[depth] ? 1 : 0));
    if (val) activity -= A.col(depth);
    x[depth] = 0;
  }
};

bool is_binary(const Eigen::VectorXi& z) {
  return ((z.array() == 0) || (z.array() == 1)).all();
}

std::function<double(int)> distance_profile(const DistanceFn& d) {
  switch (d.kind) {
    case DistanceKind::zero: return [](int) { return 0.0; };
    case DistanceKind::l1: return [](int k) { return double(k); };
    case DistanceKind::euclidean: return [](int k) { return std::sqrt(double(k)); };
    case DistanceKind::hamming: return [](int k) { return k > 0 ? 1.0 : 0.0; };
    case DistanceKind::custom: break;
  }
  return {};
}

InnerResult finish(const BinarySearch& bb, bool budgeted) {
  if (bb.inc == -kInf) throw OracleError("empty feasible set");
  InnerResult r;
  r.x = Response::discrete(bb.best);
  r.value = bb.inc;
  r.eps_bound = budgeted && bb.stopped ? std::max(0.0, bb.open_ub - bb.inc) : 0.0;
  return r;
}

}  // namespace

InnerResult argmax_finite(const FeasibleSetOracle& oracle, const Signal& s, const Response& xhat,
                          const CostVector& theta, const FeatureMap& phi, const DistanceFn& d,
                          const Budget& budget) {
  budget.validate();
  check_cost_vector(theta, phi.dimension);
  if (!oracle.enumerable()) throw OracleError("argmax_finite needs a finite-enumerable oracle");
  const bool budgeted = !budget.exact && (budget.max_nodes || budget.suboptimality_eps);
  const Eigen::VectorXd phi_hat = phi(s, xhat);

  const auto* blp = dynamic_cast<const BinaryLpOracle*>(&oracle);
  const bool structured = blp && phi.kind == FeatureKind::identity && d.kind != DistanceKind::custom &&
                          xhat.y.size() == 0 && xhat.z.size() == s.A.cols() && is_binary(xhat.z) &&
                          phi.dimension == s.A.cols();
  if (structured) {
    if (s.A.cols() > blp->cap())
      throw OracleError("binary program with " + std::to_string(s.A.cols()) +
                        " variables exceeds the enumeration cap; use the mixed-integer oracle");
    BinarySearch bb(s.A, s.rhs);
    bb.v0 = Eigen::VectorXd::Zero(theta.size());
    bb.v1 = -theta;
    bb.ref = xhat.z;
    bb.constant = theta.dot(phi_hat);
    bb.psi = distance_profile(d);
    bb.leaf = [&](const Eigen::VectorXi& z) {
      return inner_objective(theta, phi_hat, phi, d, s, xhat, Response::discrete(z));
    };
    if (budgeted) bb.max_leaves = budget.max_nodes, bb.gap_target = budget.suboptimality_eps;
    bb.init();
    bb.dfs(0, 0.0, 0);
    return finish(bb, budgeted);
  }

  std::vector<Response> all = oracle.enumerate(s);
  if (!budgeted) return argmax_enumerate(all, s, xhat, theta, phi, d);

  // Budgeted scan of a generic finite set: prefix plus interval bound.
  if (phi.kind != FeatureKind::identity || d.kind == DistanceKind::custom)
    throw OracleError("budgeted search needs identity features and a built-in distance");
  if (all.empty()) throw OracleError("empty feasible set");
  const Eigen::Index p = phi.dimension;
  const Eigen::VectorXd xh = xhat.stacked();
  InnerResult best;
  best.value = -kInf;
  std::size_t k = 0;
  auto tail_bound = [&](std::size_t from) {
    if (from >= all.size()) return -kInf;
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(p, kInf), hi = Eigen::VectorXd::Constant(p, -kInf);
    for (std::size_t i = from; i < all.size(); ++i) {
      const Eigen::VectorXd v = all[i].stacked();
      lo = lo.cwiseMin(v), hi = hi.cwiseMax(v);
    }
    return box_upper_bound(theta, phi_hat, xh, lo, hi, d);
  };
  for (; k < all.size(); ++k) {
    const double v = inner_objective(theta, phi_hat, phi, d, s, xhat, all[k]);
    if (v > best.value) best.value = v, best.x = all[k];
    if (budget.max_nodes && k + 1 >= *budget.max_nodes) break;
    if (budget.suboptimality_eps && tail_bound(k + 1) - best.value <= *budget.suboptimality_eps) break;
  }
  best.eps_bound = std::max(0.0, tail_bound(k + 1) - best.value);
  return best;
}

// --- binary-LP oracle -------------------------------------------------------

std::vector<Response> enumerate_binary_lp(const Signal& s, int cap) {
  const Eigen::Index n = s.A.cols();
  if (s.A.rows() != s.rhs.size()) throw DimensionError("A rows must match b length");
  if (n > cap)
    throw OracleError("binary program with " + std::to_string(n) +
                      " variables exceeds the enumeration cap of " + std::to_string(cap) +
                      "; use the mixed-integer oracle");
  std::vector<Response> out;
  BinarySearch bb(s.A, s.rhs);
  bb.v0 = bb.v1 = Eigen::VectorXd::Zero(n);
  bb.ref = Eigen::VectorXi::Zero(n);
  bb.psi = [](int) { return 0.0; };
  bb.leaf = [&](const Eigen::VectorXi& z) {
    out.push_back(Response::discrete(z));
    return 0.0;
  };
  bb.init();
  bb.dfs(0, 0.0, 0);
  return out;
}

bool BinaryLpOracle::contains(const Signal& s, const Response& x) const {
  if (x.y.size() != 0 || x.z.size() != s.A.cols()) return false;
  if (!is_binary(x.z)) return false;
  if (s.A.rows() == 0) return true;
  return ((s.A * x.z.cast<double>() - s.rhs).array() <= kFeasTol).all();
}

std::vector<Response> BinaryLpOracle::enumerate(const Signal& s) const {
  return enumerate_binary_lp(s, cap_);
}

InnerResult BinaryLpOracle::inner_max(const Signal& s, const Response& xhat,
                                      const CostVector& theta, const FeatureMap& phi,
                                      const DistanceFn& d, const Budget& budget) const {
  return argmax_finite(*this, s, xhat, theta, phi, d, budget);
}

Response BinaryLpOracle::forward_min(const Signal& s, const CostVector& theta,
                                     const FeatureMap& phi) const {
  check_cost_vector(theta, phi.dimension);
  const Eigen::Index n = s.A.cols();
  if (n > cap_) throw OracleError("binary program exceeds the enumeration cap");
  if (phi.kind == FeatureKind::identity && phi.dimension == n) {
    BinarySearch bb(s.A, s.rhs);
    bb.v0 = Eigen::VectorXd::Zero(n);
    bb.v1 = -theta;
    bb.ref = Eigen::VectorXi::Zero(n);
    bb.psi = [](int) { return 0.0; };
    bb.leaf = [&](const Eigen::VectorXi& z) {
      return -evaluate_hypothesis(theta, phi, s, Response::discrete(z));
    };
    bb.init();
    bb.dfs(0, 0.0, 0);
    if (bb.inc == -kInf) throw OracleError("empty feasible set");
    return Response::discrete(bb.best);
  }
  const auto all = enumerate(s);
  if (all.empty()) throw OracleError("empty feasible set");
  Response best;
  double bv = kInf;
  for (const auto& x : all) {
    const double v = evaluate_hypothesis(theta, phi, s, x);
    if (v < bv) bv = v, best = x;
  }
  return best;
}

// --- enumerated oracle ------------------------------------------------------

bool EnumeratedOracle::contains(const Signal& s, const Response& x) const {
  for (const auto& r : gen_(s))
    if (r == x) return true;
  return false;
}

InnerResult EnumeratedOracle::inner_max(const Signal& s, const Response& xhat,
                                        const CostVector& theta, const FeatureMap& phi,
                                        const DistanceFn& d, const Budget& budget) const {
  return argmax_finite(*this, s, xhat, theta, phi, d, budget);
}

Response EnumeratedOracle::forward_min(const Signal& s, const CostVector& theta,
                                       const FeatureMap& phi) const {
  const auto all = gen_(s);
  if (all.empty()) throw OracleError("empty feasible set");
  Response best;
  double bv = kInf;
  for (const auto& x : all) {
    const double v = evaluate_hypothesis(theta, phi, s, x);
    if (v < bv) bv = v, best = x;
  }
  return best;
}

// --- mixed-integer ----------------------------------------------------------

namespace {

struct YSolve {
  bool feasible = false;
  Eigen::VectorXd y;
  double value = 0.0;  // min of cost'y
};

YSolve min_over_y(const Signal& s, const Eigen::VectorXi& z, const Eigen::VectorXd& cost) {
  Eigen::MatrixXd Ay;
  Eigen::VectorXd by;
  MixedIntegerOracle::y_polytope(s, z, Ay, by);
  LinearProgramSpec lp;
  lp.objective = cost;
  lp.ineq_matrix = Ay;
  lp.ineq_rhs = by;
  const SolveResult r = solve_lp(lp);
  YSolve out;
  if (r.status == SolveStatus::unbounded)
    throw OracleError("inner problem unbounded in y; the feasible set must bound y");
  if (r.status != SolveStatus::optimal) return out;
  out.feasible = true;
  out.y = r.x;
  out.value = r.objective;
  return out;
}

DistanceFn composite_distance(const DistanceFn& dz, bool penalize_y) {
  DistanceFn out = DistanceFn::custom([dz, penalize_y](const Response& a, const Response& b) {
    double v = dz(Response(Eigen::VectorXd(), a.z), Response(Eigen::VectorXd(), b.z));
    if (penalize_y && a.y.size() > 0) v += (a.y - b.y).lpNorm<Eigen::Infinity>();
    return v;
  });
  return out;
}

}  // namespace

InnerResult argmax_mixed_integer(const MixedIntegerOracle& oracle, const Signal& s,
                                 const Response& xhat, const CostVector& theta,
                                 const DistanceFn& dz, const Budget& budget) {
  budget.validate();
  const auto& H = oracle.hypothesis();
  const FeatureMap phi = H.feature_map();
  check_cost_vector(theta, phi.dimension);
  const DistanceFn d = composite_distance(dz, oracle.penalize_y());
  const Eigen::VectorXd phi_hat = phi(s, xhat);
  const double base = theta.dot(phi_hat);
  const bool budgeted = !budget.exact && (budget.max_nodes || budget.suboptimality_eps);
  if (s.z_set.empty()) throw OracleError("empty discrete set Z(w)");

  const int u = H.u;
  const Eigen::MatrixXd Q = H.Q(theta);
  const Eigen::VectorXd q = H.q(theta);
  std::vector<Eigen::VectorXd> hs;
  if (oracle.penalize_y() && u > 0) {
    for (int k = 0; k < 2 * u; ++k) {
      Eigen::VectorXd h = Eigen::VectorXd::Zero(u);
      h[k % u] = k < u ? 1.0 : -1.0;
      hs.push_back(h);
    }
  } else {
    hs.push_back(Eigen::VectorXd::Zero(u));
  }

  // Per-z upper bounds from the y box, used by budgeted scans.
  const std::size_t M = s.z_set.size();
  std::vector<double> ub(M, kInf);
  if (budgeted) {
    for (std::size_t j = 0; j < M; ++j) {
      const Eigen::VectorXi& z = s.z_set[j];
      const Eigen::VectorXd lin = Q * H.phi1(s.w, z);
      double v = base - q.dot(H.phi2(s.w, z)) +
                 dz(Response(Eigen::VectorXd(), xhat.z), Response(Eigen::VectorXd(), z));
      for (int i = 0; i < u; ++i) {
        v += std::max(-lin[i] * s.y_lower[i], -lin[i] * s.y_upper[i]);
      }
      if (oracle.penalize_y() && u > 0) {
        double far = 0.0;
        for (int i = 0; i < u; ++i)
          far = std::max({far, std::abs(xhat.y[i] - s.y_lower[i]), std::abs(xhat.y[i] - s.y_upper[i])});
        v += far;
      }
      ub[j] = std::isfinite(v) ? v : kInf;
    }
  }

  InnerResult best;
  best.value = -kInf;
  std::size_t j = 0;
  for (; j < M; ++j) {
    const Eigen::VectorXi& z = s.z_set[j];
    const Eigen::VectorXd lin = Q * H.phi1(s.w, z);
    for (const auto& h : hs) {
      Response cand;
      if (u == 0) {
        Eigen::MatrixXd Ay;
        Eigen::VectorXd by;
        MixedIntegerOracle::y_polytope(s, z, Ay, by);
        if ((by.array() < -MixedIntegerOracle::kFeasTol).any()) continue;
        cand = Response(Eigen::VectorXd(), z);
      } else {
        const YSolve ys = min_over_y(s, z, lin + h);
        if (!ys.feasible) continue;
        cand = Response(ys.y, z);
      }
      const double v = inner_objective(theta, phi_hat, phi, d, s, xhat, cand);
      if (v > best.value) best.value = v, best.x = cand;
    }
    if (budgeted) {
      if (budget.max_nodes && j + 1 >= *budget.max_nodes && best.value > -kInf) break;
      if (budget.suboptimality_eps && best.value > -kInf) {
        double rest = -kInf;
        for (std::size_t k = j + 1; k < M; ++k) rest = std::max(rest, ub[k]);
        if (rest - best.value <= *budget.suboptimality_eps) break;
      }
    }
  }
  if (best.value == -kInf) throw OracleError("empty feasible set");
  if (budgeted && j < M) {
    double rest = -kInf;
    for (std::size_t k = j + 1; k < M; ++k) rest = std::max(rest, ub[k]);
    best.eps_bound = std::max(0.0, rest - best.value);
  }
  return best;
}

}  // namespace invopt
