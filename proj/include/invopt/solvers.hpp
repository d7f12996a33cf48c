#pragma once

// Dense LP/QP solvers and the inner-maximization engines behind the oracles.

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invopt/core.hpp"

namespace invopt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// min c'x  s.t.  G x <= h,  E x = f,  lower <= x <= upper.
/// Empty bound vectors mean "free".
struct LinearProgramSpec {
  Eigen::VectorXd objective;
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd ineq_rhs;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index num_vars() const { return objective.size(); }
  /// Throws DimensionError on inconsistent blocks or non-finite objective.
  void validate() const;
};

/// min 0.5 x'Px + q'x under the same constraint blocks.
struct QpSpec {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd ineq_rhs;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  void validate() const;
  LinearProgramSpec linear_part() const;
};

enum class SolveStatus { optimal, infeasible, unbounded, iteration_limit };
std::string to_string(SolveStatus s);

/// Multipliers follow the Lagrangian
///   f(x) + mu'(Gx - h) + nu'(Ex - f) + zl'(lower - x) + zu'(x - upper),
/// with mu, zl, zu >= 0.
struct SolveResult {
  SolveStatus status = SolveStatus::infeasible;
  Eigen::VectorXd x;
  double objective = kInf;
  Eigen::VectorXd ineq_duals;
  Eigen::VectorXd eq_duals;
  Eigen::VectorXd lower_duals;
  Eigen::VectorXd upper_duals;
  double dual_objective = -kInf;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;
  long iterations = 0;
  /// Set by solve_qp when P = 0 and the LP path did the work.
  bool delegated_to_lp = false;
  /// Set by solve_lp when the problem was solved through its dual.
  bool solved_dual = false;

  bool optimal() const { return status == SolveStatus::optimal; }
};

struct LpOptions {
  long max_iterations = 0;  // 0: automatic
  int degenerate_switch = 50;
  /// Force a route; by default the smaller tableau wins.
  enum class Route { automatic, primal, dual } route = Route::automatic;
  std::size_t max_tableau_entries = 400'000'000;
};

SolveResult solve_lp(const LinearProgramSpec& spec, const LpOptions& opts = {});

struct QpOptions {
  long max_iterations = 200'000;
  /// Optional feasible starting point; otherwise a phase-1 LP is solved.
  Eigen::VectorXd start;
};

SolveResult solve_qp(const QpSpec& spec, const QpOptions& opts = {});

/// Plain-text dump of an LP for failure triage.
std::string dump_lp(const LinearProgramSpec& spec);

/// Scalar objective of the inner problem at a candidate x. Every engine and
/// brute-force path goes through this so values agree bit for bit.
double inner_objective(const CostVector& theta, const Eigen::VectorXd& phi_hat,
                       const FeatureMap& phi, const DistanceFn& d, const Signal& s,
                       const Response& xhat, const Response& x);

/// Inner maximization over a finite oracle. Binary-LP oracles with identity
/// features and a built-in distance use depth-first branch and bound in
/// lexicographic order; everything else falls back to a full scan of
/// enumerate(). A node budget counts evaluated leaves.
InnerResult argmax_finite(const FeasibleSetOracle& oracle, const Signal& s, const Response& xhat,
                          const CostVector& theta, const FeatureMap& phi, const DistanceFn& d,
                          const Budget& budget);

/// Brute-force reference: scan of enumerate(), first strict maximum wins.
InnerResult argmax_enumerate(const std::vector<Response>& feasible, const Signal& s,
                             const Response& xhat, const CostVector& theta, const FeatureMap& phi,
                             const DistanceFn& d);

class MixedIntegerOracle;

/// Inner maximization over {(y, z): A y + B z <= c, lo <= y <= hi, z in Z}.
/// For every z (and every h_k when the oracle penalizes y) one LP over y.
InnerResult argmax_mixed_integer(const MixedIntegerOracle& oracle, const Signal& s,
                                 const Response& xhat, const CostVector& theta,
                                 const DistanceFn& dz, const Budget& budget);

}  // namespace invopt
