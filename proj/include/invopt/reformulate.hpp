#pragma once

#include <vector>

#include "invopt/losses.hpp"
#include "invopt/oracles.hpp"
#include "invopt/solvers.hpp"

namespace invopt {

struct TrainerSolution {
  CostVector theta;
  double objective = 0.0;
  Eigen::VectorXd slacks;
  /// lambda[i][j][k] for the mixed-integer LP (instance, z index, h index).
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> duals;
  SolveStatus status = SolveStatus::optimal;
  SolveResult certificate;
  /// Number of constraint rows of the program that was solved.
  Eigen::Index rows = 0;
};

struct TrainerOptions {
  double kappa = 0.001;
  Regularizer regularizer = Regularizer::half_sq_l2;
  ThetaSet theta_set = ThetaSet::all();
  bool hinge = false;
  /// Refuse programs whose dense constraint matrix would exceed this many entries.
  double max_matrix_entries = 6e7;
  /// Enumerated trainer with a quadratic regularizer and many rows: solve on
  /// a working set of rows grown from the violated ones.
  bool row_generation = true;
};

/// min kappa R(theta) + (1/N) sum beta_i
/// s.t. <theta, phi(s_i, xhat_i) - phi(s_i, x)> + d(xhat_i, x) <= beta_i for all
/// feasible x, theta in Theta, and beta_i >= 0 when hinge is set.
/// Rows are instance-major in enumeration order.
TrainerSolution train_asl_enumerated(const IODataset& ds, const FeatureMap& phi, const DistanceFn& d,
                                     const TrainerOptions& opt = {});

/// Dualized program for mixed-integer sets with the linear hypothesis of the
/// dataset's MixedIntegerOracle. d = ||yhat - y||_inf + d_z when penalize_y,
/// else d_z alone (one zero h). Variables are ordered (theta, beta, lambda);
/// rows are instance-major, then z, then h. The y box is appended to A.
TrainerSolution train_asl_mixed_integer_lp(const IODataset& ds, const DistanceFn& dz,
                                           const TrainerOptions& opt = {});

/// The inner problem max_y -<y, Q phi1 + h> over the y polytope of (s, z), the
/// primal side of one dualized block.
double mixed_integer_inner_primal(const MixedIntegerOracle& oracle, const Signal& s, const Eigen::VectorXi& z,
                                  const CostVector& theta, const Eigen::VectorXd& h);

/// Suboptimality loss trained on the 2p facets theta_k = +-1 of the unit
/// max-norm ball (intersected with Theta); best facet wins, first on ties.
TrainerSolution train_suboptimality_facets(const IODataset& ds, const FeatureMap& phi,
                                           const ThetaSet& set = ThetaSet::all());

struct AffineForm {
  Eigen::VectorXd c_lin;
  double c_const = 0.0;
};

/// <theta, xhat - x> + ||xhat - x||_1 = <c_lin, x> + c_const on binary x.
AffineForm tu_inner_rewrite(const Eigen::VectorXi& xhat, const CostVector& theta);

/// Loss with l1 distance via the LP relaxation max <c_lin, x> over
/// {A x <= b, 0 <= x <= 1}; exact when A is totally unimodular and b integral.
double asl_tu_lp(const CostVector& theta, const Signal& s, const Eigen::VectorXi& xhat);

}  // namespace invopt
