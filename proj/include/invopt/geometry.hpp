#pragma once

#include <ostream>
#include <optional>
#include <vector>

#include "invopt/core.hpp"
#include "invopt/losses.hpp"

namespace invopt {

/// Where a cone row comes from: instance index and the competing response.
struct RowProvenance {
  std::size_t instance = 0;
  Response response;
};

/// {theta : rows * theta <= 0}. Row k is phi(s_i, xhat_i) - phi(s_i, x).
struct ConeDescription {
  int dimension = 0;
  Eigen::MatrixXd rows;
  std::vector<RowProvenance> provenance;
  /// d(xhat_i, x) per row (scaled along with the row when normalized).
  Eigen::VectorXd distances;
  bool normalize = false;

  Eigen::Index size() const { return rows.rows(); }
  bool contains(const CostVector& theta, double tol = 1e-9) const;
  Eigen::VectorXd row_norms() const;
};

/// One row per (instance, feasible response) with nonzero difference, in
/// instance-major, enumeration order.
ConeDescription build_cone(const IODataset& ds, const FeatureMap& phi,
                           const DistanceFn& d = DistanceFn::zero(), bool normalize = false);

/// Columns: row, instance, response, a_0..a_{p-1}, distance.
void write_cone_csv(std::ostream& os, const ConeDescription& cone);

/// A point of C intersected with Theta. Nonneg sets use sum(theta) = 1;
/// Theta = all scans the 2p facets theta_k = +-1 of the unit max-norm ball
/// and rescales the first feasible point to unit l1 norm. Throws
/// InconsistentDataError when C meets Theta only at 0.
CostVector feasibility_program(const ConeDescription& cone, const ThetaSet& set);

struct IncenterResult {
  CostVector theta;
  double margin_r = 0.0;
  CostVector raw_theta;
};

/// min R(theta) s.t. <theta, a_k> + d_k <= 0, theta in Theta. Offsets default
/// to the row norms, which with R = half_sq_l2 gives the incenter itself.
/// Throws NoInteriorError when the constraints are infeasible.
IncenterResult incenter(const ConeDescription& cone, const ThetaSet& set = ThetaSet::all(),
                        Regularizer reg = Regularizer::half_sq_l2,
                        const std::optional<Eigen::VectorXd>& offsets = std::nullopt);

/// Unit extreme rays of C (with the orthant rows added for nonneg Theta),
/// duplicates merged.
std::vector<Eigen::VectorXd> extreme_rays(const ConeDescription& cone, const ThetaSet& set = ThetaSet::all());

/// Axis of the narrowest revolution cone around C: maximizes the smallest
/// inner product with the extreme rays over the unit ball. Exponential in p.
CostVector circumcenter_desk(const ConeDescription& cone, int max_dim = 8,
                             const ThetaSet& set = ThetaSet::all());

/// Angle in [0, pi].
double angle(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

}  // namespace invopt
