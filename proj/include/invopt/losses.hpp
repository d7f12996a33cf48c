#pragma once

#include <optional>
#include <string>
#include <vector>

#include "invopt/core.hpp"

namespace invopt {

enum class Regularizer { none, half_sq_l2, l1 };
std::string to_string(Regularizer r);
Regularizer regularizer_from_string(const std::string& name);

double regularizer_value(Regularizer r, const CostVector& theta);
/// Gradient, or the subgradient with 0 at the kinks of the l1 norm.
Eigen::VectorXd regularizer_subgradient(Regularizer r, const CostVector& theta);

struct LossReport {
  double value = 0.0;
  Response argmax_response;
  double eps_bound = 0.0;
  std::vector<double> per_instance;
  std::vector<Response> witnesses;
};

struct SubgradientReport {
  Eigen::VectorXd vector;
  double eps = 0.0;
  std::vector<std::size_t> sampled_indices;
  std::vector<Response> witnesses;
};

/// max_{x in X(s)} <theta, phi(s,xhat) - phi(s,x)> + d(xhat, x).
LossReport asl(const CostVector& theta, const IOInstance& inst, const FeatureMap& phi,
               const DistanceFn& d, const Budget& budget = {});

/// asl with d = 0.
LossReport suboptimality(const CostVector& theta, const IOInstance& inst, const FeatureMap& phi,
                         const Budget& budget = {});

/// max{0, asl}.
LossReport asl_hinge(const CostVector& theta, const IOInstance& inst, const FeatureMap& phi,
                     const DistanceFn& d, const Budget& budget = {});

inline constexpr double kArgminTol = 1e-9;

/// min d(xhat, x) over the argmin set of <theta, phi(s,.)>, the set taken
/// with absolute tolerance kArgminTol. Finite oracles only.
double gpl(const CostVector& theta, const IOInstance& inst, const FeatureMap& phi,
           const DistanceFn& d);

struct LossOptions {
  double kappa = 0.0;
  Regularizer regularizer = Regularizer::none;
  /// Clamp every per-instance term at zero.
  bool hinge = false;
};

/// kappa R(theta) + (1/N) sum_i asl_i, summed in index order.
LossReport empirical_loss(const CostVector& theta, const IODataset& ds, const FeatureMap& phi,
                          const DistanceFn& d, const LossOptions& opt, const Budget& budget = {});

/// kappa dR(theta) + mean over the batch of phi(s_j, xhat_j) - phi(s_j, x_j*).
/// An empty batch means the full dataset.
SubgradientReport subgradient(const CostVector& theta, const IODataset& ds, const FeatureMap& phi,
                              const DistanceFn& d, const LossOptions& opt,
                              const std::optional<std::vector<std::size_t>>& batch = std::nullopt,
                              const Budget& budget = {});

}  // namespace invopt
