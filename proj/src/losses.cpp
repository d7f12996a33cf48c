#include "invopt/losses.hpp"

#include <cmath>

#include "invopt/solvers.hpp"

namespace invopt {

std::string to_string(Regularizer r) {
  switch (r) {
    case Regularizer::none: return "none";
    case Regularizer::half_sq_l2: return "half_sq_l2";
    case Regularizer::l1: return "l1";
  }
  return "none";
}

Regularizer regularizer_from_string(const std::string& name) {
  if (name == "none") return Regularizer::none;
  if (name == "half_sq_l2" || name == "l2") return Regularizer::half_sq_l2;
  if (name == "l1") return Regularizer::l1;
  throw ConfigError("unknown regularizer '" + name + "'");
}

double regularizer_value(Regularizer r, const CostVector& theta) {
  switch (r) {
    case Regularizer::none: return 0.0;
    case Regularizer::half_sq_l2: return 0.5 * theta.squaredNorm();
    case Regularizer::l1: return theta.lpNorm<1>();
  }
  return 0.0;
}

Eigen::VectorXd regularizer_subgradient(Regularizer r, const CostVector& theta) {
  switch (r) {
    case Regularizer::none: return Eigen::VectorXd::Zero(theta.size());
    case Regularizer::half_sq_l2: return theta;
    case Regularizer::l1:
      return theta.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
  }
  return Eigen::VectorXd::Zero(theta.size());
}

LossReport asl(const CostVector& theta, const IOInstance& inst, const FeatureMap& phi,
               const DistanceFn& d, const Budget& budget) {
  if (!inst.oracle) throw ConfigError("instance without a feasible-set oracle");
  check_cost_vector(theta, phi.dimension);
  const InnerResult r = inst.oracle->inner_max(inst.signal, inst.response, theta, phi, d, budget);
  LossReport out;
  out.value = r.value;
  out.argmax_response = r.x;
  out.eps_bound = r.eps_bound;
  return out;
}

LossReport suboptimality(const CostVector& theta, const IOInstance& inst, const FeatureMap& phi,
                         const Budget& budget) {
  return asl(theta, inst, phi, DistanceFn::zero(), budget);
}

LossReport asl_hinge(const CostVector& theta, const IOInstance& inst, const FeatureMap& phi,
                     const DistanceFn& d, const Budget& budget) {
  LossReport r = asl(theta, inst, phi, d, budget);
  if (r.value < 0.0) {
    r.value = 0.0;
    r.argmax_response = inst.response;
  }
  return r;
}

double gpl(const CostVector& theta, const IOInstance& inst, const FeatureMap& phi,
           const DistanceFn& d) {
  if (!inst.oracle || !inst.oracle->enumerable())
    throw OracleError("gpl needs a finite-enumerable oracle");
  check_cost_vector(theta, phi.dimension);
  const auto all = inst.oracle->enumerate(inst.signal);
  if (all.empty()) throw OracleError("empty feasible set");
  std::vector<double> cost(all.size());
  double best = kInf;
  for (std::size_t k = 0; k < all.size(); ++k) {
    cost[k] = evaluate_hypothesis(theta, phi, inst.signal, all[k]);
    best = std::min(best, cost[k]);
  }
  double out = kInf;
  for (std::size_t k = 0; k < all.size(); ++k)
    if (cost[k] <= best + kArgminTol) out = std::min(out, d(inst.response, all[k]));
  return out;
}

LossReport empirical_loss(const CostVector& theta, const IODataset& ds, const FeatureMap& phi,
                          const DistanceFn& d, const LossOptions& opt, const Budget& budget) {
  if (!(opt.kappa >= 0.0)) throw ConfigError("kappa must be nonnegative");
  if (ds.empty()) throw DimensionError("dataset is empty");
  LossReport out;
  out.per_instance.reserve(ds.size());
  double sum = 0.0, eps = 0.0;
  for (const auto& inst : ds.instances) {
    const LossReport r = opt.hinge ? asl_hinge(theta, inst, phi, d, budget) : asl(theta, inst, phi, d, budget);
    out.per_instance.push_back(r.value);
    out.witnesses.push_back(r.argmax_response);
    sum += r.value;
    eps += r.eps_bound;
  }
  const double n = double(ds.size());
  out.value = opt.kappa * regularizer_value(opt.regularizer, theta) + sum / n;
  out.eps_bound = eps / n;
  if (!out.witnesses.empty()) out.argmax_response = out.witnesses.front();
  return out;
}

SubgradientReport subgradient(const CostVector& theta, const IODataset& ds, const FeatureMap& phi,
                              const DistanceFn& d, const LossOptions& opt,
                              const std::optional<std::vector<std::size_t>>& batch,
                              const Budget& budget) {
  if (ds.empty()) throw DimensionError("dataset is empty");
  check_cost_vector(theta, phi.dimension);
  SubgradientReport out;
  if (batch) {
    if (batch->empty()) throw ConfigError("batch must be non-empty");
    out.sampled_indices = *batch;
  } else {
    out.sampled_indices.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) out.sampled_indices[i] = i;
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(theta.size());
  double eps = 0.0;
  for (std::size_t j : out.sampled_indices) {
    if (j >= ds.size()) throw DimensionError("batch index out of range");
    const IOInstance& inst = ds[j];
    const LossReport r = asl(theta, inst, phi, d, budget);
    out.witnesses.push_back(r.argmax_response);
    eps += r.eps_bound;
    if (opt.hinge && r.value < 0.0) continue;
    acc += phi(inst.signal, inst.response) - phi(inst.signal, r.argmax_response);
  }
  const double b = double(out.sampled_indices.size());
  out.vector = opt.kappa * regularizer_subgradient(opt.regularizer, theta) + acc / b;
  out.eps = eps / b;
  return out;
}

}  // namespace invopt
