#pragma once

// Stochastic approximate mirror descent for
//   min_{theta in Theta} kappa R(theta) + (1/N) sum_i loss_theta(s_i, xhat_i)
// and a harness that checks its averaged iterates against the rate bound.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "invopt/losses.hpp"

namespace invopt {

enum class MirrorKind { euclidean, entropic_simplex };

struct MirrorMap {
  MirrorKind kind = MirrorKind::euclidean;
  /// Budget of the lifted feasible set {tt >= 0 : kappa_tilde ||tt||_1 <= 1}.
  double kappa_tilde = 1.0;

  static MirrorMap euclidean() { return {}; }
  static MirrorMap entropic(double kappa_tilde) { return {MirrorKind::entropic_simplex, kappa_tilde}; }
  void validate() const;
};

enum class StepKind { c_over_sqrt_t, two_over_alpha_t, norm_adaptive };

struct StepRule {
  StepKind kind = StepKind::c_over_sqrt_t;
  double c = 1.0;
  double alpha = 0.0;

  static StepRule c_over_sqrt_t(double c) { return {StepKind::c_over_sqrt_t, c, 0.0}; }
  static StepRule two_over_alpha_t(double alpha) { return {StepKind::two_over_alpha_t, 1.0, alpha}; }
  /// 1 / (||g||_* sqrt(t)).
  static StepRule norm_adaptive() { return {StepKind::norm_adaptive, 1.0, 0.0}; }

  double eta(long t, double dual_norm) const;
  void validate() const;
};

enum class Averaging { none, uniform, weighted_t };

std::string to_string(MirrorKind k);
std::string to_string(StepKind k);
std::string to_string(Averaging a);
Averaging averaging_from_string(const std::string& name);

/// Oracle work per iteration. `gap_over_t` asks the inner search to stop
/// once its certified gap is at most eps0 / t; `nodes` caps the leaves of
/// the search (node budgets replace wall-clock limits for determinism).
struct EpsSchedule {
  enum class Kind { exact, nodes, gap_over_t };
  Kind kind = Kind::exact;
  std::size_t nodes = 0;
  double eps0 = 0.0;

  static EpsSchedule exact() { return {}; }
  static EpsSchedule node_budget(std::size_t n) { return {Kind::nodes, n, 0.0}; }
  static EpsSchedule gap_over_t(double eps0) { return {Kind::gap_over_t, 0, eps0}; }

  Budget budget(long t) const;
  /// A priori bound on eps_t; nullopt for node budgets.
  std::optional<double> configured(long t) const;
  void validate() const;
};

struct SamdConfig {
  long steps = 1000;
  StepRule step = StepRule::c_over_sqrt_t(1.0);
  std::size_t batch_size = 1;
  EpsSchedule eps;
  Averaging averaging = Averaging::uniform;
  std::uint64_t seed = 0;
  /// Feasible set for the euclidean mirror (ignored by the entropic one).
  ThetaSet theta_set = ThetaSet::all();
  /// Starting point; defaults to the projection of 0 (euclidean) or the
  /// uniform point on the budget boundary (entropic).
  std::optional<Eigen::VectorXd> theta0;
  /// Record the objective every k iterations (0 = never).
  long loss_every = 0;
  /// 0 selects max(1, steps / 1000).
  long snapshot_stride = 0;

  void validate(std::size_t dataset_size) const;
};

struct TraceRow {
  long iter = 0;
  /// Seconds since the start, excluding objective evaluations.
  double time_s = 0.0;
  /// Objective at the iterate the subgradient was taken at; NaN when not recorded.
  double loss = 0.0;
  double eps_t = 0.0;
  double grad_norm_sq = 0.0;
  std::vector<std::size_t> batch;
};

struct SamdTrace {
  std::vector<TraceRow> rows;
  /// (t, theta_t) every snapshot_stride iterations starting at t = 1, in the
  /// coordinates the algorithm runs in (lifted for the entropic mirror).
  std::vector<std::pair<long, Eigen::VectorXd>> snapshots;
  Eigen::VectorXd last;
  Eigen::VectorXd uniform_average;
  Eigen::VectorXd weighted_average;
  /// Running averages reported at selected T (see SamdCheckpoints).
  std::vector<std::pair<long, Eigen::VectorXd>> uniform_at;
  std::vector<std::pair<long, Eigen::VectorXd>> weighted_at;
};

void write_trace_csv(std::ostream& os, const SamdTrace& trace, bool with_time = true);

/// Problem after the l1 lift: theta = recovery * tt with tt >= 0 and
/// kappa_tilde ||tt||_1 <= 1. The recovery is [I -I] for Theta = R^p and
/// I for the nonnegative orthant.
struct L1Lift {
  int original_dim = 0;
  int lifted_dim = 0;
  double kappa_tilde = 1.0;
  Eigen::MatrixXd recovery;

  CostVector recover(const Eigen::VectorXd& tt) const { return recovery * tt; }
  /// Positive and negative parts.
  Eigen::VectorXd lift(const CostVector& theta) const;
  /// recovery^T g.
  Eigen::VectorXd pullback(const Eigen::VectorXd& g) const { return recovery.transpose() * g; }
};

/// Lift of the l1-regularized problem. Without an explicit kappa_tilde the
/// full-batch problem is solved once with the enumerated trainer and
/// kappa_tilde = 1 / ||theta*||_1.
L1Lift lift_l1_to_simplex(const IODataset& ds, const FeatureMap& phi, const DistanceFn& d, double kappa,
                          const ThetaSet& set, std::optional<double> kappa_tilde = std::nullopt);

/// Empirical loss (without regularizer) at recover(tt).
double lifted_loss(const L1Lift& lift, const Eigen::VectorXd& tt, const IODataset& ds, const FeatureMap& phi,
                   const DistanceFn& d);

struct SamdProblem {
  const IODataset* ds = nullptr;
  FeatureMap phi;
  DistanceFn d;
  LossOptions loss;
};

struct SamdResult {
  /// Output in the original coordinates.
  CostVector theta;
  SamdTrace trace;
};

/// Iterate divergence; carries the trace up to the failure.
class SamdDivergence : public SolverError {
 public:
  SamdDivergence(const std::string& what, SamdTrace t) : SolverError(what), trace(std::move(t)) {}
  SamdTrace trace;
};

/// Euclidean mirror: projected subgradient steps on Theta. Entropic mirror:
/// exponentiated steps on the lifted set of `lift` (required), with the
/// regularizer replaced by the budget. `checkpoints` are the T at which
/// running averages are kept in the trace.
SamdResult samd_train(const SamdProblem& prob, const MirrorMap& mirror, const SamdConfig& cfg,
                      const L1Lift* lift = nullptr, const std::vector<long>& checkpoints = {});

/// Objective that the trace records: kappa R + mean loss (euclidean), or the
/// same objective at the recovered point (entropic).
double samd_objective(const SamdProblem& prob, const CostVector& theta);

struct RatePoint {
  long T = 0;
  double mean_gap = 0.0;
  double bound = 0.0;
  double eps_term = 0.0;
  bool below = false;
};

struct RateReport {
  std::vector<RatePoint> points;
  double f_star = 0.0;
  double R2 = 0.0;
  double G2 = 0.0;
  /// Least-squares slope of log(mean gap) against log T.
  double slope = 0.0;
  /// Same with the eps term removed from the gap (clipped at 1e-300).
  double slope_eps_adjusted = 0.0;
  ThetaSet effective_set;
  bool box_restricted = false;
  std::string note;

  bool all_below() const;
};

struct RateOptions {
  std::vector<long> horizons{100, 1000, 10000};
  int trials = 10;
  /// Half-width of the box used when Theta is unbounded.
  double box_radius = 1.0;
};

/// Seeded SAMD runs (euclidean mirror) against the optimum from the
/// enumerated trainer. c_over_sqrt_t uses the uniform average and the
/// convex bound; two_over_alpha_t the weighted average and the strongly
/// convex bound with alpha from the config (requires half_sq_l2 and
/// alpha <= kappa). Trials run concurrently with seeds cfg.seed + k.
RateReport verify_rate(const SamdConfig& cfg, const SamdProblem& prob, const RateOptions& opt = {});

}  // namespace invopt
