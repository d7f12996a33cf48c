#include "invopt/samd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "invopt/parallel.hpp"
#include "invopt/reformulate.hpp"
#include "invopt/rng.hpp"

namespace invopt {

namespace {

constexpr std::uint64_t kSamplingStream = 5;

bool unbounded(const ThetaSet& s) { return s.kind != ThetaSet::Kind::box && !(s.kind == ThetaSet::Kind::nonneg && s.unit_sum); }

}  // namespace

void MirrorMap::validate() const {
  if (kind == MirrorKind::entropic_simplex && !(kappa_tilde > 0.0 && std::isfinite(kappa_tilde)))
    throw ConfigError("entropic mirror needs kappa_tilde > 0");
}

double StepRule::eta(long t, double dual_norm) const {
  switch (kind) {
    case StepKind::c_over_sqrt_t:
      return c / std::sqrt(double(t));
    case StepKind::two_over_alpha_t:
      return 2.0 / (alpha * double(t + 1));
    case StepKind::norm_adaptive:
      return dual_norm > 0.0 ? 1.0 / (dual_norm * std::sqrt(double(t))) : 0.0;
  }
  return 0.0;
}

void StepRule::validate() const {
  if (kind == StepKind::c_over_sqrt_t && !(c > 0.0)) throw ConfigError("step constant c must be positive");
  if (kind == StepKind::two_over_alpha_t && !(alpha > 0.0)) throw ConfigError("alpha must be positive");
}

std::string to_string(MirrorKind k) { return k == MirrorKind::euclidean ? "euclidean" : "entropic_simplex"; }

std::string to_string(StepKind k) {
  switch (k) {
    case StepKind::c_over_sqrt_t: return "c_over_sqrt_t";
    case StepKind::two_over_alpha_t: return "two_over_alpha_t";
    case StepKind::norm_adaptive: return "norm_adaptive";
  }
  return "?";
}

std::string to_string(Averaging a) {
  switch (a) {
    case Averaging::none: return "none";
    case Averaging::uniform: return "uniform";
    case Averaging::weighted_t: return "weighted_t";
  }
  return "?";
}

Averaging averaging_from_string(const std::string& name) {
  if (name == "none") return Averaging::none;
  if (name == "uniform") return Averaging::uniform;
  if (name == "weighted_t") return Averaging::weighted_t;
  throw ConfigError("unknown averaging '" + name + "'");
}

Budget EpsSchedule::budget(long t) const {
  switch (kind) {
    case Kind::exact: return Budget::unlimited();
    case Kind::nodes: return Budget::nodes(nodes);
    case Kind::gap_over_t: return Budget::gap(eps0 / double(t));
  }
  return Budget::unlimited();
}

std::optional<double> EpsSchedule::configured(long t) const {
  switch (kind) {
    case Kind::exact: return 0.0;
    case Kind::nodes: return std::nullopt;
    case Kind::gap_over_t: return eps0 / double(t);
  }
  return std::nullopt;
}

void EpsSchedule::validate() const {
  if (kind == Kind::nodes && nodes == 0) throw ConfigError("node budget must be positive");
  if (kind == Kind::gap_over_t && !(eps0 >= 0.0)) throw ConfigError("eps0 must be nonnegative");
}

void SamdConfig::validate(std::size_t n) const {
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (batch_size > n) throw ConfigError("batch size exceeds the dataset size");
  if (loss_every < 0 || snapshot_stride < 0) throw ConfigError("strides must be nonnegative");
  step.validate();
  eps.validate();
  theta_set.validate();
}

void write_trace_csv(std::ostream& os, const SamdTrace& trace, bool with_time) {
  os << "iter," << (with_time ? "time_s," : "") << "loss,eps_t,batch_indices\n";
  const auto old = os.precision(17);
  for (const auto& r : trace.rows) {
    os << r.iter << ',';
    if (with_time) os << r.time_s << ',';
    if (std::isnan(r.loss))
      os << ',';
    else
      os << r.loss << ',';
    os << r.eps_t << ',';
    for (std::size_t k = 0; k < r.batch.size(); ++k) os << (k ? ";" : "") << r.batch[k];
    os << '\n';
  }
  os.precision(old);
}

Eigen::VectorXd L1Lift::lift(const CostVector& theta) const {
  if (theta.size() != original_dim) throw DimensionError("lift: wrong dimension");
  if (lifted_dim == original_dim) return theta.cwiseMax(0.0);
  Eigen::VectorXd tt(lifted_dim);
  tt << theta.cwiseMax(0.0), (-theta).cwiseMax(0.0);
  return tt;
}

L1Lift lift_l1_to_simplex(const IODataset& ds, const FeatureMap& phi, const DistanceFn& d, double kappa,
                          const ThetaSet& set, std::optional<double> kappa_tilde) {
  if (set.unit_sum || set.kind == ThetaSet::Kind::box)
    throw ConfigError("the l1 lift supports Theta = R^p or the nonnegative orthant, got " + to_string(set));
  L1Lift out;
  const int p = phi.dimension;
  out.original_dim = p;
  if (set.kind == ThetaSet::Kind::all) {
    out.lifted_dim = 2 * p;
    out.recovery.resize(p, 2 * p);
    out.recovery << Eigen::MatrixXd::Identity(p, p), -Eigen::MatrixXd::Identity(p, p);
  } else {
    out.lifted_dim = p;
    out.recovery = Eigen::MatrixXd::Identity(p, p);
  }
  if (kappa_tilde) {
    if (!(*kappa_tilde > 0.0)) throw ConfigError("kappa_tilde must be positive");
    out.kappa_tilde = *kappa_tilde;
    return out;
  }
  TrainerOptions o;
  o.kappa = kappa;
  o.regularizer = Regularizer::l1;
  o.theta_set = set;
  const auto sol = train_asl_enumerated(ds, phi, d, o);
  const double norm = sol.theta.lpNorm<1>();
  if (norm <= 1e-12) throw ConfigError("kappa_tilde calibration: the l1-regularized optimum is zero");
  out.kappa_tilde = 1.0 / norm;
  return out;
}

double lifted_loss(const L1Lift& lift, const Eigen::VectorXd& tt, const IODataset& ds, const FeatureMap& phi,
                   const DistanceFn& d) {
  if (tt.size() != lift.lifted_dim) throw DimensionError("lifted_loss: wrong dimension");
  return empirical_loss(lift.recover(tt), ds, phi, d, {}).value;
}

double samd_objective(const SamdProblem& prob, const CostVector& theta) {
  return empirical_loss(theta, *prob.ds, prob.phi, prob.d, prob.loss).value;
}

SamdResult samd_train(const SamdProblem& prob, const MirrorMap& mirror, const SamdConfig& cfg, const L1Lift* lift,
                      const std::vector<long>& checkpoints) {
  if (!prob.ds || prob.ds->empty()) throw ConfigError("samd: empty dataset");
  const IODataset& ds = *prob.ds;
  const std::size_t N = ds.size();
  mirror.validate();
  cfg.validate(N);
  const bool ent = mirror.kind == MirrorKind::entropic_simplex;
  if (ent && !lift) throw ConfigError("entropic mirror needs the l1 lift");
  if (ent && lift->original_dim != prob.phi.dimension) throw DimensionError("lift does not match the feature map");
  const int p = ent ? lift->lifted_dim : prob.phi.dimension;
  const double kt = mirror.kappa_tilde;

  Eigen::VectorXd x;
  if (cfg.theta0) {
    x = *cfg.theta0;
    if (x.size() != p) throw DimensionError("theta0 has the wrong dimension");
    if (ent && (x.minCoeff() <= 0.0 || kt * x.sum() > 1.0 + 1e-12))
      throw ConfigError("entropic start must be positive and within the budget");
    if (!ent) x = cfg.theta_set.project(x);
  } else {
    x = ent ? Eigen::VectorXd::Constant(p, 1.0 / (kt * p)) : cfg.theta_set.project(Eigen::VectorXd::Zero(p));
  }
  LossOptions lo = prob.loss;
  if (ent) lo = {0.0, Regularizer::none, prob.loss.hinge};

  const long T = cfg.steps;
  const long stride = cfg.snapshot_stride > 0 ? cfg.snapshot_stride : std::max(1L, T / 1000);
  SamdTrace trace;
  trace.rows.reserve(std::size_t(T));
  Eigen::VectorXd sum_u = Eigen::VectorXd::Zero(p), sum_w = Eigen::VectorXd::Zero(p);

  Rng rng(cfg.seed, kSamplingStream);
  std::vector<std::size_t> perm(N);
  for (std::size_t i = 0; i < N; ++i) perm[i] = i;

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  double paused = 0.0;
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count() - paused; };

  for (long t = 1; t <= T; ++t) {
    TraceRow row;
    row.iter = t;
    if (cfg.batch_size == N) {
      row.batch = perm;
    } else {
      for (std::size_t k = 0; k < cfg.batch_size; ++k) std::swap(perm[k], perm[k + rng.index(N - k)]);
      row.batch.assign(perm.begin(), perm.begin() + long(cfg.batch_size));
    }
    const CostVector th = ent ? lift->recover(x) : x;
    if (cfg.loss_every > 0 && (t - 1) % cfg.loss_every == 0) {
      const auto t0 = clock::now();
      row.loss = samd_objective(prob, th);
      paused += std::chrono::duration<double>(clock::now() - t0).count();
    } else {
      row.loss = std::numeric_limits<double>::quiet_NaN();
    }
    const auto sg = subgradient(th, ds, prob.phi, prob.d, lo, row.batch, cfg.eps.budget(t));
    const Eigen::VectorXd g = ent ? lift->pullback(sg.vector) : sg.vector;
    const double dn = ent ? g.lpNorm<Eigen::Infinity>() : g.norm();
    row.eps_t = sg.eps;
    row.grad_norm_sq = dn * dn;

    if ((t - 1) % stride == 0) trace.snapshots.emplace_back(t, x);
    sum_u += x;
    sum_w += double(t) * x;
    if (std::find(checkpoints.begin(), checkpoints.end(), t) != checkpoints.end()) {
      trace.uniform_at.emplace_back(t, sum_u / double(t));
      trace.weighted_at.emplace_back(t, 2.0 * sum_w / (double(t) * double(t + 1)));
    }

    const double eta = cfg.step.eta(t, dn);
    if (ent) {
      // exponentiated step in the log domain, then the budget renormalization
      Eigen::ArrayXd l = x.array().log() - eta * g.array();
      const double m = l.maxCoeff();
      const Eigen::ArrayXd w = (l - m).exp();
      const double s = w.sum();
      if (std::log(kt) + m + std::log(s) <= 0.0)
        x = l.exp().matrix();
      else
        x = (w / (kt * s)).matrix();
      x = x.cwiseMax(std::numeric_limits<double>::min());
    } else {
      x = cfg.theta_set.project(x - eta * g);
    }
    row.time_s = elapsed();
    trace.rows.push_back(std::move(row));
    if (!x.allFinite()) {
      trace.last = x;
      throw SamdDivergence("samd: non-finite iterate at t = " + std::to_string(t), std::move(trace));
    }
  }
  trace.last = x;
  trace.uniform_average = sum_u / double(T);
  trace.weighted_average = 2.0 * sum_w / (double(T) * double(T + 1));

  SamdResult out;
  const Eigen::VectorXd& pick = cfg.averaging == Averaging::none      ? trace.last
                                : cfg.averaging == Averaging::uniform ? trace.uniform_average
                                                                      : trace.weighted_average;
  out.theta = ent ? lift->recover(pick) : pick;
  out.trace = std::move(trace);
  return out;
}

bool RateReport::all_below() const {
  return std::all_of(points.begin(), points.end(), [](const RatePoint& p) { return p.below; });
}

namespace {

double loglog_slope(const std::vector<long>& T, const std::vector<double>& y) {
  const std::size_t n = T.size();
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += std::log(double(T[k]));
    my += std::log(std::max(y[k], 1e-300));
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = std::log(double(T[k])) - mx;
    sxy += dx * (std::log(std::max(y[k], 1e-300)) - my);
    sxx += dx * dx;
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

}  // namespace

RateReport verify_rate(const SamdConfig& cfg, const SamdProblem& prob, const RateOptions& opt) {
  if (!prob.ds || prob.ds->empty()) throw ConfigError("verify_rate: empty dataset");
  if (opt.horizons.empty() || opt.trials < 1) throw ConfigError("verify_rate: no horizons or trials");
  const bool strong = cfg.step.kind == StepKind::two_over_alpha_t;
  if (cfg.step.kind == StepKind::norm_adaptive) throw ConfigError("verify_rate: no bound for norm_adaptive steps");
  if (strong && (prob.loss.regularizer != Regularizer::half_sq_l2 || cfg.step.alpha > prob.loss.kappa))
    throw ConfigError("verify_rate: the strongly convex bound needs half_sq_l2 and alpha <= kappa");

  RateReport rep;
  const int p = prob.phi.dimension;
  ThetaSet set = cfg.theta_set;
  if (unbounded(set)) {
    const double r = opt.box_radius;
    const bool nonneg = set.kind == ThetaSet::Kind::nonneg;
    const bool us = set.unit_sum;
    set = ThetaSet::box(nonneg ? 0.0 : -r, r);
    set.unit_sum = us;
    rep.box_restricted = true;
    rep.note = "Theta is unbounded; restricted to " + to_string(set);
  }
  rep.effective_set = set;
  if (set.kind == ThetaSet::Kind::nonneg)
    rep.R2 = 1.0;  // simplex: max 0.5 ||e_i - e_j||^2
  else
    rep.R2 = 0.5 * p * (set.hi - set.lo) * (set.hi - set.lo);

  TrainerOptions to;
  to.kappa = prob.loss.kappa;
  to.regularizer = prob.loss.regularizer;
  to.theta_set = set;
  to.hinge = prob.loss.hinge;
  rep.f_star = train_asl_enumerated(*prob.ds, prob.phi, prob.d, to).objective;

  std::vector<long> H = opt.horizons;
  std::sort(H.begin(), H.end());
  const long Tmax = H.back();
  const std::size_t K = H.size();
  std::vector<std::vector<double>> gaps(std::size_t(opt.trials), std::vector<double>(K));
  std::vector<std::vector<double>> eps_sum(std::size_t(opt.trials), std::vector<double>(K));
  std::vector<double> g2(std::size_t(opt.trials));

  parallel_for(std::size_t(opt.trials), [&](std::size_t k) {
    SamdConfig c = cfg;
    c.seed = cfg.seed + k;
    c.steps = Tmax;
    c.theta_set = set;
    c.loss_every = 0;
    const auto res = samd_train(prob, MirrorMap::euclidean(), c, nullptr, H);
    const auto& avgs = strong ? res.trace.weighted_at : res.trace.uniform_at;
    double acc = 0.0, gmax = 0.0;
    std::size_t h = 0;
    for (const auto& row : res.trace.rows) {
      const double e = cfg.eps.configured(row.iter).value_or(row.eps_t);
      acc += strong ? double(row.iter) * e : e;
      gmax = std::max(gmax, row.grad_norm_sq);
      if (h < K && row.iter == H[h]) eps_sum[k][h++] = acc;
    }
    for (std::size_t j = 0; j < K; ++j) gaps[k][j] = samd_objective(prob, avgs[j].second) - rep.f_star;
    g2[k] = gmax;
  });

  rep.G2 = *std::max_element(g2.begin(), g2.end());
  std::vector<double> mean_gap(K), adj(K);
  for (std::size_t j = 0; j < K; ++j) {
    RatePoint pt;
    pt.T = H[j];
    double es = 0.0;
    for (int k = 0; k < opt.trials; ++k) {
      pt.mean_gap += gaps[std::size_t(k)][j];
      es = std::max(es, eps_sum[std::size_t(k)][j]);
    }
    pt.mean_gap /= opt.trials;
    const double T = double(pt.T);
    if (strong) {
      pt.eps_term = 2.0 * es / (T * (T + 1));
      pt.bound = 2.0 * rep.G2 / (cfg.step.alpha * (T + 1)) + pt.eps_term;
    } else {
      pt.eps_term = es / T;
      pt.bound = (rep.R2 / cfg.step.c + cfg.step.c * rep.G2) / std::sqrt(T) + pt.eps_term;
    }
    pt.below = pt.mean_gap <= pt.bound;
    mean_gap[j] = pt.mean_gap;
    adj[j] = pt.mean_gap - pt.eps_term;
    rep.points.push_back(pt);
  }
  rep.slope = loglog_slope(H, mean_gap);
  rep.slope_eps_adjusted = loglog_slope(H, adj);
  return rep;
}

}  // namespace invopt
