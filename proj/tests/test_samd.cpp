#include <doctest.h>

#include <map>
#include <set>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "invopt/reformulate.hpp"
#include "invopt/rng.hpp"
#include "invopt/samd.hpp"

using namespace invopt;

TEST_CASE("rng: reproducible streams and unbiased helpers") {
  Rng a(42), b(42), c(42, 1);
  for (int k = 0; k < 100; ++k) CHECK(a() == b());
  CHECK(Rng(42)() != c());
  CHECK(a.substream(3)() == b.substream(3)());
  CHECK(a.substream(3)() != a.substream(4)());
  // splitmix64 reference value for state 0
  std::uint64_t s = 0;
  CHECK(splitmix64(s) == 0xE220A8397B1DCDAFull);

  Rng r(7);
  std::vector<int> counts(5);
  double m = 0, v = 0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    ++counts[r.index(5)];
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    const double z = r.normal();
    m += z;
    v += z * z;
  }
  for (int c5 : counts) CHECK(std::abs(c5 - n / 5) < 4 * std::sqrt(n * 0.16));
  CHECK(std::abs(m / n) < 0.02);
  CHECK(std::abs(v / n - 1) < 0.03);
}

TEST_CASE("samd: configuration checks") {
  std::mt19937_64 g(1);
  const auto ds = fx::random_feasible_dataset(g, 5, 2, 3);
  SamdProblem prob{&ds, FeatureMap::identity(3), DistanceFn::l1(), {}};
  SamdConfig cfg;
  cfg.steps = 0;
  CHECK_THROWS_AS(samd_train(prob, MirrorMap::euclidean(), cfg), ConfigError);
  cfg.steps = 5;
  cfg.batch_size = 6;
  CHECK_THROWS_AS(samd_train(prob, MirrorMap::euclidean(), cfg), ConfigError);
  cfg.batch_size = 1;
  cfg.step = StepRule::two_over_alpha_t(0.0);
  CHECK_THROWS_AS(samd_train(prob, MirrorMap::euclidean(), cfg), ConfigError);
  cfg.step = StepRule::norm_adaptive();
  CHECK_THROWS_AS(samd_train(prob, MirrorMap::entropic(1.0), cfg), ConfigError);  // no lift
  CHECK_THROWS_AS(samd_train(prob, MirrorMap::entropic(-1.0), cfg), ConfigError);
  CHECK(StepRule::c_over_sqrt_t(2).eta(4, 9) == 1.0);
  CHECK(StepRule::two_over_alpha_t(0.5).eta(3, 9) == 1.0);
  CHECK(StepRule::norm_adaptive().eta(4, 0.25) == 2.0);
  CHECK(StepRule::norm_adaptive().eta(4, 0.0) == 0.0);
  CHECK(EpsSchedule::gap_over_t(2).configured(4) == 0.5);
  CHECK(!EpsSchedule::node_budget(3).configured(1));
  CHECK(averaging_from_string(to_string(Averaging::weighted_t)) == Averaging::weighted_t);
  CHECK_THROWS_AS(averaging_from_string("median"), ConfigError);
}

TEST_CASE("samd: full-batch exact run on consistent data reaches the optimum") {
  std::mt19937_64 g(2);
  const int n = 4;
  Eigen::VectorXd truth = ref::uniform_vec(g, n, 0, 1);
  truth /= truth.sum();
  const auto ds = fx::binary_dataset(g, 10, 2, n, truth, 0.0);
  SamdProblem prob{&ds, FeatureMap::identity(n), DistanceFn::zero(), {}};
  CHECK(samd_objective(prob, truth) <= 1e-12);

  SamdConfig cfg;
  cfg.batch_size = ds.size();
  cfg.theta_set = ThetaSet::simplex();
  cfg.loss_every = 1;
  // G^2 from the first pass bounds the step constant; R^2 = 1 on the simplex
  const double G = std::sqrt(double(n));
  cfg.step = StepRule::c_over_sqrt_t(1.0 / G);
  const double target = 1e-3;
  const long needed = long(std::ceil(std::pow(2.0 * G / target, 2)));
  cfg.steps = std::min(needed, 5000L);
  const auto res = samd_train(prob, MirrorMap::euclidean(), cfg);
  long hit = -1;
  for (const auto& r : res.trace.rows)
    if (r.loss <= target) {
      hit = r.iter;
      break;
    }
  CHECK(hit > 0);
  CHECK(hit <= needed);
  double g2 = 0;
  for (const auto& r : res.trace.rows) g2 = std::max(g2, r.grad_norm_sq);
  const double bound = (1.0 * G + g2 / G) / std::sqrt(double(cfg.steps));
  CHECK(samd_objective(prob, res.theta) <= bound);
  CHECK(ThetaSet::simplex().contains(res.theta));
}

TEST_CASE("samd: trace invariants, averaging and determinism") {
  std::mt19937_64 g(3);
  const int n = 5;
  const auto ds = fx::random_feasible_dataset(g, 12, 3, n);
  SamdProblem prob{&ds, FeatureMap::identity(n), DistanceFn::l1(), {0.05, Regularizer::half_sq_l2, false}};
  SamdConfig cfg;
  cfg.steps = 400;
  cfg.batch_size = ds.size();
  cfg.eps = EpsSchedule::node_budget(3);
  cfg.theta_set = ThetaSet::nonneg();
  cfg.step = StepRule::c_over_sqrt_t(0.3);
  cfg.loss_every = 7;
  cfg.seed = 11;
  const auto res = samd_train(prob, MirrorMap::euclidean(), cfg, nullptr, {100, 400});
  const auto& tr = res.trace;
  REQUIRE(tr.rows.size() == 400);
  REQUIRE(tr.snapshots.size() == 400);

  for (std::size_t k = 1; k < tr.rows.size(); ++k) CHECK(tr.rows[k].time_s >= tr.rows[k - 1].time_s);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n), wsum = Eigen::VectorXd::Zero(n);
  for (const auto& [t, th] : tr.snapshots) {
    mean += th;
    wsum += double(t) * th;
  }
  CHECK((mean / 400.0 - tr.uniform_average).norm() <= 1e-12);
  CHECK((2.0 * wsum / (400.0 * 401.0) - tr.weighted_average).norm() <= 1e-12);
  CHECK((res.theta - tr.uniform_average).norm() == 0.0);
  CHECK(tr.uniform_at.size() == 2);
  CHECK((tr.uniform_at[1].second - tr.uniform_average).norm() <= 1e-12);

  // recorded losses recompute from snapshots; the eps-subgradient inequality
  // holds at every snapshot with the recorded eps
  Rng rng(5);
  int eps_positive = 0;
  for (const auto& [t, th] : tr.snapshots) {
    const auto& row = tr.rows[std::size_t(t - 1)];
    if (!std::isnan(row.loss)) CHECK(row.loss == samd_objective(prob, th));
    if (t % 20 != 1) continue;
    const auto sg = subgradient(th, ds, prob.phi, prob.d, prob.loss, row.batch, cfg.eps.budget(t));
    CHECK(sg.eps == row.eps_t);
    eps_positive += sg.eps > 0;
    const double ft = samd_objective(prob, th);
    for (int k = 0; k < 10; ++k) {
      Eigen::VectorXd nu(n);
      for (int j = 0; j < n; ++j) nu[j] = rng.uniform(0, 2);
      CHECK(samd_objective(prob, nu) >= ft + sg.vector.dot(nu - th) - row.eps_t - 1e-9);
    }
  }
  CHECK(eps_positive > 0);

  // twin runs are identical apart from timing
  const auto twin = samd_train(prob, MirrorMap::euclidean(), cfg, nullptr, {100, 400});
  std::ostringstream a, b;
  write_trace_csv(a, tr, false);
  write_trace_csv(b, twin.trace, false);
  CHECK(a.str() == b.str());
  CHECK(twin.theta == res.theta);

  std::ostringstream full;
  write_trace_csv(full, tr);
  CHECK(full.str().rfind("iter,time_s,loss,eps_t,batch_indices\n1,", 0) == 0);
  CHECK(a.str().find("\n2,,") != std::string::npos);  // loss not recorded at t = 2
}

TEST_CASE("samd: batches are uniform and the batch subgradient is unbiased") {
  std::mt19937_64 g(4);
  const int n = 4;
  const auto ds = fx::random_feasible_dataset(g, 8, 2, n);
  SamdProblem prob{&ds, FeatureMap::identity(n), DistanceFn::l1(), {}};
  SamdConfig cfg;
  cfg.steps = 10000;
  cfg.batch_size = 3;
  cfg.step = StepRule::c_over_sqrt_t(1e-300);
  cfg.theta0 = Eigen::Vector4d(0.3, -0.2, 0.5, 0.1);
  const auto res = samd_train(prob, MirrorMap::euclidean(), cfg);
  const Eigen::VectorXd th = *cfg.theta0;
  const auto full = subgradient(th, ds, prob.phi, prob.d, {});
  std::vector<int> freq(ds.size());
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n), m2 = Eigen::VectorXd::Zero(n);
  for (const auto& r : res.trace.rows) {
    std::set<std::size_t> uniq(r.batch.begin(), r.batch.end());
    CHECK(uniq.size() == 3);
    for (auto i : r.batch) ++freq[i];
    const auto sg = subgradient(th, ds, prob.phi, prob.d, {}, r.batch);
    m += sg.vector;
    m2 += sg.vector.cwiseProduct(sg.vector);
  }
  const double T = 10000;
  for (int f : freq) CHECK(std::abs(f - T * 3 / 8) < 4 * std::sqrt(T * 3 / 8 * 5 / 8));
  m /= T;
  const Eigen::VectorXd se = ((m2 / T - m.cwiseProduct(m)) / T).cwiseSqrt();
  for (int j = 0; j < n; ++j) CHECK(std::abs(m[j] - full.vector[j]) <= 3 * se[j] + 1e-12);
}

TEST_CASE("lift_l1_to_simplex") {
  std::mt19937_64 g(5);
  const int n = 2;
  const auto ds = fx::random_feasible_dataset(g, 6, 2, n);
  const auto phi = FeatureMap::identity(n);
  const auto lift = lift_l1_to_simplex(ds, phi, DistanceFn::l1(), 0.01, ThetaSet::all(), 0.5);
  CHECK(lift.lifted_dim == 4);
  CHECK(lift.lift(Eigen::Vector2d(1, -2)) == Eigen::Vector4d(1, 0, 0, 2));
  CHECK(lift.recover(Eigen::Vector4d(1, 0, 0, 2)) == Eigen::Vector2d(1, -2));
  CHECK(lifted_loss(lift, Eigen::Vector4d(1, 0, 0, 2), ds, phi, DistanceFn::l1()) ==
        empirical_loss(Eigen::Vector2d(1, -2), ds, phi, DistanceFn::l1(), {}).value);
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd th = ref::uniform_vec(g, n, -3, 3);
    CHECK(lift.recover(lift.lift(th)) == th);
  }

  // chain rule: finite differences of the lifted loss match the pulled back subgradient
  const double h = 1e-7;
  int tested = 0;
  for (int k = 0; k < 200 && tested < 50; ++k) {
    const Eigen::VectorXd tt = ref::uniform_vec(g, 4, 0.1, 2);
    const Eigen::VectorXd th = lift.recover(tt);
    const auto sg = subgradient(th, ds, phi, DistanceFn::l1(), {});
    const Eigen::VectorXd pulled = lift.pullback(sg.vector);
    bool smooth = true;
    Eigen::VectorXd fd(4);
    for (int j = 0; j < 4 && smooth; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(4);
      e[j] = h;
      const double fp = lifted_loss(lift, tt + e, ds, phi, DistanceFn::l1());
      const double fm = lifted_loss(lift, tt - e, ds, phi, DistanceFn::l1());
      const double f0 = lifted_loss(lift, tt, ds, phi, DistanceFn::l1());
      smooth = std::abs(fp - 2 * f0 + fm) <= 1e-9;  // off the kinks
      fd[j] = (fp - fm) / (2 * h);
    }
    if (!smooth) continue;
    ++tested;
    CHECK((fd - pulled).norm() <= 1e-5 * std::max(1.0, pulled.norm()));
  }
  CHECK(tested >= 20);

  const auto nn = lift_l1_to_simplex(ds, phi, DistanceFn::l1(), 0.01, ThetaSet::nonneg(), 1.0);
  CHECK(nn.lifted_dim == 2);
  CHECK_THROWS_AS(lift_l1_to_simplex(ds, phi, DistanceFn::l1(), 0.01, ThetaSet::simplex()), ConfigError);
  CHECK_THROWS_AS(lift_l1_to_simplex(ds, phi, DistanceFn::l1(), 0.01, ThetaSet::box(-1, 1)), ConfigError);

  // calibration: kappa_tilde = 1 / ||theta*||_1 for the l1-regularized optimum
  const auto cons = fx::binary_dataset(g, 10, 2, 4, ref::uniform_vec(g, 4, 0, 1), 0.3);
  const auto cal = lift_l1_to_simplex(cons, FeatureMap::identity(4), DistanceFn::l1(), 0.01, ThetaSet::nonneg());
  TrainerOptions o;
  o.kappa = 0.01;
  o.regularizer = Regularizer::l1;
  o.theta_set = ThetaSet::nonneg();
  const auto star = train_asl_enumerated(cons, FeatureMap::identity(4), DistanceFn::l1(), o);
  CHECK(cal.kappa_tilde == doctest::Approx(1.0 / star.theta.lpNorm<1>()));
}

TEST_CASE("samd: entropic steps stay positive and within the budget") {
  std::mt19937_64 g(6);
  const int n = 5;
  const auto ds = fx::binary_dataset(g, 15, 3, n, ref::uniform_vec(g, n, 0, 1), 0.2);
  const auto phi = FeatureMap::identity(n);
  SamdProblem prob{&ds, phi, DistanceFn::l1(), {0.01, Regularizer::l1, false}};
  for (auto set : {ThetaSet::nonneg(), ThetaSet::all()}) {
    const auto lift = lift_l1_to_simplex(ds, phi, prob.d, 0.01, set);
    for (auto step : {StepRule::norm_adaptive(), StepRule::c_over_sqrt_t(50.0)}) {
      SamdConfig cfg;
      cfg.steps = 1000;
      cfg.batch_size = 2;
      cfg.step = step;
      cfg.snapshot_stride = 1;
      const auto res = samd_train(prob, MirrorMap::entropic(lift.kappa_tilde), cfg, &lift);
      for (const auto& [t, tt] : res.trace.snapshots) {
        CHECK(tt.minCoeff() > 0.0);
        CHECK(lift.kappa_tilde * tt.sum() <= 1 + 1e-9);
      }
      CHECK(lift.kappa_tilde * res.trace.last.sum() <= 1 + 1e-9);
      CHECK(res.theta.size() == n);
    }
  }
  // the full-batch exponentiated method approaches the l1-regularized optimum
  const auto lift = lift_l1_to_simplex(ds, phi, prob.d, 0.01, ThetaSet::nonneg());
  TrainerOptions o;
  o.kappa = 0.01;
  o.regularizer = Regularizer::l1;
  o.theta_set = ThetaSet::nonneg();
  const double fstar = train_asl_enumerated(ds, phi, prob.d, o).objective;
  SamdConfig cfg;
  cfg.steps = 3000;
  cfg.batch_size = ds.size();
  cfg.step = StepRule::norm_adaptive();
  const auto res = samd_train(prob, MirrorMap::entropic(lift.kappa_tilde), cfg, &lift);
  CHECK(samd_objective(prob, res.theta) - fstar <= 0.02 * std::max(1.0, fstar));
  CHECK(samd_objective(prob, res.theta) >= fstar - 1e-9);
}

TEST_CASE("samd: non-finite iterates raise with the trace attached") {
  std::mt19937_64 g(7);
  const auto ds = fx::random_feasible_dataset(g, 3, 2, 3);
  const auto huge = FeatureMap::custom(3, [](const Signal&, const Response& x) {
    return Eigen::VectorXd(1e300 * x.stacked());
  });
  SamdProblem prob{&ds, huge, DistanceFn::zero(), {}};
  SamdConfig cfg;
  cfg.steps = 50;
  cfg.batch_size = 3;
  cfg.step = StepRule::c_over_sqrt_t(1e300);
  try {
    samd_train(prob, MirrorMap::euclidean(), cfg);
    FAIL("expected divergence");
  } catch (const SamdDivergence& e) {
    CHECK(!e.trace.rows.empty());
    CHECK(!e.trace.last.allFinite());
  }
}

TEST_CASE("verify_rate: bounds and log-log slopes") {
  std::mt19937_64 g(3);
  const int n = 4;
  const auto ds = fx::random_feasible_dataset(g, 10, 2, n);
  SamdProblem prob{&ds, FeatureMap::identity(n), DistanceFn::l1(), {}};

  SamdConfig cfg;
  cfg.step = StepRule::c_over_sqrt_t(0.5);
  auto rep = verify_rate(cfg, prob);
  CHECK(rep.box_restricted);
  CHECK(rep.R2 == 8.0);
  CHECK(rep.all_below());
  CHECK(std::abs(rep.slope + 0.5) <= 0.15);

  cfg.eps = EpsSchedule::gap_over_t(1.0);
  rep = verify_rate(cfg, prob);
  CHECK(rep.all_below());
  CHECK(rep.points[0].eps_term > 0.0);
  CHECK(std::abs(rep.slope_eps_adjusted + 0.5) <= 0.15);

  prob.loss = {0.5, Regularizer::half_sq_l2, false};
  cfg.eps = EpsSchedule::exact();
  cfg.step = StepRule::two_over_alpha_t(0.5);
  rep = verify_rate(cfg, prob);
  CHECK(rep.all_below());
  CHECK(std::abs(rep.slope + 1.0) <= 0.2);

  cfg.step = StepRule::two_over_alpha_t(0.6);
  CHECK_THROWS_AS(verify_rate(cfg, prob), ConfigError);
  cfg.step = StepRule::norm_adaptive();
  CHECK_THROWS_AS(verify_rate(cfg, prob), ConfigError);
}
