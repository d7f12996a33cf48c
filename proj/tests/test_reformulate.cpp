#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "invopt/geometry.hpp"
#include "invopt/reformulate.hpp"

using namespace invopt;

namespace {

double objective_at(const CostVector& th, const IODataset& ds, const FeatureMap& phi, const DistanceFn& d,
                    const TrainerOptions& o) {
  LossOptions lo{o.kappa, o.regularizer, o.hinge};
  return empirical_loss(th, ds, phi, d, lo).value;
}

}  // namespace

TEST_CASE("train_asl_enumerated: consistent data, tightness and optimality") {
  std::mt19937_64 g(5);
  const int n = 5;
  const auto phi = FeatureMap::identity(n);
  for (int trial = 0; trial < 4; ++trial) {
    const Eigen::VectorXd truth = ref::uniform_vec(g, n, 0, 1);
    const auto ds = fx::binary_dataset(g, 12, 3, n, truth, trial < 2 ? 0.0 : 0.3);
    TrainerOptions o;
    o.kappa = 0.001;
    const DistanceFn d = DistanceFn::euclidean();
    const auto sol = train_asl_enumerated(ds, phi, d, o);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == doctest::Approx(objective_at(sol.theta, ds, phi, d, o)).epsilon(1e-6));
    for (std::size_t i = 0; i < ds.size(); ++i)
      CHECK(std::abs(sol.slacks[Eigen::Index(i)] - asl(sol.theta, ds[i], phi, d).value) <= 1e-6);
    // convex objective: no random nearby or far point does better
    for (int k = 0; k < 200; ++k) {
      const double scale = k < 100 ? 1e-3 : 1.0;
      const Eigen::VectorXd th = sol.theta + scale * ref::uniform_vec(g, n, -1, 1);
      CHECK(objective_at(th, ds, phi, d, o) >= sol.objective - 1e-9);
    }
  }
}

TEST_CASE("train_asl_enumerated: row generation matches the full program") {
  std::mt19937_64 g(13);
  const int n = 7;
  const auto phi = FeatureMap::identity(n);
  for (double noise : {0.0, 0.3}) {
    const auto ds = fx::binary_dataset(g, 30, 3, n, ref::uniform_vec(g, n, -1, 1), noise);
    TrainerOptions o;
    o.kappa = 0.001;
    const auto gen = train_asl_enumerated(ds, phi, DistanceFn::euclidean(), o);
    o.row_generation = false;
    const auto full = train_asl_enumerated(ds, phi, DistanceFn::euclidean(), o);
    REQUIRE(full.rows > 2000);
    CHECK(gen.rows < full.rows);
    CHECK(std::abs(gen.objective - full.objective) <= 1e-8);
    CHECK((gen.theta - full.theta).norm() <= 1e-6);
    CHECK(gen.certificate.primal_residual <= 1e-9);
  }
}

TEST_CASE("train_asl_enumerated: relaxation of the feasibility program") {
  std::mt19937_64 g(6);
  const int n = 4;
  const auto phi = FeatureMap::identity(n);
  const auto ds = fx::binary_dataset(g, 10, 2, n, ref::uniform_vec(g, n, 0, 1), 0.0);
  const auto cone = build_cone(ds, phi);
  TrainerOptions o;
  o.theta_set = ThetaSet::simplex();
  o.kappa = 0.01;
  const auto sol = train_asl_enumerated(ds, phi, DistanceFn::zero(), o);
  // the cone meets the simplex, so all slacks vanish
  CHECK(sol.slacks.cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(cone.contains(sol.theta, 1e-9));
  CHECK(sol.theta.sum() == doctest::Approx(1.0));
}

TEST_CASE("train_asl_enumerated: trivial and limiting cases") {
  const auto phi = FeatureMap::identity(2);
  Signal single;
  single.A.resize(4, 2);
  single.A << 1, 0, 0, 1, -1, 0, 0, -1;
  single.rhs = Eigen::Vector4d(1, 0, -1, 0);
  IODataset one;
  one.instances.push_back(IOInstance::make(single, Response::discrete(Eigen::Vector2i(1, 0)), fx::binary_oracle()));
  auto sol = train_asl_enumerated(one, phi, DistanceFn::l1());
  CHECK(sol.theta.norm() <= 1e-12);
  TrainerOptions simplex;
  simplex.theta_set = ThetaSet::simplex();
  sol = train_asl_enumerated(one, phi, DistanceFn::l1(), simplex);
  CHECK(sol.theta.isApprox(Eigen::Vector2d(0.5, 0.5), 1e-9));

  std::mt19937_64 g(7);
  const auto ds = fx::random_feasible_dataset(g, 8, 3, 4);
  TrainerOptions heavy;
  heavy.kappa = 1e6;
  sol = train_asl_enumerated(ds, FeatureMap::identity(4), DistanceFn::l1(), heavy);
  CHECK(sol.theta.norm() <= 1e-5);
  const auto at0 = empirical_loss(Eigen::VectorXd::Zero(4), ds, FeatureMap::identity(4), DistanceFn::l1(), {});
  CHECK(sol.objective == doctest::Approx(at0.value).epsilon(1e-5));

  for (auto reg : {Regularizer::l1, Regularizer::none}) {
    TrainerOptions o;
    o.regularizer = reg;
    o.kappa = reg == Regularizer::none ? 0.0 : 0.05;
    o.theta_set = ThetaSet::box(-1, 1);
    const auto s2 = train_asl_enumerated(ds, FeatureMap::identity(4), DistanceFn::l1(), o);
    CHECK(s2.objective == doctest::Approx(objective_at(s2.theta, ds, FeatureMap::identity(4), DistanceFn::l1(), o)).epsilon(1e-7));
    for (int k = 0; k < 100; ++k) {
      const Eigen::VectorXd th = ThetaSet::box(-1, 1).project(s2.theta + ref::uniform_vec(g, 4, -0.3, 0.3));
      CHECK(objective_at(th, ds, FeatureMap::identity(4), DistanceFn::l1(), o) >= s2.objective - 1e-9);
    }
  }
}

TEST_CASE("train_asl_enumerated: infeasible data, hinge and unboundedness") {
  IODataset bad;
  bad.instances.push_back(IOInstance::make(fx::unit_cube(2), Response::discrete(Eigen::Vector2i(-1, 0)),
                                           fx::binary_oracle()));
  TrainerOptions o;
  o.kappa = 0.0;
  o.regularizer = Regularizer::none;
  CHECK_THROWS_AS(train_asl_enumerated(bad, FeatureMap::identity(2), DistanceFn::zero(), o), ConfigError);
  o.hinge = true;
  const auto sol = train_asl_enumerated(bad, FeatureMap::identity(2), DistanceFn::zero(), o);
  CHECK(sol.objective == doctest::Approx(0.0));
  CHECK(sol.slacks[0] >= 0.0);
  o.kappa = -1;
  CHECK_THROWS_AS(train_asl_enumerated(bad, FeatureMap::identity(2), DistanceFn::zero(), o), ConfigError);
}

TEST_CASE("mixed-integer LP: purely discrete sets match the epigraph program") {
  std::mt19937_64 g(9);
  for (int seed = 0; seed < 12; ++seed) {
    const int v = 3;
    const auto ds = fx::mi_dataset(g, 6, 2, 0, v, false, ref::uniform_vec(g, v, 0, 1), 0.4);
    const auto* oracle = dynamic_cast<const MixedIntegerOracle*>(ds[0].oracle.get());
    const FeatureMap phi = oracle->hypothesis().feature_map();
    const DistanceFn dz = DistanceFn::euclidean();
    TrainerOptions o;
    o.kappa = seed % 2 ? 0.0 : 0.001;
    o.regularizer = seed % 2 ? Regularizer::none : Regularizer::half_sq_l2;
    o.theta_set = ThetaSet::nonneg();
    const auto lp = train_asl_mixed_integer_lp(ds, dz, o);
    const auto ep = train_asl_enumerated(ds, phi, dz, o);
    CHECK(std::abs(lp.objective - ep.objective) <= 1e-7);
  }
}

TEST_CASE("mixed-integer LP: objective, tightness and strong duality") {
  std::mt19937_64 g(10);
  for (bool pen : {false, true}) {
    const int u = 2, v = 2;
    const auto ds = fx::mi_dataset(g, 6, 2, u, v, pen, ref::uniform_vec(g, u + v, 0, 1), 0.3);
    const auto* oracle = dynamic_cast<const MixedIntegerOracle*>(ds[0].oracle.get());
    const LinearHypothesis& H = oracle->hypothesis();
    const FeatureMap phi = H.feature_map();
    const DistanceFn dz = DistanceFn::euclidean();
    TrainerOptions o;
    o.kappa = 0.0;
    o.regularizer = Regularizer::none;
    o.theta_set = ThetaSet::nonneg();
    const auto sol = train_asl_mixed_integer_lp(ds, dz, o);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.certificate.primal_residual <= 1e-7);
    CHECK(std::abs(sol.certificate.objective - sol.certificate.dual_objective) <= 1e-7);
    CHECK(sol.objective == doctest::Approx(empirical_loss(sol.theta, ds, phi, dz, {}).value).epsilon(1e-6));
    for (std::size_t i = 0; i < ds.size(); ++i)
      CHECK(std::abs(sol.slacks[Eigen::Index(i)] - asl(sol.theta, ds[i], phi, dz).value) <= 1e-6);

    const int K = pen ? 2 * u : 1;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const Signal& s = ds[i].signal;
      for (std::size_t j = 0; j < s.z_set.size(); ++j)
        for (int k = 0; k < K; ++k) {
          Eigen::VectorXd h = Eigen::VectorXd::Zero(u);
          if (pen) h[k % u] = k < u ? 1.0 : -1.0;
          const Eigen::VectorXd& lam = sol.duals[i][j][std::size_t(k)];
          Eigen::MatrixXd Ay;
          Eigen::VectorXd by;
          MixedIntegerOracle::y_polytope(s, s.z_set[j], Ay, by);
          CHECK(lam.minCoeff() >= -1e-9);
          CHECK((H.Q(sol.theta) * H.phi1(s.w, s.z_set[j]) + h + Ay.transpose() * lam).norm() <= 1e-7);
          const double primal = mixed_integer_inner_primal(*oracle, s, s.z_set[j], sol.theta, h);
          if (std::isfinite(primal)) CHECK(std::abs(primal - by.dot(lam)) <= 1e-6);
        }
    }
  }
}

TEST_CASE("train_suboptimality_facets") {
  std::mt19937_64 g(11);
  const int n = 4;
  const auto phi = FeatureMap::identity(n);
  const Eigen::VectorXd truth = ref::uniform_vec(g, n, -1, 1);
  const auto clean = fx::binary_dataset(g, 10, 3, n, truth, 0.0);
  auto sol = train_suboptimality_facets(clean, phi);
  CHECK(sol.objective == doctest::Approx(0.0));
  CHECK(sol.theta.lpNorm<Eigen::Infinity>() == doctest::Approx(1.0));
  CHECK(build_cone(clean, phi).contains(sol.theta, 1e-9));

  IODataset p1;
  Signal s;
  s.A = -Eigen::MatrixXd::Identity(1, 1);
  s.rhs = Eigen::VectorXd::Zero(1);
  p1.instances.push_back(IOInstance::make(s, Response::discrete(Eigen::VectorXi::Zero(1)), fx::binary_oracle()));
  CHECK(train_suboptimality_facets(p1, FeatureMap::identity(1)).theta[0] == 1.0);

  const auto noisy = fx::binary_dataset(g, 15, 3, n, truth, 0.5);
  sol = train_suboptimality_facets(noisy, phi);
  const double mean_sl = empirical_loss(sol.theta, noisy, phi, DistanceFn::zero(), {}).value;
  CHECK(sol.objective == doctest::Approx(mean_sl).epsilon(1e-6));
  // every other facet point is no better
  for (int k = 0; k < 200; ++k) {
    Eigen::VectorXd th = ref::uniform_vec(g, n, -1, 1);
    th[k % n] = k % 2 ? 1.0 : -1.0;
    CHECK(empirical_loss(th, noisy, phi, DistanceFn::zero(), {}).value >= sol.objective - 1e-9);
  }
}

TEST_CASE("tu_inner_rewrite and the relaxed inner problem") {
  const Eigen::VectorXd th = Eigen::Vector3d(0.5, -1, 2);
  auto f = tu_inner_rewrite(Eigen::VectorXi::Zero(3), th);
  CHECK(f.c_lin.isApprox(Eigen::VectorXd::Ones(3) - th));
  CHECK(f.c_const == 0.0);
  f = tu_inner_rewrite(Eigen::VectorXi::Ones(3), Eigen::VectorXd::Zero(3));
  CHECK(f.c_lin == -Eigen::VectorXd::Ones(3));
  CHECK(f.c_const == 3.0);
  CHECK_THROWS_AS(tu_inner_rewrite(Eigen::Vector3i(0, 2, 1), th), DimensionError);

  std::mt19937_64 g(12);
  for (int k = 0; k < 200; ++k) {
    const int n = 1 + k % 7;
    const auto codes = fx::cube_codes(n);
    std::uniform_int_distribution<std::size_t> pick(0, codes.size() - 1);
    const Eigen::VectorXi xh = codes[pick(g)], x = codes[pick(g)];
    const Eigen::VectorXd t = ref::uniform_vec(g, n, -2, 2);
    const auto a = tu_inner_rewrite(xh, t);
    const double direct = t.dot((xh - x).cast<double>()) + (xh - x).cast<double>().lpNorm<1>();
    CHECK(a.c_lin.dot(x.cast<double>()) + a.c_const == doctest::Approx(direct).epsilon(1e-14));
  }

  // interval (consecutive-ones) constraints are totally unimodular
  std::uniform_int_distribution<int> B(0, 2);
  for (int k = 0; k < 100; ++k) {
    const int n = 3 + k % 5, t = 3;
    Signal s;
    s.A = Eigen::MatrixXd::Zero(t, n);
    s.rhs.resize(t);
    for (int i = 0; i < t; ++i) {
      std::uniform_int_distribution<int> P(0, n - 1);
      int a = P(g), b = P(g);
      if (a > b) std::swap(a, b);
      s.A.row(i).segment(a, b - a + 1).setOnes();
      s.rhs[i] = B(g);
    }
    std::vector<Eigen::VectorXi> feas;
    for (const auto& z : fx::cube_codes(n))
      if (fx::satisfies(s, z)) feas.push_back(z);
    std::uniform_int_distribution<std::size_t> pick(0, feas.size() - 1);
    const Eigen::VectorXi xh = feas[pick(g)];
    const Eigen::VectorXd t2 = ref::uniform_vec(g, n, -2, 2);
    CHECK(asl_tu_lp(t2, s, xh) == doctest::Approx(fx::brute_asl(t2, s, xh, DistanceFn::l1())).epsilon(1e-9));
  }
}
