#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "invopt/losses.hpp"

using namespace invopt;

namespace {

IOInstance cube_instance(int n, Eigen::VectorXi xhat) {
  return IOInstance::make(fx::unit_cube(n), Response::discrete(std::move(xhat)), fx::binary_oracle());
}

Eigen::VectorXi vec2(int a, int b) { return Eigen::Vector2i(a, b); }

double full_loss(const Eigen::VectorXd& th, const IODataset& ds, const DistanceFn& d, const LossOptions& o) {
  return empirical_loss(th, ds, FeatureMap::identity(int(th.size())), d, o).value;
}

}  // namespace

TEST_CASE("asl: small worked examples") {
  const auto phi = FeatureMap::identity(2);

  Signal single;
  single.A.resize(4, 2);
  single.A << 1, 0, 0, 1, -1, 0, 0, -1;
  single.rhs = Eigen::Vector4d(1, 0, -1, 0);
  const auto si = IOInstance::make(single, Response::discrete(vec2(1, 0)), fx::binary_oracle());
  std::mt19937_64 g(3);
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd th = ref::uniform_vec(g, 2, -5, 5);
    CHECK(asl(th, si, phi, DistanceFn::l1()).value == doctest::Approx(0.0));
  }

  const auto r = asl(Eigen::Vector2d(1, 0), cube_instance(2, vec2(0, 0)), phi, DistanceFn::l1());
  CHECK(r.value == doctest::Approx(1.0));
  CHECK(r.eps_bound == 0.0);
  CHECK(r.argmax_response.z[1] == 1);

  const auto sl = suboptimality(Eigen::Vector2d(-1, 0), cube_instance(2, vec2(1, 0)), phi);
  CHECK(sl.value == doctest::Approx(0.0));
  CHECK(suboptimality(Eigen::Vector2d(0, 0), cube_instance(2, vec2(1, 1)), phi).value == 0.0);
}

TEST_CASE("asl: agrees with brute force on random binary instances") {
  std::mt19937_64 g(11);
  const DistanceFn ds[] = {DistanceFn::zero(), DistanceFn::l1(), DistanceFn::euclidean(), DistanceFn::hamming()};
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 6;
    const auto data = fx::random_feasible_dataset(g, 1, 3, n);
    const Eigen::VectorXd th = ref::uniform_vec(g, n, -2, 2);
    const auto& d = ds[trial % 4];
    const auto r = asl(th, data[0], FeatureMap::identity(n), d);
    CHECK(r.value == doctest::Approx(fx::brute_asl(th, data[0].signal, data[0].response.z, d)).epsilon(1e-12));
  }
}

TEST_CASE("asl_hinge") {
  const auto phi = FeatureMap::identity(2);
  // expert response outside the cube that dominates every feasible point
  const auto bad = cube_instance(2, vec2(-1, 0));
  CHECK(bad.infeasible);
  const Eigen::VectorXd th = Eigen::Vector2d(0.3, 0);
  CHECK(suboptimality(th, bad, phi).value == doctest::Approx(-0.3));
  CHECK(asl_hinge(th, bad, phi, DistanceFn::zero()).value == 0.0);
  CHECK(asl_hinge(Eigen::Vector2d(0, 0), bad, phi, DistanceFn::zero()).value == 0.0);

  std::mt19937_64 g(5);
  for (int k = 0; k < 50; ++k) {
    const auto data = fx::random_feasible_dataset(g, 1, 2, 4);
    const Eigen::VectorXd t = ref::uniform_vec(g, 4, -1, 1);
    CHECK(asl_hinge(t, data[0], FeatureMap::identity(4), DistanceFn::l1()).value ==
          asl(t, data[0], FeatureMap::identity(4), DistanceFn::l1()).value);
  }
}

TEST_CASE("gpl") {
  const auto phi = FeatureMap::identity(3);
  const auto inst = cube_instance(3, Eigen::Vector3i(0, 1, 0));
  CHECK(gpl(Eigen::Vector3d(1, -1, 1), inst, phi, DistanceFn::l1()) == 0.0);
  CHECK(gpl(Eigen::Vector3d(0, 0, 0), inst, phi, DistanceFn::l1()) == 0.0);
  // unique optimum (1,0,1) at l1 distance 3
  CHECK(gpl(Eigen::Vector3d(-1, 1, -1), inst, phi, DistanceFn::l1()) == doctest::Approx(3.0));
  // ties (0,0,0) and (1,0,0) at distance 1 and 2
  CHECK(gpl(Eigen::Vector3d(0, 1, 1), inst, phi, DistanceFn::l1()) == doctest::Approx(1.0));

  auto mi = std::make_shared<MixedIntegerOracle>(LinearHypothesis::separable(1, 1), false);
  IOInstance cont;
  cont.oracle = mi;
  CHECK_THROWS_AS(gpl(Eigen::Vector2d(1, 1), cont, FeatureMap::identity(2), DistanceFn::l1()), OracleError);
}

TEST_CASE("empirical_loss") {
  const auto phi = FeatureMap::identity(2);
  IODataset zero;
  zero.instances.push_back(cube_instance(2, vec2(0, 0)));
  zero.instances.push_back(cube_instance(2, vec2(0, 0)));
  CHECK(empirical_loss(Eigen::Vector2d(1, 2), zero, phi, DistanceFn::zero(), {}).value == 0.0);
  LossOptions o{1.0, Regularizer::half_sq_l2, false};
  CHECK(empirical_loss(Eigen::Vector2d(3, 4), zero, phi, DistanceFn::zero(), o).value == doctest::Approx(12.5));
  o.regularizer = Regularizer::l1;
  CHECK(empirical_loss(Eigen::Vector2d(3, 4), zero, phi, DistanceFn::zero(), o).value == doctest::Approx(7.0));
  o.kappa = -1;
  CHECK_THROWS_AS(empirical_loss(Eigen::Vector2d(3, 4), zero, phi, DistanceFn::zero(), o), ConfigError);

  std::mt19937_64 g(17);
  const auto ds = fx::random_feasible_dataset(g, 5, 3, 5);
  const Eigen::VectorXd th = ref::uniform_vec(g, 5, -1, 1);
  const auto rep = empirical_loss(th, ds, FeatureMap::identity(5), DistanceFn::l1(), {});
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double b = fx::brute_asl(th, ds[i].signal, ds[i].response.z, DistanceFn::l1());
    CHECK(rep.per_instance[i] == doctest::Approx(b).epsilon(1e-12));
    sum += b;
  }
  CHECK(rep.value == doctest::Approx(sum / 5).epsilon(1e-12));
  CHECK_THROWS_AS(regularizer_from_string("l3"), ConfigError);
  CHECK(regularizer_from_string(to_string(Regularizer::half_sq_l2)) == Regularizer::half_sq_l2);
}

TEST_CASE("loss properties: nonnegativity, convexity, surrogate") {
  std::mt19937_64 g(23);
  const int n = 5;
  const auto phi = FeatureMap::identity(n);
  const auto data = fx::random_feasible_dataset(g, 40, 3, n);
  std::uniform_real_distribution<double> U(0, 1);
  const DistanceFn ds[] = {DistanceFn::zero(), DistanceFn::l1(), DistanceFn::hamming()};
  int violations = 0;
  for (int k = 0; k < 3000; ++k) {
    const auto& inst = data[std::size_t(k) % data.size()];
    const auto& d = ds[k % 3];
    const Eigen::VectorXd a = ref::uniform_vec(g, n, -3, 3), b = ref::uniform_vec(g, n, -3, 3);
    const double lam = U(g);
    const double fa = asl(a, inst, phi, d).value, fb = asl(b, inst, phi, d).value;
    const double fm = asl(lam * a + (1 - lam) * b, inst, phi, d).value;
    if (fa < -1e-9 || fb < -1e-9) ++violations;
    if (fm > lam * fa + (1 - lam) * fb + 1e-9) ++violations;
    if (gpl(a, inst, phi, d) > fa + 1e-9) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("loss properties: consistency") {
  std::mt19937_64 g(29);
  const int n = 5;
  const auto phi = FeatureMap::identity(n);
  const auto data = fx::random_feasible_dataset(g, 30, 3, n);
  int hits = 0;
  for (int k = 0; k < 600; ++k) {
    const auto& inst = data[std::size_t(k) % data.size()];
    const Eigen::VectorXd th = ref::uniform_vec(g, n, -1, 1);
    // half the draws use the optimal response so that zero losses occur
    IOInstance probe = inst;
    if (k % 2) probe.response = inst.oracle->forward_min(inst.signal, th, phi);
    if (asl(th, probe, phi, DistanceFn::zero()).value > 1e-9) continue;
    ++hits;
    const double at_hat = th.dot(probe.response.stacked());
    for (const auto& x : enumerate_binary_lp(probe.signal)) CHECK(at_hat <= th.dot(x.stacked()) + 1e-9);
  }
  CHECK(hits >= 300);

  // integer costs on the full cube: the unique optimum is 0 and every other
  // point costs at least 1 more, so the 0-1 margin is met exactly
  for (int k = 0; k < 200; ++k) {
    const int m = 1 + k % 8;
    Eigen::VectorXd th(m);
    std::uniform_int_distribution<int> I(1, 6);
    for (int j = 0; j < m; ++j) th[j] = I(g);
    const auto inst = cube_instance(m, Eigen::VectorXi::Zero(m));
    CHECK(std::abs(asl(th, inst, FeatureMap::identity(m), DistanceFn::hamming()).value) <= 1e-9);
  }
}

TEST_CASE("subgradient: exact inequality and regularizers") {
  std::mt19937_64 g(31);
  const int n = 6;
  const auto data = fx::random_feasible_dataset(g, 8, 3, n);
  const auto phi = FeatureMap::identity(n);
  const LossOptions opts[] = {{0.0, Regularizer::none, false},
                              {0.5, Regularizer::half_sq_l2, false},
                              {0.3, Regularizer::l1, false},
                              {0.0, Regularizer::none, true}};
  int violations = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto& o = opts[k % 4];
    const DistanceFn d = k % 3 ? DistanceFn::l1() : DistanceFn::zero();
    Eigen::VectorXd th = ref::uniform_vec(g, n, -2, 2);
    if (k % 10 == 0) th[k % n] = 0.0;
    const Eigen::VectorXd nu = ref::uniform_vec(g, n, -2, 2);
    const auto sg = subgradient(th, data, phi, d, o);
    CHECK(sg.eps == 0.0);
    if (full_loss(nu, data, d, o) < full_loss(th, data, d, o) + sg.vector.dot(nu - th) - 1e-9) ++violations;
  }
  CHECK(violations == 0);

  const Eigen::VectorXd th = Eigen::Vector3d(0.0, 2.0, -1.0);
  CHECK(regularizer_subgradient(Regularizer::l1, th) == Eigen::Vector3d(0, 1, -1));
  CHECK_THROWS_AS(subgradient(ref::uniform_vec(g, n, -1, 1), data, phi, DistanceFn::l1(), {},
                              std::vector<std::size_t>{}),
                  ConfigError);
}

TEST_CASE("subgradient: budgeted oracle gives an eps-subgradient") {
  std::mt19937_64 g(37);
  const int n = 12;
  const auto data = fx::random_feasible_dataset(g, 6, 2, n);
  const auto phi = FeatureMap::identity(n);
  int violations = 0, loose = 0;
  for (int k = 0; k < 300; ++k) {
    const DistanceFn d = k % 2 ? DistanceFn::l1() : DistanceFn::hamming();
    const Eigen::VectorXd th = ref::uniform_vec(g, n, -2, 2), nu = ref::uniform_vec(g, n, -2, 2);
    const auto sg = subgradient(th, data, phi, d, {}, std::nullopt, Budget::nodes(8 + k % 20));
    if (sg.eps > 0) ++loose;
    const double fth = full_loss(th, data, d, {});
    if (full_loss(nu, data, d, {}) < fth + sg.vector.dot(nu - th) - sg.eps - 1e-9) ++violations;
  }
  CHECK(violations == 0);
  CHECK(loose > 0);
}

TEST_CASE("subgradient: finite differences at unique argmax points") {
  std::mt19937_64 g(41);
  const int n = 5;
  const auto phi = FeatureMap::identity(n);
  int checked = 0;
  for (int k = 0; k < 300 && checked < 100; ++k) {
    const auto data = fx::random_feasible_dataset(g, 1, 3, n);
    const auto& inst = data[0];
    const Eigen::VectorXd th = ref::uniform_vec(g, n, -2, 2);
    const DistanceFn d = DistanceFn::l1();
    std::vector<double> vals;
    for (const auto& x : enumerate_binary_lp(inst.signal))
      vals.push_back(th.dot(inst.response.stacked() - x.stacked()) + d(inst.response, x));
    std::sort(vals.rbegin(), vals.rend());
    if (vals.size() > 1 && vals[0] - vals[1] <= 1e-6) continue;
    ++checked;
    const Eigen::VectorXd sg = subgradient(th, data, phi, d, {}).vector;
    const double h = 1e-7;
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[j] = h;
      const double fd = (asl(th + e, inst, phi, d).value - asl(th - e, inst, phi, d).value) / (2 * h);
      CHECK(std::abs(fd - sg[j]) <= 1e-5 * std::max(1.0, std::abs(sg[j])));
    }
  }
  CHECK(checked >= 50);
}

TEST_CASE("subgradient: single-sample estimates are unbiased") {
  std::mt19937_64 g(43);
  const int n = 5;
  const auto data = fx::random_feasible_dataset(g, 25, 3, n);
  const auto phi = FeatureMap::identity(n);
  const Eigen::VectorXd th = ref::uniform_vec(g, n, -1, 1);
  const LossOptions o{0.2, Regularizer::half_sq_l2, false};
  const Eigen::VectorXd full = subgradient(th, data, phi, DistanceFn::l1(), o).vector;
  std::vector<Eigen::VectorXd> per(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    per[i] = subgradient(th, data, phi, DistanceFn::l1(), o, std::vector<std::size_t>{i}).vector;
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  const int T = 10000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n), sq = Eigen::VectorXd::Zero(n);
  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd& v = per[pick(g)];
    sum += v;
    sq += v.cwiseProduct(v);
  }
  const Eigen::VectorXd mean = sum / T;
  const Eigen::VectorXd var = (sq / T - mean.cwiseProduct(mean)).cwiseMax(0.0);
  for (int j = 0; j < n; ++j) {
    const double se = std::sqrt(var[j] / T);
    CHECK(std::abs(mean[j] - full[j]) <= 3 * se + 1e-12);
  }
}
