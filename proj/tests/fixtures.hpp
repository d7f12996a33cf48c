#pragma once

// Small random problem builders shared by the tests.

#include <random>
#include <vector>

#include "invopt/oracles.hpp"
#include "reference.hpp"

namespace fx {

using namespace invopt;

// A in [-1,0]^{t x n}, rhs in [-1,0]^t, rows resampled until x = 1 is feasible.
inline Signal binary_signal(std::mt19937_64& g, int t, int n) {
  Signal s;
  s.A = ref::uniform(g, t, n, -1, 0);
  s.rhs = ref::uniform_vec(g, t, -1, 0);
  for (int i = 0; i < t; ++i)
    while (s.A.row(i).sum() > s.rhs[i]) s.A.row(i) = ref::uniform(g, 1, n, -1, 0);
  return s;
}

inline Signal unit_cube(int n) {
  Signal s;
  s.A = -Eigen::MatrixXd::Identity(n, n);
  s.rhs = Eigen::VectorXd::Zero(n);
  return s;
}

inline OraclePtr binary_oracle() { return std::make_shared<BinaryLpOracle>(); }

// All 2^n codes, first coordinate most significant.
inline std::vector<Eigen::VectorXi> cube_codes(int n) {
  std::vector<Eigen::VectorXi> out;
  for (long code = 0; code < (1L << n); ++code) {
    Eigen::VectorXi z(n);
    for (int j = 0; j < n; ++j) z[j] = int((code >> (n - 1 - j)) & 1);
    out.push_back(z);
  }
  return out;
}

inline bool satisfies(const Signal& s, const Eigen::VectorXi& z) {
  for (int i = 0; i < s.A.rows(); ++i)
    if (s.A.row(i).dot(z.cast<double>()) > s.rhs[i] + 1e-9) return false;
  return true;
}

// Brute-force loss on the binary family with phi = identity.
inline double brute_asl(const Eigen::VectorXd& theta, const Signal& s, const Eigen::VectorXi& xhat,
                        const DistanceFn& d) {
  double best = -INFINITY;
  const Response rh = Response::discrete(xhat);
  for (const auto& z : cube_codes(int(xhat.size()))) {
    if (!satisfies(s, z)) continue;
    const double v = theta.dot((xhat - z).cast<double>()) + d(rh, Response::discrete(z));
    best = std::max(best, v);
  }
  return best;
}

// Instances with a random feasible expert response (generally inconsistent).
inline IODataset random_feasible_dataset(std::mt19937_64& g, int count, int t, int n) {
  IODataset ds;
  auto oracle = binary_oracle();
  for (int i = 0; i < count; ++i) {
    Signal s = binary_signal(g, t, n);
    std::vector<Eigen::VectorXi> feas;
    for (const auto& z : cube_codes(n))
      if (satisfies(s, z)) feas.push_back(z);
    std::uniform_int_distribution<std::size_t> pick(0, feas.size() - 1);
    ds.instances.push_back(IOInstance::make(s, Response::discrete(feas[pick(g)]), oracle));
  }
  return ds;
}

// Mixed-integer signal with A, B in [-1,0], c in [-2,0], rows resampled until
// (y, z) = (1, 1) is feasible, and the box 0 <= y <= 1.
inline Signal mi_signal(std::mt19937_64& g, int t, int u, int v) {
  Eigen::MatrixXd A = ref::uniform(g, t, u, -1, 0), B = ref::uniform(g, t, v, -1, 0);
  Eigen::VectorXd c = ref::uniform_vec(g, t, -2, 0);
  for (int i = 0; i < t; ++i)
    while (A.row(i).sum() + B.row(i).sum() > c[i]) {
      A.row(i) = ref::uniform(g, 1, u, -1, 0);
      B.row(i) = ref::uniform(g, 1, v, -1, 0);
    }
  return make_mixed_integer_signal(A, B, c, Eigen::VectorXd::Zero(u), Eigen::VectorXd::Ones(u));
}

// Responses optimal for theta_true plus Gaussian noise of the given std.
inline IODataset mi_dataset(std::mt19937_64& g, int count, int t, int u, int v, bool penalize_y,
                            const Eigen::VectorXd& truth, double noise) {
  auto oracle = std::make_shared<MixedIntegerOracle>(LinearHypothesis::separable(u, v), penalize_y);
  const FeatureMap phi = oracle->hypothesis().feature_map();
  std::normal_distribution<double> N(0, 1);
  IODataset ds;
  for (int i = 0; i < count; ++i) {
    const Signal s = mi_signal(g, t, u, v);
    Eigen::VectorXd th = truth;
    for (Eigen::Index k = 0; k < th.size(); ++k) th[k] += noise * N(g);
    ds.instances.push_back(IOInstance::make(s, oracle->forward_min(s, th, phi), oracle));
  }
  return ds;
}

// Binary instances whose responses are optimal for truth + noise.
inline IODataset binary_dataset(std::mt19937_64& g, int count, int t, int n, const Eigen::VectorXd& truth,
                                double noise) {
  auto oracle = binary_oracle();
  const FeatureMap phi = FeatureMap::identity(n);
  std::normal_distribution<double> N(0, 1);
  IODataset ds;
  for (int i = 0; i < count; ++i) {
    const Signal s = binary_signal(g, t, n);
    Eigen::VectorXd th = truth;
    for (Eigen::Index k = 0; k < th.size(); ++k) th[k] += noise * N(g);
    ds.instances.push_back(IOInstance::make(s, oracle->forward_min(s, th, phi), oracle));
  }
  return ds;
}

}  // namespace fx
