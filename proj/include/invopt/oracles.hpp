#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "invopt/core.hpp"

namespace invopt {

inline constexpr int kDefaultEnumerationCap = 24;

/// Feasible subset of {0,1}^n under A x <= b, lexicographic order
/// (first coordinate most significant, 0 before 1).
std::vector<Response> enumerate_binary_lp(const Signal& s, int cap = kDefaultEnumerationCap);

/// X(s) = {x in {0,1}^n : A x <= b}.
class BinaryLpOracle : public FeasibleSetOracle {
 public:
  explicit BinaryLpOracle(int cap = kDefaultEnumerationCap) : cap_(cap) {}

  OracleKind kind() const override { return OracleKind::finite_enumerable; }
  std::string family() const override { return "binary_lp"; }
  bool contains(const Signal& s, const Response& x) const override;
  std::vector<Response> enumerate(const Signal& s) const override;
  InnerResult inner_max(const Signal& s, const Response& xhat, const CostVector& theta,
                        const FeatureMap& phi, const DistanceFn& d,
                        const Budget& budget) const override;
  Response forward_min(const Signal& s, const CostVector& theta,
                       const FeatureMap& phi) const override;

  int cap() const { return cap_; }
  static constexpr double kFeasTol = 1e-9;

 private:
  int cap_;
};

/// Finite set produced by a user callback; order of the callback is the
/// enumeration order.
class EnumeratedOracle : public FeasibleSetOracle {
 public:
  using Generator = std::function<std::vector<Response>(const Signal&)>;
  explicit EnumeratedOracle(Generator gen) : gen_(std::move(gen)) {}

  OracleKind kind() const override { return OracleKind::finite_enumerable; }
  std::string family() const override { return "enumerated"; }
  bool contains(const Signal& s, const Response& x) const override;
  std::vector<Response> enumerate(const Signal& s) const override { return gen_(s); }
  InnerResult inner_max(const Signal& s, const Response& xhat, const CostVector& theta,
                        const FeatureMap& phi, const DistanceFn& d,
                        const Budget& budget) const override;
  Response forward_min(const Signal& s, const CostVector& theta,
                       const FeatureMap& phi) const override;

 private:
  Generator gen_;
};

/// <theta, phi(s,(y,z))> = <y, Q phi1(w,z)> + <q, phi2(w,z)>, with
/// theta = (vec(Q), q) and vec stacking the columns of the u x m matrix Q.
struct LinearHypothesis {
  int u = 0;
  int m = 0;
  int r = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& w, const Eigen::VectorXi& z)> phi1;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& w, const Eigen::VectorXi& z)> phi2;

  int dimension() const { return u * m + r; }
  /// Q (u x m) and q (r) views of theta.
  Eigen::MatrixXd Q(const CostVector& theta) const;
  Eigen::VectorXd q(const CostVector& theta) const;
  FeatureMap feature_map() const;

  /// phi1 = 1, phi2 = z: the cost <q_y, y> + <q_z, z>.
  static LinearHypothesis separable(int u, int v);
};

/// X(s) = {(y,z): A y + B z <= c, lo <= y <= hi, z in Z(w)}.
class MixedIntegerOracle : public FeasibleSetOracle {
 public:
  MixedIntegerOracle(LinearHypothesis h, bool penalize_y);

  OracleKind kind() const override {
    return hyp_.u == 0 ? OracleKind::finite_enumerable : OracleKind::mixed_integer;
  }
  std::string family() const override { return "mixed_integer"; }
  bool contains(const Signal& s, const Response& x) const override;
  std::vector<Response> enumerate(const Signal& s) const override;
  /// Distance is d_z on the discrete block, plus ||yhat - y||_inf when the
  /// oracle penalizes y. `phi` must be this oracle's feature map.
  InnerResult inner_max(const Signal& s, const Response& xhat, const CostVector& theta,
                        const FeatureMap& phi, const DistanceFn& d,
                        const Budget& budget) const override;
  Response forward_min(const Signal& s, const CostVector& theta,
                       const FeatureMap& phi) const override;

  const LinearHypothesis& hypothesis() const { return hyp_; }
  bool penalize_y() const { return penalize_y_; }

  /// Rows of [A; I; -I] y <= [c - B z; hi; -lo] for a fixed z.
  static void y_polytope(const Signal& s, const Eigen::VectorXi& z, Eigen::MatrixXd& Ay,
                         Eigen::VectorXd& by);
  static constexpr double kFeasTol = 1e-9;

 private:
  LinearHypothesis hyp_;
  bool penalize_y_;
};

/// Builds a signal for the mixed-integer family with Z = {0,1}^v.
Signal make_mixed_integer_signal(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::VectorXd c,
                                 Eigen::VectorXd y_lower, Eigen::VectorXd y_upper,
                                 Eigen::VectorXd w = {});

/// {0,1}^v in lexicographic order.
std::vector<Eigen::VectorXi> binary_cube(int v);

}  // namespace invopt
