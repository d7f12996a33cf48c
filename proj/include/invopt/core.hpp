#pragma once

// Domain types shared by every module: signals, responses, feature maps,
// distance functions, budgets, feasible-set oracles and datasets.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invopt/errors.hpp"

namespace invopt {

/// Learned model: a dense cost vector of the feature dimension p.
using CostVector = Eigen::VectorXd;

/// Exogenous signal. The binary-LP family uses A (t x n) and rhs (t) for
/// Ax <= rhs. The mixed-integer family uses A (t x u), B (t x v), rhs (t),
/// the context payload w, the finite set Z(w) and box bounds on y.
struct Signal {
  Eigen::MatrixXd A;
  Eigen::VectorXd rhs;
  Eigen::MatrixXd B;
  Eigen::VectorXd w;
  std::vector<Eigen::VectorXi> z_set;
  Eigen::VectorXd y_lower;
  Eigen::VectorXd y_upper;
};

/// Decision of the agent, split into a continuous and a discrete block.
struct Response {
  Eigen::VectorXd y;
  Eigen::VectorXi z;

  Response() = default;
  Response(Eigen::VectorXd cont, Eigen::VectorXi disc) : y(std::move(cont)), z(std::move(disc)) {}

  static Response discrete(Eigen::VectorXi z) { return Response(Eigen::VectorXd(), std::move(z)); }

  Eigen::Index size() const { return y.size() + z.size(); }
  /// Continuous block followed by the discrete block, as doubles.
  Eigen::VectorXd stacked() const;
  bool operator==(const Response& other) const;
  bool operator!=(const Response& other) const { return !(*this == other); }
  std::string to_string() const;
};

enum class FeatureKind { identity, custom };

/// phi(s, x) in R^p. `identity` stacks (y, z) and lets oracles use
/// coordinate-wise bounds.
struct FeatureMap {
  int dimension = 0;
  FeatureKind kind = FeatureKind::custom;
  std::function<Eigen::VectorXd(const Signal&, const Response&)> eval;

  Eigen::VectorXd operator()(const Signal& s, const Response& x) const;

  static FeatureMap identity(int dimension);
  static FeatureMap custom(int dimension,
                           std::function<Eigen::VectorXd(const Signal&, const Response&)> fn);
};

enum class DistanceKind { zero, euclidean, l1, hamming, custom };
/// Which response block the distance looks at.
enum class DistancePart { all, discrete };

struct DistanceFn {
  DistanceKind kind = DistanceKind::zero;
  DistancePart part = DistancePart::all;
  std::function<double(const Response&, const Response&)> eval;

  double operator()(const Response& a, const Response& b) const { return eval(a, b); }

  static DistanceFn zero();
  static DistanceFn euclidean(DistancePart part = DistancePart::all);
  static DistanceFn l1(DistancePart part = DistancePart::all);
  /// 0-1 distance: 0 iff the (selected blocks of the) responses coincide.
  static DistanceFn hamming(DistancePart part = DistancePart::all);
  static DistanceFn custom(std::function<double(const Response&, const Response&)> fn);
};

std::string to_string(DistanceKind kind);
DistanceKind distance_kind_from_string(const std::string& name);

/// Work limit handed to inner maximization oracles.
struct Budget {
  std::optional<std::size_t> max_nodes;
  std::optional<double> suboptimality_eps;
  bool exact = true;

  static Budget unlimited() { return {}; }
  static Budget nodes(std::size_t n) { return {n, std::nullopt, false}; }
  static Budget gap(double eps) { return {std::nullopt, eps, false}; }

  /// Throws ConfigError when exact is set together with a cap.
  void validate() const;
};

/// Result of max_{x in X(s)} <theta, phi(s,xhat) - phi(s,x)> + d(xhat, x).
/// `eps_bound` is an upper bound on value* - value (0 for exact searches).
struct InnerResult {
  Response x;
  double value = 0.0;
  double eps_bound = 0.0;
};

enum class OracleKind { finite_enumerable, mixed_integer };

/// Feasible set X(s) of the forward problem together with the two
/// optimization routines every learner needs.
class FeasibleSetOracle {
 public:
  virtual ~FeasibleSetOracle() = default;

  virtual OracleKind kind() const = 0;
  virtual std::string family() const = 0;
  virtual bool contains(const Signal& s, const Response& x) const = 0;
  /// Lexicographically ordered feasible responses. Throws OracleError for
  /// sets that are not finite.
  virtual std::vector<Response> enumerate(const Signal& s) const;
  virtual InnerResult inner_max(const Signal& s, const Response& xhat, const CostVector& theta,
                                const FeatureMap& phi, const DistanceFn& d,
                                const Budget& budget) const = 0;
  /// argmin_{x in X(s)} <theta, phi(s,x)>, ties broken by enumeration order.
  virtual Response forward_min(const Signal& s, const CostVector& theta,
                               const FeatureMap& phi) const = 0;

  bool enumerable() const { return kind() == OracleKind::finite_enumerable; }
};

using OraclePtr = std::shared_ptr<const FeasibleSetOracle>;

struct IOInstance {
  Signal signal;
  Response response;
  OraclePtr oracle;
  /// Set when the expert response is outside X(signal); consumed by the
  /// hinge loss path.
  bool infeasible = false;

  /// Builds an instance and tags it by querying the oracle.
  static IOInstance make(Signal s, Response x, OraclePtr oracle);
};

struct IODataset {
  std::vector<IOInstance> instances;
  std::uint64_t seed = 0;

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }
  const IOInstance& operator[](std::size_t i) const { return instances[i]; }
  /// First n instances (same seed).
  IODataset head(std::size_t n) const;
  /// Throws if empty or if phi disagrees with some instance.
  void validate(const FeatureMap& phi) const;
};

/// Admissible cost vectors: all of R^p, the nonnegative orthant or a box,
/// optionally intersected with the hyperplane sum(theta) = 1.
struct ThetaSet {
  enum class Kind { all, nonneg, box };
  Kind kind = Kind::all;
  double lo = 0.0;
  double hi = 0.0;
  bool unit_sum = false;

  static ThetaSet all() { return {}; }
  static ThetaSet nonneg() { return {Kind::nonneg, 0.0, 0.0, false}; }
  static ThetaSet box(double lo, double hi) { return {Kind::box, lo, hi, false}; }
  /// nonneg with sum 1.
  static ThetaSet simplex() { return {Kind::nonneg, 0.0, 0.0, true}; }

  /// Per-coordinate bounds of length p (+-inf where free).
  Eigen::VectorXd lower(int p) const;
  Eigen::VectorXd upper(int p) const;
  bool contains(const CostVector& theta, double tol = 1e-9) const;
  /// Euclidean projection; unit_sum sets use the sort-based simplex projection.
  CostVector project(const CostVector& theta) const;
  void validate() const;
};

std::string to_string(const ThetaSet& set);
/// "all", "nonneg", "simplex" or "box:lo:hi".
ThetaSet theta_set_from_string(const std::string& name);

/// <theta, phi(s, x)>.
double evaluate_hypothesis(const CostVector& theta, const FeatureMap& phi, const Signal& s,
                           const Response& x);

bool check_feasible(const IOInstance& inst);

/// Throws DimensionError unless theta has length p and finite entries.
void check_cost_vector(const CostVector& theta, int p);

/// Lexicographic comparison (continuous block first).
bool lex_less(const Response& a, const Response& b);

}  // namespace invopt
