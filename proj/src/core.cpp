#include "invopt/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace invopt {

Eigen::VectorXd Response::stacked() const {
  Eigen::VectorXd out(size());
  out.head(y.size()) = y;
  out.tail(z.size()) = z.cast<double>();
  return out;
}

bool Response::operator==(const Response& other) const {
  if (y.size() != other.y.size() || z.size() != other.z.size()) return false;
  return y == other.y && z == other.z;
}

std::string Response::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "y=[";
  for (Eigen::Index i = 0; i < y.size(); ++i) os << (i ? " " : "") << y[i];
  os << "] z=[";
  for (Eigen::Index i = 0; i < z.size(); ++i) os << (i ? " " : "") << z[i];
  os << "]";
  return os.str();
}

bool lex_less(const Response& a, const Response& b) {
  const Eigen::VectorXd sa = a.stacked(), sb = b.stacked();
  const Eigen::Index n = std::min(sa.size(), sb.size());
  for (Eigen::Index i = 0; i < n; ++i)
    if (sa[i] != sb[i]) return sa[i] < sb[i];
  return sa.size() < sb.size();
}

Eigen::VectorXd FeatureMap::operator()(const Signal& s, const Response& x) const {
  Eigen::VectorXd v = eval(s, x);
  if (v.size() != dimension)
    throw DimensionError("feature map returned length " + std::to_string(v.size()) +
                         ", declared " + std::to_string(dimension));
  return v;
}

FeatureMap FeatureMap::identity(int dimension) {
  FeatureMap f;
  f.dimension = dimension;
  f.kind = FeatureKind::identity;
  f.eval = [](const Signal&, const Response& x) { return x.stacked(); };
  return f;
}

FeatureMap FeatureMap::custom(int dimension,
                              std::function<Eigen::VectorXd(const Signal&, const Response&)> fn) {
  FeatureMap f;
  f.dimension = dimension;
  f.kind = FeatureKind::custom;
  f.eval = std::move(fn);
  return f;
}

namespace {

Eigen::VectorXd diff(const Response& a, const Response& b, DistancePart part) {
  if (a.z.size() != b.z.size() || (part == DistancePart::all && a.y.size() != b.y.size()))
    throw DimensionError("distance between responses of different shape");
  if (part == DistancePart::discrete) return (a.z - b.z).cast<double>();
  return a.stacked() - b.stacked();
}

}  // namespace

DistanceFn DistanceFn::zero() {
  return {DistanceKind::zero, DistancePart::all, [](const Response&, const Response&) { return 0.0; }};
}

DistanceFn DistanceFn::euclidean(DistancePart part) {
  return {DistanceKind::euclidean, part,
          [part](const Response& a, const Response& b) { return diff(a, b, part).norm(); }};
}

DistanceFn DistanceFn::l1(DistancePart part) {
  return {DistanceKind::l1, part, [part](const Response& a, const Response& b) {
            return diff(a, b, part).lpNorm<1>();
          }};
}

DistanceFn DistanceFn::hamming(DistancePart part) {
  return {DistanceKind::hamming, part, [part](const Response& a, const Response& b) {
            return diff(a, b, part).isZero(0.0) ? 0.0 : 1.0;
          }};
}

DistanceFn DistanceFn::custom(std::function<double(const Response&, const Response&)> fn) {
  return {DistanceKind::custom, DistancePart::all, std::move(fn)};
}

std::string to_string(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::zero: return "zero";
    case DistanceKind::euclidean: return "l2";
    case DistanceKind::l1: return "l1";
    case DistanceKind::hamming: return "hamming";
    case DistanceKind::custom: return "custom";
  }
  return "custom";
}

DistanceKind distance_kind_from_string(const std::string& name) {
  if (name == "zero" || name == "none") return DistanceKind::zero;
  if (name == "l2" || name == "euclidean") return DistanceKind::euclidean;
  if (name == "l1") return DistanceKind::l1;
  if (name == "hamming" || name == "0-1") return DistanceKind::hamming;
  throw ConfigError("unknown distance '" + name + "'");
}

void Budget::validate() const {
  if (exact && (max_nodes || suboptimality_eps))
    throw ConfigError("exact budget cannot carry a node cap or an epsilon target");
  if (suboptimality_eps && !(*suboptimality_eps >= 0.0))
    throw ConfigError("suboptimality_eps must be nonnegative");
  if (max_nodes && *max_nodes == 0) throw ConfigError("max_nodes must be positive");
}

std::vector<Response> FeasibleSetOracle::enumerate(const Signal&) const {
  throw OracleError(family() + " oracle does not enumerate its feasible set");
}

IOInstance IOInstance::make(Signal s, Response x, OraclePtr oracle) {
  IOInstance inst{std::move(s), std::move(x), std::move(oracle), false};
  if (inst.response.size() == 0) throw DimensionError("response has no entries");
  inst.infeasible = !check_feasible(inst);
  return inst;
}

IODataset IODataset::head(std::size_t n) const {
  IODataset out;
  out.seed = seed;
  out.instances.assign(instances.begin(), instances.begin() + std::min(n, instances.size()));
  return out;
}

void IODataset::validate(const FeatureMap& phi) const {
  if (instances.empty()) throw DimensionError("dataset is empty");
  for (const auto& inst : instances) {
    if (!inst.oracle) throw ConfigError("instance without a feasible-set oracle");
    if (phi(inst.signal, inst.response).size() != phi.dimension)
      throw DimensionError("feature dimension mismatch");
  }
}

double evaluate_hypothesis(const CostVector& theta, const FeatureMap& phi, const Signal& s,
                           const Response& x) {
  const Eigen::VectorXd f = phi(s, x);
  if (f.size() != theta.size())
    throw DimensionError("theta has length " + std::to_string(theta.size()) + ", features " +
                         std::to_string(f.size()));
  return theta.dot(f);
}

bool check_feasible(const IOInstance& inst) {
  if (!inst.oracle) return false;
  try {
    return inst.oracle->contains(inst.signal, inst.response);
  } catch (const Error&) {
    return false;
  }
}

void check_cost_vector(const CostVector& theta, int p) {
  if (theta.size() != p)
    throw DimensionError("cost vector has length " + std::to_string(theta.size()) +
                         ", expected " + std::to_string(p));
  if (!theta.allFinite()) throw DimensionError("cost vector has non-finite entries");
}

Eigen::VectorXd ThetaSet::lower(int p) const {
  switch (kind) {
    case Kind::all: return Eigen::VectorXd::Constant(p, -INFINITY);
    case Kind::nonneg: return Eigen::VectorXd::Zero(p);
    case Kind::box: return Eigen::VectorXd::Constant(p, lo);
  }
  return {};
}

Eigen::VectorXd ThetaSet::upper(int p) const {
  return Eigen::VectorXd::Constant(p, kind == Kind::box ? hi : INFINITY);
}

bool ThetaSet::contains(const CostVector& theta, double tol) const {
  const int p = int(theta.size());
  if (((lower(p) - theta).array() > tol).any() || ((theta - upper(p)).array() > tol).any()) return false;
  return !unit_sum || std::abs(theta.sum() - 1.0) <= tol;
}

void ThetaSet::validate() const {
  if (kind == Kind::box && !(std::isfinite(lo) && std::isfinite(hi) && lo <= hi))
    throw ConfigError("theta box needs finite lo <= hi");
}

CostVector ThetaSet::project(const CostVector& theta) const {
  const int p = int(theta.size());
  const Eigen::VectorXd l = lower(p), u = upper(p);
  if (!unit_sum) return theta.cwiseMax(l).cwiseMin(u);
  if (kind == Kind::all) return theta.array() - (theta.sum() - 1.0) / p;
  if (kind == Kind::nonneg) {
    std::vector<double> v(theta.data(), theta.data() + p);
    std::sort(v.rbegin(), v.rend());
    double run = 0.0, tau = 0.0;
    for (int k = 0; k < p; ++k) {
      run += v[std::size_t(k)];
      const double t = (run - 1.0) / (k + 1);
      if (v[std::size_t(k)] - t > 0) tau = t;
    }
    return (theta.array() - tau).cwiseMax(0.0);
  }
  if (p * lo > 1.0 + 1e-12 || p * hi < 1.0 - 1e-12) throw ConfigError("box misses the unit-sum hyperplane");
  // sum of clamp(theta - tau) is nonincreasing in tau
  double a = theta.minCoeff() - hi, b = theta.maxCoeff() - lo;
  for (int it = 0; it < 200 && b - a > 0; ++it) {
    const double m = 0.5 * (a + b);
    if ((theta.array() - m).cwiseMax(lo).cwiseMin(hi).sum() > 1.0) a = m; else b = m;
  }
  return (theta.array() - 0.5 * (a + b)).cwiseMax(lo).cwiseMin(hi);
}

std::string to_string(const ThetaSet& set) {
  std::string base;
  switch (set.kind) {
    case ThetaSet::Kind::all: base = "all"; break;
    case ThetaSet::Kind::nonneg: base = set.unit_sum ? "simplex" : "nonneg"; break;
    case ThetaSet::Kind::box: {
      std::ostringstream os;
      os.precision(17);
      os << "box:" << set.lo << ":" << set.hi;
      base = os.str();
      break;
    }
  }
  if (set.unit_sum && set.kind != ThetaSet::Kind::nonneg) base += "+sum1";
  return base;
}

ThetaSet theta_set_from_string(const std::string& name) {
  std::string s = name;
  bool sum1 = false;
  if (s.size() > 5 && s.compare(s.size() - 5, 5, "+sum1") == 0) sum1 = true, s.resize(s.size() - 5);
  ThetaSet out;
  if (s == "all" || s == "R^p") out = ThetaSet::all();
  else if (s == "nonneg" || s == "nonneg_orthant") out = ThetaSet::nonneg();
  else if (s == "simplex") out = ThetaSet::simplex();
  else if (s.rfind("box:", 0) == 0) {
    const auto c = s.find(':', 4);
    if (c == std::string::npos) throw ConfigError("theta set '" + name + "' must read box:lo:hi");
    try {
      out = ThetaSet::box(std::stod(s.substr(4, c - 4)), std::stod(s.substr(c + 1)));
    } catch (const std::logic_error&) {
      throw ConfigError("theta set '" + name + "' must read box:lo:hi");
    }
  } else {
    throw ConfigError("unknown theta set '" + name + "'");
  }
  out.unit_sum = out.unit_sum || sum1;
  out.validate();
  return out;
}

}  // namespace invopt
