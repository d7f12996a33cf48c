#include "invopt/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "invopt/geometry.hpp"
#include "invopt/parallel.hpp"
#include "invopt/reformulate.hpp"
#include "invopt/rng.hpp"
#include "invopt/samd.hpp"

namespace invopt {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// substreams of a seed; adding a method never touches these
enum Stream : std::uint64_t { kTheta = 1, kTrainA = 2, kTrainB = 3, kNoise = 4, kTestA = 5, kTestB = 6, kSampling = 7 };

const std::vector<std::string> kFirstOrder{"sm", "md", "ssm", "asm", "smd", "amd", "sasm", "samd"};

Eigen::VectorXd uniform_vec(Rng& r, int n, double lo, double hi) {
  Eigen::VectorXd v(n);
  for (int j = 0; j < n; ++j) v[j] = r.uniform(lo, hi);
  return v;
}

Eigen::VectorXd noisy(const CostVector& theta, Rng* noise, double sd) {
  if (!noise || sd == 0.0) return theta;
  Eigen::VectorXd th = theta;
  for (Eigen::Index j = 0; j < th.size(); ++j) th[j] += sd * noise->normal();
  return th;
}

// One row at a time: b_i, then A's row redrawn until its sum is <= b_i so
// that x = 1 is feasible.
Signal nonpositive_signal(Rng& ra, Rng& rb, int t, int n, double b_lo) {
  Signal s;
  s.A.resize(t, n);
  s.rhs.resize(t);
  for (int i = 0; i < t; ++i) {
    s.rhs[i] = rb.uniform(b_lo, 0.0);
    do {
      for (int j = 0; j < n; ++j) s.A(i, j) = ra.uniform(-1.0, 0.0);
    } while (s.A.row(i).sum() > s.rhs[i]);
  }
  return s;
}

// A ~ U[-1,1], b ~ U[-1,0], redrawn until X(s) is nonempty.
Signal mixed_sign_signal(Rng& ra, Rng& rb, int t, int n) {
  for (;;) {
    Signal s;
    s.A.resize(t, n);
    s.rhs.resize(t);
    for (int i = 0; i < t; ++i) {
      s.rhs[i] = rb.uniform(-1.0, 0.0);
      for (int j = 0; j < n; ++j) s.A(i, j) = ra.uniform(-1.0, 1.0);
    }
    if (!enumerate_binary_lp(s).empty()) return s;
  }
}

Signal mixed_integer_signal(Rng& ra, Rng& rb, int t, int u, int v) {
  Eigen::MatrixXd A(t, u), B(t, v);
  Eigen::VectorXd c(t);
  for (int i = 0; i < t; ++i) {
    c[i] = rb.uniform(-2.0, 0.0);
    do {
      for (int j = 0; j < u; ++j) A(i, j) = ra.uniform(-1.0, 0.0);
      for (int j = 0; j < v; ++j) B(i, j) = ra.uniform(-1.0, 0.0);
    } while (A.row(i).sum() + B.row(i).sum() > c[i]);
  }
  return make_mixed_integer_signal(A, B, c, Eigen::VectorXd::Zero(u), Eigen::VectorXd::Ones(u));
}

template <class SignalFn>
IODataset make_set(int count, const OraclePtr& oracle, const FeatureMap& phi, const CostVector& theta, Rng* noise,
                   double sd, std::uint64_t seed, SignalFn&& next_signal) {
  IODataset ds;
  ds.seed = seed;
  for (int i = 0; i < count; ++i) {
    Signal s = next_signal();
    const Eigen::VectorXd th = noisy(theta, noise, sd);
    Response x = oracle->forward_min(s, th, phi);
    ds.instances.push_back(IOInstance::make(std::move(s), std::move(x), oracle));
  }
  return ds;
}

GeneratedData binary_experiment(const ExperimentConfig& cfg, std::uint64_t seed, double theta_lo, bool mixed_sign,
                                double b_lo) {
  const Rng root(seed);
  Rng rt = root.substream(kTheta);
  GeneratedData out;
  out.theta_true = uniform_vec(rt, cfg.n, theta_lo, 1.0);
  out.phi = FeatureMap::identity(cfg.n);
  const OraclePtr oracle = std::make_shared<BinaryLpOracle>();
  Rng ta = root.substream(kTrainA), tb = root.substream(kTrainB), rn = root.substream(kNoise);
  Rng ea = root.substream(kTestA), eb = root.substream(kTestB);
  auto draw = [&](Rng& a, Rng& b) {
    return mixed_sign ? mixed_sign_signal(a, b, cfg.t, cfg.n) : nonpositive_signal(a, b, cfg.t, cfg.n, b_lo);
  };
  out.train = make_set(cfg.N, oracle, out.phi, out.theta_true, &rn, cfg.noise_std, seed, [&] { return draw(ta, tb); });
  out.test = make_set(cfg.test_size, oracle, out.phi, out.theta_true, nullptr, 0.0, seed, [&] { return draw(ea, eb); });
  return out;
}

IODataset with_oracle(const IODataset& ds, const OraclePtr& oracle) {
  IODataset out = ds;
  for (auto& inst : out.instances) inst.oracle = oracle;
  return out;
}

ThetaSet theta_set_for(Experiment e) {
  return e == Experiment::inconsistent ? ThetaSet::all() : ThetaSet::nonneg();
}

std::string clean_message(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '"') c = ' ';
  return s;
}

void put(std::ostream& os, double v) {
  if (std::isnan(v))
    os << "nan";
  else if (std::isinf(v))
    os << (v > 0 ? "inf" : "-inf");
  else
    os << v;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::consistent: return "consistent";
    case Experiment::inconsistent: return "inconsistent";
    case Experiment::mixed_integer: return "mixed_integer";
    case Experiment::samd_bench: return "samd_bench";
  }
  return "?";
}

Experiment experiment_from_string(const std::string& name) {
  for (auto e : {Experiment::consistent, Experiment::inconsistent, Experiment::mixed_integer, Experiment::samd_bench})
    if (to_string(e) == name) return e;
  throw ConfigError("unknown experiment '" + name + "'");
}

bool is_first_order(const std::string& m) {
  return std::find(kFirstOrder.begin(), kFirstOrder.end(), m) != kFirstOrder.end();
}

std::vector<std::string> supported_methods(Experiment e) {
  std::vector<std::string> m;
  switch (e) {
    case Experiment::consistent:
      m = {"feasibility", "incenter", "circumcenter_desk", "asl_enumerated", "sl_facets"};
      break;
    case Experiment::inconsistent:
      m = {"asl_enumerated", "sl_facets"};
      break;
    case Experiment::mixed_integer:
      return {"feasibility", "asl_mi_lp_z", "asl_mi_lp_yz"};
    case Experiment::samd_bench:
      break;
  }
  m.insert(m.end(), kFirstOrder.begin(), kFirstOrder.end());
  return m;
}

ExperimentConfig ExperimentConfig::defaults(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  switch (e) {
    case Experiment::consistent:
      c.N = c.test_size = 100, c.n = 6, c.t = 4;
      c.train_sizes = {10, 25, 50, 100};
      c.methods = {"feasibility", "incenter", "circumcenter_desk", "asl_enumerated"};
      break;
    case Experiment::inconsistent:
      c.N = c.test_size = 100, c.n = 10, c.t = 8, c.noise_std = 0.05;
      c.train_sizes = {10, 25, 50, 100};
      c.methods = {"asl_enumerated", "sl_facets"};
      break;
    case Experiment::mixed_integer:
      c.N = c.test_size = 20, c.u = c.v = 3, c.t = 2;
      c.train_sizes = {5, 10, 20};
      c.methods = {"feasibility", "asl_mi_lp_z", "asl_mi_lp_yz"};
      c.kappa = 0.0;
      break;
    case Experiment::samd_bench:
      c.N = c.test_size = 50, c.n = 10, c.t = 8;
      c.train_sizes = {50};
      c.methods = {"sm", "ssm", "asm", "sasm", "md", "smd", "amd", "samd"};
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (N < 1 || test_size < 1 || t < 1) throw ConfigError("sizes must be positive");
  if (experiment == Experiment::mixed_integer ? (u < 1 || v < 1) : n < 1) throw ConfigError("sizes must be positive");
  if (experiment != Experiment::mixed_integer && n > kDefaultEnumerationCap)
    throw ConfigError("n exceeds the enumeration cap");
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (train_sizes.empty()) throw ConfigError("train_sizes must be non-empty");
  for (int s : train_sizes)
    if (s < 1 || s > N) throw ConfigError("train sizes must lie in [1, N]");
  if (methods.empty()) throw ConfigError("no methods selected");
  const auto ok = supported_methods(experiment);
  for (const auto& m : methods)
    if (std::find(ok.begin(), ok.end(), m) == ok.end())
      throw ConfigError("method '" + m + "' is not available for the " + to_string(experiment) + " experiment");
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be nonnegative");
  if (!(kappa >= 0.0) || !(fo_kappa > 0.0)) throw ConfigError("kappa must be nonnegative and fo_kappa positive");
  if (sm_steps < 1 || batch < 1 || nodes < 1 || loss_points < 1) throw ConfigError("first-order settings must be positive");
  if (!(gap_target > 0.0)) throw ConfigError("gap_target must be positive");
  if (!(eps0 >= 0.0)) throw ConfigError("eps0 must be nonnegative");
  if (experiment == Experiment::mixed_integer && (u + v) > 16) throw ConfigError("u + v too large for desk scale");
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const Experiment e = experiment_from_string(j.value("experiment", std::string("consistent")));
  ExperimentConfig c = ExperimentConfig::defaults(e);
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const json& v = it.value();
      if (k == "experiment") continue;
      else if (k == "N") c.N = v.get<int>();
      else if (k == "test_size") c.test_size = v.get<int>();
      else if (k == "n") c.n = v.get<int>();
      else if (k == "t") c.t = v.get<int>();
      else if (k == "u") c.u = v.get<int>();
      else if (k == "v") c.v = v.get<int>();
      else if (k == "noise_std") c.noise_std = v.get<double>();
      else if (k == "seeds") c.seeds = v.get<std::vector<std::uint64_t>>();
      else if (k == "train_sizes") c.train_sizes = v.get<std::vector<int>>();
      else if (k == "methods") c.methods = v.get<std::vector<std::string>>();
      else if (k == "output") c.output = v.get<std::string>();
      else if (k == "kappa") c.kappa = v.get<double>();
      else if (k == "fo_kappa") c.fo_kappa = v.get<double>();
      else if (k == "sm_steps") c.sm_steps = v.get<long>();
      else if (k == "batch") c.batch = v.get<std::size_t>();
      else if (k == "nodes") c.nodes = v.get<std::size_t>();
      else if (k == "eps0") c.eps0 = v.get<double>();
      else if (k == "loss_points") c.loss_points = v.get<long>();
      else if (k == "gap_target") c.gap_target = v.get<double>();
      else throw ConfigError("unknown config key '" + k + "'");
    }
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("bad config value: ") + ex.what());
  }
  // an explicit N without train sizes trains on the whole pool
  if (j.contains("N") && !j.contains("train_sizes")) c.train_sizes = {c.N};
  if (j.contains("N") && !j.contains("test_size")) c.test_size = c.N;
  c.validate();
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["N"] = c.N;
  j["test_size"] = c.test_size;
  if (c.experiment == Experiment::mixed_integer) {
    j["u"] = c.u;
    j["v"] = c.v;
  } else {
    j["n"] = c.n;
  }
  j["t"] = c.t;
  j["noise_std"] = c.noise_std;
  j["seeds"] = c.seeds;
  j["train_sizes"] = c.train_sizes;
  j["methods"] = c.methods;
  if (!c.output.empty()) j["output"] = c.output;
  j["kappa"] = c.kappa;
  j["fo_kappa"] = c.fo_kappa;
  j["sm_steps"] = c.sm_steps;
  j["batch"] = c.batch;
  j["nodes"] = c.nodes;
  j["eps0"] = c.eps0;
  j["loss_points"] = c.loss_points;
  j["gap_target"] = c.gap_target;
  return j.dump(2);
}

GeneratedData gen_consistent(const ExperimentConfig& cfg, std::uint64_t seed) {
  return binary_experiment(cfg, seed, 0.0, false, -1.0);
}

GeneratedData gen_inconsistent(const ExperimentConfig& cfg, std::uint64_t seed) {
  return binary_experiment(cfg, seed, -1.0, true, -1.0);
}

GeneratedData gen_samd_bench(const ExperimentConfig& cfg, std::uint64_t seed) {
  return binary_experiment(cfg, seed, 0.0, false, -double(cfg.n) / 3.0);
}

GeneratedData gen_mixed_integer(const ExperimentConfig& cfg, std::uint64_t seed) {
  const Rng root(seed);
  Rng rt = root.substream(kTheta);
  GeneratedData out;
  out.theta_true = uniform_vec(rt, cfg.u + cfg.v, 0.0, 1.0);
  auto oracle = std::make_shared<MixedIntegerOracle>(LinearHypothesis::separable(cfg.u, cfg.v), false);
  out.phi = oracle->hypothesis().feature_map();
  Rng ta = root.substream(kTrainA), tb = root.substream(kTrainB), rn = root.substream(kNoise);
  Rng ea = root.substream(kTestA), eb = root.substream(kTestB);
  out.train = make_set(cfg.N, oracle, out.phi, out.theta_true, &rn, cfg.noise_std, seed,
                       [&] { return mixed_integer_signal(ta, tb, cfg.t, cfg.u, cfg.v); });
  out.test = make_set(cfg.test_size, oracle, out.phi, out.theta_true, nullptr, 0.0, seed,
                      [&] { return mixed_integer_signal(ea, eb, cfg.t, cfg.u, cfg.v); });
  return out;
}

GeneratedData generate(const ExperimentConfig& cfg, std::uint64_t seed) {
  switch (cfg.experiment) {
    case Experiment::consistent: return gen_consistent(cfg, seed);
    case Experiment::inconsistent: return gen_inconsistent(cfg, seed);
    case Experiment::mixed_integer: return gen_mixed_integer(cfg, seed);
    case Experiment::samd_bench: return gen_samd_bench(cfg, seed);
  }
  throw ConfigError("unknown experiment");
}

std::pair<double, double> first_order_reference(const ExperimentConfig& cfg, const GeneratedData& data,
                                                const IODataset& train) {
  TrainerOptions o;
  o.kappa = cfg.fo_kappa;
  o.regularizer = Regularizer::l1;
  o.theta_set = theta_set_for(cfg.experiment);
  const auto sol = train_asl_enumerated(train, data.phi, DistanceFn::l1(), o);
  const double norm = sol.theta.lpNorm<1>();
  if (norm <= 1e-12) throw ConfigError("l1-regularized optimum is zero; lower fo_kappa");
  return {sol.objective, 1.0 / norm};
}

TrainedModel train_method(const ExperimentConfig& cfg, const std::string& method, const GeneratedData& data,
                          const IODataset& train, std::uint64_t seed, double f_star, double kappa_tilde) {
  TrainedModel out;
  const ThetaSet set = theta_set_for(cfg.experiment);
  const bool mi = cfg.experiment == Experiment::mixed_integer;
  if (mi) {
    TrainerOptions o;
    o.kappa = cfg.kappa;
    o.regularizer = cfg.kappa > 0 ? Regularizer::half_sq_l2 : Regularizer::none;
    o.theta_set = ThetaSet::nonneg();
    const LinearHypothesis H = LinearHypothesis::separable(cfg.u, cfg.v);
    if (method == "feasibility") {
      // suboptimality loss over the simplex: a point of C on consistent data
      TrainerOptions f;
      f.kappa = 0.0;
      f.regularizer = Regularizer::none;
      f.theta_set = ThetaSet::simplex();
      out.theta = train_asl_mixed_integer_lp(train, DistanceFn::zero(), f).theta;
    } else {
      const bool pen = method == "asl_mi_lp_yz";
      const auto ds = with_oracle(train, std::make_shared<MixedIntegerOracle>(H, pen));
      out.theta = train_asl_mixed_integer_lp(ds, DistanceFn::euclidean(DistancePart::discrete), o).theta;
    }
    return out;
  }

  if (method == "feasibility") {
    out.theta = feasibility_program(build_cone(train, data.phi), ThetaSet::nonneg());
  } else if (method == "incenter") {
    const auto cone = build_cone(train, data.phi, DistanceFn::euclidean());
    out.theta = incenter(cone, ThetaSet::nonneg(), Regularizer::half_sq_l2, cone.distances).theta;
  } else if (method == "circumcenter_desk") {
    out.theta = circumcenter_desk(build_cone(train, data.phi), 8, ThetaSet::nonneg());
  } else if (method == "asl_enumerated") {
    TrainerOptions o;
    o.kappa = cfg.kappa;
    o.theta_set = set;
    out.theta = train_asl_enumerated(train, data.phi, DistanceFn::euclidean(), o).theta;
  } else if (method == "sl_facets") {
    out.theta = train_suboptimality_facets(train, data.phi, set).theta;
  } else if (is_first_order(method)) {
    const bool entropic = method == "md" || method == "smd" || method == "amd" || method == "samd";
    const bool stochastic = method == "ssm" || method == "smd" || method == "sasm" || method == "samd";
    const bool approx = method == "asm" || method == "amd" || method == "sasm" || method == "samd";
    SamdProblem prob{&train, data.phi, DistanceFn::l1(), {cfg.fo_kappa, Regularizer::l1, false}};
    SamdConfig sc;
    const std::size_t N = train.size();
    sc.batch_size = stochastic ? std::min(cfg.batch, N) : N;
    sc.steps = stochastic ? cfg.sm_steps * long(N) / long(sc.batch_size) : cfg.sm_steps;
    sc.step = StepRule::norm_adaptive();
    if (!approx)
      sc.eps = EpsSchedule::exact();
    else
      sc.eps = cfg.eps0 > 0 ? EpsSchedule::gap_over_t(cfg.eps0) : EpsSchedule::node_budget(cfg.nodes);
    sc.averaging = Averaging::none;
    const auto slot = std::size_t(std::find(kFirstOrder.begin(), kFirstOrder.end(), method) - kFirstOrder.begin());
    sc.seed = Rng(seed, kSampling).substream(slot)();
    sc.theta_set = set;
    sc.loss_every = std::max(1L, sc.steps / cfg.loss_points);
    SamdResult res;
    if (entropic) {
      const L1Lift lift = lift_l1_to_simplex(train, data.phi, prob.d, cfg.fo_kappa, set, kappa_tilde);
      res = samd_train(prob, MirrorMap::entropic(lift.kappa_tilde), sc, &lift);
    } else {
      res = samd_train(prob, MirrorMap::euclidean(), sc);
    }
    out.theta = res.theta;
    out.first_order = true;
    out.time_to_target = std::numeric_limits<double>::infinity();
    const double target = cfg.gap_target * std::max(std::abs(f_star), 1e-12);
    for (std::size_t k = 0; k < res.trace.rows.size(); ++k) {
      const auto& r = res.trace.rows[k];
      if (std::isnan(r.loss)) continue;
      // theta_t exists once step t-1 has finished
      const double when = k == 0 ? 0.0 : res.trace.rows[k - 1].time_s;
      const double gap = r.loss - f_star;
      out.curve.emplace_back(r.iter, when, gap);
      if (gap <= target && !std::isfinite(out.time_to_target)) out.time_to_target = when;
    }
    out.final_gap = samd_objective(prob, out.theta) - f_star;
  } else {
    throw ConfigError("unknown method '" + method + "'");
  }
  return out;
}

Metrics evaluate(const CostVector& theta, const GeneratedData& data, const IODataset& train) {
  Metrics m{};
  const double tn = data.theta_true.norm(), n = theta.norm();
  m.theta_error = n > 0 ? (data.theta_true / tn - theta / n).norm() : 1.0;
  const DistanceFn d = DistanceFn::euclidean();
  double cost_io = 0.0, cost_true = 0.0, err = 0.0;
  for (const auto& inst : data.test.instances) {
    const Response x = inst.oracle->forward_min(inst.signal, theta, data.phi);
    err += d(x, inst.response);
    cost_io += evaluate_hypothesis(data.theta_true, data.phi, inst.signal, x);
    cost_true += evaluate_hypothesis(data.theta_true, data.phi, inst.signal, inst.response);
  }
  m.response_error = err / double(data.test.size());
  m.cost_gap = (cost_io - cost_true) / std::max(std::abs(cost_true), 1e-12);
  double in = 0.0;
  for (const auto& inst : train.instances) in += d(inst.oracle->forward_min(inst.signal, theta, data.phi), inst.response);
  m.in_sample_response_error = in / double(train.size());
  return m;
}

double percentile(std::vector<double> values, double q) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }), values.end());
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double pos = q * double(values.size() - 1);
  const std::size_t lo = std::size_t(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - double(lo)) * (values[hi] - values[lo]);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t S = cfg.seeds.size(), Z = cfg.train_sizes.size(), M = cfg.methods.size();
  std::vector<GeneratedData> data(S);
  parallel_for(S, [&](std::size_t k) { data[k] = generate(cfg, cfg.seeds[k]); });

  const bool any_fo = std::any_of(cfg.methods.begin(), cfg.methods.end(), [](const std::string& m) { return is_first_order(m); });
  std::vector<std::vector<MetricsRow>> cells(S * Z);
  std::vector<std::vector<CurvePoint>> curves(S * Z);
  parallel_for(S * Z, [&](std::size_t c) {
    const std::size_t si = c / Z, zi = c % Z;
    const std::uint64_t seed = cfg.seeds[si];
    const int size = cfg.train_sizes[zi];
    const IODataset train = data[si].train.head(std::size_t(size));
    double f_star = kNaN, kt = 1.0;
    std::string ref_error;
    if (any_fo) {
      try {
        std::tie(f_star, kt) = first_order_reference(cfg, data[si], train);
      } catch (const Error& e) {
        ref_error = clean_message(e.what());
      }
    }
    for (std::size_t mi = 0; mi < M; ++mi) {
      const std::string& method = cfg.methods[mi];
      MetricsRow row;
      row.method = method;
      row.seed = seed;
      row.train_size = size;
      row.final_gap = row.time_to_target_s = kNaN;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        if (is_first_order(method) && !ref_error.empty()) throw SolverError(ref_error);
        const TrainedModel model = train_method(cfg, method, data[si], train, seed, f_star, kt);
        row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const Metrics m = evaluate(model.theta, data[si], train);
        row.theta_error = m.theta_error;
        row.response_error = m.response_error;
        row.in_sample_response_error = m.in_sample_response_error;
        row.cost_gap = m.cost_gap;
        if (model.first_order) {
          row.final_gap = model.final_gap;
          row.time_to_target_s = model.time_to_target;
          for (const auto& [it, ts, gap] : model.curve) curves[c].push_back({method, seed, size, it, ts, gap});
        }
      } catch (const Error& e) {
        row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row.theta_error = row.response_error = row.in_sample_response_error = row.cost_gap = kNaN;
        row.status = clean_message(e.what());
      }
      cells[c].push_back(std::move(row));
    }
  });

  ExperimentResult res;
  for (std::size_t c = 0; c < S * Z; ++c) {
    res.rows.insert(res.rows.end(), cells[c].begin(), cells[c].end());
    res.curves.insert(res.curves.end(), curves[c].begin(), curves[c].end());
  }
  const std::vector<std::pair<std::string, double MetricsRow::*>> metrics{
      {"theta_error", &MetricsRow::theta_error},
      {"response_error", &MetricsRow::response_error},
      {"in_sample_response_error", &MetricsRow::in_sample_response_error},
      {"cost_gap", &MetricsRow::cost_gap},
      {"final_gap", &MetricsRow::final_gap}};
  for (const auto& method : cfg.methods)
    for (int size : cfg.train_sizes)
      for (const auto& [name, field] : metrics) {
        if (name == "final_gap" && !is_first_order(method)) continue;
        std::vector<double> vals;
        for (const auto& r : res.rows)
          if (r.method == method && r.train_size == size && std::isfinite(r.*field)) vals.push_back(r.*field);
        AggregateRow a;
        a.method = method;
        a.train_size = size;
        a.metric = name;
        a.count = int(vals.size());
        double sum = 0.0;
        for (double v : vals) sum += v;
        a.mean = vals.empty() ? kNaN : sum / double(vals.size());
        a.p5 = percentile(vals, 0.05);
        a.p95 = percentile(vals, 0.95);
        res.aggregates.push_back(a);
      }
  return res;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  const auto old = os.precision(17);
  os << "method,seed,train_size,theta_error,response_error,in_sample_response_error,cost_gap,final_gap,status\n";
  for (const auto& r : rows) {
    os << r.method << ',' << r.seed << ',' << r.train_size << ',';
    put(os, r.theta_error), os << ',';
    put(os, r.response_error), os << ',';
    put(os, r.in_sample_response_error), os << ',';
    put(os, r.cost_gap), os << ',';
    put(os, r.final_gap), os << ',' << r.status << '\n';
  }
  os.precision(old);
}

void write_aggregates_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  const auto old = os.precision(17);
  os << "method,train_size,metric,mean,p5,p95,count\n";
  for (const auto& a : rows) {
    os << a.method << ',' << a.train_size << ',' << a.metric << ',';
    put(os, a.mean), os << ',';
    put(os, a.p5), os << ',';
    put(os, a.p95), os << ',' << a.count << '\n';
  }
  os.precision(old);
}

void write_timing_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  const auto old = os.precision(9);
  os << "method,seed,train_size,wall_time_s,time_to_target_s\n";
  for (const auto& r : rows) {
    os << r.method << ',' << r.seed << ',' << r.train_size << ',' << r.wall_time_s << ',';
    put(os, r.time_to_target_s), os << '\n';
  }
  os.precision(old);
}

void write_curves_csv(std::ostream& os, const std::vector<CurvePoint>& pts) {
  const auto old = os.precision(12);
  os << "method,seed,train_size,iter,time_s,gap\n";
  for (const auto& p : pts) os << p.method << ',' << p.seed << ',' << p.train_size << ',' << p.iter << ',' << p.time_s << ',' << p.gap << '\n';
  os.precision(old);
}

std::string result_to_json(const ExperimentConfig& cfg, const ExperimentResult& res) {
  json j;
  j["config"] = json::parse(config_to_json(cfg));
  j["rows"] = json::array();
  for (const auto& r : res.rows)
    j["rows"].push_back({{"method", r.method},
                         {"seed", r.seed},
                         {"train_size", r.train_size},
                         {"theta_error", num(r.theta_error)},
                         {"response_error", num(r.response_error)},
                         {"in_sample_response_error", num(r.in_sample_response_error)},
                         {"cost_gap", num(r.cost_gap)},
                         {"final_gap", num(r.final_gap)},
                         {"status", r.status}});
  j["aggregates"] = json::array();
  for (const auto& a : res.aggregates)
    j["aggregates"].push_back({{"method", a.method},
                               {"train_size", a.train_size},
                               {"metric", a.metric},
                               {"mean", num(a.mean)},
                               {"p5", num(a.p5)},
                               {"p95", num(a.p95)},
                               {"count", a.count}});
  return j.dump(2);
}

namespace {

json matrix_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    std::vector<double> r(std::size_t(M.cols()));
    for (Eigen::Index j = 0; j < M.cols(); ++j) r[std::size_t(j)] = M(i, j);
    rows.push_back(r);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index cols) {
  Eigen::MatrixXd M(Eigen::Index(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto r = j[i].get<std::vector<double>>();
    if (Eigen::Index(r.size()) != cols) throw DimensionError("ragged matrix in dataset");
    for (Eigen::Index k = 0; k < cols; ++k) M(Eigen::Index(i), k) = r[std::size_t(k)];
  }
  return M;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
json ivec_json(const Eigen::VectorXi& v) { return std::vector<int>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

Eigen::VectorXi ivec_from(const json& j) {
  const auto v = j.get<std::vector<int>>();
  return Eigen::Map<const Eigen::VectorXi>(v.data(), Eigen::Index(v.size()));
}

}  // namespace

void write_dataset_jsonl(std::ostream& os, const IODataset& ds) {
  for (const auto& inst : ds.instances) {
    json j;
    const Signal& s = inst.signal;
    if (const auto* mi = dynamic_cast<const MixedIntegerOracle*>(inst.oracle.get())) {
      const auto& H = mi->hypothesis();
      if (H.m != 1 || H.r != int(s.B.cols())) throw ConfigError("only the separable hypothesis can be exported");
      j["family"] = "mixed_integer";
      j["u"] = H.u;
      j["v"] = H.r;
      j["penalize_y"] = mi->penalize_y();
      j["B"] = matrix_json(s.B);
      j["y_lower"] = vec_json(s.y_lower);
      j["y_upper"] = vec_json(s.y_upper);
      j["w"] = vec_json(s.w);
      j["y"] = vec_json(inst.response.y);
    } else if (dynamic_cast<const BinaryLpOracle*>(inst.oracle.get())) {
      j["family"] = "binary_lp";
      j["n"] = s.A.cols();
    } else {
      throw ConfigError("dataset export supports binary_lp and mixed_integer instances");
    }
    j["A"] = matrix_json(s.A);
    j["rhs"] = vec_json(s.rhs);
    j["z"] = ivec_json(inst.response.z);
    os << j.dump() << '\n';
  }
  os << std::flush;
  if (!os) throw ConfigError("failed to write dataset");
}

IODataset read_dataset_jsonl(std::istream& is) {
  IODataset ds;
  std::string line;
  OraclePtr binary;
  std::vector<std::tuple<int, int, bool, OraclePtr>> mixed;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const std::string fam = j.at("family").get<std::string>();
      Signal s;
      Response x;
      if (fam == "binary_lp") {
        const int n = j.at("n").get<int>();
        s.A = matrix_from(j.at("A"), n);
        s.rhs = vec_from(j.at("rhs"));
        x = Response::discrete(ivec_from(j.at("z")));
        if (!binary) binary = std::make_shared<BinaryLpOracle>();
        ds.instances.push_back(IOInstance::make(std::move(s), std::move(x), binary));
      } else if (fam == "mixed_integer") {
        const int u = j.at("u").get<int>(), v = j.at("v").get<int>();
        const bool pen = j.at("penalize_y").get<bool>();
        s = make_mixed_integer_signal(matrix_from(j.at("A"), u), matrix_from(j.at("B"), v), vec_from(j.at("rhs")),
                                      vec_from(j.at("y_lower")), vec_from(j.at("y_upper")), vec_from(j.at("w")));
        x = Response(vec_from(j.at("y")), ivec_from(j.at("z")));
        OraclePtr o;
        for (const auto& [uu, vv, pp, oo] : mixed)
          if (uu == u && vv == v && pp == pen) o = oo;
        if (!o) {
          o = std::make_shared<MixedIntegerOracle>(LinearHypothesis::separable(u, v), pen);
          mixed.emplace_back(u, v, pen, o);
        }
        ds.instances.push_back(IOInstance::make(std::move(s), std::move(x), o));
      } else {
        throw ConfigError("unknown family '" + fam + "'");
      }
    } catch (const json::exception& e) {
      throw ConfigError("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return ds;
}

}  // namespace invopt
