#pragma once

// Synthetic experiments: generators, trainers by name, metrics and the
// seeds x train sizes x methods driver.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "invopt/oracles.hpp"

namespace invopt {

enum class Experiment { consistent, inconsistent, mixed_integer, samd_bench };
std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);

struct ExperimentConfig {
  Experiment experiment = Experiment::consistent;
  /// Training pool size; train sets are its prefixes.
  int N = 100;
  int test_size = 100;
  int n = 6;
  int t = 4;
  int u = 3;
  int v = 3;
  double noise_std = 0.0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> train_sizes{100};
  std::vector<std::string> methods;
  std::string output;

  /// ASL trainers.
  double kappa = 0.001;
  /// First-order methods: l1 weight, steps of the full-batch methods (the
  /// stochastic ones take sm_steps * N / batch), batch size, node budget
  /// of the approximate ones, number of recorded losses per run and the
  /// relative loss gap whose hitting time is reported. With eps0 > 0 the
  /// approximate methods stop each inner search at absolute gap eps0 / t
  /// instead of after `nodes` leaves.
  double fo_kappa = 0.01;
  long sm_steps = 200;
  std::size_t batch = 1;
  std::size_t nodes = 4;
  double eps0 = 0.1;
  long loss_points = 100;
  double gap_target = 0.05;

  /// Default sizes per experiment (see docs/desk_scale.md).
  static ExperimentConfig defaults(Experiment e);
  /// Throws ConfigError on bad sizes, empty seeds or a method the
  /// experiment does not support.
  void validate() const;
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
/// Methods available for an experiment, in default order.
std::vector<std::string> supported_methods(Experiment e);
/// sm, md, ssm, asm, smd, amd, sasm, samd.
bool is_first_order(const std::string& method);

struct GeneratedData {
  IODataset train;
  IODataset test;
  CostVector theta_true;
  FeatureMap phi;
};

/// theta ~ U[0,1]^n, A ~ U[-1,0]^{t x n}, b ~ U[-1,0]^t with rows redrawn
/// until x = 1 is feasible; responses by exact forward_min.
GeneratedData gen_consistent(const ExperimentConfig& cfg, std::uint64_t seed);
/// theta ~ U[-1,1]^n, A ~ U[-1,1], b ~ U[-1,0], signals redrawn until X(s)
/// is nonempty; training responses under theta + w, w ~ N(0, noise_std^2 I)
/// per instance; test responses noiseless.
GeneratedData gen_inconsistent(const ExperimentConfig& cfg, std::uint64_t seed);
/// theta = (q_y, q_z) ~ U[0,1]^{u+v}, A, B ~ U[-1,0], c ~ U[-2,0] with rows
/// redrawn until (1, 1) is feasible, 0 <= y <= 1, Z = {0,1}^v.
GeneratedData gen_mixed_integer(const ExperimentConfig& cfg, std::uint64_t seed);
/// As gen_consistent with b ~ U[-n/3, 0].
GeneratedData gen_samd_bench(const ExperimentConfig& cfg, std::uint64_t seed);
GeneratedData generate(const ExperimentConfig& cfg, std::uint64_t seed);

struct TrainedModel {
  CostVector theta;
  /// Loss-gap curve of first-order methods: (iteration, seconds, gap).
  std::vector<std::tuple<long, double, double>> curve;
  double final_gap = 0.0;
  double time_to_target = 0.0;
  bool first_order = false;
};

/// Trains `method` on `train`. First-order methods need `f_star` and
/// `kappa_tilde` of the l1 problem (see first_order_reference).
TrainedModel train_method(const ExperimentConfig& cfg, const std::string& method, const GeneratedData& data,
                          const IODataset& train, std::uint64_t seed, double f_star = 0.0,
                          double kappa_tilde = 1.0);

/// Optimum f* and kappa_tilde = 1/||theta*||_1 of the l1-regularized loss
/// used by the first-order methods.
std::pair<double, double> first_order_reference(const ExperimentConfig& cfg, const GeneratedData& data,
                                                const IODataset& train);

struct MetricsRow {
  std::string method;
  std::uint64_t seed = 0;
  int train_size = 0;
  /// ||theta_true/||theta_true|| - theta/||theta|| ||_2 (1 when theta = 0).
  double theta_error = 0.0;
  /// Mean euclidean distance between predicted and expert responses.
  double response_error = 0.0;
  double in_sample_response_error = 0.0;
  /// (Cost_IO - Cost_true) / |Cost_true| under theta_true on the test set.
  double cost_gap = 0.0;
  /// Last recorded loss gap of first-order methods (NaN otherwise).
  double final_gap = 0.0;
  std::string status = "ok";
  double wall_time_s = 0.0;
  double time_to_target_s = 0.0;
};

struct Metrics {
  double theta_error, response_error, in_sample_response_error, cost_gap;
};
Metrics evaluate(const CostVector& theta, const GeneratedData& data, const IODataset& train);

struct AggregateRow {
  std::string method;
  int train_size = 0;
  std::string metric;
  double mean = 0.0, p5 = 0.0, p95 = 0.0;
  int count = 0;
};

/// Linear-interpolation percentile (q in [0, 1]) of the finite values.
double percentile(std::vector<double> values, double q);

struct CurvePoint {
  std::string method;
  std::uint64_t seed;
  int train_size;
  long iter;
  double time_s, gap;
};

struct ExperimentResult {
  std::vector<MetricsRow> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<CurvePoint> curves;
};

/// Cells (seed x train size) run on the worker pool; rows come out ordered
/// by seed, train size, then method.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Deterministic columns only (no timing).
void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows);
void write_aggregates_csv(std::ostream& os, const std::vector<AggregateRow>& rows);
void write_timing_csv(std::ostream& os, const std::vector<MetricsRow>& rows);
void write_curves_csv(std::ostream& os, const std::vector<CurvePoint>& pts);
/// {"config": ..., "rows": [...], "aggregates": [...]} without timing.
std::string result_to_json(const ExperimentConfig& cfg, const ExperimentResult& res);

/// One JSON object per line: signal, response and the oracle description.
/// Supports the binary-LP family and the separable mixed-integer family.
void write_dataset_jsonl(std::ostream& os, const IODataset& ds);
IODataset read_dataset_jsonl(std::istream& is);

}  // namespace invopt
