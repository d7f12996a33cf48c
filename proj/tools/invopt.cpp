// invopt: generate synthetic inverse-optimization data, train cost vectors
// and run the benchmark grid.
//
// exit codes: 0 ok, 2 bad configuration or input, 3 solver failure

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "invopt/bench.hpp"

namespace fs = std::filesystem;
using namespace invopt;
using nlohmann::json;

namespace {

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string method;
  std::string format = "csv";
};

ExperimentConfig load_config(const Args& a) {
  ExperimentConfig cfg;
  if (a.config.empty()) {
    cfg = ExperimentConfig::defaults(Experiment::consistent);
  } else {
    std::ifstream in(a.config);
    if (!in) throw ConfigError("cannot read config " + a.config);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = config_from_json(ss.str());
  }
  if (a.seed) cfg.seeds = {*a.seed};
  if (!a.method.empty()) cfg.methods = {a.method};
  if (cfg.output.empty() || a.out != ".") cfg.output = a.out;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  return f;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

fs::path theta_path(const fs::path& dir, const std::string& method, std::uint64_t seed) {
  return dir / ("theta_" + method + "_seed" + std::to_string(seed) + ".json");
}

int cmd_gen(const Args& a) {
  const ExperimentConfig cfg = load_config(a);
  fs::create_directories(cfg.output);
  for (std::uint64_t seed : cfg.seeds) {
    const GeneratedData d = generate(cfg, seed);
    const std::string tag = "_seed" + std::to_string(seed);
    auto tr = open_out(fs::path(cfg.output) / ("train" + tag + ".jsonl"));
    write_dataset_jsonl(tr, d.train);
    auto te = open_out(fs::path(cfg.output) / ("test" + tag + ".jsonl"));
    write_dataset_jsonl(te, d.test);
    auto th = open_out(fs::path(cfg.output) / ("theta_true" + tag + ".json"));
    th << json{{"seed", seed}, {"theta", to_std(d.theta_true)}}.dump(2) << '\n';
    std::cout << "seed " << seed << ": " << d.train.size() << " train, " << d.test.size() << " test\n";
  }
  return 0;
}

int cmd_train(const Args& a) {
  const ExperimentConfig cfg = load_config(a);
  fs::create_directories(cfg.output);
  for (std::uint64_t seed : cfg.seeds) {
    const GeneratedData d = generate(cfg, seed);
    const IODataset train = d.train.head(std::size_t(cfg.train_sizes.back()));
    double f_star = 0.0, kt = 1.0;
    for (const auto& m : cfg.methods) {
      if (is_first_order(m)) std::tie(f_star, kt) = first_order_reference(cfg, d, train);
      const TrainedModel model = train_method(cfg, m, d, train, seed, f_star, kt);
      auto f = open_out(theta_path(cfg.output, m, seed));
      f << json{{"method", m}, {"seed", seed}, {"train_size", train.size()}, {"theta", to_std(model.theta)}}.dump(2)
        << '\n';
      std::cout << m << " seed " << seed << ": theta written\n";
    }
  }
  return 0;
}

int cmd_eval(const Args& a) {
  const ExperimentConfig cfg = load_config(a);
  std::vector<MetricsRow> rows;
  for (std::uint64_t seed : cfg.seeds) {
    const GeneratedData d = generate(cfg, seed);
    for (const auto& m : cfg.methods) {
      std::ifstream in(theta_path(cfg.output, m, seed));
      if (!in) throw ConfigError("no trained theta for " + m + " seed " + std::to_string(seed) + "; run train first");
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("bad theta file: ") + e.what());
      }
      const auto v = j.at("theta").get<std::vector<double>>();
      const Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
      if (theta.size() != d.phi.dimension) throw DimensionError("theta has the wrong length");
      const int size = j.at("train_size").get<int>();
      const Metrics met = evaluate(theta, d, d.train.head(std::size_t(size)));
      MetricsRow r;
      r.method = m;
      r.seed = seed;
      r.train_size = size;
      r.theta_error = met.theta_error;
      r.response_error = met.response_error;
      r.in_sample_response_error = met.in_sample_response_error;
      r.cost_gap = met.cost_gap;
      r.final_gap = std::numeric_limits<double>::quiet_NaN();
      rows.push_back(r);
    }
  }
  if (a.format == "json") {
    ExperimentResult res;
    res.rows = rows;
    std::cout << result_to_json(cfg, res) << '\n';
  } else {
    write_metrics_csv(std::cout, rows);
  }
  return 0;
}

int cmd_bench(const Args& a) {
  const ExperimentConfig cfg = load_config(a);
  const fs::path dir(cfg.output);
  fs::create_directories(dir);
  const ExperimentResult res = run_experiment(cfg);
  if (a.format == "json") {
    auto f = open_out(dir / "results.json");
    f << result_to_json(cfg, res) << '\n';
  } else {
    auto m = open_out(dir / "metrics.csv");
    write_metrics_csv(m, res.rows);
    auto g = open_out(dir / "aggregates.csv");
    write_aggregates_csv(g, res.aggregates);
  }
  auto t = open_out(dir / "timing.csv");
  write_timing_csv(t, res.rows);
  if (!res.curves.empty()) {
    auto c = open_out(dir / "curves.csv");
    write_curves_csv(c, res.curves);
  }
  int failed = 0;
  for (const auto& r : res.rows)
    if (r.status != "ok") {
      ++failed;
      std::cerr << r.method << " seed " << r.seed << " N=" << r.train_size << ": " << r.status << '\n';
    }
  std::cout << res.rows.size() << " rows written to " << dir.string() << (failed ? ", " : "")
            << (failed ? std::to_string(failed) + " failed" : "") << '\n';
  return failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inverse optimization: learn cost vectors from observed decisions"};
  app.require_subcommand(1);
  Args a;
  auto add_common = [&a](CLI::App* sub) {
    sub->add_option("--config", a.config, "experiment config (JSON)");
    sub->add_option("--seed", a.seed, "run a single seed");
    sub->add_option("--out", a.out, "output directory");
    sub->add_option("--method", a.method, "restrict to one method");
    sub->add_option("--format", a.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };
  std::vector<std::pair<CLI::App*, int (*)(const Args&)>> cmds{
      {app.add_subcommand("gen", "write train/test datasets as JSON lines"), cmd_gen},
      {app.add_subcommand("train", "train methods and write theta files"), cmd_train},
      {app.add_subcommand("eval", "score trained theta files on the test set"), cmd_eval},
      {app.add_subcommand("bench", "run the seeds x train sizes x methods grid"), cmd_bench}};
  for (auto& [sub, fn] : cmds) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    for (auto& [sub, fn] : cmds)
      if (sub->parsed()) return fn(a);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  return 0;
}
