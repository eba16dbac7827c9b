// Command-line front end: binds configs, seeds and file formats to the
// library operations. Every subcommand writes its artifacts plus a
// manifest.json (resolved config, seed, output list; the timestamp lives
// only here) into the output directory.
//
// Exit codes: 0 success, 1 usage error, 2 config/validation error,
// 3 runtime failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "bliss/baselines.hpp"
#include "bliss/errors.hpp"
#include "bliss/harness.hpp"
#include "bliss/metamodels.hpp"
#include "bliss/model_io.hpp"
#include "bliss/option_net.hpp"
#include "bliss/problem.hpp"
#include "bliss/trainers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Dedicated child-stream index for trainer internals, far above any
// per-instance index so training data streams (child 0..count-1) stay
// untouched.
constexpr std::uint64_t kTrainerStream = 0x8000000000000000ULL;

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int workers = 1;
  bool deterministic = true;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file; explicit flags override it");
  cmd->add_option("--seed", opts.seed, "random seed (default 0)");
  cmd->add_option("--out", opts.out_dir, "output directory (created if absent)")->capture_default_str();
  cmd->add_option("--workers", opts.workers, "parallel instance workers")->capture_default_str();
  cmd->add_flag("--deterministic,!--no-deterministic", opts.deterministic,
                "index-ordered reduction (always honored; kept for config echo)");
}

json load_config(const CommonOpts& opts) {
  if (opts.config_path.empty()) return json::object();
  const json j = bliss::read_json_file(opts.config_path);
  if (!j.is_object()) throw bliss::ConfigError("config file must hold a JSON object");
  return j;
}

// Flag beats config file beats default.
template <typename T>
T resolve(const CLI::App* cmd, const std::string& flag, const json& config, const std::string& key,
          T flag_value, T fallback) {
  if (cmd->count(flag) > 0) return flag_value;
  if (config.contains(key)) {
    try {
      return config[key].get<T>();
    } catch (const json::exception& e) {
      throw bliss::ConfigError("config key '" + key + "': " + e.what());
    }
  }
  return fallback;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path prepare_out_dir(const CommonOpts& opts) {
  const fs::path out(opts.out_dir);
  fs::create_directories(out);
  return out;
}

void write_manifest(const fs::path& out, const std::string& subcommand, const json& resolved,
                    const std::vector<std::string>& outputs) {
  json manifest{{"format_version", 1},
                {"subcommand", subcommand},
                {"resolved_config", resolved},
                {"outputs", outputs},
                {"timestamp_utc", utc_timestamp()}};
  bliss::write_json_file(manifest, out / "manifest.json");
}

json solution_json(const bliss::CandidateSolution& u) {
  if (u.kind == bliss::SolutionKind::continuous) return u.values;
  return u.permutation;
}

int run_gen_instances(const CLI::App* cmd, const CommonOpts& opts, const std::string& family_flag,
                      int dim_flag, int count_flag) {
  const json config = load_config(opts);
  const std::string family = resolve<std::string>(cmd, "--family", config, "family", family_flag, "");
  const int dim = resolve<int>(cmd, "--dim", config, "dimension", dim_flag, 0);
  const int count = resolve<int>(cmd, "--count", config, "count", count_flag, 10);
  const std::uint64_t seed = resolve<std::uint64_t>(cmd, "--seed", config, "seed", opts.seed, 0);
  if (family.empty()) throw bliss::ConfigError("gen-instances: --family is required");
  if (dim <= 0) throw bliss::ConfigError("gen-instances: --dim must be positive");
  if (count <= 0) throw bliss::ConfigError("gen-instances: --count must be positive");

  const bliss::FamilySpec spec = bliss::make_family_spec(bliss::family_from_name(family), dim);
  const bliss::SeededRng root(seed);
  std::vector<bliss::InstanceDescriptor> instances;
  instances.reserve(count);
  for (int i = 0; i < count; ++i) {
    bliss::SeededRng inst_rng = root.child(static_cast<std::uint64_t>(i));
    instances.push_back(bliss::sample_instance(spec, inst_rng));
  }

  const fs::path out = prepare_out_dir(opts);
  bliss::save_instances(instances, out / "instances.json");
  write_manifest(out, "gen-instances",
                 json{{"family", family}, {"dimension", dim}, {"count", count}, {"seed", seed},
                      {"workers", opts.workers}, {"deterministic", opts.deterministic}},
                 {"instances.json"});
  std::cout << "wrote " << count << " instances to " << (out / "instances.json").string() << "\n";
  return 0;
}

int run_oracle(const CLI::App*, const CommonOpts& opts, const std::string& instances_path) {
  if (instances_path.empty()) throw bliss::ConfigError("oracle: --instances is required");
  const std::vector<bliss::InstanceDescriptor> instances = bliss::load_instances(instances_path);
  if (instances.empty()) throw bliss::ConfigError("oracle: no instances in file");

  std::vector<json> rows(instances.size());
  bliss::for_each_index(static_cast<int>(instances.size()), opts.workers, [&](int i) {
    const bliss::SearchResult exact = bliss::brute_force(instances[i]);
    rows[i] = json{{"instance_index", i},
                   {"solution", solution_json(exact.best)},
                   {"utility", exact.best_utility},
                   {"evaluations", exact.evaluations_used}};
  });

  const fs::path out = prepare_out_dir(opts);
  bliss::write_json_file(json(rows), out / "oracle.json");
  write_manifest(out, "oracle",
                 json{{"instances", instances_path}, {"count", instances.size()},
                      {"workers", opts.workers}, {"deterministic", opts.deterministic}},
                 {"oracle.json"});
  std::cout << "wrote oracle solutions for " << instances.size() << " instances\n";
  return 0;
}

int run_train(const CLI::App* cmd, const CommonOpts& opts, const std::string& family_flag,
              int dim_flag, const std::string& route_flag, int iterations_flag, int dataset_flag) {
  const json config = load_config(opts);
  const std::string family = resolve<std::string>(cmd, "--family", config, "family", family_flag, "");
  const int dim = resolve<int>(cmd, "--dim", config, "dimension", dim_flag, 0);
  const std::uint64_t seed = resolve<std::uint64_t>(cmd, "--seed", config, "seed", opts.seed, 0);
  const int dataset_count =
      resolve<int>(cmd, "--dataset-count", config, "dataset_count", dataset_flag, 500);
  if (family.empty()) throw bliss::ConfigError("train: --family is required");
  if (dim <= 0) throw bliss::ConfigError("train: --dim must be positive");

  bliss::TrainerConfig trainer =
      bliss::trainer_config_from_json(config.value("trainer", json::object()));
  if (cmd->count("--route") > 0) trainer.route = bliss::route_from_name(route_flag);
  if (cmd->count("--iterations") > 0) trainer.iterations = iterations_flag;

  const bliss::FamilySpec spec = bliss::make_family_spec(bliss::family_from_name(family), dim);
  const bliss::SeededRng root(seed);
  bliss::SeededRng trainer_rng = root.child(kTrainerStream);

  bliss::OptionNet net;
  bliss::TrainingTrace trace;
  switch (trainer.route) {
    case bliss::TrainRoute::population: {
      auto result = bliss::train_population(spec, trainer, trainer_rng);
      if (result.reinit_events > 0) {
        std::cerr << "note: " << result.reinit_events
                  << " particles reinitialized after non-finite fitness\n";
      }
      net = std::move(result.net);
      trace = std::move(result.trace);
      break;
    }
    case bliss::TrainRoute::supervised_inverse: {
      bliss::SeededRng data_rng(seed);  // records draw from child(0..count-1)
      const auto dataset = bliss::build_inverse_dataset(spec, dataset_count, data_rng);
      auto result = bliss::train_supervised_inverse(spec, trainer, dataset, trainer_rng);
      net = std::move(result.net);
      trace = std::move(result.trace);
      break;
    }
    case bliss::TrainRoute::pathwise: {
      auto result = bliss::train_pathwise(spec, trainer, trainer_rng);
      net = std::move(result.net);
      trace = std::move(result.trace);
      break;
    }
  }

  const fs::path out = prepare_out_dir(opts);
  bliss::save_option_net(net, out / "option_net.json");
  bliss::save_trace_csv(trace, out / "trace.csv");
  write_manifest(out, "train",
                 json{{"family", family},
                      {"dimension", dim},
                      {"seed", seed},
                      {"dataset_count", dataset_count},
                      {"trainer", bliss::trainer_config_to_json(trainer)},
                      {"workers", opts.workers},
                      {"deterministic", opts.deterministic}},
                 {"option_net.json", "trace.csv"});
  std::cout << "trained " << bliss::route_name(trainer.route) << " option net, final fitness "
            << trace.records.back().best_fitness << "\n";
  return 0;
}

int run_eval(const CLI::App* cmd, const CommonOpts& opts, const std::string& model_path,
             int count_flag, int k_flag, double temperature_flag, int refine_flag) {
  const json config = load_config(opts);
  if (model_path.empty()) throw bliss::ConfigError("eval: --model is required");
  const int count = resolve<int>(cmd, "--count", config, "count", count_flag, 100);
  const std::uint64_t seed = resolve<std::uint64_t>(cmd, "--seed", config, "seed", opts.seed, 0);
  bliss::SampleConfig sampling;
  sampling.k = resolve<int>(cmd, "--k", config, "k", k_flag, 1);
  sampling.temperature =
      resolve<double>(cmd, "--temperature", config, "temperature", temperature_flag, 0.0);
  sampling.refine_rounds =
      resolve<int>(cmd, "--refine-rounds", config, "refine_rounds", refine_flag, 0);

  const bliss::OptionNet onet = bliss::load_option_net(model_path);
  const bliss::FamilySpec spec = bliss::make_family_spec(onet.family, onet.output_dim);
  bliss::SeededRng rng(seed);
  const bliss::RunReport report =
      bliss::generalization_eval(onet, spec, count, sampling, rng, opts.workers);

  const fs::path out = prepare_out_dir(opts);
  bliss::save_report(report, out / "report.json");
  bliss::save_report_csv(report, out / "summary.csv");
  write_manifest(out, "eval",
                 json{{"model", model_path}, {"family", bliss::family_name(onet.family)},
                      {"dimension", onet.output_dim}, {"count", count}, {"seed", seed},
                      {"k", sampling.k}, {"temperature", sampling.temperature},
                      {"refine_rounds", sampling.refine_rounds}, {"workers", opts.workers},
                      {"deterministic", opts.deterministic}},
                 {"report.json", "summary.csv"});
  if (report.aggregates.median_warm_gap.has_value()) {
    std::cout << "median optimality gap " << *report.aggregates.median_warm_gap << "\n";
  }
  std::cout << "median utility " << report.aggregates.median_warm_utility << " over " << count
            << " held-out instances\n";
  return 0;
}

int run_warmstart(const CLI::App* cmd, const CommonOpts& opts, const std::string& model_path,
                  int count_flag, long long budget_flag, double epsilon_flag, int k_flag,
                  double temperature_flag, int refine_flag, const std::string& baseline_flag,
                  int train_count_flag) {
  const json config = load_config(opts);
  if (model_path.empty()) throw bliss::ConfigError("warmstart: --model is required");

  bliss::ExperimentPlan plan;
  plan.onet = bliss::load_option_net(model_path);
  plan.spec = bliss::make_family_spec(plan.onet.family, plan.onet.output_dim);
  plan.test_count = resolve<int>(cmd, "--count", config, "count", count_flag, 100);
  plan.budget.max_evaluations =
      resolve<long long>(cmd, "--budget", config, "budget", budget_flag, 20000);
  plan.budget.target_gap = resolve<double>(cmd, "--epsilon", config, "epsilon", epsilon_flag, 0.01);
  plan.sampling.k = resolve<int>(cmd, "--k", config, "k", k_flag, 8);
  plan.sampling.temperature =
      resolve<double>(cmd, "--temperature", config, "temperature", temperature_flag, 0.0);
  plan.sampling.refine_rounds =
      resolve<int>(cmd, "--refine-rounds", config, "refine_rounds", refine_flag, 0);
  plan.baseline = bliss::baseline_from_name(
      resolve<std::string>(cmd, "--baseline", config, "baseline", baseline_flag, "hill_climb"));
  plan.train_count = resolve<int>(cmd, "--train-count", config, "train_count", train_count_flag, 0);
  plan.seed = resolve<std::uint64_t>(cmd, "--seed", config, "seed", opts.seed, 0);
  if (config.contains("anneal_schedule")) {
    bliss::TrainerConfig holder;
    holder.temperature_schedule = bliss::TemperatureSchedule{};
    const json wrapper{{"temperature_schedule", config["anneal_schedule"]}};
    plan.anneal_schedule = bliss::trainer_config_from_json(wrapper).temperature_schedule;
  } else {
    plan.anneal_schedule = {bliss::ScheduleKind::exponential, 1.0, 0.995, 0.0, 1};
  }

  const bliss::RunReport report = bliss::warm_start_experiment(plan, opts.workers);

  const fs::path out = prepare_out_dir(opts);
  bliss::save_report(report, out / "report.json");
  bliss::save_report_csv(report, out / "summary.csv");
  write_manifest(out, "warmstart", report.config, {"report.json", "summary.csv"});

  std::cout << "warm win rate " << report.aggregates.warm_win_rate << "\n";
  if (report.aggregates.median_cold_evals_to_target.has_value() &&
      report.aggregates.median_warm_evals_to_target.has_value()) {
    std::cout << "median evaluations to target: cold "
              << *report.aggregates.median_cold_evals_to_target << ", warm "
              << *report.aggregates.median_warm_evals_to_target << "\n";
  }
  return 0;
}

int run_gradcheck(const CLI::App* cmd, const CommonOpts& opts, int count_flag, double tol_flag) {
  const json config = load_config(opts);
  const int count = resolve<int>(cmd, "--count", config, "count", count_flag, 100);
  const double tolerance =
      resolve<double>(cmd, "--tolerance", config, "tolerance", tol_flag, 1e-3);
  const std::uint64_t seed = resolve<std::uint64_t>(cmd, "--seed", config, "seed", opts.seed, 0);

  const bliss::SeededRng root(seed);
  int passed = 0;
  for (int i = 0; i < count; ++i) {
    bliss::SeededRng rng = root.child(static_cast<std::uint64_t>(i));
    const int hidden = static_cast<int>(rng.uniform_int(4));
    std::vector<int> layers;
    layers.push_back(1 + static_cast<int>(rng.uniform_int(8)));
    for (int h = 0; h < hidden; ++h) layers.push_back(1 + static_cast<int>(rng.uniform_int(8)));
    layers.push_back(1 + static_cast<int>(rng.uniform_int(8)));
    const bliss::DenseNet net = bliss::init_dense_net(layers, rng);
    std::vector<double> input(net.input_size());
    for (double& x : input) x = rng.uniform(-2.0, 2.0);
    if (bliss::check_gradient(net, input, tolerance)) ++passed;
  }

  const fs::path out = prepare_out_dir(opts);
  bliss::write_json_file(
      json{{"count", count}, {"passed", passed}, {"tolerance", tolerance}, {"seed", seed}},
      out / "gradcheck.json");
  write_manifest(out, "gradcheck",
                 json{{"count", count}, {"tolerance", tolerance}, {"seed", seed},
                      {"workers", opts.workers}, {"deterministic", opts.deterministic}},
                 {"gradcheck.json"});
  std::cout << "gradcheck: " << passed << "/" << count << " random nets passed at tolerance "
            << tolerance << "\n";
  if (passed != count) {
    std::cerr << "gradcheck: " << (count - passed) << " failures\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"option-net training, baselines and warm-start experiments"};
  app.require_subcommand(1);

  std::function<int()> action;

  // gen-instances
  {
    CLI::App* cmd = app.add_subcommand("gen-instances", "sample a problem-instance dataset");
    auto opts = std::make_shared<CommonOpts>();
    auto family = std::make_shared<std::string>();
    auto dim = std::make_shared<int>(0);
    auto count = std::make_shared<int>(10);
    add_common(cmd, *opts);
    cmd->add_option("--family", *family, "quadratic_bowl | shifted_rastrigin | tsp");
    cmd->add_option("--dim", *dim, "solution dimension / city count");
    cmd->add_option("--count", *count, "number of instances");
    cmd->callback([&action, cmd, opts, family, dim, count] {
      action = [=] { return run_gen_instances(cmd, *opts, *family, *dim, *count); };
    });
  }

  // oracle
  {
    CLI::App* cmd = app.add_subcommand("oracle", "exact optima for an instance file");
    auto opts = std::make_shared<CommonOpts>();
    auto instances = std::make_shared<std::string>();
    add_common(cmd, *opts);
    cmd->add_option("--instances", *instances, "instance dataset JSON")->required();
    cmd->callback([&action, cmd, opts, instances] {
      action = [=] { return run_oracle(cmd, *opts, *instances); };
    });
  }

  // train
  {
    CLI::App* cmd = app.add_subcommand("train", "train an option net (route from config)");
    auto opts = std::make_shared<CommonOpts>();
    auto family = std::make_shared<std::string>();
    auto dim = std::make_shared<int>(0);
    auto route = std::make_shared<std::string>("population");
    auto iterations = std::make_shared<int>(0);
    auto dataset_count = std::make_shared<int>(500);
    add_common(cmd, *opts);
    cmd->add_option("--family", *family, "problem family");
    cmd->add_option("--dim", *dim, "solution dimension / city count");
    cmd->add_option("--route", *route, "population | supervised_inverse | pathwise");
    cmd->add_option("--iterations", *iterations, "training iterations / epochs");
    cmd->add_option("--dataset-count", *dataset_count, "records for the supervised route");
    cmd->callback([&action, cmd, opts, family, dim, route, iterations, dataset_count] {
      action = [=] {
        return run_train(cmd, *opts, *family, *dim, *route, *iterations, *dataset_count);
      };
    });
  }

  // eval
  {
    CLI::App* cmd = app.add_subcommand("eval", "held-out generalization of a trained net");
    auto opts = std::make_shared<CommonOpts>();
    auto model = std::make_shared<std::string>();
    auto count = std::make_shared<int>(100);
    auto k = std::make_shared<int>(1);
    auto temperature = std::make_shared<double>(0.0);
    auto refine_rounds = std::make_shared<int>(0);
    add_common(cmd, *opts);
    cmd->add_option("--model", *model, "option net JSON")->required();
    cmd->add_option("--count", *count, "held-out instances");
    cmd->add_option("--k", *k, "best-of-k samples per instance");
    cmd->add_option("--temperature", *temperature, "sampling temperature");
    cmd->add_option("--refine-rounds", *refine_rounds, "keep-best refinement rounds");
    cmd->callback([&action, cmd, opts, model, count, k, temperature, refine_rounds] {
      action = [=] {
        return run_eval(cmd, *opts, *model, *count, *k, *temperature, *refine_rounds);
      };
    });
  }

  // warmstart
  {
    CLI::App* cmd = app.add_subcommand("warmstart", "cold vs warm-started baseline A/B");
    auto opts = std::make_shared<CommonOpts>();
    auto model = std::make_shared<std::string>();
    auto count = std::make_shared<int>(100);
    auto budget = std::make_shared<long long>(20000);
    auto epsilon = std::make_shared<double>(0.01);
    auto k = std::make_shared<int>(8);
    auto temperature = std::make_shared<double>(0.0);
    auto refine_rounds = std::make_shared<int>(0);
    auto baseline = std::make_shared<std::string>("hill_climb");
    auto train_count = std::make_shared<int>(0);
    add_common(cmd, *opts);
    cmd->add_option("--model", *model, "option net JSON")->required();
    cmd->add_option("--count", *count, "test instances");
    cmd->add_option("--budget", *budget, "evaluation budget per arm");
    cmd->add_option("--epsilon", *epsilon, "target gap to the oracle utility");
    cmd->add_option("--k", *k, "best-of-k warm samples (charged to the warm arm)");
    cmd->add_option("--temperature", *temperature, "sampling temperature");
    cmd->add_option("--refine-rounds", *refine_rounds, "keep-best refinement rounds (charged)");
    cmd->add_option("--baseline", *baseline, "hill_climb | simulated_annealing | random_search");
    cmd->add_option("--train-count", *train_count, "training seed range to skip");
    cmd->callback([&action, cmd, opts, model, count, budget, epsilon, k, temperature,
                   refine_rounds, baseline, train_count] {
      action = [=] {
        return run_warmstart(cmd, *opts, *model, *count, *budget, *epsilon, *k, *temperature,
                             *refine_rounds, *baseline, *train_count);
      };
    });
  }

  // gradcheck
  {
    CLI::App* cmd = app.add_subcommand("gradcheck", "finite-difference audit of the backprop core");
    auto opts = std::make_shared<CommonOpts>();
    auto count = std::make_shared<int>(100);
    auto tolerance = std::make_shared<double>(1e-3);
    add_common(cmd, *opts);
    cmd->add_option("--count", *count, "number of random nets");
    cmd->add_option("--tolerance", *tolerance, "max relative gradient error");
    cmd->callback([&action, cmd, opts, count, tolerance] {
      action = [=] { return run_gradcheck(cmd, *opts, *count, *tolerance); };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return action();
  } catch (const bliss::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const bliss::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const bliss::UnsupportedError& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return 2;
  } catch (const bliss::LoadError& e) {
    std::cerr << "load error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
