#include "bliss/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "bliss/errors.hpp"
#include "bliss/model_io.hpp"

namespace bliss {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Child stream indices used by the trainers. Per-iteration streams start at
// 100 so they never collide with the fixed ones.
constexpr std::uint64_t kChildInit = 1;
constexpr std::uint64_t kChildBatch = 2;
constexpr std::uint64_t kChildReinit = 3;
constexpr std::uint64_t kChildUpdate = 4;
constexpr std::uint64_t kChildIterBase = 100;

void validate_common(const TrainerConfig& config) {
  if (config.iterations < 1) throw ConfigError("trainer: iterations must be >= 1");
  if (config.batch_size < 1) throw ConfigError("trainer: batch_size must be >= 1");
  if (config.samples_per_instance < 1) throw ConfigError("trainer: samples_per_instance must be >= 1");
  const TemperatureSchedule& s = config.temperature_schedule;
  if (s.t0 < 0.0) throw ConfigError("trainer: schedule t0 must be >= 0");
  if (s.kind == ScheduleKind::exponential && (s.gamma <= 0.0 || s.gamma > 1.0)) {
    throw ConfigError("trainer: exponential schedule needs 0 < gamma <= 1");
  }
  if (s.kind == ScheduleKind::linear && s.horizon < 1) {
    throw ConfigError("trainer: linear schedule needs horizon >= 1");
  }
}

std::vector<InstanceDescriptor> sample_batch(const FamilySpec& spec, int count, SeededRng& rng) {
  std::vector<InstanceDescriptor> batch;
  batch.reserve(count);
  for (int i = 0; i < count; ++i) batch.push_back(sample_instance(spec, rng));
  return batch;
}

}  // namespace

double schedule_temperature(const TemperatureSchedule& schedule, int iteration) {
  if (iteration < 0) throw InputError("schedule_temperature: iteration must be >= 0");
  switch (schedule.kind) {
    case ScheduleKind::constant:
      return schedule.t0;
    case ScheduleKind::exponential:
      return schedule.t0 * std::pow(schedule.gamma, iteration);
    case ScheduleKind::linear: {
      if (iteration >= schedule.horizon) return schedule.t_final;
      const double frac = static_cast<double>(iteration) / static_cast<double>(schedule.horizon);
      return schedule.t0 + (schedule.t_final - schedule.t0) * frac;
    }
  }
  throw InputError("schedule_temperature: unknown schedule kind");
}

std::string route_name(TrainRoute route) {
  switch (route) {
    case TrainRoute::population: return "population";
    case TrainRoute::supervised_inverse: return "supervised_inverse";
    case TrainRoute::pathwise: return "pathwise";
  }
  throw InputError("unknown trainer route");
}

TrainRoute route_from_name(const std::string& name) {
  if (name == "population") return TrainRoute::population;
  if (name == "supervised_inverse") return TrainRoute::supervised_inverse;
  if (name == "pathwise") return TrainRoute::pathwise;
  throw ConfigError("unknown trainer route: " + name);
}

nlohmann::json trainer_config_to_json(const TrainerConfig& config) {
  nlohmann::json s;
  switch (config.temperature_schedule.kind) {
    case ScheduleKind::constant:
      s = {{"kind", "constant"}, {"t0", config.temperature_schedule.t0}};
      break;
    case ScheduleKind::exponential:
      s = {{"kind", "exponential"},
           {"t0", config.temperature_schedule.t0},
           {"gamma", config.temperature_schedule.gamma}};
      break;
    case ScheduleKind::linear:
      s = {{"kind", "linear"},
           {"t0", config.temperature_schedule.t0},
           {"t_final", config.temperature_schedule.t_final},
           {"horizon", config.temperature_schedule.horizon}};
      break;
  }
  return nlohmann::json{{"route", route_name(config.route)},
                        {"iterations", config.iterations},
                        {"batch_size", config.batch_size},
                        {"samples_per_instance", config.samples_per_instance},
                        {"learning_rate", config.learning_rate},
                        {"population_size", config.population_size},
                        {"inertia", config.inertia},
                        {"cognitive", config.cognitive},
                        {"social", config.social},
                        {"hidden_layers", config.hidden_layers},
                        {"temperature_schedule", s}};
}

TrainerConfig trainer_config_from_json(const nlohmann::json& j) {
  TrainerConfig config;
  try {
    if (j.contains("route")) config.route = route_from_name(j["route"].get<std::string>());
    config.iterations = j.value("iterations", config.iterations);
    config.batch_size = j.value("batch_size", config.batch_size);
    config.samples_per_instance = j.value("samples_per_instance", config.samples_per_instance);
    config.learning_rate = j.value("learning_rate", config.learning_rate);
    config.population_size = j.value("population_size", config.population_size);
    config.inertia = j.value("inertia", config.inertia);
    config.cognitive = j.value("cognitive", config.cognitive);
    config.social = j.value("social", config.social);
    config.hidden_layers = j.value("hidden_layers", config.hidden_layers);
    if (j.contains("temperature_schedule")) {
      const nlohmann::json& s = j["temperature_schedule"];
      const std::string kind = s.value("kind", "constant");
      TemperatureSchedule sched;
      sched.t0 = s.value("t0", 0.0);
      if (kind == "constant") {
        sched.kind = ScheduleKind::constant;
      } else if (kind == "exponential") {
        sched.kind = ScheduleKind::exponential;
        sched.gamma = s.value("gamma", 1.0);
      } else if (kind == "linear") {
        sched.kind = ScheduleKind::linear;
        sched.t_final = s.value("t_final", 0.0);
        sched.horizon = s.value("horizon", 1);
      } else {
        throw ConfigError("unknown temperature schedule kind: " + kind);
      }
      config.temperature_schedule = sched;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("trainer config: ") + e.what());
  }
  return config;
}

void save_trace_csv(const TrainingTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iteration,best_fitness,mean_fitness,temperature,evaluations\n";
  for (const TraceRecord& r : trace.records) {
    out << r.iteration << ',' << format_double(r.best_fitness) << ',' << format_double(r.mean_fitness)
        << ',' << format_double(r.temperature) << ',' << r.evaluations << '\n';
  }
}

double fitness(const OptionNet& onet, std::span<const InstanceDescriptor> batch, double temperature,
               int samples_per_instance, SeededRng rng) {
  if (batch.empty()) throw InputError("fitness: batch must be non-empty");
  if (samples_per_instance < 1) throw InputError("fitness: samples_per_instance must be >= 1");
  double total = 0.0;
  for (const InstanceDescriptor& desc : batch) {
    double inst = 0.0;
    for (int s = 0; s < samples_per_instance; ++s) {
      inst += evaluate(desc, sample_option(onet, desc, temperature, rng));
    }
    total += inst / samples_per_instance;
  }
  return total / static_cast<double>(batch.size());
}

PopulationState init_population(const std::vector<int>& layer_sizes, int population_size, SeededRng& rng) {
  if (population_size < 1) throw ConfigError("population_size must be >= 1");
  PopulationState state;
  state.particles.reserve(population_size);
  for (int i = 0; i < population_size; ++i) {
    state.particles.push_back(init_dense_net(layer_sizes, rng).weights);
  }
  const std::size_t dim = state.particles.front().size();
  state.velocities.assign(population_size, std::vector<double>(dim, 0.0));
  state.personal_best = state.particles;
  state.personal_best_fitness.assign(population_size, kNegInf);
  state.global_best = state.particles.front();
  state.global_best_fitness = kNegInf;
  return state;
}

StepStats population_step(PopulationState& state, const OptionNet& proto,
                          std::span<const InstanceDescriptor> batch, const TrainerConfig& config,
                          double temperature, SeededRng fitness_rng, SeededRng& update_rng,
                          SeededRng& reinit_rng) {
  const int n = static_cast<int>(state.particles.size());
  const std::size_t dim = state.particles.front().size();
  OptionNet scratch = proto;

  StepStats stats;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    scratch.net.weights = state.particles[i];
    const double fit = fitness(scratch, batch, temperature, config.samples_per_instance, fitness_rng);
    state.evaluations += static_cast<long long>(batch.size()) * config.samples_per_instance;
    if (!std::isfinite(fit)) {
      state.particles[i] = init_dense_net(proto.net.layer_sizes, reinit_rng).weights;
      state.velocities[i].assign(dim, 0.0);
      ++state.reinit_events;
      continue;
    }
    sum += fit;
    ++stats.finite_count;
    if (fit > state.personal_best_fitness[i]) {
      state.personal_best_fitness[i] = fit;
      state.personal_best[i] = state.particles[i];
    }
  }
  stats.mean_fitness = stats.finite_count > 0 ? sum / stats.finite_count : kNegInf;

  for (int i = 0; i < n; ++i) {
    if (state.personal_best_fitness[i] > state.global_best_fitness) {
      state.global_best_fitness = state.personal_best_fitness[i];
      state.global_best = state.personal_best[i];
    }
  }

  for (int i = 0; i < n; ++i) {
    std::vector<double>& x = state.particles[i];
    std::vector<double>& v = state.velocities[i];
    for (std::size_t d = 0; d < dim; ++d) {
      const double r1 = update_rng.uniform01();
      const double r2 = update_rng.uniform01();
      v[d] = config.inertia * v[d] + config.cognitive * r1 * (state.personal_best[i][d] - x[d]) +
             config.social * r2 * (state.global_best[d] - x[d]);
      x[d] += v[d];
    }
  }
  return stats;
}

PopulationTrainResult train_population(const FamilySpec& spec, const TrainerConfig& config, SeededRng rng) {
  if (config.route != TrainRoute::population) throw ConfigError("train_population: route mismatch");
  validate_common(config);

  // Shape-only prototype; particle weights carry the actual parameters.
  SeededRng proto_rng = rng.child(kChildInit);
  OptionNet proto = make_option_net(spec, config.hidden_layers, false, proto_rng);
  std::fill(proto.net.weights.begin(), proto.net.weights.end(), 0.0);

  SeededRng init_rng = rng.child(kChildInit);
  PopulationState state = init_population(proto.net.layer_sizes, config.population_size, init_rng);

  SeededRng batch_rng = rng.child(kChildBatch);
  const std::vector<InstanceDescriptor> batch = sample_batch(spec, config.batch_size, batch_rng);

  SeededRng update_rng = rng.child(kChildUpdate);
  SeededRng reinit_rng = rng.child(kChildReinit);

  PopulationTrainResult result;
  for (int iter = 0; iter < config.iterations; ++iter) {
    const double temperature = schedule_temperature(config.temperature_schedule, iter);
    const StepStats stats = population_step(state, proto, batch, config, temperature,
                                            rng.child(kChildIterBase + iter), update_rng, reinit_rng);
    if (iter == 0) result.initial_best_weights = state.global_best;
    result.trace.records.push_back(
        {iter, state.global_best_fitness, stats.mean_fitness, temperature, state.evaluations});
  }

  result.net = proto;
  result.net.net.weights = state.global_best;
  result.reinit_events = state.reinit_events;
  return result;
}

std::vector<InverseRecord> build_inverse_dataset(const FamilySpec& spec, int count, SeededRng& rng) {
  if (count < 1) throw InputError("build_inverse_dataset: count must be >= 1");
  std::vector<InverseRecord> dataset;
  dataset.reserve(count);
  for (int i = 0; i < count; ++i) {
    SeededRng inst_rng = rng.child(static_cast<std::uint64_t>(i));
    InverseRecord record;
    record.desc = sample_instance(spec, inst_rng);
    const CandidateSolution best = oracle_optimum(record.desc);
    record.target = encode_solution(best, spec.dimension);
    dataset.push_back(std::move(record));
  }
  return dataset;
}

GradientTrainResult train_supervised_inverse(const FamilySpec& spec, const TrainerConfig& config,
                                             std::span<const InverseRecord> dataset, SeededRng rng) {
  if (config.route != TrainRoute::supervised_inverse) throw ConfigError("train_supervised_inverse: route mismatch");
  validate_common(config);
  if (config.learning_rate <= 0.0) throw ConfigError("train_supervised_inverse: learning_rate must be > 0");
  if (dataset.empty()) throw InputError("train_supervised_inverse: dataset must be non-empty");

  SeededRng init_rng = rng.child(kChildInit);
  OptionNet onet = make_option_net(spec, config.hidden_layers, false, init_rng);
  const int out_dim = onet.output_dim;
  for (const InverseRecord& record : dataset) {
    if (record.desc.family != spec.family || static_cast<int>(record.target.size()) != out_dim) {
      throw InputError("train_supervised_inverse: dataset record does not match family spec");
    }
  }

  GradientTrainResult result;
  result.initial_weights = onet.net.weights;

  // Inputs are concat(alpha, zeros): training runs at T = 0.
  const int n = static_cast<int>(dataset.size());
  std::vector<std::vector<double>> inputs(n);
  for (int i = 0; i < n; ++i) {
    inputs[i].assign(dataset[i].desc.alpha.begin(), dataset[i].desc.alpha.end());
    inputs[i].resize(onet.alpha_dim + onet.noise_dim, 0.0);
  }

  SeededRng shuffle_rng = rng.child(kChildBatch);
  const int minibatch = std::min(config.batch_size, n);
  std::vector<double> grad_acc(onet.net.weights.size(), 0.0);
  std::vector<double> output_grad(out_dim, 0.0);
  long long evaluations = 0;
  double best_fitness = kNegInf;

  for (int epoch = 0; epoch < config.iterations; ++epoch) {
    const std::vector<int> order = shuffle_rng.permutation(n);
    double loss_sum = 0.0;
    for (int start = 0; start < n; start += minibatch) {
      const int stop = std::min(start + minibatch, n);
      const int b = stop - start;
      std::fill(grad_acc.begin(), grad_acc.end(), 0.0);
      for (int pos = start; pos < stop; ++pos) {
        const int idx = order[pos];
        const std::vector<double> out = net_forward(onet.net, inputs[idx]);
        for (int d = 0; d < out_dim; ++d) {
          const double err = out[d] - dataset[idx].target[d];
          loss_sum += err * err;
          output_grad[d] = 2.0 * err / b;
        }
        const NetGradients grads = net_backward(onet.net, inputs[idx], output_grad);
        for (std::size_t w = 0; w < grad_acc.size(); ++w) grad_acc[w] += grads.param_grad[w];
      }
      for (std::size_t w = 0; w < onet.net.weights.size(); ++w) {
        onet.net.weights[w] -= config.learning_rate * grad_acc[w];
      }
    }
    evaluations += n;
    const double epoch_loss = loss_sum / n;
    best_fitness = std::max(best_fitness, -epoch_loss);
    result.trace.records.push_back({epoch, best_fitness, -epoch_loss, 0.0, evaluations});
  }

  result.net = std::move(onet);
  return result;
}

PathwiseGradient pathwise_gradient(const OptionNet& onet, std::span<const InstanceDescriptor> batch,
                                   std::span<const std::vector<double>> noise) {
  if (batch.empty()) throw InputError("pathwise_gradient: batch must be non-empty");
  if (noise.size() % batch.size() != 0) {
    throw InputError("pathwise_gradient: noise count must be a multiple of the batch size");
  }
  if (onet.family == Family::tsp) {
    throw UnsupportedError("pathwise_gradient: permutation decode is not differentiable");
  }
  const int samples = static_cast<int>(noise.size() / batch.size());
  const int out_dim = onet.output_dim;

  PathwiseGradient result;
  result.param_grad.assign(onet.net.weights.size(), 0.0);
  std::vector<double> input(onet.alpha_dim + onet.noise_dim, 0.0);
  std::vector<double> raw_grad(out_dim, 0.0);

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const InstanceDescriptor& desc = batch[b];
    const Box box = solution_space(desc).box;
    for (int s = 0; s < samples; ++s) {
      const std::vector<double>& e = noise[b * samples + s];
      if (static_cast<int>(e.size()) != onet.noise_dim) {
        throw InputError("pathwise_gradient: noise vector length != noise_dim");
      }
      std::copy(desc.alpha.begin(), desc.alpha.end(), input.begin());
      std::copy(e.begin(), e.end(), input.begin() + onet.alpha_dim);
      const std::vector<double> raw = net_forward(onet.net, input);
      const CandidateSolution u = decode_continuous(raw, box);
      result.mean_utility += evaluate(desc, u);
      const std::vector<double> du = utility_gradient(desc, u);
      for (int d = 0; d < out_dim; ++d) {
        const bool clipped = raw[d] <= box.lo || raw[d] >= box.hi;
        raw_grad[d] = clipped ? 0.0 : du[d];
      }
      const NetGradients grads = net_backward(onet.net, input, raw_grad);
      for (std::size_t w = 0; w < result.param_grad.size(); ++w) {
        result.param_grad[w] += grads.param_grad[w];
      }
    }
  }
  const double scale = 1.0 / static_cast<double>(noise.size());
  for (double& g : result.param_grad) g *= scale;
  result.mean_utility *= scale;
  return result;
}

GradientTrainResult train_pathwise(const FamilySpec& spec, const TrainerConfig& config, SeededRng rng) {
  if (config.route != TrainRoute::pathwise) throw ConfigError("train_pathwise: route mismatch");
  validate_common(config);
  if (config.learning_rate <= 0.0) throw ConfigError("train_pathwise: learning_rate must be > 0");
  if (spec.family == Family::tsp) {
    throw UnsupportedError("train_pathwise: tsp is not supported (non-differentiable decode)");
  }

  SeededRng init_rng = rng.child(kChildInit);
  OptionNet onet = make_option_net(spec, config.hidden_layers, false, init_rng);

  GradientTrainResult result;
  result.initial_weights = onet.net.weights;

  long long evaluations = 0;
  double best_fitness = kNegInf;
  for (int iter = 0; iter < config.iterations; ++iter) {
    const double temperature = schedule_temperature(config.temperature_schedule, iter);
    SeededRng iter_rng = rng.child(kChildIterBase + iter);
    const std::vector<InstanceDescriptor> batch = sample_batch(spec, config.batch_size, iter_rng);
    std::vector<std::vector<double>> noise;
    noise.reserve(batch.size() * config.samples_per_instance);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      for (int s = 0; s < config.samples_per_instance; ++s) {
        std::vector<double> e(onet.noise_dim);
        for (double& x : e) x = temperature * iter_rng.normal();
        noise.push_back(std::move(e));
      }
    }
    const PathwiseGradient grad = pathwise_gradient(onet, batch, noise);
    for (std::size_t w = 0; w < onet.net.weights.size(); ++w) {
      onet.net.weights[w] += config.learning_rate * grad.param_grad[w];
    }
    evaluations += static_cast<long long>(batch.size()) * config.samples_per_instance;
    best_fitness = std::max(best_fitness, grad.mean_utility);
    result.trace.records.push_back({iter, best_fitness, grad.mean_utility, temperature, evaluations});
  }

  result.net = std::move(onet);
  return result;
}

}  // namespace bliss
