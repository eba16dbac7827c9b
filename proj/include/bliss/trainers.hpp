#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bliss/option_net.hpp"
#include "bliss/problem.hpp"
#include "bliss/rng.hpp"

namespace bliss {

enum class ScheduleKind { constant, exponential, linear };

struct TemperatureSchedule {
  ScheduleKind kind = ScheduleKind::constant;
  double t0 = 0.0;
  double gamma = 1.0;     // exponential decay factor, 0 < gamma <= 1
  double t_final = 0.0;   // linear target
  int horizon = 1;        // linear: iterations to reach t_final, clamped after
};

double schedule_temperature(const TemperatureSchedule& schedule, int iteration);

enum class TrainRoute { population, supervised_inverse, pathwise };

std::string route_name(TrainRoute route);
TrainRoute route_from_name(const std::string& name);

struct TrainerConfig {
  TrainRoute route = TrainRoute::population;
  int iterations = 100;           // population/pathwise iterations, supervised epochs
  int batch_size = 16;            // instances per fitness/gradient estimate (supervised: minibatch)
  int samples_per_instance = 1;
  double learning_rate = 0.01;    // pathwise/supervised
  int population_size = 20;       // particle count N
  double inertia = 0.72;          // swarm omega
  double cognitive = 1.49;        // swarm c1
  double social = 1.49;           // swarm c2
  std::vector<int> hidden_layers = {16, 16};
  TemperatureSchedule temperature_schedule;
};

nlohmann::json trainer_config_to_json(const TrainerConfig& config);
TrainerConfig trainer_config_from_json(const nlohmann::json& j);

struct TraceRecord {
  int iteration = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double temperature = 0.0;
  long long evaluations = 0;  // cumulative, strictly increasing
};

struct TrainingTrace {
  std::vector<TraceRecord> records;
};

// CSV with header: iteration,best_fitness,mean_fitness,temperature,evaluations
void save_trace_csv(const TrainingTrace& trace, const std::filesystem::path& path);

// Mean over the batch of the mean utility of samples_per_instance draws from
// sample_option. The rng is taken by value: within one trainer iteration
// every particle receives an identical stream, so particles are compared on
// common noise as well as common instances.
double fitness(const OptionNet& onet, std::span<const InstanceDescriptor> batch, double temperature,
               int samples_per_instance, SeededRng rng);

// Particle swarm state over whole option-net weight vectors.
struct PopulationState {
  std::vector<std::vector<double>> particles;
  std::vector<std::vector<double>> velocities;
  std::vector<std::vector<double>> personal_best;
  std::vector<double> personal_best_fitness;  // -inf until first evaluated
  std::vector<double> global_best;
  double global_best_fitness = 0.0;
  long long evaluations = 0;
  int reinit_events = 0;
};

PopulationState init_population(const std::vector<int>& layer_sizes, int population_size, SeededRng& rng);

struct StepStats {
  double mean_fitness = 0.0;
  int finite_count = 0;
};

// One iteration: evaluate every particle on the common batch (identical
// fitness stream per particle), refresh personal/global bests, then apply the
// canonical swarm update v <- w*v + c1*r1.(p - x) + c2*r2.(g - x); x <- x + v.
// Particles whose fitness is non-finite are reinitialized and counted.
StepStats population_step(PopulationState& state, const OptionNet& proto,
                          std::span<const InstanceDescriptor> batch, const TrainerConfig& config,
                          double temperature, SeededRng fitness_rng, SeededRng& update_rng,
                          SeededRng& reinit_rng);

struct PopulationTrainResult {
  OptionNet net;
  TrainingTrace trace;
  std::vector<double> initial_best_weights;  // global best after the first evaluation pass
  int reinit_events = 0;
};

// Swarm training on one instance batch frozen for the whole run (sampled from
// rng.child(2)), so recorded best fitnesses are directly comparable and the
// global-best trace is non-decreasing.
PopulationTrainResult train_population(const FamilySpec& spec, const TrainerConfig& config, SeededRng rng);

struct InverseRecord {
  InstanceDescriptor desc;
  std::vector<double> target;  // continuous: the oracle optimum; tsp: its rank keys
};

// Oracle-labelled regression data. Record i draws its instance from
// rng.child(i), the same per-index convention the experiment harness uses for
// its training seed range.
std::vector<InverseRecord> build_inverse_dataset(const FamilySpec& spec, int count, SeededRng& rng);

struct GradientTrainResult {
  OptionNet net;
  TrainingTrace trace;
  std::vector<double> initial_weights;
};

// Mini-batch gradient descent on the mean squared error between
// net(concat(alpha, 0)) and the target; the noise block is fed zeros (T = 0
// teacher forcing). Trace fitness is -loss; evaluations count training
// forward passes.
GradientTrainResult train_supervised_inverse(const FamilySpec& spec, const TrainerConfig& config,
                                             std::span<const InverseRecord> dataset, SeededRng rng);

struct PathwiseGradient {
  std::vector<double> param_grad;  // gradient of the mean utility w.r.t. net weights
  double mean_utility = 0.0;
};

// Gradient of mean_{(alpha,e)} U(decode(net(alpha,e)), alpha) on a frozen set
// of instances and pre-scaled noise vectors (noise.size() must be a multiple
// of batch.size(); sample s of instance b is noise[b*samples + s]). The clip
// decode contributes zero gradient outside the box.
PathwiseGradient pathwise_gradient(const OptionNet& onet, std::span<const InstanceDescriptor> batch,
                                   std::span<const std::vector<double>> noise);

// Stochastic gradient ascent on the expected utility; continuous families
// only. Instances and noise are resampled every iteration from
// rng.child(100 + iteration).
GradientTrainResult train_pathwise(const FamilySpec& spec, const TrainerConfig& config, SeededRng rng);

}  // namespace bliss
