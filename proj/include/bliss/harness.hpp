#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bliss/baselines.hpp"
#include "bliss/option_net.hpp"
#include "bliss/problem.hpp"

namespace bliss {

enum class BaselineKind { random_search, hill_climb, simulated_annealing };

std::string baseline_name(BaselineKind kind);
BaselineKind baseline_from_name(const std::string& name);

// A/B warm-start plan. Instance i of the run draws from
// SeededRng(seed).child(i); indices below train_count are reserved for
// whatever training consumed them (build_inverse_dataset uses the same
// convention), so test instances occupy the disjoint range
// [train_count, train_count + test_count).
struct ExperimentPlan {
  FamilySpec spec;
  OptionNet onet;
  BaselineKind baseline = BaselineKind::hill_climb;
  SearchBudget budget;  // oracle_utility is filled per instance when available
  int train_count = 0;
  int test_count = 0;
  std::uint64_t seed = 0;
  SampleConfig sampling;
  TemperatureSchedule anneal_schedule;  // simulated_annealing baseline only
};

struct InstanceRecord {
  std::uint64_t instance_seed = 0;
  double cold_best_utility = 0.0;
  double warm_best_utility = 0.0;
  // Evaluations consumed when the arm first came within target_gap of the
  // oracle; absent for runs without a target (generalization). An arm that
  // never reached the target reports the full budget with reached = false.
  std::optional<long long> cold_evals_to_target;
  std::optional<long long> warm_evals_to_target;
  bool cold_reached = false;
  bool warm_reached = false;
  std::optional<double> oracle_utility;
};

struct ReportAggregates {
  double mean_cold_utility = 0.0;
  double mean_warm_utility = 0.0;
  double median_cold_utility = 0.0;
  double median_warm_utility = 0.0;
  // Fraction of instances where the warm arm is strictly better: fewer
  // evaluations to target when both arms have targets, higher utility
  // otherwise.
  double warm_win_rate = 0.0;
  std::optional<double> median_cold_evals_to_target;
  std::optional<double> median_warm_evals_to_target;
  std::optional<double> median_warm_gap;  // oracle - warm utility, when oracle known
};

struct RunReport {
  int format_version = 1;
  std::string experiment;  // "warm_start" or "generalization"
  nlohmann::json config;   // full resolved configuration echo
  std::vector<InstanceRecord> records;
  ReportAggregates aggregates;
};

ReportAggregates compute_aggregates(const std::vector<InstanceRecord>& records);

// For each held-out instance: run the baseline cold from a random start and
// warm from the option net's output, under one shared evaluation cap. A
// plain net contributes best-of-k (k evaluations charged); a refinement-mode
// net contributes the best of k keep-best chains of refine_rounds rounds
// from random starts (k * (1 + R) charged).
RunReport warm_start_experiment(const ExperimentPlan& plan, int workers = 1);

// Held-out quality of the generator alone: the warm arm samples as in
// warm_start_experiment, the cold arm is uniform random search on the
// identical evaluation budget.
RunReport generalization_eval(const OptionNet& onet, const FamilySpec& spec, int test_count,
                              const SampleConfig& sampling, SeededRng& rng, int workers = 1);

void save_report(const RunReport& report, const std::filesystem::path& path);
// Re-verifies aggregate consistency; throws MalformedFileError,
// VersionError or AggregateMismatchError.
RunReport load_report(const std::filesystem::path& path);

nlohmann::json report_to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);

// One row per instance, for plotting.
void save_report_csv(const RunReport& report, const std::filesystem::path& path);

// Index-ordered parallel map: fn(i) runs on `workers` threads but results
// are always reduced in index order, so worker count never changes output.
void for_each_index(int count, int workers, const std::function<void(int)>& fn);

}  // namespace bliss
