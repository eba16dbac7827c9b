#include "bliss/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include "bliss/errors.hpp"
#include "bliss/model_io.hpp"

namespace bliss {

namespace {

double median(std::vector<double> values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

bool oracle_supported(const InstanceDescriptor& desc) {
  return desc.family != Family::tsp || desc.dimension <= 10;
}

// Evaluations at the first curve point meeting the target.
std::optional<long long> evals_at_target(const std::vector<CurvePoint>& curve, double target) {
  for (const CurvePoint& p : curve) {
    if (p.best_utility >= target) return p.evaluations;
  }
  return std::nullopt;
}

// Warm candidate generation. A plain net draws best-of-k; a refinement net
// runs k independent keep-best chains of R rounds from random starts. Either
// way every utility evaluation is charged: k, or k * (1 + R).
long long sampling_cost(const OptionNet& onet, const SampleConfig& sampling) {
  if (!onet.refinement_mode) return sampling.k;
  return static_cast<long long>(sampling.k) * (1 + sampling.refine_rounds);
}

ScoredCandidate draw_warm_candidate(const OptionNet& onet, const InstanceDescriptor& desc,
                                    const SampleConfig& sampling, SeededRng& rng) {
  if (!onet.refinement_mode) return best_of_k(onet, desc, sampling.temperature, sampling.k, rng);
  ScoredCandidate best;
  for (int chain = 0; chain < sampling.k; ++chain) {
    const CandidateSolution start = random_solution(desc, rng);
    ScoredCandidate out =
        refine_loop(onet, desc, start, sampling.temperature, sampling.refine_rounds, rng);
    if (chain == 0 || out.utility > best.utility) best = std::move(out);
  }
  return best;
}

SearchResult run_baseline(BaselineKind kind, const InstanceDescriptor& desc,
                          const CandidateSolution& start, std::optional<double> start_utility,
                          const SearchBudget& budget, const TemperatureSchedule& anneal,
                          SeededRng& rng) {
  switch (kind) {
    case BaselineKind::hill_climb:
      return hill_climb(desc, start, budget, rng, start_utility);
    case BaselineKind::simulated_annealing:
      return simulated_annealing(desc, start, budget, anneal, rng, start_utility);
    case BaselineKind::random_search: {
      // Random search does not walk from the start point, but a seeded run
      // keeps it as the incumbent: the curve is re-based on it so best-so-far
      // stays non-decreasing and ends at the true best.
      SearchResult result = random_search(desc, budget, rng);
      if (start_utility.has_value()) {
        SearchResult merged;
        merged.evaluations_used = result.evaluations_used;
        merged.reached_target = result.reached_target;
        merged.accepted_moves = result.accepted_moves;
        merged.best = start;
        merged.best_utility = *start_utility;
        merged.curve.push_back({0, *start_utility});
        for (const CurvePoint& p : result.curve) {
          if (p.best_utility > merged.best_utility) {
            merged.best_utility = p.best_utility;
            merged.curve.push_back(p);
          }
        }
        if (merged.best_utility > *start_utility) merged.best = result.best;
        return merged;
      }
      return result;
    }
  }
  throw InputError("unknown baseline kind");
}

}  // namespace

std::string baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::random_search: return "random_search";
    case BaselineKind::hill_climb: return "hill_climb";
    case BaselineKind::simulated_annealing: return "simulated_annealing";
  }
  throw InputError("unknown baseline kind");
}

BaselineKind baseline_from_name(const std::string& name) {
  if (name == "random_search") return BaselineKind::random_search;
  if (name == "hill_climb") return BaselineKind::hill_climb;
  if (name == "simulated_annealing") return BaselineKind::simulated_annealing;
  throw ConfigError("unknown baseline: " + name);
}

void for_each_index(int count, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (!failed.load()) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

ReportAggregates compute_aggregates(const std::vector<InstanceRecord>& records) {
  ReportAggregates agg;
  if (records.empty()) return agg;
  const double n = static_cast<double>(records.size());

  std::vector<double> cold_utils, warm_utils, cold_evals, warm_evals, gaps;
  int wins = 0;
  for (const InstanceRecord& r : records) {
    cold_utils.push_back(r.cold_best_utility);
    warm_utils.push_back(r.warm_best_utility);
    agg.mean_cold_utility += r.cold_best_utility / n;
    agg.mean_warm_utility += r.warm_best_utility / n;
    const bool have_targets = r.cold_evals_to_target.has_value() && r.warm_evals_to_target.has_value();
    if (have_targets) {
      cold_evals.push_back(static_cast<double>(*r.cold_evals_to_target));
      warm_evals.push_back(static_cast<double>(*r.warm_evals_to_target));
      if (*r.warm_evals_to_target < *r.cold_evals_to_target) ++wins;
    } else if (r.warm_best_utility > r.cold_best_utility) {
      ++wins;
    }
    if (r.oracle_utility.has_value()) gaps.push_back(*r.oracle_utility - r.warm_best_utility);
  }
  agg.median_cold_utility = median(std::move(cold_utils));
  agg.median_warm_utility = median(std::move(warm_utils));
  agg.warm_win_rate = wins / n;
  if (!cold_evals.empty()) {
    agg.median_cold_evals_to_target = median(std::move(cold_evals));
    agg.median_warm_evals_to_target = median(std::move(warm_evals));
  }
  if (!gaps.empty()) agg.median_warm_gap = median(std::move(gaps));
  return agg;
}

RunReport warm_start_experiment(const ExperimentPlan& plan, int workers) {
  if (plan.test_count < 1) throw ConfigError("warm_start_experiment: test_count must be >= 1");
  if (plan.train_count < 0) throw ConfigError("warm_start_experiment: train_count must be >= 0");
  if (plan.sampling.k < 1) throw ConfigError("warm_start_experiment: sampling k must be >= 1");
  if (plan.sampling.refine_rounds > 0 && !plan.onet.refinement_mode) {
    throw ConfigError("warm_start_experiment: refine_rounds needs a refinement-mode net");
  }

  const long long charged = sampling_cost(plan.onet, plan.sampling);
  if (charged >= plan.budget.max_evaluations) {
    throw ConfigError("warm_start_experiment: sampling cost consumes the whole budget");
  }

  const SeededRng root(plan.seed);
  RunReport report;
  report.experiment = "warm_start";
  report.records.resize(plan.test_count);

  for_each_index(plan.test_count, workers, [&](int i) {
    SeededRng inst_rng = root.child(static_cast<std::uint64_t>(plan.train_count) + i);
    const InstanceDescriptor desc = sample_instance(plan.spec, inst_rng);

    InstanceRecord record;
    record.instance_seed = inst_rng.seed();

    SearchBudget budget = plan.budget;
    if (oracle_supported(desc)) {
      record.oracle_utility = evaluate(desc, oracle_optimum(desc));
      budget.oracle_utility = record.oracle_utility;
    } else {
      budget.oracle_utility.reset();
    }
    const double target =
        budget.oracle_utility.has_value() ? *budget.oracle_utility - budget.target_gap : 0.0;

    // Cold arm: random start, full budget, start evaluation charged inside.
    SeededRng cold_rng = inst_rng.child(1);
    const CandidateSolution cold_start = random_solution(desc, cold_rng);
    const SearchResult cold = run_baseline(plan.baseline, desc, cold_start, std::nullopt, budget,
                                           plan.anneal_schedule, cold_rng);
    record.cold_best_utility = cold.best_utility;
    if (budget.oracle_utility.has_value()) {
      const auto hit = evals_at_target(cold.curve, target);
      record.cold_reached = hit.has_value();
      record.cold_evals_to_target = hit.value_or(budget.max_evaluations);
    }
    if (cold.evaluations_used > budget.max_evaluations) {
      throw std::logic_error("cold arm exceeded its budget");
    }

    // Warm arm: the sampling block is charged against the same cap.
    SeededRng warm_rng = inst_rng.child(2);
    const ScoredCandidate seeded = draw_warm_candidate(plan.onet, desc, plan.sampling, warm_rng);
    SearchBudget warm_budget = budget;
    warm_budget.max_evaluations = budget.max_evaluations - charged;
    const SearchResult warm = run_baseline(plan.baseline, desc, seeded.candidate, seeded.utility,
                                           warm_budget, plan.anneal_schedule, warm_rng);
    record.warm_best_utility = warm.best_utility;
    if (budget.oracle_utility.has_value()) {
      if (seeded.utility >= target) {
        // The sampling block itself reached the target; it is charged whole.
        record.warm_reached = true;
        record.warm_evals_to_target = charged;
      } else {
        const auto hit = evals_at_target(warm.curve, target);
        record.warm_reached = hit.has_value();
        record.warm_evals_to_target = charged + hit.value_or(warm_budget.max_evaluations);
      }
    }
    if (charged + warm.evaluations_used > budget.max_evaluations) {
      throw std::logic_error("warm arm exceeded its budget");
    }

    report.records[i] = std::move(record);
  });

  report.aggregates = compute_aggregates(report.records);

  report.config = {{"experiment", "warm_start"},
                   {"family", family_name(plan.spec.family)},
                   {"dimension", plan.spec.dimension},
                   {"baseline", baseline_name(plan.baseline)},
                   {"max_evaluations", plan.budget.max_evaluations},
                   {"target_gap", plan.budget.target_gap},
                   {"train_count", plan.train_count},
                   {"test_count", plan.test_count},
                   {"seed", plan.seed},
                   {"temperature", plan.sampling.temperature},
                   {"k", plan.sampling.k},
                   {"refine_rounds", plan.sampling.refine_rounds}};
  return report;
}

RunReport generalization_eval(const OptionNet& onet, const FamilySpec& spec, int test_count,
                              const SampleConfig& sampling, SeededRng& rng, int workers) {
  if (test_count < 1) throw ConfigError("generalization_eval: test_count must be >= 1");
  if (sampling.k < 1) throw ConfigError("generalization_eval: sampling k must be >= 1");
  if (sampling.refine_rounds > 0 && !onet.refinement_mode) {
    throw ConfigError("generalization_eval: refine_rounds needs a refinement-mode net");
  }

  const SeededRng root = rng;
  const long long budget_evals = sampling_cost(onet, sampling);

  RunReport report;
  report.experiment = "generalization";
  report.records.resize(test_count);

  for_each_index(test_count, workers, [&](int i) {
    SeededRng inst_rng = root.child(static_cast<std::uint64_t>(i));
    const InstanceDescriptor desc = sample_instance(spec, inst_rng);

    InstanceRecord record;
    record.instance_seed = inst_rng.seed();
    if (oracle_supported(desc)) record.oracle_utility = evaluate(desc, oracle_optimum(desc));

    SeededRng warm_rng = inst_rng.child(2);
    const ScoredCandidate warm = draw_warm_candidate(onet, desc, sampling, warm_rng);
    record.warm_best_utility = warm.utility;

    // Matched-budget cold arm: plain uniform sampling.
    SeededRng cold_rng = inst_rng.child(1);
    SearchBudget cold_budget;
    cold_budget.max_evaluations = budget_evals;
    const SearchResult cold = random_search(desc, cold_budget, cold_rng);
    record.cold_best_utility = cold.best_utility;

    report.records[i] = std::move(record);
  });

  report.aggregates = compute_aggregates(report.records);
  report.config = {{"experiment", "generalization"},
                   {"family", family_name(spec.family)},
                   {"dimension", spec.dimension},
                   {"test_count", test_count},
                   {"seed", root.seed()},
                   {"temperature", sampling.temperature},
                   {"k", sampling.k},
                   {"refine_rounds", sampling.refine_rounds}};
  return report;
}

namespace {

nlohmann::json optional_to_json(const std::optional<double>& v) {
  return v.has_value() ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json optional_to_json(const std::optional<long long>& v) {
  return v.has_value() ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

bool same_optional(const std::optional<double>& a, const std::optional<double>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a.has_value() || *a == *b;
}

}  // namespace

nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const InstanceRecord& r : report.records) {
    records.push_back({{"instance_seed", r.instance_seed},
                       {"cold_best_utility", r.cold_best_utility},
                       {"warm_best_utility", r.warm_best_utility},
                       {"cold_evals_to_target", optional_to_json(r.cold_evals_to_target)},
                       {"warm_evals_to_target", optional_to_json(r.warm_evals_to_target)},
                       {"cold_reached", r.cold_reached},
                       {"warm_reached", r.warm_reached},
                       {"oracle_utility", optional_to_json(r.oracle_utility)}});
  }
  const ReportAggregates& a = report.aggregates;
  nlohmann::json aggregates = {
      {"mean_cold_utility", a.mean_cold_utility},
      {"mean_warm_utility", a.mean_warm_utility},
      {"median_cold_utility", a.median_cold_utility},
      {"median_warm_utility", a.median_warm_utility},
      {"warm_win_rate", a.warm_win_rate},
      {"median_cold_evals_to_target", optional_to_json(a.median_cold_evals_to_target)},
      {"median_warm_evals_to_target", optional_to_json(a.median_warm_evals_to_target)},
      {"median_warm_gap", optional_to_json(a.median_warm_gap)}};
  return nlohmann::json{{"format_version", report.format_version},
                        {"experiment", report.experiment},
                        {"config", report.config},
                        {"records", records},
                        {"aggregates", aggregates}};
}

RunReport report_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("records") || !j.contains("aggregates")) {
    throw MalformedFileError("report: missing records or aggregates");
  }
  if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw MalformedFileError("report: missing format_version");
  }
  if (j["format_version"].get<int>() != 1) {
    throw VersionError("report: unsupported format_version " + j["format_version"].dump());
  }

  RunReport report;
  try {
    report.experiment = j.value("experiment", "");
    report.config = j.value("config", nlohmann::json::object());
    for (const nlohmann::json& r : j["records"]) {
      InstanceRecord record;
      record.instance_seed = r.at("instance_seed").get<std::uint64_t>();
      record.cold_best_utility = r.at("cold_best_utility").get<double>();
      record.warm_best_utility = r.at("warm_best_utility").get<double>();
      record.cold_evals_to_target = optional_from_json<long long>(r.at("cold_evals_to_target"));
      record.warm_evals_to_target = optional_from_json<long long>(r.at("warm_evals_to_target"));
      record.cold_reached = r.at("cold_reached").get<bool>();
      record.warm_reached = r.at("warm_reached").get<bool>();
      record.oracle_utility = optional_from_json<double>(r.at("oracle_utility"));
      report.records.push_back(std::move(record));
    }
    const nlohmann::json& a = j["aggregates"];
    report.aggregates.mean_cold_utility = a.at("mean_cold_utility").get<double>();
    report.aggregates.mean_warm_utility = a.at("mean_warm_utility").get<double>();
    report.aggregates.median_cold_utility = a.at("median_cold_utility").get<double>();
    report.aggregates.median_warm_utility = a.at("median_warm_utility").get<double>();
    report.aggregates.warm_win_rate = a.at("warm_win_rate").get<double>();
    report.aggregates.median_cold_evals_to_target =
        optional_from_json<double>(a.at("median_cold_evals_to_target"));
    report.aggregates.median_warm_evals_to_target =
        optional_from_json<double>(a.at("median_warm_evals_to_target"));
    report.aggregates.median_warm_gap = optional_from_json<double>(a.at("median_warm_gap"));
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFileError(std::string("report: ") + e.what());
  }

  // Aggregates must be recomputable from the records.
  const ReportAggregates check = compute_aggregates(report.records);
  const ReportAggregates& got = report.aggregates;
  const bool consistent =
      check.mean_cold_utility == got.mean_cold_utility &&
      check.mean_warm_utility == got.mean_warm_utility &&
      check.median_cold_utility == got.median_cold_utility &&
      check.median_warm_utility == got.median_warm_utility &&
      check.warm_win_rate == got.warm_win_rate &&
      same_optional(check.median_cold_evals_to_target, got.median_cold_evals_to_target) &&
      same_optional(check.median_warm_evals_to_target, got.median_warm_evals_to_target) &&
      same_optional(check.median_warm_gap, got.median_warm_gap);
  if (!consistent) {
    throw AggregateMismatchError("report: stored aggregates do not match the records");
  }
  return report;
}

void save_report(const RunReport& report, const std::filesystem::path& path) {
  write_json_file(report_to_json(report), path);
}

RunReport load_report(const std::filesystem::path& path) {
  return report_from_json(read_json_file(path));
}

void save_report_csv(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "instance,instance_seed,cold_best_utility,warm_best_utility,cold_evals_to_target,"
         "warm_evals_to_target,cold_reached,warm_reached,oracle_utility\n";
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    const InstanceRecord& r = report.records[i];
    out << i << ',' << r.instance_seed << ',' << format_double(r.cold_best_utility) << ','
        << format_double(r.warm_best_utility) << ',';
    if (r.cold_evals_to_target.has_value()) out << *r.cold_evals_to_target;
    out << ',';
    if (r.warm_evals_to_target.has_value()) out << *r.warm_evals_to_target;
    out << ',' << (r.cold_reached ? 1 : 0) << ',' << (r.warm_reached ? 1 : 0) << ',';
    if (r.oracle_utility.has_value()) out << format_double(*r.oracle_utility);
    out << '\n';
  }
}

}  // namespace bliss
