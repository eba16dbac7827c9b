#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "bliss/problem.hpp"
#include "bliss/rng.hpp"
#include "bliss/trainers.hpp"

namespace bliss {

// Stop after max_evaluations true-utility calls, or earlier once the best
// utility reaches oracle_utility - target_gap (when the oracle is known).
struct SearchBudget {
  long long max_evaluations = 1000;
  double target_gap = 0.0;
  std::optional<double> oracle_utility;
};

struct CurvePoint {
  long long evaluations = 0;
  double best_utility = 0.0;
};

struct SearchResult {
  CandidateSolution best;
  double best_utility = 0.0;
  long long evaluations_used = 0;
  bool reached_target = false;
  long long accepted_moves = 0;  // hill climb / annealing bookkeeping
  std::vector<CurvePoint> curve;  // best utility after each improvement; non-decreasing
};

// Uniform draws from the solution space, keep best.
SearchResult random_search(const InstanceDescriptor& desc, const SearchBudget& budget, SeededRng& rng);

// Strict-improvement local search. Continuous: Gaussian step (sigma 0.1) on
// one random coordinate, clipped to the box. tsp: random 2-opt segment
// reversal. When start_utility is supplied the start is not re-evaluated
// (its cost was already charged by whoever produced it).
SearchResult hill_climb(const InstanceDescriptor& desc, const CandidateSolution& start,
                        const SearchBudget& budget, SeededRng& rng,
                        std::optional<double> start_utility = std::nullopt);

// Metropolis acceptance over the same move proposals as hill_climb: a worse
// move is accepted with probability exp(dU / T); the annealing temperature
// follows `schedule` per proposal. The incumbent best is tracked separately
// from the wandering current point.
SearchResult simulated_annealing(const InstanceDescriptor& desc, const CandidateSolution& start,
                                 const SearchBudget& budget, const TemperatureSchedule& schedule,
                                 SeededRng& rng, std::optional<double> start_utility = std::nullopt);

// Canonical particle swarm directly on u-space (continuous families only),
// same coefficients as the population trainer.
SearchResult particle_swarm_direct(const InstanceDescriptor& desc, const SearchBudget& budget,
                                   int swarm_size, SeededRng& rng);

// Exact optimum via the family oracle; evaluations_used is the enumeration
// count for tsp ((n-1)!/2) and 1 for the analytic families.
SearchResult brute_force(const InstanceDescriptor& desc);

nlohmann::json search_result_to_json(const SearchResult& result);
void save_search_result(const SearchResult& result, const std::filesystem::path& path);

// CSV with header: evaluations,best_utility
void save_curve_csv(const SearchResult& result, const std::filesystem::path& path);

}  // namespace bliss
