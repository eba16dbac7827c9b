#include "bliss/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bliss/errors.hpp"
#include "bliss/model_io.hpp"

namespace bliss {

namespace {

constexpr double kHillClimbSigma = 0.1;
constexpr double kSwarmInertia = 0.72;
constexpr double kSwarmCognitive = 1.49;
constexpr double kSwarmSocial = 1.49;

bool within_target(const SearchBudget& budget, double utility) {
  return budget.oracle_utility.has_value() && utility >= *budget.oracle_utility - budget.target_gap;
}

void require_budget(const SearchBudget& budget) {
  if (budget.max_evaluations < 1) throw InputError("search budget must allow at least one evaluation");
  if (budget.target_gap < 0.0) throw InputError("search target_gap must be nonnegative");
}

void note_best(SearchResult& result, const CandidateSolution& u, double utility) {
  result.best = u;
  result.best_utility = utility;
  result.curve.push_back({result.evaluations_used, utility});
}

// One local move: single-coordinate Gaussian step for continuous solutions,
// random 2-opt segment reversal for tours. Reversed segments span 2..n-2
// positions: longer ones only rotate or reflect the tour, which leaves the
// length unchanged up to rounding noise and must never count as a move.
CandidateSolution propose_move(const InstanceDescriptor& desc, const CandidateSolution& current,
                               SeededRng& rng) {
  CandidateSolution proposal = current;
  if (current.kind == SolutionKind::continuous) {
    const Box box = solution_space(desc).box;
    const int d = static_cast<int>(current.values.size());
    const int coord = static_cast<int>(rng.uniform_int(d));
    proposal.values[coord] =
        std::clamp(current.values[coord] + kHillClimbSigma * rng.normal(), box.lo, box.hi);
  } else {
    const int n = static_cast<int>(current.permutation.size());
    if (n < 4) return proposal;  // every 3-city tour is congruent
    const int len = 2 + static_cast<int>(rng.uniform_int(n - 3));
    const int a = static_cast<int>(rng.uniform_int(n - len + 1));
    std::reverse(proposal.permutation.begin() + a, proposal.permutation.begin() + a + len);
  }
  return proposal;
}

}  // namespace

SearchResult random_search(const InstanceDescriptor& desc, const SearchBudget& budget, SeededRng& rng) {
  require_budget(budget);
  SearchResult result;
  while (result.evaluations_used < budget.max_evaluations) {
    const CandidateSolution u = random_solution(desc, rng);
    const double utility = evaluate(desc, u);
    ++result.evaluations_used;
    if (result.curve.empty() || utility > result.best_utility) note_best(result, u, utility);
    if (within_target(budget, result.best_utility)) {
      result.reached_target = true;
      break;
    }
  }
  return result;
}

SearchResult hill_climb(const InstanceDescriptor& desc, const CandidateSolution& start,
                        const SearchBudget& budget, SeededRng& rng,
                        std::optional<double> start_utility) {
  require_budget(budget);
  SearchResult result;
  double current_utility;
  if (start_utility.has_value()) {
    current_utility = *start_utility;
  } else {
    current_utility = evaluate(desc, start);
    ++result.evaluations_used;
  }
  note_best(result, start, current_utility);
  if (within_target(budget, current_utility)) {
    result.reached_target = true;
    return result;
  }

  CandidateSolution current = start;
  while (result.evaluations_used < budget.max_evaluations) {
    CandidateSolution proposal = propose_move(desc, current, rng);
    const double utility = evaluate(desc, proposal);
    ++result.evaluations_used;
    if (utility > current_utility) {
      current = std::move(proposal);
      current_utility = utility;
      ++result.accepted_moves;
      note_best(result, current, current_utility);
      if (within_target(budget, current_utility)) {
        result.reached_target = true;
        break;
      }
    }
  }
  return result;
}

SearchResult simulated_annealing(const InstanceDescriptor& desc, const CandidateSolution& start,
                                 const SearchBudget& budget, const TemperatureSchedule& schedule,
                                 SeededRng& rng, std::optional<double> start_utility) {
  require_budget(budget);
  SearchResult result;
  double current_utility;
  if (start_utility.has_value()) {
    current_utility = *start_utility;
  } else {
    current_utility = evaluate(desc, start);
    ++result.evaluations_used;
  }
  note_best(result, start, current_utility);
  if (within_target(budget, current_utility)) {
    result.reached_target = true;
    return result;
  }

  CandidateSolution current = start;
  int proposal_index = 0;
  while (result.evaluations_used < budget.max_evaluations) {
    const double temperature = schedule_temperature(schedule, proposal_index++);
    CandidateSolution proposal = propose_move(desc, current, rng);
    const double utility = evaluate(desc, proposal);
    ++result.evaluations_used;

    const double delta = utility - current_utility;
    bool accept = delta >= 0.0;
    if (!accept && temperature > 0.0) accept = rng.uniform01() < std::exp(delta / temperature);
    if (accept) {
      current = std::move(proposal);
      current_utility = utility;
      ++result.accepted_moves;
      if (current_utility > result.best_utility) {
        note_best(result, current, current_utility);
        if (within_target(budget, result.best_utility)) {
          result.reached_target = true;
          break;
        }
      }
    }
  }
  return result;
}

SearchResult particle_swarm_direct(const InstanceDescriptor& desc, const SearchBudget& budget,
                                   int swarm_size, SeededRng& rng) {
  require_budget(budget);
  if (desc.family == Family::tsp) {
    throw UnsupportedError("particle_swarm_direct: continuous families only");
  }
  if (swarm_size < 1) throw InputError("particle_swarm_direct: swarm_size must be >= 1");

  const Box box = solution_space(desc).box;
  const int d = desc.dimension;
  std::vector<std::vector<double>> position(swarm_size, std::vector<double>(d, 0.0));
  std::vector<std::vector<double>> velocity(swarm_size, std::vector<double>(d, 0.0));
  std::vector<std::vector<double>> personal_best(swarm_size);
  std::vector<double> personal_best_utility(swarm_size, 0.0);
  std::vector<bool> evaluated(swarm_size, false);

  for (int i = 0; i < swarm_size; ++i) {
    for (int j = 0; j < d; ++j) position[i][j] = rng.uniform(box.lo, box.hi);
  }

  SearchResult result;
  CandidateSolution u;
  u.kind = SolutionKind::continuous;

  bool out_of_budget = false;
  while (!out_of_budget && !result.reached_target) {
    for (int i = 0; i < swarm_size; ++i) {
      if (result.evaluations_used >= budget.max_evaluations) {
        out_of_budget = true;
        break;
      }
      u.values = position[i];
      const double utility = evaluate(desc, u);
      ++result.evaluations_used;
      if (!evaluated[i] || utility > personal_best_utility[i]) {
        evaluated[i] = true;
        personal_best_utility[i] = utility;
        personal_best[i] = position[i];
      }
      if (result.curve.empty() || utility > result.best_utility) note_best(result, u, utility);
      if (within_target(budget, result.best_utility)) {
        result.reached_target = true;
        break;
      }
    }
    if (out_of_budget || result.reached_target) break;

    for (int i = 0; i < swarm_size; ++i) {
      for (int j = 0; j < d; ++j) {
        const double r1 = rng.uniform01();
        const double r2 = rng.uniform01();
        velocity[i][j] = kSwarmInertia * velocity[i][j] +
                         kSwarmCognitive * r1 * (personal_best[i][j] - position[i][j]) +
                         kSwarmSocial * r2 * (result.best.values[j] - position[i][j]);
        position[i][j] = std::clamp(position[i][j] + velocity[i][j], box.lo, box.hi);
      }
    }
  }
  return result;
}

SearchResult brute_force(const InstanceDescriptor& desc) {
  SearchResult result;
  result.best = oracle_optimum(desc);
  result.best_utility = evaluate(desc, result.best);
  result.evaluations_used = desc.family == Family::tsp ? tsp_enumeration_count(desc.dimension) : 1;
  result.reached_target = true;
  result.curve.push_back({result.evaluations_used, result.best_utility});
  return result;
}

nlohmann::json search_result_to_json(const SearchResult& result) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["best_utility"] = result.best_utility;
  j["evaluations_used"] = result.evaluations_used;
  j["reached_target"] = result.reached_target;
  j["accepted_moves"] = result.accepted_moves;
  if (result.best.kind == SolutionKind::continuous) {
    j["best"] = result.best.values;
  } else {
    j["best"] = result.best.permutation;
  }
  nlohmann::json curve = nlohmann::json::array();
  for (const CurvePoint& p : result.curve) {
    curve.push_back({{"evaluations", p.evaluations}, {"best_utility", p.best_utility}});
  }
  j["curve"] = curve;
  return j;
}

void save_search_result(const SearchResult& result, const std::filesystem::path& path) {
  write_json_file(search_result_to_json(result), path);
}

void save_curve_csv(const SearchResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "evaluations,best_utility\n";
  for (const CurvePoint& p : result.curve) {
    out << p.evaluations << ',' << format_double(p.best_utility) << '\n';
  }
}

}  // namespace bliss
