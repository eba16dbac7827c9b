#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bliss/baselines.hpp"
#include "bliss/errors.hpp"
#include "test_util.hpp"

using namespace bliss;
using namespace bliss_test;

namespace {

void check_curve(const SearchResult& result) {
  REQUIRE_FALSE(result.curve.empty());
  for (std::size_t i = 1; i < result.curve.size(); ++i) {
    CHECK(result.curve[i].best_utility >= result.curve[i - 1].best_utility);
    CHECK(result.curve[i].evaluations > result.curve[i - 1].evaluations);
  }
  CHECK(result.curve.back().best_utility == result.best_utility);
}

InstanceDescriptor square_tsp() {
  InstanceDescriptor desc;
  desc.family = Family::tsp;
  desc.dimension = 4;
  desc.alpha = {0, 0, 0, 1, 1, 1, 1, 0};
  return desc;
}

}  // namespace

TEST_CASE("random search uses exactly one evaluation for budget 1") {
  SeededRng rng(100);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::quadratic_bowl, 3), rng);
  const SearchResult result = random_search(desc, SearchBudget{1, 0.0, std::nullopt}, rng);
  CHECK(result.evaluations_used == 1);
  check_curve(result);
}

TEST_CASE("random search is seed-deterministic") {
  SeededRng spec_rng(101);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::shifted_rastrigin, 3), spec_rng);
  SeededRng a(500), b(500);
  const SearchResult ra = random_search(desc, SearchBudget{64, 0.0, std::nullopt}, a);
  const SearchResult rb = random_search(desc, SearchBudget{64, 0.0, std::nullopt}, b);
  CHECK(ra.best_utility == rb.best_utility);
  CHECK(ra.best.values == rb.best.values);
  REQUIRE(ra.curve.size() == rb.curve.size());
  for (std::size_t i = 0; i < ra.curve.size(); ++i) {
    CHECK(ra.curve[i].evaluations == rb.curve[i].evaluations);
    CHECK(ra.curve[i].best_utility == rb.curve[i].best_utility);
  }
}

TEST_CASE("hill climb from the bowl optimum stops immediately at its target") {
  SeededRng rng(102);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::quadratic_bowl, 4), rng);
  const CandidateSolution start = oracle_optimum(desc);
  SearchBudget budget{1000, 0.0, evaluate(desc, start)};
  const SearchResult result = hill_climb(desc, start, budget, rng);
  CHECK(result.reached_target);
  CHECK(result.evaluations_used == 1);  // only the start evaluation
  CHECK(result.accepted_moves == 0);
  CHECK(result.best.values == start.values);
}

TEST_CASE("hill climb from the oracle start never moves, all families") {
  SeededRng rng(103);
  for (Family family : {Family::quadratic_bowl, Family::shifted_rastrigin}) {
    const InstanceDescriptor desc = sample_instance(make_family_spec(family, 3), rng);
    const CandidateSolution start = oracle_optimum(desc);
    SearchBudget budget{300, 0.0, std::nullopt};
    const SearchResult result = hill_climb(desc, start, budget, rng);
    CHECK(result.best.values == start.values);
  }
  // The bowl's clipped-alpha argument does not apply to tours, but the global
  // optimum is still 2-opt... not necessarily single-move optimal under all
  // proposals; it is under segment reversals, which are exactly our moves.
  const InstanceDescriptor tsp_desc = sample_instance(make_family_spec(Family::tsp, 6), rng);
  const CandidateSolution tsp_start = oracle_optimum(tsp_desc);
  SearchBudget budget{2000, 0.0, std::nullopt};
  const SearchResult result = hill_climb(tsp_desc, tsp_start, budget, rng);
  CHECK(result.best.permutation == tsp_start.permutation);
  CHECK(result.accepted_moves == 0);
}

TEST_CASE("hill climb improvement curve is strictly increasing") {
  SeededRng rng(104);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::quadratic_bowl, 3), rng);
  const CandidateSolution start = random_solution(desc, rng);
  const SearchResult result = hill_climb(desc, start, SearchBudget{2000, 0.0, std::nullopt}, rng);
  check_curve(result);
  for (std::size_t i = 1; i < result.curve.size(); ++i) {
    CHECK(result.curve[i].best_utility > result.curve[i - 1].best_utility);
  }
  CHECK(static_cast<long long>(result.curve.size()) - 1 == result.accepted_moves);
}

TEST_CASE("hill climb on tours never falls below its start") {
  SeededRng rng(105);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::tsp, 7), rng);
  const CandidateSolution start = random_solution(desc, rng);
  const double start_utility = evaluate(desc, start);
  const SearchResult result = hill_climb(desc, start, SearchBudget{5000, 0.0, std::nullopt}, rng);
  CHECK(result.best_utility >= start_utility);
  check_curve(result);
}

TEST_CASE("simulated annealing accepts everything at enormous temperature") {
  SeededRng rng(106);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::shifted_rastrigin, 2), rng);
  const CandidateSolution start = random_solution(desc, rng);
  TemperatureSchedule schedule{ScheduleKind::constant, 1e9, 1.0, 0.0, 1};
  const SearchResult result = simulated_annealing(desc, start, SearchBudget{500, 0.0, std::nullopt},
                                                  schedule, rng);
  const long long proposals = result.evaluations_used - 1;
  CHECK(result.accepted_moves >= static_cast<long long>(0.95 * proposals));
  check_curve(result);
}

TEST_CASE("annealing incumbent stays monotone while the current point wanders") {
  SeededRng rng(107);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::shifted_rastrigin, 3), rng);
  const CandidateSolution start = random_solution(desc, rng);
  TemperatureSchedule schedule{ScheduleKind::exponential, 2.0, 0.995, 0.0, 1};
  const SearchResult result = simulated_annealing(desc, start, SearchBudget{3000, 0.0, std::nullopt},
                                                  schedule, rng);
  check_curve(result);
  CHECK(result.best_utility >= evaluate(desc, start));
  // Worse moves do get accepted at these temperatures.
  CHECK(result.accepted_moves > static_cast<long long>(result.curve.size()) - 1);
}

TEST_CASE("zero annealing temperature only accepts non-worsening moves") {
  SeededRng rng(108);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::quadratic_bowl, 2), rng);
  const CandidateSolution start = random_solution(desc, rng);
  TemperatureSchedule schedule{ScheduleKind::constant, 0.0, 1.0, 0.0, 1};
  const SearchResult result = simulated_annealing(desc, start, SearchBudget{1000, 0.0, std::nullopt},
                                                  schedule, rng);
  check_curve(result);
  CHECK(result.best_utility > evaluate(desc, start));
}

TEST_CASE("single-particle swarm is stationary") {
  SeededRng rng(109);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::quadratic_bowl, 2), rng);
  const SearchResult result = particle_swarm_direct(desc, SearchBudget{50, 0.0, std::nullopt}, 1, rng);
  // The lone particle is its own global best: zero velocity forever, so the
  // first evaluation is the only distinct point.
  CHECK(result.curve.size() == 1);
  CHECK(result.evaluations_used == 50);
}

TEST_CASE("swarm on the bowl closes to within 1e-2 of the optimum") {
  SeededRng rng(110);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::quadratic_bowl, 2), rng);
  const SearchResult result = particle_swarm_direct(desc, SearchBudget{1010, 0.0, std::nullopt}, 10, rng);
  check_curve(result);
  const double optimum = evaluate(desc, oracle_optimum(desc));
  CHECK(optimum - result.best_utility < 1e-2);
}

TEST_CASE("swarm rejects tours") {
  SeededRng rng(111);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::tsp, 5), rng);
  CHECK_THROWS_AS(particle_swarm_direct(desc, SearchBudget{100, 0.0, std::nullopt}, 5, rng),
                  UnsupportedError);
}

TEST_CASE("brute force is the exactness anchor") {
  const SearchResult square = brute_force(square_tsp());
  CHECK(square.best_utility == doctest::Approx(-4.0));

  SeededRng rng(112);
  const InstanceDescriptor desc7 = sample_instance(make_family_spec(Family::tsp, 7), rng);
  const SearchResult tsp7 = brute_force(desc7);
  CHECK(tsp7.evaluations_used == 360);  // 6!/2

  const InstanceDescriptor bowl = sample_instance(make_family_spec(Family::quadratic_bowl, 3), rng);
  const SearchResult exact = brute_force(bowl);
  CHECK(exact.evaluations_used == 1);
  CHECK(exact.best.values == bowl.alpha);
}

TEST_CASE("no searcher exceeds its budget") {
  SeededRng rng(113);
  const InstanceDescriptor cont_desc = sample_instance(make_family_spec(Family::shifted_rastrigin, 2), rng);
  const InstanceDescriptor tsp_desc = sample_instance(make_family_spec(Family::tsp, 6), rng);
  TemperatureSchedule schedule{ScheduleKind::constant, 0.5, 1.0, 0.0, 1};

  for (long long budget : {1LL, 7LL, 64LL, 333LL}) {
    SearchBudget b{budget, 0.0, std::nullopt};
    CHECK(random_search(cont_desc, b, rng).evaluations_used <= budget);
    CHECK(hill_climb(cont_desc, random_solution(cont_desc, rng), b, rng).evaluations_used <= budget);
    CHECK(hill_climb(tsp_desc, random_solution(tsp_desc, rng), b, rng).evaluations_used <= budget);
    CHECK(simulated_annealing(cont_desc, random_solution(cont_desc, rng), b, schedule, rng)
              .evaluations_used <= budget);
    CHECK(particle_swarm_direct(cont_desc, b, 5, rng).evaluations_used <= budget);
  }
}

TEST_CASE("search results persist as JSON and curve CSV") {
  SeededRng rng(115);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::quadratic_bowl, 2), rng);
  const SearchResult result = random_search(desc, SearchBudget{40, 0.0, std::nullopt}, rng);

  const auto json_path = std::filesystem::temp_directory_path() / "bliss_search_result.json";
  save_search_result(result, json_path);
  const nlohmann::json j = nlohmann::json::parse(std::ifstream(json_path));
  CHECK(j["best_utility"].get<double>() == result.best_utility);
  CHECK(j["evaluations_used"].get<long long>() == result.evaluations_used);
  CHECK(j["curve"].size() == result.curve.size());

  const auto csv_path = std::filesystem::temp_directory_path() / "bliss_search_curve.csv";
  save_curve_csv(result, csv_path);
  std::ifstream in(csv_path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "evaluations,best_utility");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == result.curve.size());

  std::filesystem::remove(json_path);
  std::filesystem::remove(csv_path);
}

TEST_CASE("searchers reproduce bit-identically under equal seeds") {
  SeededRng spec_rng(114);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::shifted_rastrigin, 3), spec_rng);
  const CandidateSolution start = random_solution(desc, spec_rng);
  TemperatureSchedule schedule{ScheduleKind::exponential, 1.0, 0.99, 0.0, 1};
  SearchBudget budget{400, 0.0, std::nullopt};

  SeededRng a(42), b(42);
  const SearchResult ra = simulated_annealing(desc, start, budget, schedule, a);
  const SearchResult rb = simulated_annealing(desc, start, budget, schedule, b);
  CHECK(ra.best.values == rb.best.values);
  CHECK(ra.best_utility == rb.best_utility);
  CHECK(ra.accepted_moves == rb.accepted_moves);
}
