#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "bliss/errors.hpp"
#include "bliss/problem.hpp"
#include "test_util.hpp"

using namespace bliss;
using namespace bliss_test;

namespace {

InstanceDescriptor bowl(std::vector<double> alpha) {
  InstanceDescriptor desc;
  desc.family = Family::quadratic_bowl;
  desc.dimension = static_cast<int>(alpha.size());
  desc.alpha = std::move(alpha);
  return desc;
}

InstanceDescriptor rastrigin(std::vector<double> alpha) {
  InstanceDescriptor desc;
  desc.family = Family::shifted_rastrigin;
  desc.dimension = static_cast<int>(alpha.size());
  desc.alpha = std::move(alpha);
  return desc;
}

// Unit-square corners in corner order.
InstanceDescriptor square_tsp() {
  InstanceDescriptor desc;
  desc.family = Family::tsp;
  desc.dimension = 4;
  desc.alpha = {0, 0, 0, 1, 1, 1, 1, 0};
  return desc;
}

CandidateSolution cont(std::vector<double> values) {
  CandidateSolution u;
  u.kind = SolutionKind::continuous;
  u.values = std::move(values);
  return u;
}

CandidateSolution tour(std::vector<int> perm) {
  CandidateSolution u;
  u.kind = SolutionKind::permutation;
  u.permutation = std::move(perm);
  return u;
}

}  // namespace

TEST_CASE("quadratic bowl utility is the negated squared distance") {
  const InstanceDescriptor desc = bowl({0.5, -1.0});
  CHECK(evaluate(desc, cont({0.5, -1.0})) == 0.0);
  CHECK(evaluate(desc, cont({3.5, 3.0})) == doctest::Approx(-25.0));
}

TEST_CASE("shifted rastrigin vanishes at the shift and is -1 one unit away") {
  const InstanceDescriptor desc = rastrigin({0.3, -0.7, 1.1});
  CHECK(evaluate(desc, cont({0.3, -0.7, 1.1})) == doctest::Approx(0.0));
  // u - alpha = (1, 0, 0): the term is 1 - 10 cos(2 pi) + 10 = 1.
  CHECK(evaluate(desc, cont({1.3, -0.7, 1.1})) == doctest::Approx(-1.0));
}

TEST_CASE("square tsp corner tour has utility -4") {
  CHECK(evaluate(square_tsp(), tour({0, 1, 2, 3})) == doctest::Approx(-4.0));
}

TEST_CASE("evaluate rejects mismatched solutions") {
  CHECK_THROWS_AS(evaluate(bowl({0.0, 0.0}), cont({1.0})), InputError);
  CHECK_THROWS_AS(evaluate(bowl({0.0}), tour({0})), InputError);
  CHECK_THROWS_AS(evaluate(square_tsp(), cont({0, 0, 0, 0})), InputError);
}

TEST_CASE("sample_instance respects bounds and is deterministic") {
  SeededRng rng_a(99);
  SeededRng rng_b(99);
  const FamilySpec bowl_spec = make_family_spec(Family::quadratic_bowl, 2);
  const InstanceDescriptor a = sample_instance(bowl_spec, rng_a);
  const InstanceDescriptor b = sample_instance(bowl_spec, rng_b);
  REQUIRE(a.alpha.size() == 2);
  for (double v : a.alpha) {
    CHECK(v >= -2.0);
    CHECK(v <= 2.0);
  }
  CHECK(a.alpha == b.alpha);

  SeededRng rng_c(7);
  const InstanceDescriptor c = sample_instance(make_family_spec(Family::tsp, 7), rng_c);
  REQUIRE(c.alpha.size() == 14);
  for (double v : c.alpha) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("continuous oracle returns alpha") {
  const CandidateSolution best = oracle_optimum(bowl({1.0, -1.0}));
  CHECK(best.values == std::vector<double>{1.0, -1.0});
}

TEST_CASE("tsp n=3 oracle is the lexicographically smallest tour") {
  InstanceDescriptor desc;
  desc.family = Family::tsp;
  desc.dimension = 3;
  desc.alpha = {0.1, 0.2, 0.8, 0.9, 0.4, 0.1};
  const CandidateSolution best = oracle_optimum(desc);
  CHECK(best.permutation == std::vector<int>{0, 1, 2});
}

TEST_CASE("tsp oracle tours admit no improving 2-opt move") {
  SeededRng rng(555);
  const FamilySpec spec = make_family_spec(Family::tsp, 7);
  for (int trial = 0; trial < 5; ++trial) {
    const InstanceDescriptor desc = sample_instance(spec, rng);
    const CandidateSolution best = oracle_optimum(desc);
    CHECK_FALSE(has_improving_two_opt(desc, best));
  }
}

TEST_CASE("tsp oracle beats random tours") {
  // Ties carry 1e-9 slack: a tour congruent to the optimum sums the same
  // edges in a different order and can differ by rounding noise.
  SeededRng rng(556);
  for (int n = 4; n <= 8; ++n) {
    const FamilySpec spec = make_family_spec(Family::tsp, n);
    const InstanceDescriptor desc = sample_instance(spec, rng);
    const CandidateSolution best = oracle_optimum(desc);
    const double best_utility = evaluate(desc, best);
    for (int r = 0; r < 200; ++r) {
      const CandidateSolution u = random_solution(desc, rng);
      CHECK(best_utility >= evaluate(desc, u) - 1e-9);
    }
  }
}

TEST_CASE("oracle rejects tsp instances above the enumeration cap") {
  SeededRng rng(557);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::tsp, 11), rng);
  CHECK_THROWS_AS(oracle_optimum(desc), UnsupportedError);
}

TEST_CASE("continuous oracle dominates random candidates") {
  SeededRng rng(558);
  for (Family family : {Family::quadratic_bowl, Family::shifted_rastrigin}) {
    const FamilySpec spec = make_family_spec(family, 3);
    const InstanceDescriptor desc = sample_instance(spec, rng);
    const double best_utility = evaluate(desc, oracle_optimum(desc));
    for (int r = 0; r < 500; ++r) {
      CHECK(best_utility >= evaluate(desc, random_solution(desc, rng)));
    }
  }
}

TEST_CASE("continuous utilities are translation coherent") {
  SeededRng rng(559);
  for (Family family : {Family::quadratic_bowl, Family::shifted_rastrigin}) {
    const FamilySpec spec = make_family_spec(family, 4);
    for (int trial = 0; trial < 20; ++trial) {
      InstanceDescriptor desc = sample_instance(spec, rng);
      CandidateSolution u = random_solution(desc, rng);
      const double delta = rng.uniform(-0.5, 0.5);
      InstanceDescriptor shifted = desc;
      CandidateSolution moved = u;
      for (int i = 0; i < 4; ++i) {
        shifted.alpha[i] += delta;
        moved.values[i] += delta;
      }
      CHECK(evaluate(desc, u) == doctest::Approx(evaluate(shifted, moved)).epsilon(1e-9));
    }
  }
}

TEST_CASE("tour utility is invariant under rotation and reversal") {
  SeededRng rng(560);
  const InstanceDescriptor desc = sample_instance(make_family_spec(Family::tsp, 6), rng);
  const CandidateSolution base = tour({2, 0, 5, 1, 4, 3});
  const double utility = evaluate(desc, base);

  CandidateSolution rotated = base;
  std::rotate(rotated.permutation.begin(), rotated.permutation.begin() + 2, rotated.permutation.end());
  CHECK(evaluate(desc, rotated) == doctest::Approx(utility).epsilon(1e-12));

  CandidateSolution reversed = base;
  std::reverse(reversed.permutation.begin(), reversed.permutation.end());
  CHECK(evaluate(desc, reversed) == doctest::Approx(utility).epsilon(1e-12));
}

TEST_CASE("solution_space reports the decode metadata") {
  const SolutionSpace bowl_space = solution_space(bowl({0, 0, 0, 0, 0}));
  CHECK(bowl_space.kind == SolutionKind::continuous);
  CHECK(bowl_space.dimension == 5);
  CHECK(bowl_space.box.lo == -5.0);
  CHECK(bowl_space.box.hi == 5.0);

  SeededRng rng(3);
  const InstanceDescriptor tsp_desc = sample_instance(make_family_spec(Family::tsp, 7), rng);
  const SolutionSpace tsp_space = solution_space(tsp_desc);
  CHECK(tsp_space.kind == SolutionKind::permutation);
  CHECK(tsp_space.dimension == 7);
}

TEST_CASE("utility_gradient matches finite differences of evaluate") {
  SeededRng rng(561);
  for (Family family : {Family::quadratic_bowl, Family::shifted_rastrigin}) {
    const FamilySpec spec = make_family_spec(family, 3);
    const InstanceDescriptor desc = sample_instance(spec, rng);
    CandidateSolution u = random_solution(desc, rng);
    const std::vector<double> grad = utility_gradient(desc, u);
    for (int i = 0; i < 3; ++i) {
      const double h = 1e-6;
      CandidateSolution up = u, down = u;
      up.values[i] += h;
      down.values[i] -= h;
      const double fd = (evaluate(desc, up) - evaluate(desc, down)) / (2 * h);
      CHECK(rel_err(grad[i], fd) < 1e-4);
    }
  }
  CHECK_THROWS_AS(utility_gradient(square_tsp(), tour({0, 1, 2, 3})), UnsupportedError);
}

TEST_CASE("instance files round trip") {
  SeededRng rng(562);
  std::vector<InstanceDescriptor> instances;
  instances.push_back(sample_instance(make_family_spec(Family::tsp, 5), rng));
  instances.push_back(sample_instance(make_family_spec(Family::tsp, 5), rng));
  const auto path = std::filesystem::temp_directory_path() / "bliss_instances_test.json";
  save_instances(instances, path);
  const std::vector<InstanceDescriptor> loaded = load_instances(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].alpha == instances[0].alpha);
  CHECK(loaded[1].alpha == instances[1].alpha);
  std::filesystem::remove(path);
}
