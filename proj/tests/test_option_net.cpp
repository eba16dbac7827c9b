#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "bliss/errors.hpp"
#include "bliss/option_net.hpp"
#include "test_util.hpp"

using namespace bliss;
using namespace bliss_test;

namespace {

double mean_pairwise_distance(const std::vector<std::vector<double>>& points) {
  double total = 0.0;
  long long pairs = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      double sq = 0.0;
      for (std::size_t d = 0; d < points[i].size(); ++d) {
        const double diff = points[i][d] - points[j][d];
        sq += diff * diff;
      }
      total += std::sqrt(sq);
      ++pairs;
    }
  }
  return total / pairs;
}

}  // namespace

TEST_CASE("temperature zero makes sampling deterministic") {
  SeededRng rng(1);
  const FamilySpec spec = make_family_spec(Family::quadratic_bowl, 3);
  const OptionNet onet = make_option_net(spec, {8}, false, rng);
  const InstanceDescriptor desc = sample_instance(spec, rng);

  SeededRng fresh_a(111);
  SeededRng fresh_b(999);
  const CandidateSolution a = sample_option(onet, desc, 0.0, fresh_a);
  const CandidateSolution b = sample_option(onet, desc, 0.0, fresh_b);
  CHECK(a.values == b.values);
}

TEST_CASE("higher temperature spreads samples out") {
  SeededRng rng(2);
  const FamilySpec spec = make_family_spec(Family::quadratic_bowl, 2);
  const OptionNet onet = make_option_net(spec, {8}, false, rng);
  const InstanceDescriptor desc = sample_instance(spec, rng);

  auto draw = [&](double temperature) {
    SeededRng sampler(777);
    std::vector<std::vector<double>> points;
    for (int i = 0; i < 500; ++i) points.push_back(sample_option(onet, desc, temperature, sampler).values);
    return mean_pairwise_distance(points);
  };
  CHECK(draw(2.0) > draw(0.5));
}

TEST_CASE("continuous samples always land in the solution box") {
  SeededRng rng(3);
  const FamilySpec spec = make_family_spec(Family::quadratic_bowl, 4);
  const OptionNet onet = make_option_net(spec, {6}, false, rng);
  const InstanceDescriptor desc = sample_instance(spec, rng);
  for (int i = 0; i < 200; ++i) {
    const CandidateSolution u = sample_option(onet, desc, 5.0, rng);
    for (double v : u.values) {
      CHECK(v >= -5.0);
      CHECK(v <= 5.0);
    }
  }
}

TEST_CASE("decode_continuous clips to the box and is idempotent") {
  const Box box{-5.0, 5.0};
  const CandidateSolution interior = decode_continuous(std::vector<double>{0.2, -0.3}, box);
  CHECK(interior.values == std::vector<double>{0.2, -0.3});

  const CandidateSolution clipped = decode_continuous(std::vector<double>{7.0, -9.0}, box);
  CHECK(clipped.values == std::vector<double>{5.0, -5.0});

  const CandidateSolution twice = decode_continuous(clipped.values, box);
  CHECK(twice.values == clipped.values);
}

TEST_CASE("decode_permutation sorts by score with index tie-breaks") {
  const CandidateSolution u = decode_permutation(std::vector<double>{0.3, 0.1, 0.2}, 3);
  CHECK(u.permutation == std::vector<int>{1, 2, 0});

  const CandidateSolution ties = decode_permutation(std::vector<double>(6, 0.5), 6);
  CHECK(ties.permutation == std::vector<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("decode_permutation handles infinities via the total order") {
  const double inf = std::numeric_limits<double>::infinity();
  const CandidateSolution u = decode_permutation(std::vector<double>{inf, -inf, 0.0, -inf}, 4);
  CHECK(u.permutation == std::vector<int>{1, 3, 2, 0});
}

TEST_CASE("decode_permutation survives NaN scores") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const CandidateSolution u = decode_permutation(std::vector<double>{nan, 0.5, nan, -1.0}, 4);
  CHECK(u.permutation == std::vector<int>{3, 1, 0, 2});  // NaNs last, index order
}

TEST_CASE("random score vectors always decode to valid permutations") {
  SeededRng rng(4);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> scores(6);
    for (double& s : scores) {
      const double magnitude = std::pow(10.0, rng.uniform(-12.0, 12.0));
      s = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * magnitude;
    }
    const CandidateSolution u = decode_permutation(scores, 6);
    std::set<int> seen(u.permutation.begin(), u.permutation.end());
    REQUIRE(seen.size() == 6);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 5);
  }
}

TEST_CASE("best_of_k with k=1 is sample_option plus evaluate") {
  SeededRng rng(5);
  const FamilySpec spec = make_family_spec(Family::shifted_rastrigin, 3);
  const OptionNet onet = make_option_net(spec, {8}, false, rng);
  const InstanceDescriptor desc = sample_instance(spec, rng);

  SeededRng a(1234);
  SeededRng b(1234);
  const ScoredCandidate best = best_of_k(onet, desc, 0.7, 1, a);
  const CandidateSolution single = sample_option(onet, desc, 0.7, b);
  CHECK(best.candidate.values == single.values);
  CHECK(best.utility == evaluate(desc, single));
}

TEST_CASE("best_of_k dominates the first of its own draws") {
  SeededRng rng(6);
  const FamilySpec spec = make_family_spec(Family::shifted_rastrigin, 3);
  const OptionNet onet = make_option_net(spec, {8}, false, rng);
  const InstanceDescriptor desc = sample_instance(spec, rng);
  for (int trial = 0; trial < 50; ++trial) {
    SeededRng a(9000 + trial);
    SeededRng b(9000 + trial);
    const ScoredCandidate best = best_of_k(onet, desc, 1.0, 8, a);
    const double first = evaluate(desc, sample_option(onet, desc, 1.0, b));
    CHECK(best.utility >= first);
  }
}

TEST_CASE("mean best-of-k utility is non-decreasing over k in {1,4,16}") {
  SeededRng rng(7);
  const FamilySpec spec = make_family_spec(Family::shifted_rastrigin, 3);
  const OptionNet onet = make_option_net(spec, {8}, false, rng);

  double mean_k1 = 0.0, mean_k4 = 0.0, mean_k16 = 0.0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    SeededRng inst_rng(50000 + trial);
    const InstanceDescriptor desc = sample_instance(spec, inst_rng);
    // Common stream per trial: the k=1/4 draws are prefixes of the k=16 draws.
    SeededRng r1(60000 + trial), r4(60000 + trial), r16(60000 + trial);
    mean_k1 += best_of_k(onet, desc, 1.0, 1, r1).utility / trials;
    mean_k4 += best_of_k(onet, desc, 1.0, 4, r4).utility / trials;
    mean_k16 += best_of_k(onet, desc, 1.0, 16, r16).utility / trials;
  }
  CHECK(mean_k4 >= mean_k1);
  CHECK(mean_k16 >= mean_k4);
}

TEST_CASE("encode_solution inverts through decode_permutation") {
  SeededRng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    CandidateSolution u;
    u.kind = SolutionKind::permutation;
    u.permutation = rng.permutation(6);
    const std::vector<double> keys = encode_solution(u, 6);
    const CandidateSolution decoded = decode_permutation(keys, 6);
    CHECK(decoded.permutation == u.permutation);
  }
}

TEST_CASE("refine_loop with zero rounds returns the start unchanged") {
  SeededRng rng(9);
  const FamilySpec spec = make_family_spec(Family::quadratic_bowl, 2);
  const OptionNet onet = make_option_net(spec, {6}, true, rng);
  const InstanceDescriptor desc = sample_instance(spec, rng);
  CandidateSolution start;
  start.kind = SolutionKind::continuous;
  start.values = {1.5, -2.5};
  const ScoredCandidate out = refine_loop(onet, desc, start, 1.0, 0, rng);
  CHECK(out.candidate.values == start.values);
  CHECK(out.utility == evaluate(desc, start));
}

TEST_CASE("refine_loop keeps utility monotone across rounds") {
  SeededRng rng(10);
  const FamilySpec spec = make_family_spec(Family::quadratic_bowl, 3);
  const OptionNet onet = make_option_net(spec, {6}, true, rng);
  const InstanceDescriptor desc = sample_instance(spec, rng);
  const CandidateSolution start = random_solution(desc, rng);
  const double start_utility = evaluate(desc, start);

  double prev = start_utility;
  CandidateSolution incumbent = start;
  SeededRng loop_rng(77);
  for (int round = 1; round <= 5; ++round) {
    const ScoredCandidate step = refine_loop(onet, desc, incumbent, 1.0, 1, loop_rng);
    CHECK(step.utility >= prev);
    prev = step.utility;
    incumbent = step.candidate;
  }
  CHECK(prev >= start_utility);
}

TEST_CASE("refinement on tours feeds rank keys back through the net") {
  SeededRng rng(11);
  const FamilySpec spec = make_family_spec(Family::tsp, 5);
  const OptionNet onet = make_option_net(spec, {8}, true, rng);
  const InstanceDescriptor desc = sample_instance(spec, rng);
  const CandidateSolution start = random_solution(desc, rng);
  const ScoredCandidate out = refine_loop(onet, desc, start, 0.5, 4, rng);
  CHECK(out.utility >= evaluate(desc, start));
  std::set<int> seen(out.candidate.permutation.begin(), out.candidate.permutation.end());
  CHECK(seen.size() == 5);
}

TEST_CASE("mode mismatches are input errors") {
  SeededRng rng(12);
  const FamilySpec spec = make_family_spec(Family::quadratic_bowl, 2);
  const OptionNet plain = make_option_net(spec, {4}, false, rng);
  const OptionNet refining = make_option_net(spec, {4}, true, rng);
  const InstanceDescriptor desc = sample_instance(spec, rng);
  CandidateSolution u;
  u.kind = SolutionKind::continuous;
  u.values = {0.0, 0.0};

  CHECK_THROWS_AS(refine(plain, desc, u, 0.5, rng), InputError);
  CHECK_THROWS_AS(sample_option(refining, desc, 0.5, rng), InputError);
}

TEST_CASE("option net JSON round trips with its envelope") {
  SeededRng rng(13);
  const FamilySpec spec = make_family_spec(Family::tsp, 6);
  const OptionNet onet = make_option_net(spec, {10, 10}, true, rng);
  const auto path = std::filesystem::temp_directory_path() / "bliss_onet_roundtrip.json";
  save_option_net(onet, path);
  const OptionNet loaded = load_option_net(path);
  CHECK(loaded.family == onet.family);
  CHECK(loaded.alpha_dim == onet.alpha_dim);
  CHECK(loaded.noise_dim == onet.noise_dim);
  CHECK(loaded.output_dim == onet.output_dim);
  CHECK(loaded.refinement_mode == onet.refinement_mode);
  CHECK(loaded.net.weights == onet.net.weights);
  std::filesystem::remove(path);
}
