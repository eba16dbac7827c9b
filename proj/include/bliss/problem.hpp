#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bliss/rng.hpp"

namespace bliss {

// Three utility-function families U(u, alpha), all posed as maximization:
//   quadratic_bowl     U = -sum_i (u_i - alpha_i)^2
//   shifted_rastrigin  U = -sum_i ((u_i - alpha_i)^2 - 10 cos(2 pi (u_i - alpha_i)) + 10)
//   tsp                U = -(closed-tour Euclidean length), alpha = 2n city coordinates
enum class Family { quadratic_bowl, shifted_rastrigin, tsp };

enum class SolutionKind { continuous, permutation };

std::string family_name(Family family);
Family family_from_name(const std::string& name);

struct Box {
  double lo = 0.0;
  double hi = 0.0;
};

// One problem instance: the descriptor alpha plus its family tag.
// For tsp, dimension is the city count and alpha holds the 2n coordinates
// flattened as x0,y0,x1,y1,...
struct InstanceDescriptor {
  Family family = Family::quadratic_bowl;
  int dimension = 0;
  std::vector<double> alpha;
};

// A value of u: a real vector for continuous families, a tour for tsp.
struct CandidateSolution {
  SolutionKind kind = SolutionKind::continuous;
  std::vector<double> values;    // continuous, each within the solution box
  std::vector<int> permutation;  // tsp, each index 0..n-1 exactly once
};

struct FamilySpec {
  Family family = Family::quadratic_bowl;
  int dimension = 0;
  Box descriptor_bounds;  // per-component sampling range for alpha
  Box solution_box;       // continuous solution range (unused for tsp)
  bool maximize = true;   // always true; minimization is encoded by negation
};

// Standard bounds: shifts in [-2, 2], solutions in [-5, 5], city
// coordinates in [0, 1].
FamilySpec make_family_spec(Family family, int dimension);

struct SolutionSpace {
  SolutionKind kind = SolutionKind::continuous;
  int dimension = 0;
  Box box;  // meaningful for continuous only
};

InstanceDescriptor sample_instance(const FamilySpec& spec, SeededRng& rng);

double evaluate(const InstanceDescriptor& desc, const CandidateSolution& u);

// Analytic d U / d u for the continuous families; UnsupportedError for tsp.
std::vector<double> utility_gradient(const InstanceDescriptor& desc, const CandidateSolution& u);

// Exact maximizer. Continuous families: u = alpha clipped to the box.
// tsp: exhaustive search over the (n-1)!/2 canonical tours (city 0 first,
// second city < last city), ties resolved to the lexicographically smallest
// permutation; n > 10 raises UnsupportedError.
CandidateSolution oracle_optimum(const InstanceDescriptor& desc);

// Number of tours the exhaustive tsp search enumerates: (n-1)!/2.
long long tsp_enumeration_count(int n);

SolutionSpace solution_space(const InstanceDescriptor& desc);

// Uniform random point of the solution space (used by baselines and tests).
CandidateSolution random_solution(const InstanceDescriptor& desc, SeededRng& rng);

// Instance file (JSON): {"format_version":1,"family":"tsp","dimension":7,
// "alpha":[...]}; a dataset file is an array of such records.
nlohmann::json instance_to_json(const InstanceDescriptor& desc);
InstanceDescriptor instance_from_json(const nlohmann::json& j);
void save_instances(std::span<const InstanceDescriptor> instances, const std::filesystem::path& path);
std::vector<InstanceDescriptor> load_instances(const std::filesystem::path& path);

}  // namespace bliss
