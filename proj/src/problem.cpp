#include "bliss/problem.hpp"

#include <algorithm>
#include <cmath>

#include "bliss/errors.hpp"
#include "bliss/model_io.hpp"

namespace bliss {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void require_match(const InstanceDescriptor& desc, const CandidateSolution& u) {
  if (desc.family == Family::tsp) {
    if (u.kind != SolutionKind::permutation) {
      throw InputError("evaluate: tsp expects a permutation solution");
    }
    if (static_cast<int>(u.permutation.size()) != desc.dimension) {
      throw InputError("evaluate: tour length does not match city count");
    }
  } else {
    if (u.kind != SolutionKind::continuous) {
      throw InputError("evaluate: continuous family expects a continuous solution");
    }
    if (static_cast<int>(u.values.size()) != desc.dimension) {
      throw InputError("evaluate: solution dimension does not match instance");
    }
  }
}

double tour_length(const InstanceDescriptor& desc, const std::vector<int>& tour) {
  const int n = desc.dimension;
  double total = 0.0;
  for (int t = 0; t < n; ++t) {
    const int a = tour[t];
    const int b = tour[(t + 1) % n];
    const double dx = desc.alpha[2 * a] - desc.alpha[2 * b];
    const double dy = desc.alpha[2 * a + 1] - desc.alpha[2 * b + 1];
    total += std::sqrt(dx * dx + dy * dy);
  }
  return total;
}

}  // namespace

std::string family_name(Family family) {
  switch (family) {
    case Family::quadratic_bowl: return "quadratic_bowl";
    case Family::shifted_rastrigin: return "shifted_rastrigin";
    case Family::tsp: return "tsp";
  }
  throw InputError("unknown family tag");
}

Family family_from_name(const std::string& name) {
  if (name == "quadratic_bowl") return Family::quadratic_bowl;
  if (name == "shifted_rastrigin") return Family::shifted_rastrigin;
  if (name == "tsp") return Family::tsp;
  throw InputError("unknown family name: " + name);
}

FamilySpec make_family_spec(Family family, int dimension) {
  if (dimension <= 0) throw InputError("family dimension must be positive");
  FamilySpec spec;
  spec.family = family;
  spec.dimension = dimension;
  if (family == Family::tsp) {
    spec.descriptor_bounds = {0.0, 1.0};
    spec.solution_box = {0.0, 0.0};
  } else {
    spec.descriptor_bounds = {-2.0, 2.0};
    spec.solution_box = {-5.0, 5.0};
  }
  return spec;
}

InstanceDescriptor sample_instance(const FamilySpec& spec, SeededRng& rng) {
  if (spec.descriptor_bounds.lo > spec.descriptor_bounds.hi) {
    throw InputError("sample_instance: invalid descriptor bounds");
  }
  InstanceDescriptor desc;
  desc.family = spec.family;
  desc.dimension = spec.dimension;
  const int len = (spec.family == Family::tsp) ? 2 * spec.dimension : spec.dimension;
  desc.alpha.resize(len);
  for (int i = 0; i < len; ++i) {
    desc.alpha[i] = rng.uniform(spec.descriptor_bounds.lo, spec.descriptor_bounds.hi);
  }
  return desc;
}

double evaluate(const InstanceDescriptor& desc, const CandidateSolution& u) {
  require_match(desc, u);
  switch (desc.family) {
    case Family::quadratic_bowl: {
      double s = 0.0;
      for (int i = 0; i < desc.dimension; ++i) {
        const double d = u.values[i] - desc.alpha[i];
        s += d * d;
      }
      return -s;
    }
    case Family::shifted_rastrigin: {
      double s = 0.0;
      for (int i = 0; i < desc.dimension; ++i) {
        const double d = u.values[i] - desc.alpha[i];
        s += d * d - 10.0 * std::cos(kTwoPi * d) + 10.0;
      }
      return -s;
    }
    case Family::tsp:
      return -tour_length(desc, u.permutation);
  }
  throw InputError("evaluate: unknown family");
}

std::vector<double> utility_gradient(const InstanceDescriptor& desc, const CandidateSolution& u) {
  require_match(desc, u);
  if (desc.family == Family::tsp) {
    throw UnsupportedError("utility_gradient: tsp utility is not differentiable in u");
  }
  std::vector<double> g(desc.dimension, 0.0);
  for (int i = 0; i < desc.dimension; ++i) {
    const double d = u.values[i] - desc.alpha[i];
    if (desc.family == Family::quadratic_bowl) {
      g[i] = -2.0 * d;
    } else {
      g[i] = -(2.0 * d + 10.0 * kTwoPi * std::sin(kTwoPi * d));
    }
  }
  return g;
}

long long tsp_enumeration_count(int n) {
  if (n < 3) return 1;
  long long count = 1;
  for (int i = 2; i < n; ++i) count *= i;  // (n-1)!
  return count / 2;
}

CandidateSolution oracle_optimum(const InstanceDescriptor& desc) {
  if (desc.family != Family::tsp) {
    const FamilySpec spec = make_family_spec(desc.family, desc.dimension);
    CandidateSolution best;
    best.kind = SolutionKind::continuous;
    best.values.resize(desc.dimension);
    for (int i = 0; i < desc.dimension; ++i) {
      best.values[i] = std::clamp(desc.alpha[i], spec.solution_box.lo, spec.solution_box.hi);
    }
    return best;
  }

  const int n = desc.dimension;
  if (n > 10) throw UnsupportedError("oracle_optimum: tsp exhaustive search capped at n <= 10");
  if (static_cast<int>(desc.alpha.size()) != 2 * n) {
    throw InputError("oracle_optimum: tsp alpha must hold 2n coordinates");
  }

  CandidateSolution best;
  best.kind = SolutionKind::permutation;
  best.permutation.resize(n);
  for (int i = 0; i < n; ++i) best.permutation[i] = i;
  if (n < 3) return best;

  // Canonical tours: city 0 fixed first and tour[1] < tour[n-1], which picks
  // the lexicographically smallest representative of each rotation/reversal
  // class. Lexicographic enumeration with strict improvement keeps the
  // lexicographically smallest optimum.
  std::vector<int> rest(n - 1);
  for (int i = 0; i < n - 1; ++i) rest[i] = i + 1;
  std::vector<int> tour(n);
  tour[0] = 0;
  double best_len = tour_length(desc, best.permutation);
  do {
    if (rest.front() > rest.back()) continue;
    std::copy(rest.begin(), rest.end(), tour.begin() + 1);
    const double len = tour_length(desc, tour);
    if (len < best_len) {
      best_len = len;
      best.permutation = tour;
    }
  } while (std::next_permutation(rest.begin(), rest.end()));
  return best;
}

SolutionSpace solution_space(const InstanceDescriptor& desc) {
  SolutionSpace space;
  space.dimension = desc.dimension;
  if (desc.family == Family::tsp) {
    space.kind = SolutionKind::permutation;
    space.box = {0.0, 0.0};
  } else {
    space.kind = SolutionKind::continuous;
    space.box = make_family_spec(desc.family, desc.dimension).solution_box;
  }
  return space;
}

CandidateSolution random_solution(const InstanceDescriptor& desc, SeededRng& rng) {
  const SolutionSpace space = solution_space(desc);
  CandidateSolution u;
  u.kind = space.kind;
  if (space.kind == SolutionKind::continuous) {
    u.values.resize(space.dimension);
    for (int i = 0; i < space.dimension; ++i) u.values[i] = rng.uniform(space.box.lo, space.box.hi);
  } else {
    u.permutation = rng.permutation(space.dimension);
  }
  return u;
}

nlohmann::json instance_to_json(const InstanceDescriptor& desc) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["family"] = family_name(desc.family);
  j["dimension"] = desc.dimension;
  j["alpha"] = desc.alpha;
  return j;
}

InstanceDescriptor instance_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family") || !j.contains("dimension") || !j.contains("alpha")) {
    throw MalformedFileError("instance: missing family, dimension or alpha");
  }
  if (j.value("format_version", 1) != 1) {
    throw VersionError("instance: unsupported format_version");
  }
  InstanceDescriptor desc;
  try {
    desc.family = family_from_name(j["family"].get<std::string>());
    desc.dimension = j["dimension"].get<int>();
    desc.alpha = j["alpha"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFileError(std::string("instance: ") + e.what());
  }
  const int expect = (desc.family == Family::tsp) ? 2 * desc.dimension : desc.dimension;
  if (desc.dimension <= 0 || static_cast<int>(desc.alpha.size()) != expect) {
    throw MalformedFileError("instance: alpha length does not match dimension");
  }
  return desc;
}

void save_instances(std::span<const InstanceDescriptor> instances, const std::filesystem::path& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& desc : instances) arr.push_back(instance_to_json(desc));
  write_json_file(arr, path);
}

std::vector<InstanceDescriptor> load_instances(const std::filesystem::path& path) {
  const nlohmann::json arr = read_json_file(path);
  if (!arr.is_array()) throw MalformedFileError("instances: expected a JSON array");
  std::vector<InstanceDescriptor> out;
  out.reserve(arr.size());
  for (const auto& j : arr) out.push_back(instance_from_json(j));
  return out;
}

}  // namespace bliss
