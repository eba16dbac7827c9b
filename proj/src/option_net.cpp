#include "bliss/option_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bliss/errors.hpp"
#include "bliss/model_io.hpp"

namespace bliss {

namespace {

void require_instance_match(const OptionNet& onet, const InstanceDescriptor& desc) {
  if (onet.family != desc.family) throw InputError("option net family does not match instance");
  const int alpha_len = static_cast<int>(desc.alpha.size());
  if (alpha_len != onet.alpha_dim) throw InputError("option net alpha_dim does not match instance");
  const SolutionSpace space = solution_space(desc);
  if (space.dimension != onet.output_dim) throw InputError("option net output_dim does not match instance");
}

CandidateSolution decode_for(const InstanceDescriptor& desc, std::span<const double> raw) {
  const SolutionSpace space = solution_space(desc);
  if (space.kind == SolutionKind::continuous) return decode_continuous(raw, space.box);
  return decode_permutation(raw, space.dimension);
}

}  // namespace

OptionNet make_option_net(const FamilySpec& spec, const std::vector<int>& hidden,
                          bool refinement_mode, SeededRng& rng) {
  OptionNet onet;
  onet.family = spec.family;
  onet.alpha_dim = (spec.family == Family::tsp) ? 2 * spec.dimension : spec.dimension;
  onet.output_dim = spec.dimension;
  onet.noise_dim = onet.output_dim;
  onet.refinement_mode = refinement_mode;

  std::vector<int> layers;
  layers.push_back(onet.alpha_dim + onet.noise_dim + (refinement_mode ? onet.output_dim : 0));
  layers.insert(layers.end(), hidden.begin(), hidden.end());
  layers.push_back(onet.output_dim);
  onet.net = init_dense_net(std::move(layers), rng);
  return onet;
}

CandidateSolution decode_continuous(std::span<const double> raw, Box box) {
  CandidateSolution u;
  u.kind = SolutionKind::continuous;
  u.values.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) u.values[i] = std::clamp(raw[i], box.lo, box.hi);
  return u;
}

CandidateSolution decode_permutation(std::span<const double> scores, int n) {
  if (static_cast<int>(scores.size()) != n) throw InputError("decode_permutation: score length != n");
  CandidateSolution u;
  u.kind = SolutionKind::permutation;
  u.permutation.resize(n);
  std::iota(u.permutation.begin(), u.permutation.end(), 0);
  // Total order: by score, NaN after every number, ties by index (stable).
  std::stable_sort(u.permutation.begin(), u.permutation.end(), [&scores](int a, int b) {
    const bool nan_a = std::isnan(scores[a]);
    const bool nan_b = std::isnan(scores[b]);
    if (nan_a || nan_b) return nan_b && !nan_a;
    return scores[a] < scores[b];
  });
  return u;
}

std::vector<double> encode_solution(const CandidateSolution& u, int dimension) {
  if (u.kind == SolutionKind::continuous) {
    if (static_cast<int>(u.values.size()) != dimension) {
      throw InputError("encode_solution: value length does not match dimension");
    }
    return u.values;
  }
  if (static_cast<int>(u.permutation.size()) != dimension) {
    throw InputError("encode_solution: permutation length does not match dimension");
  }
  std::vector<double> keys(dimension, 0.0);
  for (int pos = 0; pos < dimension; ++pos) {
    keys[u.permutation[pos]] = static_cast<double>(pos) / static_cast<double>(dimension);
  }
  return keys;
}

CandidateSolution sample_option(const OptionNet& onet, const InstanceDescriptor& desc, double temperature,
                                SeededRng& rng) {
  if (onet.refinement_mode) {
    throw InputError("sample_option: refinement-mode net needs a previous solution; use refine()");
  }
  if (temperature < 0.0) throw InputError("sample_option: temperature must be nonnegative");
  require_instance_match(onet, desc);

  std::vector<double> input;
  input.reserve(onet.alpha_dim + onet.noise_dim);
  input.insert(input.end(), desc.alpha.begin(), desc.alpha.end());
  for (int i = 0; i < onet.noise_dim; ++i) input.push_back(temperature * rng.normal());
  const std::vector<double> raw = net_forward(onet.net, input);
  return decode_for(desc, raw);
}

ScoredCandidate best_of_k(const OptionNet& onet, const InstanceDescriptor& desc, double temperature, int k,
                          SeededRng& rng) {
  if (k < 1) throw InputError("best_of_k: k must be >= 1");
  ScoredCandidate best;
  for (int i = 0; i < k; ++i) {
    CandidateSolution cand = sample_option(onet, desc, temperature, rng);
    const double utility = evaluate(desc, cand);
    if (i == 0 || utility > best.utility) {
      best.candidate = std::move(cand);
      best.utility = utility;
    }
  }
  return best;
}

CandidateSolution refine(const OptionNet& onet, const InstanceDescriptor& desc, const CandidateSolution& u_prev,
                         double temperature, SeededRng& rng) {
  if (!onet.refinement_mode) throw InputError("refine: net was not built in refinement mode");
  if (temperature < 0.0) throw InputError("refine: temperature must be nonnegative");
  require_instance_match(onet, desc);

  std::vector<double> input;
  input.reserve(onet.alpha_dim + onet.output_dim + onet.noise_dim);
  input.insert(input.end(), desc.alpha.begin(), desc.alpha.end());
  const std::vector<double> prev = encode_solution(u_prev, onet.output_dim);
  input.insert(input.end(), prev.begin(), prev.end());
  for (int i = 0; i < onet.noise_dim; ++i) input.push_back(temperature * rng.normal());
  const std::vector<double> raw = net_forward(onet.net, input);
  return decode_for(desc, raw);
}

ScoredCandidate refine_loop(const OptionNet& onet, const InstanceDescriptor& desc,
                            const CandidateSolution& u_start, double temperature, int rounds, SeededRng& rng) {
  ScoredCandidate incumbent{u_start, evaluate(desc, u_start)};
  for (int r = 0; r < rounds; ++r) {
    CandidateSolution proposal = refine(onet, desc, incumbent.candidate, temperature, rng);
    const double utility = evaluate(desc, proposal);
    if (utility > incumbent.utility) {
      incumbent.candidate = std::move(proposal);
      incumbent.utility = utility;
    }
  }
  return incumbent;
}

nlohmann::json option_net_to_json(const OptionNet& onet) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = "option_net";
  j["family"] = family_name(onet.family);
  j["alpha_dim"] = onet.alpha_dim;
  j["noise_dim"] = onet.noise_dim;
  j["output_dim"] = onet.output_dim;
  j["refinement_mode"] = onet.refinement_mode;
  j["model"] = net_to_json(onet.net);
  return j;
}

OptionNet option_net_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("kind", "") != "option_net") {
    throw MalformedFileError("option net: missing kind tag");
  }
  if (j.value("format_version", 1) != 1) throw VersionError("option net: unsupported format_version");
  OptionNet onet;
  try {
    onet.family = family_from_name(j.at("family").get<std::string>());
    onet.alpha_dim = j.at("alpha_dim").get<int>();
    onet.noise_dim = j.at("noise_dim").get<int>();
    onet.output_dim = j.at("output_dim").get<int>();
    onet.refinement_mode = j.at("refinement_mode").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFileError(std::string("option net: ") + e.what());
  }
  onet.net = net_from_json(j.at("model"));
  const int expect_in = onet.alpha_dim + onet.noise_dim + (onet.refinement_mode ? onet.output_dim : 0);
  if (onet.net.input_size() != expect_in || onet.net.output_size() != onet.output_dim) {
    throw MalformedFileError("option net: model shape does not match envelope");
  }
  return onet;
}

void save_option_net(const OptionNet& onet, const std::filesystem::path& path) {
  write_json_file(option_net_to_json(onet), path);
}

OptionNet load_option_net(const std::filesystem::path& path) {
  return option_net_from_json(read_json_file(path));
}

}  // namespace bliss
