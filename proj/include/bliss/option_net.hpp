#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "bliss/dense_net.hpp"
#include "bliss/problem.hpp"
#include "bliss/rng.hpp"

namespace bliss {

// Stochastic generator u(alpha, e, T). The net consumes concat(alpha, e)
// (plus the encoded previous solution in refinement mode) and emits a raw
// vector decoded into the family's solution space. Temperature scales the
// injected noise, e = T * z with z standard normal, so T = 0 is exactly
// deterministic.
struct OptionNet {
  DenseNet net;
  Family family = Family::quadratic_bowl;
  int alpha_dim = 0;
  int noise_dim = 0;
  int output_dim = 0;
  bool refinement_mode = false;
};

struct SampleConfig {
  double temperature = 0.0;
  int k = 1;              // best-of-k
  int refine_rounds = 0;  // extra keep-best refinement rounds
};

// Builds an OptionNet shaped for the family: continuous families map
// alpha_dim = output_dim = d; tsp maps alpha_dim = 2n, output_dim = n scores.
// noise_dim defaults to output_dim. hidden may be empty (single linear layer).
OptionNet make_option_net(const FamilySpec& spec, const std::vector<int>& hidden,
                          bool refinement_mode, SeededRng& rng);

// Componentwise clip of raw into the box.
CandidateSolution decode_continuous(std::span<const double> raw, Box box);

// Random-key decoding: indices sorted by ascending score, ties broken by
// ascending index. +-inf order normally; NaN sorts after every number, so
// the output is a valid permutation for any real input.
CandidateSolution decode_permutation(std::span<const double> scores, int n);

// Net input encoding of an existing solution: continuous values pass
// through; a permutation becomes rank keys, key[city] = position / n.
std::vector<double> encode_solution(const CandidateSolution& u, int dimension);

CandidateSolution sample_option(const OptionNet& onet, const InstanceDescriptor& desc, double temperature,
                                SeededRng& rng);

struct ScoredCandidate {
  CandidateSolution candidate;
  double utility = 0.0;
};

// k independent samples, returns the utility maximizer (ties: earliest draw).
// Consumes exactly k utility evaluations.
ScoredCandidate best_of_k(const OptionNet& onet, const InstanceDescriptor& desc, double temperature, int k,
                          SeededRng& rng);

// One refinement proposal from concat(alpha, encode(u_prev), e). Requires a
// refinement-mode net.
CandidateSolution refine(const OptionNet& onet, const InstanceDescriptor& desc, const CandidateSolution& u_prev,
                         double temperature, SeededRng& rng);

// Keep-best loop over `rounds` refine proposals; utility is monotone across
// rounds by construction. rounds = 0 returns u_start unchanged. Consumes
// rounds + 1 utility evaluations (one for the start).
ScoredCandidate refine_loop(const OptionNet& onet, const InstanceDescriptor& desc,
                            const CandidateSolution& u_start, double temperature, int rounds, SeededRng& rng);

// Option-net file: the core model JSON wrapped in an envelope with
// {"alpha_dim","noise_dim","output_dim","family","refinement_mode"}.
nlohmann::json option_net_to_json(const OptionNet& onet);
OptionNet option_net_from_json(const nlohmann::json& j);
void save_option_net(const OptionNet& onet, const std::filesystem::path& path);
OptionNet load_option_net(const std::filesystem::path& path);

}  // namespace bliss
