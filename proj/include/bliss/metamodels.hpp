#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "bliss/dense_net.hpp"
#include "bliss/problem.hpp"
#include "bliss/rng.hpp"

namespace bliss {

// Learned approximator of U over the whole (u, alpha) space, continuous
// families only. The net consumes concat(u, alpha) rescaled by the stored
// input ranges and predicts a standardized utility; empty ranges and the
// default mean/scale make the transform the identity, so a hand-built
// metamodel is exactly one net_forward call.
struct ForwardMetamodel {
  DenseNet net;
  Family family = Family::quadratic_bowl;
  int u_dim = 0;
  int alpha_dim = 0;
  int training_count = 0;
  std::vector<double> input_lo;  // per-input normalization, empty = identity
  std::vector<double> input_hi;
  double output_mean = 0.0;
  double output_scale = 1.0;
  double holdout_rmse = 0.0;
};

struct MetamodelFitOptions {
  std::vector<int> hidden = {16, 16};
  double learning_rate = 0.02;
  int batch_size = 8;
  double holdout_fraction = 0.1;
};

// Regression on sample_count uniform (u, alpha) -> U triples by mini-batch
// SGD; the last holdout_fraction of samples is held out and its RMSE (in
// utility units) stored on the model.
ForwardMetamodel fit_forward_metamodel(const FamilySpec& spec, int sample_count, int epochs,
                                       SeededRng& rng, const MetamodelFitOptions& options = {});

double metamodel_eval(const ForwardMetamodel& mm, std::span<const double> u, std::span<const double> alpha);

// d metamodel_eval / d u, via the net's input gradient and the chain rule
// through the input scaling.
std::vector<double> metamodel_grad_u(const ForwardMetamodel& mm, std::span<const double> u,
                                     std::span<const double> alpha);

// Diagonal quadratic model of U around a center point:
//   U(center + delta) ~ constant + gradient . delta + 1/2 sum curvature_i delta_i^2
struct LocalQuadraticModel {
  std::vector<double> center;
  double constant = 0.0;
  std::vector<double> gradient;
  std::vector<double> curvature;
  double trust_radius = 0.0;
  bool regularized = false;  // ridge fallback was needed (singular normal equations)
  double residual_rms = 0.0;
};

// Least-squares fit over sample_count points drawn uniformly from the radius
// ball around center, solved by the normal equations; a rank-deficient
// system falls back to ridge 1e-8 and sets the regularized flag.
LocalQuadraticModel fit_local_quadratic(const InstanceDescriptor& desc, std::span<const double> center,
                                        double radius, int sample_count, SeededRng& rng);

double local_quadratic_eval(const LocalQuadraticModel& model, std::span<const double> delta);

// Gradient ascent on the metamodel prediction, clipped to the solution box
// each step. The true U of the returned point is the caller's business.
CandidateSolution surrogate_ascent(const ForwardMetamodel& mm, const InstanceDescriptor& desc,
                                   const CandidateSolution& start, int steps, double step_size);

nlohmann::json metamodel_to_json(const ForwardMetamodel& mm);
ForwardMetamodel metamodel_from_json(const nlohmann::json& j);
void save_metamodel(const ForwardMetamodel& mm, const std::filesystem::path& path);
ForwardMetamodel load_metamodel(const std::filesystem::path& path);

}  // namespace bliss
