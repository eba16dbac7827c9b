#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bliss/rng.hpp"

namespace bliss {

// Fixed-shape MLP: tanh hidden layers, linear output. All parameters live in
// one flat vector so population-style optimizers can treat a whole network as
// a single point in weight space.
//
// Flat layout, layer by layer: the out_width x in_width weight matrix in
// row-major order (row r holds the incoming weights of output unit r),
// followed by the out_width biases. Total length is
// sum over layers of (fan_in + 1) * fan_out.
struct DenseNet {
  std::vector<int> layer_sizes;  // input, hidden..., output widths; length >= 2
  std::vector<double> weights;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
};

std::size_t dense_net_param_count(const std::vector<int>& layer_sizes);

// All-zero weights.
DenseNet make_dense_net(std::vector<int> layer_sizes);

// Per-layer uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases included.
DenseNet init_dense_net(std::vector<int> layer_sizes, SeededRng& rng);

std::vector<double> net_forward(const DenseNet& net, std::span<const double> input);

struct NetGradients {
  std::vector<double> param_grad;  // same layout as DenseNet::weights
  std::vector<double> input_grad;
};

// Exact gradients of <output, output_grad> with respect to weights and input.
NetGradients net_backward(const DenseNet& net, std::span<const double> input,
                          std::span<const double> output_grad);

// Max relative discrepancy of `analytic` against central finite differences
// of <output, output_grad> (step 1e-5, denominator max(1, |a|, |fd|)),
// taken over all weight and input components.
double gradient_discrepancy(const DenseNet& net, std::span<const double> input,
                            std::span<const double> output_grad, const NetGradients& analytic);

// True iff net_backward agrees with finite differences within `tolerance`,
// using an all-ones output gradient.
bool check_gradient(const DenseNet& net, std::span<const double> input, double tolerance);

}  // namespace bliss
