#include "bliss/dense_net.hpp"

#include <cmath>
#include <string>

#include "bliss/errors.hpp"

namespace bliss {

namespace {

void validate_shape(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2) throw InputError("DenseNet needs at least input and output layers");
  for (int s : layer_sizes) {
    if (s <= 0) throw InputError("DenseNet layer widths must be positive");
  }
}

}  // namespace

std::size_t dense_net_param_count(const std::vector<int>& layer_sizes) {
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    count += static_cast<std::size_t>(layer_sizes[l] + 1) * static_cast<std::size_t>(layer_sizes[l + 1]);
  }
  return count;
}

DenseNet make_dense_net(std::vector<int> layer_sizes) {
  validate_shape(layer_sizes);
  DenseNet net;
  net.weights.assign(dense_net_param_count(layer_sizes), 0.0);
  net.layer_sizes = std::move(layer_sizes);
  return net;
}

DenseNet init_dense_net(std::vector<int> layer_sizes, SeededRng& rng) {
  DenseNet net = make_dense_net(std::move(layer_sizes));
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    const int fan_in = net.layer_sizes[l];
    const int fan_out = net.layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const std::size_t block = static_cast<std::size_t>(fan_in + 1) * static_cast<std::size_t>(fan_out);
    for (std::size_t i = 0; i < block; ++i) net.weights[offset + i] = rng.uniform(-bound, bound);
    offset += block;
  }
  return net;
}

std::vector<double> net_forward(const DenseNet& net, std::span<const double> input) {
  if (static_cast<int>(input.size()) != net.input_size()) {
    throw InputError("net_forward: input length " + std::to_string(input.size()) +
                     " does not match net input width " + std::to_string(net.input_size()));
  }
  if (net.weights.size() != dense_net_param_count(net.layer_sizes)) {
    throw InputError("net_forward: weight vector length does not match layer sizes");
  }

  std::vector<double> act(input.begin(), input.end());
  std::vector<double> next;
  const std::size_t last = net.layer_sizes.size() - 1;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < last; ++l) {
    const int in_w = net.layer_sizes[l];
    const int out_w = net.layer_sizes[l + 1];
    const double* w = net.weights.data() + offset;
    const double* b = w + static_cast<std::size_t>(in_w) * out_w;
    next.assign(out_w, 0.0);
    for (int r = 0; r < out_w; ++r) {
      double z = b[r];
      const double* row = w + static_cast<std::size_t>(r) * in_w;
      for (int c = 0; c < in_w; ++c) z += row[c] * act[c];
      next[r] = (l + 1 < last) ? std::tanh(z) : z;
    }
    act.swap(next);
    offset += static_cast<std::size_t>(in_w + 1) * out_w;
  }
  return act;
}

NetGradients net_backward(const DenseNet& net, std::span<const double> input,
                          std::span<const double> output_grad) {
  if (static_cast<int>(input.size()) != net.input_size()) {
    throw InputError("net_backward: input length does not match net input width");
  }
  if (static_cast<int>(output_grad.size()) != net.output_size()) {
    throw InputError("net_backward: output_grad length does not match net output width");
  }

  const std::size_t num_layers = net.layer_sizes.size();
  const std::size_t last = num_layers - 1;

  // Forward pass, keeping every activation.
  std::vector<std::vector<double>> acts(num_layers);
  acts[0].assign(input.begin(), input.end());
  std::size_t offset = 0;
  std::vector<std::size_t> offsets(last);
  for (std::size_t l = 0; l < last; ++l) {
    offsets[l] = offset;
    const int in_w = net.layer_sizes[l];
    const int out_w = net.layer_sizes[l + 1];
    const double* w = net.weights.data() + offset;
    const double* b = w + static_cast<std::size_t>(in_w) * out_w;
    acts[l + 1].assign(out_w, 0.0);
    for (int r = 0; r < out_w; ++r) {
      double z = b[r];
      const double* row = w + static_cast<std::size_t>(r) * in_w;
      for (int c = 0; c < in_w; ++c) z += row[c] * acts[l][c];
      acts[l + 1][r] = (l + 1 < last) ? std::tanh(z) : z;
    }
    offset += static_cast<std::size_t>(in_w + 1) * out_w;
  }

  NetGradients grads;
  grads.param_grad.assign(net.weights.size(), 0.0);

  // delta = dS/dz at the current layer; output layer is linear.
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  std::vector<double> down;
  for (std::size_t l = last; l-- > 0;) {
    const int in_w = net.layer_sizes[l];
    const int out_w = net.layer_sizes[l + 1];
    const double* w = net.weights.data() + offsets[l];
    double* gw = grads.param_grad.data() + offsets[l];
    double* gb = gw + static_cast<std::size_t>(in_w) * out_w;
    down.assign(in_w, 0.0);
    for (int r = 0; r < out_w; ++r) {
      const double d = delta[r];
      const double* row = w + static_cast<std::size_t>(r) * in_w;
      double* grow = gw + static_cast<std::size_t>(r) * in_w;
      for (int c = 0; c < in_w; ++c) {
        grow[c] = d * acts[l][c];
        down[c] += row[c] * d;
      }
      gb[r] = d;
    }
    if (l > 0) {
      // Hidden activations are tanh; tanh'(z) = 1 - a^2.
      delta.assign(in_w, 0.0);
      for (int c = 0; c < in_w; ++c) delta[c] = down[c] * (1.0 - acts[l][c] * acts[l][c]);
    }
  }
  grads.input_grad = std::move(down);
  return grads;
}

namespace {

double scalar_output(const DenseNet& net, std::span<const double> input,
                     std::span<const double> output_grad) {
  const std::vector<double> out = net_forward(net, input);
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * output_grad[i];
  return s;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
  return std::fabs(analytic - numeric) / denom;
}

}  // namespace

double gradient_discrepancy(const DenseNet& net, std::span<const double> input,
                            std::span<const double> output_grad, const NetGradients& analytic) {
  constexpr double step = 1e-5;
  double worst = 0.0;

  DenseNet probe = net;
  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    const double saved = probe.weights[i];
    probe.weights[i] = saved + step;
    const double up = scalar_output(probe, input, output_grad);
    probe.weights[i] = saved - step;
    const double down = scalar_output(probe, input, output_grad);
    probe.weights[i] = saved;
    const double fd = (up - down) / (2.0 * step);
    worst = std::max(worst, relative_error(analytic.param_grad[i], fd));
  }

  std::vector<double> x(input.begin(), input.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = scalar_output(net, x, output_grad);
    x[i] = saved - step;
    const double down = scalar_output(net, x, output_grad);
    x[i] = saved;
    const double fd = (up - down) / (2.0 * step);
    worst = std::max(worst, relative_error(analytic.input_grad[i], fd));
  }
  return worst;
}

bool check_gradient(const DenseNet& net, std::span<const double> input, double tolerance) {
  if (tolerance <= 0.0) throw InputError("check_gradient: tolerance must be positive");
  const std::vector<double> ones(net.output_size(), 1.0);
  const NetGradients analytic = net_backward(net, input, ones);
  return gradient_discrepancy(net, input, ones, analytic) <= tolerance;
}

}  // namespace bliss
