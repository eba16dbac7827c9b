#include "bliss/metamodels.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "bliss/errors.hpp"
#include "bliss/model_io.hpp"

namespace bliss {

namespace {

std::vector<double> normalize_input(const ForwardMetamodel& mm, std::span<const double> u,
                                    std::span<const double> alpha) {
  if (static_cast<int>(u.size()) != mm.u_dim || static_cast<int>(alpha.size()) != mm.alpha_dim) {
    throw InputError("metamodel: input dimensions do not match the model");
  }
  std::vector<double> x;
  x.reserve(mm.u_dim + mm.alpha_dim);
  x.insert(x.end(), u.begin(), u.end());
  x.insert(x.end(), alpha.begin(), alpha.end());
  if (mm.input_lo.empty()) return x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double span = mm.input_hi[i] - mm.input_lo[i];
    x[i] = span > 0.0 ? 2.0 * (x[i] - mm.input_lo[i]) / span - 1.0 : 0.0;
  }
  return x;
}

}  // namespace

ForwardMetamodel fit_forward_metamodel(const FamilySpec& spec, int sample_count, int epochs,
                                       SeededRng& rng, const MetamodelFitOptions& options) {
  if (spec.family == Family::tsp) {
    throw UnsupportedError("fit_forward_metamodel: continuous families only");
  }
  if (sample_count < 10 * spec.dimension) {
    throw InputError("fit_forward_metamodel: need at least 10 * dimension samples");
  }
  if (epochs < 1) throw InputError("fit_forward_metamodel: epochs must be >= 1");

  const int d = spec.dimension;
  const int in_dim = 2 * d;

  ForwardMetamodel mm;
  mm.family = spec.family;
  mm.u_dim = d;
  mm.alpha_dim = d;
  mm.training_count = sample_count;
  mm.input_lo.resize(in_dim);
  mm.input_hi.resize(in_dim);
  for (int i = 0; i < d; ++i) {
    mm.input_lo[i] = spec.solution_box.lo;
    mm.input_hi[i] = spec.solution_box.hi;
    mm.input_lo[d + i] = spec.descriptor_bounds.lo;
    mm.input_hi[d + i] = spec.descriptor_bounds.hi;
  }

  // Uniform (u, alpha) -> U triples; the tail of the draw is held out.
  SeededRng data_rng = rng.child(1);
  std::vector<std::vector<double>> inputs(sample_count);
  std::vector<double> targets(sample_count);
  CandidateSolution u;
  u.kind = SolutionKind::continuous;
  u.values.resize(d);
  InstanceDescriptor desc;
  desc.family = spec.family;
  desc.dimension = d;
  desc.alpha.resize(d);
  for (int i = 0; i < sample_count; ++i) {
    for (int j = 0; j < d; ++j) u.values[j] = data_rng.uniform(spec.solution_box.lo, spec.solution_box.hi);
    for (int j = 0; j < d; ++j) {
      desc.alpha[j] = data_rng.uniform(spec.descriptor_bounds.lo, spec.descriptor_bounds.hi);
    }
    targets[i] = evaluate(desc, u);
    inputs[i] = normalize_input(mm, u.values, desc.alpha);
  }

  const int holdout = std::clamp(static_cast<int>(std::lround(options.holdout_fraction * sample_count)),
                                 0, sample_count - 1);
  const int train_count = sample_count - holdout;

  double mean = 0.0;
  for (int i = 0; i < train_count; ++i) mean += targets[i];
  mean /= train_count;
  double var = 0.0;
  for (int i = 0; i < train_count; ++i) var += (targets[i] - mean) * (targets[i] - mean);
  const double scale = std::max(std::sqrt(var / train_count), 1e-12);
  mm.output_mean = mean;
  mm.output_scale = scale;

  std::vector<int> layers;
  layers.push_back(in_dim);
  layers.insert(layers.end(), options.hidden.begin(), options.hidden.end());
  layers.push_back(1);
  SeededRng init_rng = rng.child(2);
  mm.net = init_dense_net(layers, init_rng);

  SeededRng shuffle_rng = rng.child(3);
  const int minibatch = std::min(options.batch_size, train_count);
  std::vector<double> grad_acc(mm.net.weights.size(), 0.0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const std::vector<int> order = shuffle_rng.permutation(train_count);
    for (int start = 0; start < train_count; start += minibatch) {
      const int stop = std::min(start + minibatch, train_count);
      const int b = stop - start;
      std::fill(grad_acc.begin(), grad_acc.end(), 0.0);
      for (int pos = start; pos < stop; ++pos) {
        const int idx = order[pos];
        const double out = net_forward(mm.net, inputs[idx])[0];
        const double err = out - (targets[idx] - mean) / scale;
        const double output_grad[] = {2.0 * err / b};
        const NetGradients grads = net_backward(mm.net, inputs[idx], output_grad);
        for (std::size_t w = 0; w < grad_acc.size(); ++w) grad_acc[w] += grads.param_grad[w];
      }
      for (std::size_t w = 0; w < mm.net.weights.size(); ++w) {
        mm.net.weights[w] -= options.learning_rate * grad_acc[w];
      }
    }
  }

  if (holdout > 0) {
    double sq = 0.0;
    for (int i = train_count; i < sample_count; ++i) {
      const double pred = mean + scale * net_forward(mm.net, inputs[i])[0];
      sq += (pred - targets[i]) * (pred - targets[i]);
    }
    mm.holdout_rmse = std::sqrt(sq / holdout);
  }
  return mm;
}

double metamodel_eval(const ForwardMetamodel& mm, std::span<const double> u, std::span<const double> alpha) {
  const std::vector<double> x = normalize_input(mm, u, alpha);
  return mm.output_mean + mm.output_scale * net_forward(mm.net, x)[0];
}

std::vector<double> metamodel_grad_u(const ForwardMetamodel& mm, std::span<const double> u,
                                     std::span<const double> alpha) {
  const std::vector<double> x = normalize_input(mm, u, alpha);
  const double one[] = {1.0};
  const NetGradients grads = net_backward(mm.net, x, one);
  std::vector<double> g(mm.u_dim, 0.0);
  for (int i = 0; i < mm.u_dim; ++i) {
    double chain = 1.0;
    if (!mm.input_lo.empty()) {
      const double span = mm.input_hi[i] - mm.input_lo[i];
      chain = span > 0.0 ? 2.0 / span : 0.0;
    }
    g[i] = mm.output_scale * grads.input_grad[i] * chain;
  }
  return g;
}

LocalQuadraticModel fit_local_quadratic(const InstanceDescriptor& desc, std::span<const double> center,
                                        double radius, int sample_count, SeededRng& rng) {
  if (desc.family == Family::tsp) throw UnsupportedError("fit_local_quadratic: continuous families only");
  const int d = desc.dimension;
  if (static_cast<int>(center.size()) != d) throw InputError("fit_local_quadratic: center dimension mismatch");
  if (sample_count < 2 * d + 1) throw InputError("fit_local_quadratic: need at least 2d + 1 samples");
  if (radius < 0.0) throw InputError("fit_local_quadratic: radius must be nonnegative");

  const int m = 2 * d + 1;  // constant, d linear, d diagonal quadratic
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);

  CandidateSolution point;
  point.kind = SolutionKind::continuous;
  point.values.resize(d);
  std::vector<double> delta(d);
  Eigen::VectorXd phi(m);
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> ys;
  rows.reserve(sample_count);
  ys.reserve(sample_count);

  for (int s = 0; s < sample_count; ++s) {
    // Uniform in the L2 ball: normal direction, radius ~ rho * U^(1/d).
    double norm_sq = 0.0;
    for (int i = 0; i < d; ++i) {
      delta[i] = rng.normal();
      norm_sq += delta[i] * delta[i];
    }
    const double norm = std::sqrt(norm_sq);
    const double r = radius * std::pow(rng.uniform01(), 1.0 / d);
    const double scale = norm > 0.0 ? r / norm : 0.0;
    for (int i = 0; i < d; ++i) {
      delta[i] *= scale;
      point.values[i] = center[i] + delta[i];
    }
    const double y = evaluate(desc, point);
    phi[0] = 1.0;
    for (int i = 0; i < d; ++i) {
      phi[1 + i] = delta[i];
      phi[1 + d + i] = 0.5 * delta[i] * delta[i];
    }
    normal.noalias() += phi * phi.transpose();
    rhs.noalias() += phi * y;
    rows.push_back(phi);
    ys.push_back(y);
  }

  LocalQuadraticModel model;
  model.center.assign(center.begin(), center.end());
  model.trust_radius = radius;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
  Eigen::VectorXd beta;
  if (lu.rank() < m) {
    model.regularized = true;
    Eigen::MatrixXd ridge = normal + 1e-8 * Eigen::MatrixXd::Identity(m, m);
    beta = ridge.ldlt().solve(rhs);
  } else {
    beta = lu.solve(rhs);
  }

  model.constant = beta[0];
  model.gradient.assign(d, 0.0);
  model.curvature.assign(d, 0.0);
  for (int i = 0; i < d; ++i) {
    model.gradient[i] = beta[1 + i];
    model.curvature[i] = beta[1 + d + i];
  }

  double sq = 0.0;
  for (int s = 0; s < sample_count; ++s) {
    const double pred = rows[s].dot(beta);
    sq += (pred - ys[s]) * (pred - ys[s]);
  }
  model.residual_rms = std::sqrt(sq / sample_count);
  return model;
}

double local_quadratic_eval(const LocalQuadraticModel& model, std::span<const double> delta) {
  if (delta.size() != model.gradient.size()) throw InputError("local_quadratic_eval: dimension mismatch");
  double y = model.constant;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    y += model.gradient[i] * delta[i] + 0.5 * model.curvature[i] * delta[i] * delta[i];
  }
  return y;
}

CandidateSolution surrogate_ascent(const ForwardMetamodel& mm, const InstanceDescriptor& desc,
                                   const CandidateSolution& start, int steps, double step_size) {
  if (desc.family == Family::tsp) throw UnsupportedError("surrogate_ascent: continuous families only");
  if (start.kind != SolutionKind::continuous || static_cast<int>(start.values.size()) != desc.dimension) {
    throw InputError("surrogate_ascent: start does not match the instance");
  }
  const Box box = solution_space(desc).box;
  CandidateSolution u = start;
  for (int s = 0; s < steps; ++s) {
    const std::vector<double> g = metamodel_grad_u(mm, u.values, desc.alpha);
    for (int i = 0; i < desc.dimension; ++i) {
      u.values[i] = std::clamp(u.values[i] + step_size * g[i], box.lo, box.hi);
    }
  }
  return u;
}

nlohmann::json metamodel_to_json(const ForwardMetamodel& mm) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = "forward_metamodel";
  j["family"] = family_name(mm.family);
  j["u_dim"] = mm.u_dim;
  j["alpha_dim"] = mm.alpha_dim;
  j["training_count"] = mm.training_count;
  j["input_lo"] = mm.input_lo;
  j["input_hi"] = mm.input_hi;
  j["output_mean"] = mm.output_mean;
  j["output_scale"] = mm.output_scale;
  j["holdout_rmse"] = mm.holdout_rmse;
  j["model"] = net_to_json(mm.net);
  return j;
}

ForwardMetamodel metamodel_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("kind", "") != "forward_metamodel") {
    throw MalformedFileError("metamodel: missing kind tag");
  }
  if (j.value("format_version", 1) != 1) throw VersionError("metamodel: unsupported format_version");
  ForwardMetamodel mm;
  try {
    mm.family = family_from_name(j.at("family").get<std::string>());
    mm.u_dim = j.at("u_dim").get<int>();
    mm.alpha_dim = j.at("alpha_dim").get<int>();
    mm.training_count = j.value("training_count", 0);
    mm.input_lo = j.value("input_lo", std::vector<double>{});
    mm.input_hi = j.value("input_hi", std::vector<double>{});
    mm.output_mean = j.value("output_mean", 0.0);
    mm.output_scale = j.value("output_scale", 1.0);
    mm.holdout_rmse = j.value("holdout_rmse", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFileError(std::string("metamodel: ") + e.what());
  }
  mm.net = net_from_json(j.at("model"));
  if (mm.net.input_size() != mm.u_dim + mm.alpha_dim || mm.net.output_size() != 1) {
    throw MalformedFileError("metamodel: model shape does not match envelope");
  }
  return mm;
}

void save_metamodel(const ForwardMetamodel& mm, const std::filesystem::path& path) {
  write_json_file(metamodel_to_json(mm), path);
}

ForwardMetamodel load_metamodel(const std::filesystem::path& path) {
  return metamodel_from_json(read_json_file(path));
}

}  // namespace bliss
