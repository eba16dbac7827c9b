#include "bliss/model_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "bliss/errors.hpp"

namespace bliss {

nlohmann::json net_to_json(const DenseNet& net) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["layer_sizes"] = net.layer_sizes;
  j["hidden_activation"] = "tanh";
  j["weights"] = net.weights;
  return j;
}

DenseNet net_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw MalformedFileError("model: expected a JSON object");
  if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw MalformedFileError("model: missing format_version");
  }
  if (j["format_version"].get<int>() != 1) {
    throw VersionError("model: unsupported format_version " + j["format_version"].dump());
  }
  if (!j.contains("layer_sizes") || !j.contains("weights")) {
    throw MalformedFileError("model: missing layer_sizes or weights");
  }
  if (j.value("hidden_activation", "tanh") != "tanh") {
    throw MalformedFileError("model: unknown hidden_activation");
  }
  DenseNet net;
  try {
    net.layer_sizes = j["layer_sizes"].get<std::vector<int>>();
    net.weights = j["weights"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFileError(std::string("model: ") + e.what());
  }
  if (net.layer_sizes.size() < 2) throw MalformedFileError("model: fewer than two layers");
  if (net.weights.size() != dense_net_param_count(net.layer_sizes)) {
    throw MalformedFileError("model: weight count does not match layer sizes");
  }
  return net;
}

void save_net(const DenseNet& net, const std::filesystem::path& path) {
  write_json_file(net_to_json(net), path);
}

DenseNet load_net(const std::filesystem::path& path) { return net_from_json(read_json_file(path)); }

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MalformedFileError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedFileError(path.string() + ": " + e.what());
  }
}

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace bliss
