#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "bliss/dense_net.hpp"

namespace bliss {

// Model file, format_version 1:
//   {"format_version":1, "layer_sizes":[...], "hidden_activation":"tanh",
//    "weights":[...]}
// Weights are the flat vector in DenseNet layout. The JSON round trip is
// bit-faithful for finite doubles.
nlohmann::json net_to_json(const DenseNet& net);
DenseNet net_from_json(const nlohmann::json& j);

void save_net(const DenseNet& net, const std::filesystem::path& path);
DenseNet load_net(const std::filesystem::path& path);

// Shared file helpers. read_json_file throws MalformedFileError on missing
// files or parse failures; write_json_file writes dump(2) plus newline.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

// Shortest round-trip decimal form of a double (std::to_chars), used for all
// CSV output so artifacts are byte-stable.
std::string format_double(double value);

}  // namespace bliss
