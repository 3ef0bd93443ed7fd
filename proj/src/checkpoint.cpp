#include <bit>
#include <charconv>
#include <cstdio>

#include "json.hpp"
#include "smeta/checkpoint.hpp"
#include "smeta/dataset_io.hpp"
#include "smeta/error.hpp"

namespace smeta {

using nlohmann::json;

namespace {

std::string encode_values(const std::vector<double>& values) {
  std::string out;
  out.reserve(values.size() * 16);
  char buf[17];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
    out.append(buf, 16);
  }
  return out;
}

std::vector<double> decode_values(const std::string& hex, std::size_t expected,
                                  const std::string& where) {
  if (hex.size() != expected * 16) {
    throw Error(ErrorCode::SchemaMismatch, where + ": payload holds " +
                                               std::to_string(hex.size() / 16) + " values, expected " +
                                               std::to_string(expected));
  }
  std::vector<double> out(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint64_t bits = 0;
    const char* first = hex.data() + 16 * i;
    auto [ptr, ec] = std::from_chars(first, first + 16, bits, 16);
    if (ec != std::errc() || ptr != first + 16) {
      throw Error(ErrorCode::ParseError, where + ": bad hex payload");
    }
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

json network_to_json(const ParameterSet& net) {
  json layers = json::array();
  for (const auto& layer : net.layers) {
    layers.push_back({{"name", layer.name},
                      {"input_dim", layer.spec.input_dim},
                      {"output_dim", layer.spec.output_dim},
                      {"activation", to_string(layer.spec.activation)},
                      {"weights", encode_values(layer.weights)},
                      {"biases", encode_values(layer.biases)}});
  }
  return layers;
}

ParameterSet network_from_json(const json& layers, const std::string& net_name) {
  ParameterSet net;
  for (const auto& j : layers) {
    DenseLayer layer;
    layer.name = j.at("name").get<std::string>();
    layer.spec.input_dim = j.at("input_dim").get<std::size_t>();
    layer.spec.output_dim = j.at("output_dim").get<std::size_t>();
    layer.spec.activation = activation_from_string(j.at("activation").get<std::string>());
    const std::string where = net_name + "/" + layer.name;
    layer.weights = decode_values(j.at("weights").get<std::string>(),
                                  layer.spec.input_dim * layer.spec.output_dim, where);
    layer.biases = decode_values(j.at("biases").get<std::string>(), layer.spec.output_dim, where);
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  json doc;
  doc["format"] = "smeta-checkpoint";
  doc["schema_version"] = checkpoint.schema_version;
  doc["variant"] = to_string(checkpoint.bundle.variant);
  json nets = json::object();
  for (NetworkId id : kAllNetworks) nets[to_string(id)] = network_to_json(checkpoint.bundle.net(id));
  doc["networks"] = nets;
  doc["metadata"] = {{"seed", checkpoint.metadata.seed},
                     {"epoch", checkpoint.metadata.epoch},
                     {"stage", checkpoint.metadata.stage},
                     {"config", checkpoint.metadata.config}};
  return doc.dump(1) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (doc.value("format", std::string()) != "smeta-checkpoint") {
      throw Error(ErrorCode::SchemaMismatch, "not an smeta checkpoint");
    }
    const int version = doc.at("schema_version").get<int>();
    if (version != kCheckpointSchemaVersion) {
      throw Error(ErrorCode::SchemaMismatch, "checkpoint schema " + std::to_string(version) +
                                                 ", this build reads " +
                                                 std::to_string(kCheckpointSchemaVersion));
    }
    Checkpoint cp;
    cp.schema_version = version;
    cp.bundle.variant = model_variant_from_string(doc.at("variant").get<std::string>());
    const json& nets = doc.at("networks");
    for (NetworkId id : kAllNetworks) {
      cp.bundle.net(id) = network_from_json(nets.at(to_string(id)), to_string(id));
    }
    cp.bundle.validate();
    const json& meta = doc.at("metadata");
    cp.metadata.seed = meta.at("seed").get<std::uint64_t>();
    cp.metadata.epoch = meta.at("epoch").get<std::size_t>();
    cp.metadata.stage = meta.at("stage").get<std::string>();
    cp.metadata.config = meta.at("config").get<std::map<std::string, std::string>>();
    return cp;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_text_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_text_file(path));
}

}  // namespace smeta
