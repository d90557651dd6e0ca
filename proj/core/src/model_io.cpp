#include "pcsnn/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "pcsnn/numeric.hpp"

namespace pcsnn {

using json = nlohmann::ordered_json;

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

class BlobWriter {
 public:
  json put(const Tensor& t) {
    if (t.empty()) return nullptr;
    json ref;
    ref["shape"] = t.shape();
    ref["offset"] = bytes_.size();
    ref["bytes"] = t.size() * 4;
    for (float v : t.data()) {
      const auto u = std::bit_cast<std::uint32_t>(v);
      for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<std::uint8_t>(u >> (8 * k)));
    }
    return ref;
  }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

json activation_json(const ActivationSpec& s, BlobWriter& blob) {
  json j;
  j["kind"] = "activation";
  j["variant"] = to_string(s.kind);
  if (s.kind == ActivationKind::QCFS || s.kind == ActivationKind::DAQCFS) j["levels"] = s.levels;
  j["theta"] = blob.put(s.theta);
  j["psi"] = blob.put(s.psi);
  j["psi_da"] = blob.put(s.psi_da);
  j["phi_da"] = blob.put(s.phi_da);
  return j;
}

json layer_json(const Layer& layer, BlobWriter& blob) {
  json j;
  j["name"] = layer.name;
  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, Linear>) {
          j["kind"] = "linear";
          j["weight"] = blob.put(op.weight);
          j["bias"] = blob.put(op.bias);
        } else if constexpr (std::is_same_v<T, Conv2d>) {
          j["kind"] = "conv2d";
          j["stride"] = op.stride;
          j["padding"] = op.padding;
          j["weight"] = blob.put(op.weight);
          j["bias"] = blob.put(op.bias);
        } else if constexpr (std::is_same_v<T, AvgPool2d>) {
          j["kind"] = "avgpool2d";
          j["kernel"] = op.k;
        } else if constexpr (std::is_same_v<T, Flatten>) {
          j["kind"] = "flatten";
        } else if constexpr (std::is_same_v<T, Activation>) {
          const json act = activation_json(op.spec, blob);
          for (const auto& [k, v] : act.items()) j[k] = v;
        } else if constexpr (std::is_same_v<T, SpikingNeuron>) {
          j["kind"] = "spiking_neuron";
          j["steps"] = op.params.steps;
          j["shift"] = blob.put(op.params.shift);
          j["theta_pre"] = blob.put(op.params.theta_pre);
          j["theta_post"] = blob.put(op.params.theta_post);
        } else if constexpr (std::is_same_v<T, ResidualBegin>) {
          j["kind"] = "residual_begin";
          j["id"] = op.id;
        } else if constexpr (std::is_same_v<T, ResidualJoin>) {
          j["kind"] = "residual_join";
          j["id"] = op.id;
        }
      },
      layer.op);
  return j;
}

class BlobReader {
 public:
  explicit BlobReader(std::span<const std::uint8_t> blob) : blob_(blob) {}

  Tensor get(const json& layer, const std::string& layer_name, const char* field, bool required) const {
    const auto it = layer.find(field);
    if (it == layer.end() || it->is_null()) {
      if (required) throw Error("layer '" + layer_name + "': missing tensor '" + field + "'");
      return {};
    }
    const json& ref = *it;
    Shape shape;
    std::uint64_t offset = 0, bytes = 0;
    try {
      shape = ref.at("shape").get<Shape>();
      offset = ref.at("offset").get<std::uint64_t>();
      bytes = ref.at("bytes").get<std::uint64_t>();
    } catch (const json::exception& e) {
      throw Error("layer '" + layer_name + "': bad tensor reference '" + field + "': " + e.what());
    }
    for (auto d : shape) {
      if (d < 0) throw Error("layer '" + layer_name + "': negative dimension in '" + field + "'");
    }
    const auto count = static_cast<std::uint64_t>(numel(shape));
    if (bytes != count * 4) {
      throw Error("layer '" + layer_name + "': tensor '" + field + "' declares shape " + to_string(shape) + " (" +
                  std::to_string(count * 4) + " bytes) but " + std::to_string(bytes) + " bytes");
    }
    if (offset > blob_.size() || bytes > blob_.size() - offset) {
      throw Error("layer '" + layer_name + "': tensor '" + field + "' needs blob bytes [" + std::to_string(offset) +
                  ", " + std::to_string(offset + bytes) + ") but the blob has " + std::to_string(blob_.size()) +
                  " bytes (truncated?)");
    }
    std::vector<float> data(count);
    const std::uint8_t* p = blob_.data() + offset;
    for (std::uint64_t i = 0; i < count; ++i, p += 4) {
      const std::uint32_t u = std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
                              std::uint32_t{p[3]} << 24;
      data[i] = std::bit_cast<float>(u);
    }
    return Tensor(std::move(shape), std::move(data));
  }

 private:
  std::span<const std::uint8_t> blob_;
};

template <class T>
T field(const json& j, const std::string& layer, const char* name) {
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error("layer '" + layer + "': missing or invalid field '" + name + "'");
  }
}

}  // namespace

SerializedModel serialize_model(const LayerGraph& graph, const ConvertedNetwork* snn, const std::string& blob_name) {
  validate(graph);
  BlobWriter blob;
  json layers = json::array();
  for (const auto& layer : graph.layers) layers.push_back(layer_json(layer, blob));

  SerializedModel out;
  out.blob = blob.take();
  json m;
  m["format"] = "pcsnn-model";
  m["version"] = kManifestVersion;
  m["input_shape"] = graph.input_shape;
  if (snn) m["snn"] = {{"steps", snn->steps}, {"case", to_string(snn->conversion_case)}};
  m["blob"] = {{"file", blob_name}, {"bytes", out.blob.size()}, {"fnv1a64", hex64(fnv1a64(out.blob))}};
  m["layers"] = std::move(layers);
  out.manifest = m.dump(2) + "\n";
  return out;
}

ParsedModel parse_model(const std::string& manifest, std::span<const std::uint8_t> blob) {
  json m;
  try {
    m = json::parse(manifest);
  } catch (const json::exception& e) {
    throw Error(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!m.is_object()) throw Error("manifest must be a JSON object");
  if (!m.contains("version") || !m["version"].is_number_integer()) throw Error("manifest has no integer 'version'");
  if (m["version"].get<int>() != kManifestVersion) {
    throw Error("unsupported manifest version " + m["version"].dump() + " (supported: " +
                std::to_string(kManifestVersion) + ")");
  }
  if (!m.contains("layers") || !m["layers"].is_array()) throw Error("manifest has no 'layers' array");

  ParsedModel out;
  out.graph.input_shape = field<Shape>(m, "<manifest>", "input_shape");
  const BlobReader reader(blob);

  for (std::size_t i = 0; i < m["layers"].size(); ++i) {
    const json& j = m["layers"][i];
    const std::string name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>()
                                                                          : "#" + std::to_string(i);
    const auto kind = field<std::string>(j, name, "kind");
    if (kind == "linear") {
      Tensor w = reader.get(j, name, "weight", true);
      Tensor b = reader.get(j, name, "bias", true);
      out.graph.layers.push_back({name, Linear{std::move(w), std::move(b)}});
    } else if (kind == "conv2d") {
      Tensor w = reader.get(j, name, "weight", true);
      Tensor b = reader.get(j, name, "bias", true);
      const int stride = field<int>(j, name, "stride");
      const int padding = field<int>(j, name, "padding");
      out.graph.layers.push_back({name, Conv2d{std::move(w), std::move(b), stride, padding}});
    } else if (kind == "batchnorm") {
      BatchNormStats bn;
      bn.gamma = reader.get(j, name, "gamma", true);
      bn.beta = reader.get(j, name, "beta", true);
      bn.mean = reader.get(j, name, "mean", true);
      bn.var = reader.get(j, name, "var", true);
      bn.eps = j.contains("eps") ? field<float>(j, name, "eps") : 1e-5f;
      if (out.graph.layers.empty()) throw Error("layer '" + name + "': batchnorm must follow a linear or conv layer");
      auto& prev = out.graph.layers.back().op;
      if (auto* lin = std::get_if<Linear>(&prev)) {
        std::tie(lin->weight, lin->bias) = fold_batchnorm(lin->weight, lin->bias, bn);
      } else if (auto* conv = std::get_if<Conv2d>(&prev)) {
        std::tie(conv->weight, conv->bias) = fold_batchnorm(conv->weight, conv->bias, bn);
      } else {
        throw Error("layer '" + name + "': batchnorm must follow a linear or conv layer");
      }
      ++out.folded_batchnorms;
    } else if (kind == "avgpool2d") {
      out.graph.layers.push_back({name, AvgPool2d{field<int>(j, name, "kernel")}});
    } else if (kind == "maxpool2d") {
      throw Error("layer '" + name + "': max-pooling is not supported; replace it with average pooling");
    } else if (kind == "flatten") {
      out.graph.layers.push_back({name, Flatten{}});
    } else if (kind == "activation") {
      ActivationSpec s;
      s.kind = parse_activation_kind(field<std::string>(j, name, "variant"));
      if (s.kind == ActivationKind::QCFS || s.kind == ActivationKind::DAQCFS) s.levels = field<int>(j, name, "levels");
      s.theta = reader.get(j, name, "theta", s.kind != ActivationKind::ReLU);
      s.psi = reader.get(j, name, "psi", s.levels > 0);
      s.psi_da = reader.get(j, name, "psi_da", s.kind == ActivationKind::DAQCFS);
      s.phi_da = reader.get(j, name, "phi_da", s.kind == ActivationKind::DAQCFS);
      out.graph.layers.push_back({name, Activation{std::move(s)}});
    } else if (kind == "spiking_neuron") {
      ParallelNeuronParams p;
      p.steps = field<int>(j, name, "steps");
      p.shift = reader.get(j, name, "shift", true);
      p.theta_pre = reader.get(j, name, "theta_pre", true);
      p.theta_post = reader.get(j, name, "theta_post", true);
      try {
        p.validate();
      } catch (const Error& e) {
        throw Error("layer '" + name + "': " + e.what());
      }
      out.graph.layers.push_back({name, SpikingNeuron{std::move(p)}});
    } else if (kind == "residual_begin") {
      out.graph.layers.push_back({name, ResidualBegin{field<int>(j, name, "id")}});
    } else if (kind == "residual_join") {
      out.graph.layers.push_back({name, ResidualJoin{field<int>(j, name, "id")}});
    } else {
      throw Error("layer '" + name + "': unknown layer kind '" + kind + "'");
    }
  }

  if (m.contains("blob")) {
    const json& b = m["blob"];
    if (b.contains("bytes") && b["bytes"].get<std::uint64_t>() != blob.size()) {
      throw Error("blob has " + std::to_string(blob.size()) + " bytes, manifest declares " + b["bytes"].dump());
    }
    if (b.contains("fnv1a64") && b["fnv1a64"].get<std::string>() != hex64(fnv1a64(blob))) {
      throw Error("blob checksum mismatch: manifest " + b["fnv1a64"].get<std::string>() + ", blob " +
                  hex64(fnv1a64(blob)));
    }
  }

  if (m.contains("snn")) {
    out.steps = field<int>(m["snn"], "<snn>", "steps");
    out.conversion_case = parse_conversion_case(field<std::string>(m["snn"], "<snn>", "case"));
  }
  try {
    validate(out.graph);
  } catch (const Error& e) {
    throw Error(std::string("manifest does not describe a valid network: ") + e.what());
  }
  return out;
}

std::filesystem::path default_blob_path(const std::filesystem::path& manifest) {
  auto p = manifest;
  return p.replace_extension(".bin");
}

namespace {

void write_files(const LayerGraph& graph, const ConvertedNetwork* snn, const std::filesystem::path& manifest,
                 const std::filesystem::path& blob) {
  const auto blob_path = blob.empty() ? default_blob_path(manifest) : blob;
  const auto s = serialize_model(graph, snn, blob_path.filename().string());
  std::ofstream m(manifest, std::ios::binary);
  std::ofstream b(blob_path, std::ios::binary);
  if (!m || !b) throw Error("cannot write model files " + manifest.string() + " / " + blob_path.string());
  m << s.manifest;
  b.write(reinterpret_cast<const char*>(s.blob.data()), static_cast<std::streamsize>(s.blob.size()));
  if (!m || !b) throw Error("failed writing model files " + manifest.string());
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void save_model(const LayerGraph& graph, const std::filesystem::path& manifest, const std::filesystem::path& blob) {
  write_files(graph, nullptr, manifest, blob);
}

void save_converted(const ConvertedNetwork& net, const std::filesystem::path& manifest,
                    const std::filesystem::path& blob) {
  write_files(net.graph, &net, manifest, blob);
}

ParsedModel load_model_file(const std::filesystem::path& manifest, const std::filesystem::path& blob) {
  const auto text = read_bytes(manifest);
  const std::string manifest_text(text.begin(), text.end());
  auto blob_path = blob;
  if (blob_path.empty()) {
    try {
      blob_path = manifest.parent_path() / json::parse(manifest_text).at("blob").at("file").get<std::string>();
    } catch (const json::exception&) {
      blob_path = default_blob_path(manifest);
    }
  }
  return parse_model(manifest_text, read_bytes(blob_path));
}

LayerGraph load_model(const std::filesystem::path& manifest, const std::filesystem::path& blob) {
  return load_model_file(manifest, blob).graph;
}

ConvertedNetwork load_converted(const std::filesystem::path& manifest, const std::filesystem::path& blob) {
  auto parsed = load_model_file(manifest, blob);
  if (!parsed.steps) throw Error(manifest.string() + " is not a converted network (no 'snn' section)");
  for (const auto idx : parsed.graph.neuron_layers()) {
    const auto* sn = std::get_if<SpikingNeuron>(&parsed.graph.layers[idx].op);
    if (!sn) throw Error("converted network contains an unconverted activation: " + parsed.graph.layers[idx].name);
    if (sn->params.steps != *parsed.steps) throw Error("layer " + parsed.graph.layers[idx].name + " has a different T");
  }
  return {std::move(parsed.graph), *parsed.steps, *parsed.conversion_case};
}

}  // namespace pcsnn
