#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "pcsnn/model_io.hpp"
#include "pcsnn/numeric.hpp"
#include "pcsnn/runtime.hpp"
#include "pcsnn/synth_model.hpp"
#include "support.hpp"

using namespace pcsnn;
using json = nlohmann::ordered_json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "pcsnn_io_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

LayerGraph resnet() {
  SynthModelConfig cfg;
  cfg.arch = SynthArch::ResNet;
  cfg.depth = 1;
  cfg.width = 3;
  cfg.input_shape = {2, 4, 4};
  cfg.theta_jitter = 0.4f;
  cfg.seed = 5;
  return make_synth_model(cfg);
}

json manifest_of(const SerializedModel& s) { return json::parse(s.manifest); }

SerializedModel with_manifest(SerializedModel s, const json& m) {
  s.manifest = m.dump();
  return s;
}

}  // namespace

TEST_CASE("round trip is bit exact") {
  const LayerGraph g = resnet();
  const auto s = serialize_model(g);
  const auto back = parse_model(s.manifest, s.blob);
  CHECK(back.graph == g);
  CHECK_FALSE(back.steps.has_value());

  const auto m = scratch("rt.json");
  save_model(g, m);
  CHECK(load_model(m) == g);
  CHECK(std::filesystem::exists(scratch("rt.bin")));
}

TEST_CASE("converted networks keep every per-channel vector") {
  const LayerGraph g = resnet();
  const auto net = convert(init_da_params(g, 6), 6, ConversionCase::QcfsDifferent);
  const auto m = scratch("snn.json");
  save_converted(net, m);
  const auto back = load_converted(m);
  CHECK(back == net);
  CHECK_THROWS_AS((void)load_converted(scratch("rt.json")), Error);
}

TEST_CASE("QCFS fields map onto the activation spec") {
  LayerGraph g;
  g.input_shape = {2};
  g.layers.push_back({"fc", Linear{Tensor({2, 2}, 0.5f), Tensor({2})}});
  g.layers.push_back({"q", Activation{ActivationSpec::qcfs(testing::t1({1.5f, 2.0f}), 6, testing::t1({0.1f, 0.2f}))}});
  const auto s = serialize_model(g);
  const auto j = manifest_of(s);
  CHECK(j["layers"][1]["variant"] == "qcfs");
  CHECK(j["layers"][1]["levels"] == 6);
  const auto parsed = parse_model(s.manifest, s.blob);
  const auto& spec = std::get<Activation>(parsed.graph.layers[1].op).spec;
  CHECK(spec.theta == testing::t1({1.5f, 2.0f}));
  CHECK(spec.levels == 6);
  CHECK(spec.psi == testing::t1({0.1f, 0.2f}));
}

TEST_CASE("blob is little-endian float32") {
  LayerGraph g;
  g.input_shape = {1};
  g.layers.push_back({"fc", Linear{Tensor({1, 1}, 1.0f), Tensor({1}, -2.0f)}});
  const auto s = serialize_model(g);
  REQUIRE(s.blob.size() == 8);
  CHECK(std::vector<std::uint8_t>(s.blob.begin(), s.blob.begin() + 4) == std::vector<std::uint8_t>{0, 0, 0x80, 0x3f});
  CHECK(std::vector<std::uint8_t>(s.blob.begin() + 4, s.blob.end()) == std::vector<std::uint8_t>{0, 0, 0, 0xc0});
  // FNV-1a 64 of those eight bytes, computed offline.
  CHECK(manifest_of(s)["blob"]["fnv1a64"] == "0979e9ee2da22858");
}

TEST_CASE("truncated blob names the layer") {
  const LayerGraph g = resnet();
  auto s = serialize_model(g);
  s.blob.resize(s.blob.size() - 10);
  try {
    (void)parse_model(s.manifest, s.blob);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string last = g.layers.back().name;
    CHECK(std::string(e.what()).find("'" + last + "'") != std::string::npos);
  }
}

TEST_CASE("corruption and unsupported content are rejected") {
  const LayerGraph g = resnet();
  const auto s = serialize_model(g);

  auto flipped = s;
  flipped.blob[3] ^= 0x40;
  CHECK_THROWS_WITH_AS((void)parse_model(flipped.manifest, flipped.blob), doctest::Contains("checksum"), Error);

  auto m = manifest_of(s);
  m["layers"][0]["weight"]["shape"][0] = 7;
  CHECK_THROWS_WITH_AS((void)parse_model(m.dump(), s.blob), doctest::Contains("declares shape"), Error);

  m = manifest_of(s);
  m["layers"][1]["kind"] = "softsign";
  CHECK_THROWS_WITH_AS((void)parse_model(m.dump(), s.blob), doctest::Contains("unknown layer kind"), Error);

  m = manifest_of(s);
  m["layers"].insert(m["layers"].begin() + 2, json{{"name", "mp"}, {"kind", "maxpool2d"}, {"kernel", 2}});
  CHECK_THROWS_WITH_AS((void)parse_model(m.dump(), s.blob), doctest::Contains("max-pooling"), Error);

  m = manifest_of(s);
  m["version"] = 99;
  CHECK_THROWS_WITH_AS((void)parse_model(m.dump(), s.blob), doctest::Contains("unsupported manifest version"), Error);

  CHECK_THROWS_AS((void)parse_model("{not json", s.blob), Error);
}

TEST_CASE("batch norm is folded at load") {
  testing::Rng rng(3);
  const Tensor w = testing::random_tensor(rng, {3, 2, 3, 3}), b = testing::random_tensor(rng, {3});
  const BatchNormStats bn{testing::random_tensor(rng, {3}, 0.5, 2), testing::random_tensor(rng, {3}),
                          testing::random_tensor(rng, {3}), testing::random_tensor(rng, {3}, 0.5, 2), 1e-5f};
  LayerGraph g;
  g.input_shape = {2, 4, 4};
  g.layers.push_back({"conv", Conv2d{w, b, 1, 1}});
  auto s = serialize_model(g);

  // Append the statistics to the blob and a batchnorm layer to the manifest.
  auto m = manifest_of(s);
  json layer{{"name", "bn"}, {"kind", "batchnorm"}};
  for (auto [name, t] : {std::pair{"gamma", &bn.gamma}, {"beta", &bn.beta}, {"mean", &bn.mean}, {"var", &bn.var}}) {
    layer[name] = {{"shape", t->shape()}, {"offset", s.blob.size()}, {"bytes", 12}};
    for (float v : t->data()) {
      const auto u = std::bit_cast<std::uint32_t>(v);
      for (int k = 0; k < 4; ++k) s.blob.push_back(static_cast<std::uint8_t>(u >> (8 * k)));
    }
  }
  layer["eps"] = 1e-5;
  m["layers"].push_back(layer);
  m.erase("blob");
  const auto parsed = parse_model(m.dump(), s.blob);
  CHECK(parsed.folded_batchnorms == 1);
  REQUIRE(parsed.graph.layers.size() == 1);
  const Tensor x = testing::random_tensor(rng, {2, 2, 4, 4});
  const Tensor y = run_graph(parsed.graph, x, {});
  CHECK(testing::close(y, batchnorm(conv2d(x, w, b, 1, 1), bn), 1e-5, 1e-5));
}
