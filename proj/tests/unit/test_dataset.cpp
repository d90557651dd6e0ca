#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "pcsnn/dataset.hpp"
#include "pcsnn/runtime.hpp"
#include "pcsnn/synth_model.hpp"
#include "support.hpp"

using namespace pcsnn;

namespace {

std::filesystem::path write_records(const std::string& name, const std::vector<std::uint8_t>& bytes) {
  const auto dir = std::filesystem::temp_directory_path() / "pcsnn_data_test";
  std::filesystem::create_directories(dir);
  const auto p = dir / name;
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                           static_cast<std::streamsize>(bytes.size()));
  return p;
}

}  // namespace

TEST_CASE("synthetic data is determined by the seed") {
  const auto a = synth_dataset(5, {3, 4, 4}, 10, 20);
  const auto b = synth_dataset(5, {3, 4, 4}, 10, 20);
  CHECK(a.inputs == b.inputs);
  CHECK(a.labels == b.labels);
  CHECK(a.inputs.shape() == Shape{20, 3, 4, 4});
  CHECK_FALSE(synth_dataset(6, {3, 4, 4}, 10, 20).inputs == a.inputs);
  CHECK_FALSE(synth_dataset(5, {3, 4, 4}, 10, 20, Split::Evaluation).inputs == a.inputs);
  CHECK_THROWS_AS((void)synth_dataset(1, {4}, 10, 0), Error);
}

TEST_CASE("separated class means are linearly decodable") {
  // 4-sigma separation: means spread over U[-1,1]^16, noise 0.25.
  const auto train = synth_dataset(11, {16}, 5, 2000, Split::Calibration, 0.25f);
  const auto test = synth_dataset(11, {16}, 5, 1000, Split::Evaluation, 0.25f);
  // Nearest-class-mean probe, built from the training split.
  std::vector<std::vector<double>> mean(5, std::vector<double>(16, 0.0));
  std::vector<int> count(5, 0);
  for (std::int64_t i = 0; i < train.size(); ++i) {
    ++count[train.labels[i]];
    for (int j = 0; j < 16; ++j) mean[train.labels[i]][j] += train.inputs[i * 16 + j];
  }
  Tensor w({5, 16}), b({5});
  for (int c = 0; c < 5; ++c) {
    double sq = 0.0;
    for (int j = 0; j < 16; ++j) {
      mean[c][j] /= count[c];
      w[c * 16 + j] = static_cast<float>(mean[c][j]);
      sq += mean[c][j] * mean[c][j];
    }
    b[c] = static_cast<float>(-0.5 * sq);
  }
  LayerGraph probe;
  probe.input_shape = {16};
  probe.layers.push_back({"probe", Linear{w, b}});
  CHECK(evaluate(probe, test.inputs, test.labels).accuracy > 0.9);
}

TEST_CASE("batches cover the dataset") {
  const auto d = synth_dataset(2, {4}, 3, 10);
  const auto bs = d.batches(4);
  REQUIRE(bs.size() == 3);
  CHECK(bs[2].dim(0) == 2);
  CHECK(d.head(3).size() == 3);
}

TEST_CASE("CIFAR-10 records") {
  std::vector<std::uint8_t> rec(kCifarRecordBytes, 0);
  rec[0] = 7;
  rec[1] = 255;
  const auto p = write_records("one.bin", rec);
  const auto d = load_cifar10(p);
  CHECK(d.size() == 1);
  CHECK(d.labels[0] == 7);
  CHECK(d.inputs.shape() == Shape{1, 3, 32, 32});
  // Pixel 255 is 1.0 before normalisation.
  CHECK(d.inputs[0] * d.std[0] + d.mean[0] == doctest::Approx(1.0f));
  CHECK(d.inputs[1] * d.std[0] + d.mean[0] == doctest::Approx(0.0f).epsilon(1e-6));

  std::vector<std::uint8_t> many(static_cast<std::size_t>(kCifarRecordBytes) * 10000, 0);
  CHECK(load_cifar10(write_records("full.bin", many)).size() == 10000);
  CHECK(load_cifar10(write_records("full.bin", many), 25).size() == 25);

  rec.push_back(0);
  CHECK_THROWS_AS((void)load_cifar10(write_records("bad.bin", rec)), Error);
  CHECK_THROWS_AS((void)load_cifar10("/nonexistent/cifar.bin"), Error);
}

TEST_CASE("synthetic models") {
  for (auto arch : {SynthArch::MLP, SynthArch::Conv, SynthArch::VGG, SynthArch::ResNet}) {
    SynthModelConfig cfg;
    cfg.arch = arch;
    cfg.depth = 3;
    cfg.width = 4;
    cfg.input_shape = arch == SynthArch::MLP ? Shape{12} : Shape{3, 8, 8};
    const LayerGraph g = make_synth_model(cfg);
    CHECK(g == make_synth_model(cfg));
    CHECK(infer_shapes(g).back() == Shape{10});
    cfg.seed = 2;
    CHECK_FALSE(g == make_synth_model(cfg));
  }
  CHECK(parse_synth_arch("vgg") == SynthArch::VGG);
  SynthModelConfig bad;
  bad.arch = SynthArch::Conv;
  CHECK_THROWS_AS((void)make_synth_model(bad), Error);
}
