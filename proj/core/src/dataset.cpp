#include "pcsnn/dataset.hpp"

#include <fstream>

#include "rng.hpp"

namespace pcsnn {

std::string_view to_string(Split s) { return s == Split::Calibration ? "calibration" : "evaluation"; }

Split parse_split(std::string_view name) {
  if (name == "calibration" || name == "calib") return Split::Calibration;
  if (name == "evaluation" || name == "eval") return Split::Evaluation;
  throw Error("unknown split '" + std::string(name) + "'");
}

std::vector<Tensor> Dataset::batches(std::size_t batch_size) const {
  if (batch_size == 0) throw Error("batch size must be positive");
  std::vector<Tensor> out;
  for (std::int64_t b = 0; b < size(); b += static_cast<std::int64_t>(batch_size)) {
    const auto e = std::min(size(), b + static_cast<std::int64_t>(batch_size));
    Shape s = inputs.shape();
    const auto row = static_cast<std::int64_t>(inputs.size()) / s[0];
    s[0] = e - b;
    out.emplace_back(std::move(s), std::vector<float>(inputs.values().begin() + b * row, inputs.values().begin() + e * row));
  }
  return out;
}

Dataset Dataset::head(std::int64_t n) const {
  if (n < 0 || n > size()) throw Error("dataset has only " + std::to_string(size()) + " samples");
  Dataset d = *this;
  Shape s = inputs.shape();
  const auto row = s[0] ? static_cast<std::int64_t>(inputs.size()) / s[0] : 0;
  s[0] = n;
  d.inputs = Tensor(std::move(s), std::vector<float>(inputs.values().begin(), inputs.values().begin() + n * row));
  d.labels.resize(static_cast<std::size_t>(n));
  return d;
}

using detail::GaussianStream;
using detail::unit_uniform;

Dataset synth_dataset(std::uint64_t seed, const Shape& dims, int classes, std::int64_t n, Split split, float noise) {
  if (n < 1) throw Error("synthetic dataset needs n >= 1");
  if (classes < 1) throw Error("synthetic dataset needs at least one class");
  if (!(noise >= 0.0f)) throw Error("noise must be non-negative");
  const auto d = numel(dims);
  if (dims.empty() || d <= 0) throw Error("bad sample shape " + to_string(dims));

  std::mt19937_64 mean_rng(seed);
  std::vector<float> means(static_cast<std::size_t>(classes * d));
  for (auto& m : means) m = static_cast<float>(2.0 * unit_uniform(mean_rng) - 1.0);

  // Independent sample streams per split.
  const std::uint64_t stream = seed * 0x9E3779B97F4A7C15ull + (split == Split::Calibration ? 1 : 2);
  GaussianStream g(stream);

  Dataset ds;
  Shape shape{n};
  shape.insert(shape.end(), dims.begin(), dims.end());
  ds.inputs = Tensor(shape);
  ds.labels.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(g.raw() % static_cast<std::uint64_t>(classes));
    ds.labels[i] = label;
    for (std::int64_t j = 0; j < d; ++j) {
      ds.inputs[i * d + j] = static_cast<float>(means[label * d + j] + noise * g.next());
    }
  }
  ds.classes = classes;
  ds.split = split;
  ds.source = "synthetic(seed=" + std::to_string(seed) + ",dims=" + to_string(dims) + ",classes=" +
              std::to_string(classes) + ",noise=" + std::to_string(noise) + ")";
  ds.mean = {0.0f};
  ds.std = {1.0f};
  return ds;
}

Dataset load_cifar10(const std::filesystem::path& path, std::int64_t limit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open CIFAR-10 file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto total = static_cast<std::int64_t>(bytes.size());
  if (total == 0 || total % kCifarRecordBytes != 0) {
    throw Error("CIFAR-10 file " + path.string() + " has " + std::to_string(total) +
                " bytes, not a positive multiple of 3073");
  }
  auto n = total / kCifarRecordBytes;
  if (limit > 0) n = std::min(n, limit);

  Dataset ds;
  ds.mean = {0.4914f, 0.4822f, 0.4465f};
  ds.std = {0.2470f, 0.2435f, 0.2616f};
  ds.inputs = Tensor({n, 3, 32, 32});
  ds.labels.resize(static_cast<std::size_t>(n));
  constexpr std::int64_t plane = 32 * 32;
  for (std::int64_t i = 0; i < n; ++i) {
    const unsigned char* rec = bytes.data() + i * kCifarRecordBytes;
    if (rec[0] > 9) throw Error("CIFAR-10 record " + std::to_string(i) + " has label " + std::to_string(rec[0]));
    ds.labels[i] = rec[0];
    for (std::int64_t p = 0; p < 3 * plane; ++p) {
      const auto c = static_cast<std::size_t>(p / plane);
      ds.inputs[i * 3 * plane + p] = (static_cast<float>(rec[1 + p]) / 255.0f - ds.mean[c]) / ds.std[c];
    }
  }
  ds.classes = 10;
  ds.split = Split::Evaluation;
  ds.source = "cifar10-binary(" + path.string() + ")";
  return ds;
}

}  // namespace pcsnn
