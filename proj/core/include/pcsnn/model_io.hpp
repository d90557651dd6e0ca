#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcsnn/converter.hpp"

namespace pcsnn {

inline constexpr int kManifestVersion = 1;

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept;

/// A model as a JSON manifest plus a little-endian float32 blob. Every tensor
/// (weights and activation/neuron parameters alike) lives in the blob; the
/// manifest records its shape, byte offset and byte count.
struct SerializedModel {
  std::string manifest;
  std::vector<std::uint8_t> blob;
};

/// `snn` is set for converted networks and recorded in the manifest.
SerializedModel serialize_model(const LayerGraph& graph, const ConvertedNetwork* snn = nullptr,
                                const std::string& blob_name = "model.bin");

struct ParsedModel {
  LayerGraph graph;
  /// Present when the manifest describes a converted network.
  std::optional<int> steps;
  std::optional<ConversionCase> conversion_case;
  /// Batch-norm layers folded into their preceding linear/conv layer.
  int folded_batchnorms = 0;
};

/// Parses and validates a manifest against its blob. Batch-norm layers are
/// folded into the preceding linear/conv layer; max-pooling is rejected.
ParsedModel parse_model(const std::string& manifest, std::span<const std::uint8_t> blob);

/// Writes `<manifest>` and `<blob>`; the manifest names the blob by file name.
void save_model(const LayerGraph& graph, const std::filesystem::path& manifest, const std::filesystem::path& blob = {});
void save_converted(const ConvertedNetwork& net, const std::filesystem::path& manifest,
                    const std::filesystem::path& blob = {});

/// An empty `blob` path means the file named in the manifest, next to it.
ParsedModel load_model_file(const std::filesystem::path& manifest, const std::filesystem::path& blob = {});
LayerGraph load_model(const std::filesystem::path& manifest, const std::filesystem::path& blob = {});
ConvertedNetwork load_converted(const std::filesystem::path& manifest, const std::filesystem::path& blob = {});

/// `<stem>.bin` next to the manifest.
std::filesystem::path default_blob_path(const std::filesystem::path& manifest);

}  // namespace pcsnn
