#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spikelink/tensor.hpp"

namespace spikelink {

/// One named array in a checkpoint.
struct NamedArray {
  std::string name;
  ag::Shape shape;
  std::vector<double> values;
};

/// Checkpoint on disk: `<stem>.bin` holds every array as little-endian
/// IEEE-754 doubles back to back; `<stem>.json` is the manifest
/// {"format", "dtype", "total_bytes", "entries": [{name, shape, offset, count}],
/// "metadata": {...}}. Offsets are in bytes from the start of the .bin file.
void save_checkpoint(const std::filesystem::path& manifest_path, const std::vector<NamedArray>& arrays,
                     const std::string& metadata_json = "{}");

struct LoadedCheckpoint {
  std::vector<NamedArray> arrays;
  std::string metadata_json;
};

/// Reads a manifest and its .bin file. Throws on a missing file, a size
/// mismatch, or a malformed manifest.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& manifest_path);

/// Path of the .bin companion of a manifest.
std::filesystem::path checkpoint_data_path(const std::filesystem::path& manifest_path);

}  // namespace spikelink
