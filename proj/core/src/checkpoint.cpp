#include "spikelink/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace spikelink {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");
static_assert(sizeof(double) == 8);

constexpr const char* kFormat = "spikelink-checkpoint-v1";

}  // namespace

std::filesystem::path checkpoint_data_path(const std::filesystem::path& manifest_path) {
  auto p = manifest_path;
  p.replace_extension(".bin");
  return p;
}

void save_checkpoint(const std::filesystem::path& manifest_path, const std::vector<NamedArray>& arrays,
                     const std::string& metadata_json) {
  if (manifest_path.has_parent_path()) std::filesystem::create_directories(manifest_path.parent_path());
  const auto data_path = checkpoint_data_path(manifest_path);
  std::ofstream data(data_path, std::ios::binary | std::ios::trunc);
  if (!data) throw std::runtime_error("cannot write " + data_path.string());

  json entries = json::array();
  std::uint64_t offset = 0;
  for (const auto& a : arrays) {
    if (ag::shape_size(a.shape) != a.values.size()) {
      throw std::invalid_argument("checkpoint array '" + a.name + "' has inconsistent shape");
    }
    data.write(reinterpret_cast<const char*>(a.values.data()),
               static_cast<std::streamsize>(a.values.size() * sizeof(double)));
    entries.push_back({{"name", a.name}, {"shape", a.shape}, {"offset", offset}, {"count", a.values.size()}});
    offset += a.values.size() * sizeof(double);
  }
  if (!data) throw std::runtime_error("failed writing " + data_path.string());

  json manifest;
  manifest["format"] = kFormat;
  manifest["dtype"] = "f64-le";
  manifest["data_file"] = data_path.filename().string();
  manifest["total_bytes"] = offset;
  manifest["entries"] = std::move(entries);
  manifest["metadata"] = json::parse(metadata_json);
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + manifest_path.string());
  out << manifest.dump(2) << '\n';
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("checkpoint manifest not found: " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != kFormat) {
    throw std::runtime_error("unsupported checkpoint format in " + manifest_path.string());
  }
  const auto data_path = manifest_path.parent_path() / manifest.at("data_file").get<std::string>();
  std::ifstream data(data_path, std::ios::binary);
  if (!data) throw std::runtime_error("checkpoint data not found: " + data_path.string());
  data.seekg(0, std::ios::end);
  const auto file_bytes = static_cast<std::uint64_t>(data.tellg());
  if (file_bytes != manifest.at("total_bytes").get<std::uint64_t>()) {
    throw std::runtime_error("checkpoint data size mismatch for " + data_path.string());
  }

  LoadedCheckpoint result;
  for (const auto& e : manifest.at("entries")) {
    NamedArray a;
    a.name = e.at("name").get<std::string>();
    a.shape = e.at("shape").get<ag::Shape>();
    const auto offset = e.at("offset").get<std::uint64_t>();
    const auto count = e.at("count").get<std::uint64_t>();
    if (ag::shape_size(a.shape) != count || offset + count * sizeof(double) > file_bytes) {
      throw std::runtime_error("corrupt checkpoint entry '" + a.name + "'");
    }
    a.values.resize(count);
    data.seekg(static_cast<std::streamoff>(offset));
    data.read(reinterpret_cast<char*>(a.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
    result.arrays.push_back(std::move(a));
  }
  result.metadata_json = manifest.value("metadata", json::object()).dump();
  return result;
}

}  // namespace spikelink
