#include <stdexcept>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "spikelink/checkpoint.hpp"

using namespace spikelink;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const char* name) {
  fs::path p = fs::temp_directory_path() / "spikelink_test_checkpoint" / name;
  fs::create_directories(p.parent_path());
  return p;
}

}  // namespace

TEST_CASE("checkpoint roundtrip is exact") {
  const fs::path path = scratch("a.json");
  std::vector<NamedArray> arrays{{"w", {2, 3}, {1.0, -2.5, 1e-300, 3.141592653589793, 0.0, -0.0}},
                                 {"b", {1}, {42.0}}};
  save_checkpoint(path, arrays, R"({"epoch": 3})");
  CHECK(fs::exists(checkpoint_data_path(path)));
  CHECK(fs::file_size(checkpoint_data_path(path)) == 7 * sizeof(double));
  const auto loaded = load_checkpoint(path);
  REQUIRE(loaded.arrays.size() == 2);
  CHECK(loaded.arrays[0].name == "w");
  CHECK(loaded.arrays[0].shape == ag::Shape{2, 3});
  CHECK(loaded.arrays[0].values == arrays[0].values);
  CHECK(loaded.arrays[1].values == arrays[1].values);
  CHECK(loaded.metadata_json.find("\"epoch\":3") != std::string::npos);
}

TEST_CASE("truncated data is rejected") {
  const fs::path path = scratch("b.json");
  save_checkpoint(path, {{"w", {4}, {1, 2, 3, 4}}});
  fs::resize_file(checkpoint_data_path(path), 3 * sizeof(double));
  CHECK_THROWS(load_checkpoint(path));
}

TEST_CASE("missing and malformed manifests are rejected") {
  CHECK_THROWS(load_checkpoint(scratch("missing.json")));
  const fs::path path = scratch("c.json");
  std::ofstream(path) << "{not json";
  CHECK_THROWS(load_checkpoint(path));
}

TEST_CASE("shape and count must agree") {
  CHECK_THROWS(save_checkpoint(scratch("d.json"), {{"w", {2, 2}, {1, 2, 3}}}));
}
