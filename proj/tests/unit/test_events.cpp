#include <stdexcept>
#include <set>

#include "doctest.h"
#include "spikelink/events.hpp"

using namespace spikelink;
using namespace spikelink::events;

namespace {

Image flat(std::size_t h, std::size_t w, double v) {
  Image img(h, w);
  for (auto& p : img.pixels) p = v;
  return img;
}

}  // namespace

TEST_CASE("events mark signed changes above the threshold") {
  Image a = flat(1, 4, 0.5);
  Image b = a;
  b.pixels = {0.7, 0.3, 0.55, 0.5};
  const auto seq = events_from_frames({a, b}, 0.1);
  REQUIRE(seq.steps == 2);
  for (std::size_t i = 0; i < 4; ++i) CHECK(seq.at(0, 0, i) == 0);
  CHECK(seq.at(1, 0, 0) == 1);
  CHECK(seq.at(1, 0, 1) == -1);
  CHECK(seq.at(1, 0, 2) == 0);
  CHECK(seq.at(1, 0, 3) == 0);
  CHECK_THROWS_AS(events_from_frames({a}, 0.1), std::invalid_argument);
}

TEST_CASE("a change exactly at the threshold is not an event") {
  Image a = flat(1, 1, 0.5);
  Image b = flat(1, 1, 0.75);
  CHECK(events_from_frames({a, b}, 0.25).at(1, 0, 0) == 0);
}

TEST_CASE("motion shifts the crop") {
  Scene scene;
  scene.image = Image(6, 6);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 6; ++c) scene.image.at(r, c) = static_cast<double>(10 * r + c);
  DvsConfig cfg;
  cfg.crop_height = 2;
  cfg.crop_width = 2;
  cfg.timesteps = 3;
  cfg.shift = 2;
  cfg.scene_size = 6;
  const auto frames = frames_from_motion(scene, cfg, {1, 0});
  REQUIRE(frames.size() == 3);
  CHECK(frames[0].at(0, 0) == 10.0);
  CHECK(frames[2].at(1, 1) == 25.0);
  CHECK_THROWS_AS(frames_from_motion(scene, cfg, {0, 1}), std::out_of_range);
  cfg.axis = Axis::kRows;
  CHECK(frames_from_motion(scene, cfg, {0, 0})[1].at(0, 0) == 20.0);
}

TEST_CASE("scenes are seeded and classes differ") {
  const auto a = generate_scene(2, 9, 48);
  const auto b = generate_scene(2, 9, 48);
  CHECK(a.image.pixels == b.image.pixels);
  for (double v : a.image.pixels) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  std::set<std::vector<double>> distinct;
  for (std::size_t c = 0; c < kMaxClasses; ++c) distinct.insert(generate_scene(c, 9, 48).image.pixels);
  CHECK(distinct.size() == kMaxClasses);
  CHECK_THROWS(generate_scene(kMaxClasses, 9, 48));
}

TEST_CASE("split assignment is half and half") {
  const auto s = split_assignment(3, 1, 10);
  std::size_t train = 0;
  for (auto v : s) train += v == Split::kTrain;
  CHECK(train == 5);
  CHECK(s == split_assignment(3, 1, 10));
  CHECK_THROWS_AS(split_assignment(3, 1, 9), std::invalid_argument);
}

TEST_CASE("dataset generation") {
  DvsConfig cfg;
  const auto a = make_dataset(3, 4, cfg, 11);
  const auto b = make_dataset(3, 4, cfg, 11);
  REQUIRE(a.samples.size() == 12);
  CHECK(a.split(Split::kTrain).size() == 6);
  CHECK(a.split(Split::kEval).size() == 6);
  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].events.data == b.samples[i].events.data);
    CHECK(a.samples[i].label == i / 4);
    CHECK(a.samples[i].events.steps == cfg.timesteps);
    seeds.insert(a.samples[i].seed);
  }
  CHECK(seeds.size() == 12);
  const auto c = make_dataset(3, 4, cfg, 12);
  CHECK(c.samples[0].events.data != a.samples[0].events.data);
  CHECK_THROWS(make_dataset(0, 4, cfg, 1));
  CHECK_THROWS(make_dataset(kMaxClasses + 1, 4, cfg, 1));
}

TEST_CASE("DVS config validation") {
  DvsConfig cfg;
  cfg.scene_size = 33;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = DvsConfig{};
  cfg.timesteps = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
