#include "doctest.h"
#include "spikelink/modem.hpp"

using namespace spikelink;
using namespace spikelink::modem;

TEST_CASE("PPM frames are big-endian") {
  const PpmConfig cfg{4};
  CHECK(cfg.bits_per_symbol() == 2);
  const Bits bits{0, 1, 1, 0, 1, 1};
  CHECK(ppm_modulate(bits, cfg) == Bits{0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
}

TEST_CASE("PPM roundtrip") {
  Rng rng(2);
  for (unsigned m : {2u, 4u, 8u, 16u}) {
    const PpmConfig cfg{m};
    Bits bits(cfg.bits_per_symbol() * 50);
    for (auto& b : bits) b = rng.bernoulli(0.5);
    CHECK(ppm_demodulate(ppm_modulate(bits, cfg), cfg) == bits);
  }
}

TEST_CASE("PPM order must be a power of two") {
  CHECK_THROWS_AS(PpmConfig{3}.validate(), std::invalid_argument);
  CHECK_THROWS_AS(PpmConfig{1}.validate(), std::invalid_argument);
  CHECK_NOTHROW(PpmConfig{32}.validate());
}

TEST_CASE("PPM demodulation ties go to the lowest slot") {
  const PpmConfig cfg{4};
  const std::vector<double> slots{0.3, 0.9, 0.9, 0.1, 0.0, 0.0, 0.0, 0.0};
  CHECK(ppm_demodulate(slots, cfg) == Bits{0, 1, 0, 0});
}

TEST_CASE("LTH hand example") {
  LthParams p;
  p.slots = 2;
  p.tokens = 1;
  p.dim = 2;
  p.shared_map = {1.0, -1.0};
  // bias[l][d][k]
  p.bias = {0.0, 0.5, -0.5, -0.5};
  SpikeSequence x(SequenceDims{2, 1, 2});
  x.at(0, 0, 0) = 1;
  x.at(0, 0, 1) = 0;
  x.at(1, 0, 0) = 0;
  x.at(1, 0, 1) = 1;
  const auto s = lth_encode(x, p);
  REQUIRE(s.dims == SequenceDims{4, 1, 2});
  // t=0: d0 x=1 -> (1+0>=0, -1+0.5<0) ; d1 x=0 -> (-0.5<0, -0.5<0)
  CHECK(s.at(0, 0, 0) == 1);
  CHECK(s.at(1, 0, 0) == 0);
  CHECK(s.at(0, 0, 1) == 0);
  CHECK(s.at(1, 0, 1) == 0);
  // t=1: d0 x=0 -> step(0)=1, step(0.5)=1 ; d1 x=1 -> (0.5, -1.5)
  CHECK(s.at(2, 0, 0) == 1);
  CHECK(s.at(3, 0, 0) == 1);
  CHECK(s.at(2, 0, 1) == 1);
  CHECK(s.at(3, 0, 1) == 0);
}

TEST_CASE("relaxed LTH matches the bit encoder in hard mode") {
  Rng rng(4);
  LthParams p;
  p.slots = 3;
  p.tokens = 4;
  p.dim = 5;
  for (int k = 0; k < 3; ++k) p.shared_map.push_back(rng.uniform(-1, 1));
  for (int i = 0; i < 4 * 5 * 3; ++i) p.bias.push_back(rng.uniform(-1, 1));
  SpikeSequence x(SequenceDims{2, 4, 5});
  for (auto& v : x.data) v = rng.bernoulli(0.4);

  std::vector<ag::Tensor> steps;
  for (std::size_t t = 0; t < 2; ++t) {
    std::vector<double> v(x.data.begin() + t * 20, x.data.begin() + (t + 1) * 20);
    steps.push_back(ag::Tensor::from_values({1, 4, 5}, v));
  }
  const auto map = ag::Tensor::from_values({3}, p.shared_map);
  const auto bias = ag::Tensor::from_values({4, 5, 3}, p.bias);
  const auto relaxed = lth_relaxed(steps, map, bias, ag::SurrogateSpec{});
  const auto bits = lth_encode(x, p);
  REQUIRE(relaxed.size() == 6);
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t i = 0; i < 20; ++i) CHECK(relaxed[t].values()[i] == bits.data[t * 20 + i]);
}

TEST_CASE("serialization is row-major in (t, l, d)") {
  SpikeSequence x(SequenceDims{2, 2, 3});
  x.at(1, 0, 2) = 1;
  const auto bits = serialize(x);
  REQUIRE(bits.size() == 12);
  CHECK(bits[1 * 6 + 0 * 3 + 2] == 1);
  const auto back = deserialize<std::uint8_t>(bits, x.dims);
  CHECK(back.data == x.data);
  CHECK_THROWS_AS(deserialize<std::uint8_t>(std::span(bits).first(11), x.dims), std::invalid_argument);
  const std::vector<double> soft(12, 0.25);
  CHECK(deserialize<double>(soft, x.dims).at(1, 1, 1) == 0.25);
}
