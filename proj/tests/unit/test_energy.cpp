#include "doctest.h"
#include "spikelink/energy.hpp"

using namespace spikelink;
using namespace spikelink::energy;

namespace {

snn::LayerTally tally(bool binary, std::uint64_t positions, std::uint64_t active) {
  snn::LayerTally t;
  t.name = "x";
  t.fan_in = 4;
  t.fan_out = 3;
  t.binary_input = binary;
  t.input_positions = positions;
  t.active_inputs = active;
  t.neuron_updates = positions / 4 * 3;
  return t;
}

}  // namespace

TEST_CASE("event-driven layer counts") {
  const auto c = count_layer(tally(true, 8, 2));
  CHECK(c.accumulates == 2 * 3 + 6);
  CHECK(c.macs == 0);
  CHECK(c.comparisons == 6);
  CHECK(c.memory_reads == 6 + 6);
  CHECK(c.memory_writes == 6);
  const auto r = count_layer(tally(false, 8, 2));
  CHECK(r.macs == 6);
  CHECK(r.accumulates == 6);
}

TEST_CASE("silent input costs no synaptic accumulates") {
  auto t = tally(true, 8, 0);
  t.neuron_updates = 0;
  const auto c = count_layer(t);
  CHECK(c.accumulates == 0);
  CHECK(energy_of(c, EnergyTable{}) == 0.0);
}

TEST_CASE("dense layer counts") {
  const auto c = count_layer_dense(tally(true, 8, 2));
  CHECK(c.macs == 24);
  CHECK(c.memory_reads == 24 + 8);
  CHECK(c.memory_writes == 6);
}

TEST_CASE("energy is linear in counts and table") {
  OpCounts c{10, 20, 30, 40, 50, 60};
  EnergyTable t;
  const double e = energy_of(c, t);
  CHECK(e == doctest::Approx((10 * 0.9 + 20 * 4.6 + 30 * 0.1 + 40 * 0.4 + 50 * 5.0 + 60 * 5.0) * 1e-12));
  CHECK(energy_of(c + c, t) == doctest::Approx(2 * e));
  EnergyTable t2 = t;
  t2.accumulate_pj *= 3;
  t2.mac_pj *= 3;
  t2.comparison_pj *= 3;
  t2.random_draw_pj *= 3;
  t2.memory_read_pj *= 3;
  t2.memory_write_pj *= 3;
  CHECK(energy_of(c, t2) == doctest::Approx(3 * e));
  t2.mac_pj = 0.0;
  CHECK_THROWS_AS(t2.validate(), std::invalid_argument);
}

TEST_CASE("dense equivalent follows the layer list") {
  snn::EncoderConfig enc;
  snn::DecoderConfig dec;
  const auto layers = synaptic_layers(enc, dec);
  std::uint64_t enc_macs = 0;
  for (const auto& l : layers)
    if (l.stage == snn::Stage::kEncoder) enc_macs += static_cast<std::uint64_t>(l.rows) * l.fan_in * l.fan_out * l.steps;
  CHECK(count_dense_equivalent(enc, dec).encoder.macs == enc_macs);
  // patch projection alone: T * N * 2P^2 * D
  CHECK(layers.front().name == "enc.patch");
  CHECK(layers.front().rows * layers.front().fan_in * layers.front().fan_out ==
        enc.tokens() * enc.patch_features() * enc.dim);
}

TEST_CASE("report needs a recorded pass") {
  snn::ForwardRecorder empty;
  CHECK_THROWS_AS(count_spiking_forward(empty), std::invalid_argument);
}

TEST_CASE("joule formatting") {
  CHECK(format_joules(1.4e-6) == "1.4 uJ");
  CHECK(format_joules(1.5e-3) == "1.5 mJ");
  CHECK(format_joules(0.0) == "0 J");
}
