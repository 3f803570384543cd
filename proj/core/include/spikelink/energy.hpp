#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikelink/snn.hpp"
#include "spikelink/trace.hpp"

namespace spikelink::energy {

/// Operation tallies. Additive across layers and passes.
struct OpCounts {
  std::uint64_t accumulates = 0;  ///< spike-gated additions
  std::uint64_t macs = 0;         ///< multiply-accumulates
  std::uint64_t comparisons = 0;  ///< threshold tests
  std::uint64_t random_draws = 0;
  std::uint64_t memory_reads = 0;
  std::uint64_t memory_writes = 0;

  OpCounts& operator+=(const OpCounts& o);
  friend OpCounts operator+(OpCounts a, const OpCounts& b) { return a += b; }
  bool operator==(const OpCounts&) const = default;
};

/// Energy per operation in picojoules.
///
/// The defaults are representative digital-logic figures for a 45 nm-class
/// process, exposed as configuration so any table can be substituted.
struct EnergyTable {
  double accumulate_pj = 0.9;
  double mac_pj = 4.6;
  double comparison_pj = 0.1;
  double random_draw_pj = 0.4;
  double memory_read_pj = 5.0;
  double memory_write_pj = 5.0;

  void validate() const;
};

/// Joules = sum over categories of count * pJ * 1e-12.
double energy_of(const OpCounts& counts, const EnergyTable& table);

/// Event-driven counts for one layer:
///   binary inputs: accumulates = active inputs x fan-out
///   real inputs:   macs        = nonzero inputs x fan-out
///   memory reads  = touched weights + one state read per LIF update
///   memory writes = one state write per LIF update
///   each LIF update costs one accumulate and one comparison
OpCounts count_layer(const snn::LayerTally& layer);

/// Dense-equivalent counts for the same layer: every input position
/// multiplies every fan-out weight.
OpCounts count_layer_dense(const snn::LayerTally& layer);

struct StageCounts {
  OpCounts encoder;
  OpCounts decoder;
};

/// Sums count_layer over a recorded forward pass. Throws if nothing was recorded.
StageCounts count_spiking_forward(const snn::ForwardRecorder& recorder);

/// Synaptic layer geometry of a model, per inference.
struct LayerShape {
  std::string name;
  snn::Stage stage;
  std::size_t fan_in;
  std::size_t fan_out;
  std::size_t rows;   ///< rows presented per step
  std::size_t steps;  ///< steps per inference
};

std::vector<LayerShape> synaptic_layers(const snn::EncoderConfig& enc, const snn::DecoderConfig& dec);

/// Input-independent dense MAC counts per inference, from the configs alone.
StageCounts count_dense_equivalent(const snn::EncoderConfig& enc, const snn::DecoderConfig& dec);

struct StageEnergy {
  OpCounts counts;        ///< totals over all recorded inferences
  double joules = 0.0;    ///< totals over all recorded inferences
  double mean_spike_rate = 0.0;  ///< mean input rate over binary-input layers
};

struct EnergyReport {
  std::uint64_t inferences = 0;
  EnergyTable table;
  StageEnergy encoder;
  StageEnergy decoder;
  StageEnergy encoder_dense;  ///< dense equivalent, same inference count
  StageEnergy decoder_dense;
};

EnergyReport build_report(const snn::ForwardRecorder& recorder, const snn::EncoderConfig& enc,
                          const snn::DecoderConfig& dec, const EnergyTable& table);

/// "1.234 uJ" / "5.6 mJ" style formatting.
std::string format_joules(double joules);

}  // namespace spikelink::energy
