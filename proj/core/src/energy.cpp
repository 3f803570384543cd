#include "spikelink/energy.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace spikelink::energy {

OpCounts& OpCounts::operator+=(const OpCounts& o) {
  accumulates += o.accumulates;
  macs += o.macs;
  comparisons += o.comparisons;
  random_draws += o.random_draws;
  memory_reads += o.memory_reads;
  memory_writes += o.memory_writes;
  return *this;
}

void EnergyTable::validate() const {
  for (double v : {accumulate_pj, mac_pj, comparison_pj, random_draw_pj, memory_read_pj, memory_write_pj}) {
    if (!(v > 0.0)) throw std::invalid_argument("energy table entries must be positive");
  }
}

double energy_of(const OpCounts& c, const EnergyTable& t) {
  const double pj = static_cast<double>(c.accumulates) * t.accumulate_pj + static_cast<double>(c.macs) * t.mac_pj +
                    static_cast<double>(c.comparisons) * t.comparison_pj +
                    static_cast<double>(c.random_draws) * t.random_draw_pj +
                    static_cast<double>(c.memory_reads) * t.memory_read_pj +
                    static_cast<double>(c.memory_writes) * t.memory_write_pj;
  return pj * 1e-12;
}

OpCounts count_layer(const snn::LayerTally& layer) {
  OpCounts c;
  const std::uint64_t synaptic = layer.active_inputs * layer.fan_out;
  if (layer.binary_input) {
    c.accumulates += synaptic;
  } else {
    c.macs += synaptic;
  }
  c.memory_reads += synaptic;
  c.accumulates += layer.neuron_updates;
  c.comparisons += layer.neuron_updates + layer.comparisons;
  c.memory_reads += layer.neuron_updates;
  c.memory_writes += layer.neuron_updates;
  c.random_draws += layer.random_draws;
  return c;
}

OpCounts count_layer_dense(const snn::LayerTally& layer) {
  OpCounts c;
  if (layer.fan_in == 0) return c;
  const std::uint64_t positions = layer.input_positions;
  c.macs = positions * layer.fan_out;
  c.memory_reads = positions * layer.fan_out + positions;
  c.memory_writes = positions / layer.fan_in * layer.fan_out;
  return c;
}

StageCounts count_spiking_forward(const snn::ForwardRecorder& recorder) {
  if (recorder.layers().empty()) throw std::invalid_argument("count_spiking_forward: no recorded forward pass");
  StageCounts out;
  for (const auto& layer : recorder.layers()) {
    (layer.stage == snn::Stage::kEncoder ? out.encoder : out.decoder) += count_layer(layer);
  }
  return out;
}

std::vector<LayerShape> synaptic_layers(const snn::EncoderConfig& enc, const snn::DecoderConfig& dec) {
  enc.validate();
  dec.validate();
  using snn::Stage;
  const std::size_t n = enc.tokens();
  const std::size_t d = enc.dim;
  const std::size_t t_enc = enc.timesteps;
  const std::size_t t_dec = enc.timesteps * enc.slots;
  const std::size_t de = dec.embed_dim;
  const std::size_t dk = dec.head_dim();
  std::vector<LayerShape> out;
  out.push_back({"enc.patch", Stage::kEncoder, enc.patch_features(), d, n, t_enc});
  for (std::size_t i = 0; i < enc.layers; ++i) {
    const std::string p = "enc.l" + std::to_string(i) + ".";
    out.push_back({p + "value", Stage::kEncoder, d, d, n, t_enc});
    out.push_back({p + "token", Stage::kEncoder, n, n, d, t_enc});
    out.push_back({p + "channel", Stage::kEncoder, d, d, n, t_enc});
  }
  out.push_back({"enc.lth", Stage::kEncoder, 1, enc.slots, n * d, t_enc});
  out.push_back({"dec.embed", Stage::kDecoder, d, de, n, t_dec});
  for (std::size_t i = 0; i < dec.layers; ++i) {
    const std::string p = "dec.l" + std::to_string(i) + ".";
    for (std::size_t h = 0; h < dec.heads; ++h) {
      const std::string hp = p + "h" + std::to_string(h);
      out.push_back({hp + ".q", Stage::kDecoder, de, dk, n, t_dec});
      out.push_back({hp + ".k", Stage::kDecoder, de, dk, n, t_dec});
      out.push_back({hp + ".v", Stage::kDecoder, de, dk, n, t_dec});
      out.push_back({hp + ".qk", Stage::kDecoder, dk, n, n, t_dec});
      out.push_back({hp + ".mv", Stage::kDecoder, n, dk, n, t_dec});
    }
    out.push_back({p + "ffn_in", Stage::kDecoder, de, dec.ffn_dim, n, t_dec});
    out.push_back({p + "ffn_out", Stage::kDecoder, dec.ffn_dim, de, n, t_dec});
  }
  out.push_back({"dec.pool", Stage::kDecoder, de, 1, n, t_dec});
  out.push_back({"dec.cls", Stage::kDecoder, de, dec.classes, 1, t_dec});
  return out;
}

StageCounts count_dense_equivalent(const snn::EncoderConfig& enc, const snn::DecoderConfig& dec) {
  StageCounts out;
  for (const auto& l : synaptic_layers(enc, dec)) {
    snn::LayerTally tally;
    tally.fan_in = l.fan_in;
    tally.fan_out = l.fan_out;
    tally.input_positions = static_cast<std::uint64_t>(l.rows) * l.fan_in * l.steps;
    (l.stage == snn::Stage::kEncoder ? out.encoder : out.decoder) += count_layer_dense(tally);
  }
  return out;
}

namespace {

double mean_rate(const snn::ForwardRecorder& recorder, snn::Stage stage) {
  std::uint64_t active = 0;
  std::uint64_t positions = 0;
  for (const auto& l : recorder.layers()) {
    if (l.stage != stage || !l.binary_input) continue;
    active += l.active_inputs;
    positions += l.input_positions;
  }
  return positions ? static_cast<double>(active) / static_cast<double>(positions) : 0.0;
}

}  // namespace

EnergyReport build_report(const snn::ForwardRecorder& recorder, const snn::EncoderConfig& enc,
                          const snn::DecoderConfig& dec, const EnergyTable& table) {
  table.validate();
  EnergyReport r;
  r.inferences = recorder.inferences();
  r.table = table;
  const auto spiking = count_spiking_forward(recorder);
  r.encoder.counts = spiking.encoder;
  r.decoder.counts = spiking.decoder;
  r.encoder.mean_spike_rate = mean_rate(recorder, snn::Stage::kEncoder);
  r.decoder.mean_spike_rate = mean_rate(recorder, snn::Stage::kDecoder);
  const auto dense = count_dense_equivalent(enc, dec);
  auto scaled = [&](const OpCounts& per) {
    OpCounts c;
    const std::uint64_t k = r.inferences;
    c.accumulates = per.accumulates * k;
    c.macs = per.macs * k;
    c.comparisons = per.comparisons * k;
    c.random_draws = per.random_draws * k;
    c.memory_reads = per.memory_reads * k;
    c.memory_writes = per.memory_writes * k;
    return c;
  };
  r.encoder_dense.counts = scaled(dense.encoder);
  r.decoder_dense.counts = scaled(dense.decoder);
  for (StageEnergy* s : {&r.encoder, &r.decoder, &r.encoder_dense, &r.decoder_dense}) {
    s->joules = energy_of(s->counts, table);
  }
  r.encoder_dense.mean_spike_rate = 1.0;
  r.decoder_dense.mean_spike_rate = 1.0;
  return r;
}

std::string format_joules(double joules) {
  const double a = std::abs(joules);
  if (a == 0.0) return "0 J";
  if (a >= 1.0) return fmt::format("{:.4g} J", joules);
  if (a >= 1e-3) return fmt::format("{:.4g} mJ", joules * 1e3);
  if (a >= 1e-6) return fmt::format("{:.4g} uJ", joules * 1e6);
  if (a >= 1e-9) return fmt::format("{:.4g} nJ", joules * 1e9);
  return fmt::format("{:.4g} pJ", joules * 1e12);
}

}  // namespace spikelink::energy
