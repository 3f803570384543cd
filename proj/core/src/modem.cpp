#include "spikelink/modem.hpp"

#include <algorithm>
#include <bit>

namespace spikelink::modem {

void PpmConfig::validate() const {
  if (order < 2 || !std::has_single_bit(order)) {
    throw std::invalid_argument("PPM order must be a power of two >= 2, got " + std::to_string(order));
  }
}

unsigned PpmConfig::bits_per_symbol() const {
  validate();
  return static_cast<unsigned>(std::countr_zero(order));
}

Bits ppm_modulate(std::span<const std::uint8_t> bits, const PpmConfig& cfg) {
  const unsigned width = cfg.bits_per_symbol();
  if (bits.size() < width) {
    throw std::invalid_argument("ppm_modulate: need at least " + std::to_string(width) + " bits");
  }
  const std::size_t frames = bits.size() / width;
  Bits out(frames * cfg.order, 0);
  for (std::size_t f = 0; f < frames; ++f) {
    unsigned symbol = 0;
    for (unsigned b = 0; b < width; ++b) {
      const auto bit = bits[f * width + b];
      if (bit > 1) throw std::invalid_argument("ppm_modulate: non-binary input");
      symbol = (symbol << 1) | bit;
    }
    out[f * cfg.order + symbol] = 1;
  }
  return out;
}

namespace {

template <typename T>
Bits demodulate_impl(std::span<const T> slots, const PpmConfig& cfg) {
  const unsigned width = cfg.bits_per_symbol();
  if (slots.size() % cfg.order != 0) {
    throw std::invalid_argument("ppm_demodulate: length " + std::to_string(slots.size()) +
                                " is not a multiple of M=" + std::to_string(cfg.order));
  }
  const std::size_t frames = slots.size() / cfg.order;
  Bits out(frames * width);
  for (std::size_t f = 0; f < frames; ++f) {
    const auto frame = slots.subspan(f * cfg.order, cfg.order);
    // max_element returns the first maximum, which is the tie-break we want.
    const auto symbol = static_cast<unsigned>(std::max_element(frame.begin(), frame.end()) - frame.begin());
    for (unsigned b = 0; b < width; ++b) out[f * width + b] = (symbol >> (width - 1 - b)) & 1U;
  }
  return out;
}

}  // namespace

Bits ppm_demodulate(std::span<const double> slots, const PpmConfig& cfg) { return demodulate_impl(slots, cfg); }

Bits ppm_demodulate(std::span<const std::uint8_t> slots, const PpmConfig& cfg) {
  return demodulate_impl(slots, cfg);
}

void LthParams::validate() const {
  if (slots < 1) throw std::invalid_argument("LTH expansion factor must be >= 1");
  if (shared_map.size() != slots) throw std::invalid_argument("LTH shared map must have K entries");
  if (bias.size() != tokens * dim * slots) throw std::invalid_argument("LTH bias must have L*D*K entries");
}

SpikeSequence lth_encode(const SpikeSequence& spikes, const LthParams& params) {
  params.validate();
  if (spikes.dims.tokens != params.tokens || spikes.dims.dim != params.dim) {
    throw std::invalid_argument("lth_encode: spike tensor shape does not match LTH parameters");
  }
  const std::size_t k_slots = params.slots;
  SpikeSequence out(SequenceDims{spikes.dims.steps * k_slots, spikes.dims.tokens, spikes.dims.dim});
  for (std::size_t t = 0; t < spikes.dims.steps; ++t) {
    for (std::size_t l = 0; l < params.tokens; ++l) {
      for (std::size_t d = 0; d < params.dim; ++d) {
        const double x = spikes.at(t, l, d);
        const double* eps = params.bias.data() + (l * params.dim + d) * k_slots;
        for (std::size_t k = 0; k < k_slots; ++k) {
          out.at(t * k_slots + k, l, d) = params.shared_map[k] * x + eps[k] >= 0.0 ? 1 : 0;
        }
      }
    }
  }
  return out;
}

std::vector<ag::Tensor> lth_relaxed(const std::vector<ag::Tensor>& steps, const ag::Tensor& shared_map,
                                    const ag::Tensor& bias, const ag::SurrogateSpec& surrogate, ag::SpikeMode mode) {
  const std::size_t k_slots = shared_map.size();
  std::vector<ag::Tensor> out;
  out.reserve(steps.size() * k_slots);
  for (const auto& x : steps) {
    for (std::size_t k = 0; k < k_slots; ++k) {
      out.push_back(ag::heaviside(ag::time_hop_preactivation(x, shared_map, bias, k), surrogate, mode));
    }
  }
  return out;
}

Bits serialize(const SpikeSequence& sequence) { return sequence.data; }

}  // namespace spikelink::modem
