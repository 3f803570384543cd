#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikelink/ops.hpp"

namespace spikelink::modem {

using Bits = std::vector<std::uint8_t>;

struct PpmConfig {
  unsigned order = 4;  ///< M, a power of two >= 2

  void validate() const;
  [[nodiscard]] unsigned bits_per_symbol() const;
};

/// Groups bits into log2(M)-bit big-endian symbols (a trailing remainder is
/// dropped) and emits one M-slot frame per symbol with a single pulse.
Bits ppm_modulate(std::span<const std::uint8_t> bits, const PpmConfig& cfg);

/// Per frame, the slot with the largest value wins; ties (including
/// all-zero frames) go to the lowest index.
Bits ppm_demodulate(std::span<const double> slots, const PpmConfig& cfg);
Bits ppm_demodulate(std::span<const std::uint8_t> slots, const PpmConfig& cfg);

struct SequenceDims {
  std::size_t steps = 0;
  std::size_t tokens = 0;  ///< L
  std::size_t dim = 0;     ///< D

  [[nodiscard]] std::size_t size() const { return steps * tokens * dim; }
  bool operator==(const SequenceDims&) const = default;
};

/// steps x L x D tensor, row-major in (t, l, d).
template <typename T>
struct Sequence {
  SequenceDims dims;
  std::vector<T> data;

  Sequence() = default;
  explicit Sequence(SequenceDims d) : dims(d), data(d.size(), T{}) {}

  T& at(std::size_t t, std::size_t l, std::size_t d) { return data[(t * dims.tokens + l) * dims.dim + d]; }
  const T& at(std::size_t t, std::size_t l, std::size_t d) const {
    return data[(t * dims.tokens + l) * dims.dim + d];
  }
};

/// Binary spike tensors {X^t} or {S^t}.
using SpikeSequence = Sequence<std::uint8_t>;
/// Real-valued received sequences on the soft path.
using SoftSequence = Sequence<double>;

/// Learned time-hopping parameters: a shared K-vector map applied to the
/// scalar spike, plus a per-neuron K-vector bias stored [L][D][K].
struct LthParams {
  std::size_t slots = 4;  ///< K
  std::size_t tokens = 0;
  std::size_t dim = 0;
  std::vector<double> shared_map;  ///< size K
  std::vector<double> bias;        ///< size L*D*K

  void validate() const;
};

/// S[(t-1)K + k, l, d] = step(a[k] X[t, l, d] + bias[l, d, k]), step(0) = 1.
SpikeSequence lth_encode(const SpikeSequence& spikes, const LthParams& params);

/// Graph version of lth_encode for training. `steps` are [B, L, D] tensors
/// (one per encoder timestep), `shared_map` is [K], `bias` is [L, D, K].
/// Returns K*T tensors; in hard mode their values equal lth_encode.
std::vector<ag::Tensor> lth_relaxed(const std::vector<ag::Tensor>& steps, const ag::Tensor& shared_map,
                                    const ag::Tensor& bias, const ag::SurrogateSpec& surrogate,
                                    ag::SpikeMode mode = ag::SpikeMode::kHard);

/// Row-major flattening in (t, l, d); no framing is added.
Bits serialize(const SpikeSequence& sequence);

/// Inverse of serialize. Real-valued input passes through unchanged.
template <typename T>
Sequence<T> deserialize(std::span<const T> stream, SequenceDims dims) {
  if (stream.size() != dims.size()) {
    throw std::invalid_argument("deserialize: stream of length " + std::to_string(stream.size()) +
                                " does not match dims (" + std::to_string(dims.steps) + "," +
                                std::to_string(dims.tokens) + "," + std::to_string(dims.dim) + ")");
  }
  Sequence<T> out;
  out.dims = dims;
  out.data.assign(stream.begin(), stream.end());
  return out;
}

}  // namespace spikelink::modem
