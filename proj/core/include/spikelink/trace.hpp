#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "spikelink/tensor.hpp"

namespace spikelink::snn {

enum class Stage { kEncoder, kDecoder };

std::string_view stage_name(Stage stage);

/// Activity of one synaptic layer (and the neurons behind it) accumulated
/// over every step of every recorded forward pass.
struct LayerTally {
  std::string name;
  Stage stage = Stage::kEncoder;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  bool binary_input = true;          ///< false once any non-{0,1} input was seen
  std::uint64_t input_positions = 0; ///< input entries presented (rows * fan_in per step)
  std::uint64_t active_inputs = 0;   ///< nonzero input entries
  std::uint64_t neuron_updates = 0;  ///< LIF membrane updates
  std::uint64_t comparisons = 0;     ///< bare threshold tests outside LIF neurons
  std::uint64_t random_draws = 0;

  [[nodiscard]] double input_rate() const {
    return input_positions ? static_cast<double>(active_inputs) / static_cast<double>(input_positions) : 0.0;
  }
};

/// Observes a forward pass: synaptic activity per layer for energy
/// accounting, and every spike tensor for binarity checks.
class ForwardRecorder {
 public:
  /// `input` holds the values presented to a layer with the given fan-in
  /// and fan-out; rows = input.size() / fan_in.
  void synapses(std::string_view name, Stage stage, const ag::Tensor& input, std::size_t fan_in,
                std::size_t fan_out);
  void neurons(std::string_view name, Stage stage, std::uint64_t updates);
  void comparisons(std::string_view name, Stage stage, std::uint64_t count);
  void draws(std::string_view name, Stage stage, std::uint64_t count);
  /// Checks that a spike tensor is {0,1}-valued.
  void spikes(std::string_view name, const ag::Tensor& tensor);

  void add_inferences(std::uint64_t n) { inferences_ += n; }
  [[nodiscard]] std::uint64_t inferences() const noexcept { return inferences_; }

  [[nodiscard]] const std::vector<LayerTally>& layers() const noexcept { return layers_; }
  [[nodiscard]] std::uint64_t spike_tensors_seen() const noexcept { return spike_tensors_; }
  [[nodiscard]] std::uint64_t non_binary_tensors() const noexcept { return non_binary_; }
  [[nodiscard]] const std::vector<std::string>& non_binary_names() const noexcept { return non_binary_names_; }

 private:
  LayerTally& layer(std::string_view name, Stage stage);

  std::vector<LayerTally> layers_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::uint64_t inferences_ = 0;
  std::uint64_t spike_tensors_ = 0;
  std::uint64_t non_binary_ = 0;
  std::vector<std::string> non_binary_names_;
};

}  // namespace spikelink::snn
