#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spikelink/channel.hpp"
#include "spikelink/energy.hpp"
#include "spikelink/events.hpp"
#include "spikelink/optim.hpp"
#include "spikelink/snn.hpp"

namespace spikelink {

enum class ReceiveMode {
  kSoft,    ///< normalised photocurrent fed to the decoder
  kHard,    ///< threshold-detected bits fed to the decoder
  kBypass,  ///< no channel; transmitted spikes fed straight through
};

std::string_view receive_mode_name(ReceiveMode mode);
ReceiveMode parse_receive_mode(std::string_view name);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Channel parameter ranges redrawn for every training batch. Gains and
/// losses are uniform in dB.
struct ChannelRandomization {
  Range responsivity{0.6, 0.9};
  Range amplifier_gain_db{20.0, 40.0};
  Range free_space_loss_db{10.0, 15.0};
  Range pointing_variance{0.0, 5e-7};
};

struct TrainingConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  ag::AdamOptions adam{};
  ReceiveMode receive_mode = ReceiveMode::kSoft;
  ChannelRandomization randomization{};
};

struct EvalConfig {
  std::vector<double> sigma2g_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::size_t seeds = 3;
  // The deployed receiver thresholds each bit; training still sees soft values.
  ReceiveMode receive_mode = ReceiveMode::kHard;
};

struct BerConfig {
  std::vector<double> sigma2g_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> noise_floor_grid{1e-6, 1e-5, 1e-4};
  std::size_t bits = 1'000'000;
};

struct ModelConfig {
  snn::EncoderConfig encoder{};
  snn::DecoderConfig decoder{};
  snn::LifParams lif{};
  ag::SurrogateSpec surrogate{};
};

struct ExperimentConfig {
  std::uint64_t seed = 1;

  std::size_t classes = 4;
  std::size_t per_class = 100;
  events::DvsConfig dvs{};
  std::string dataset_path = "dataset";

  ModelConfig model{};

  /// Evaluation link; pointing_variance is overridden by each sweep point.
  channel::LinkParams link{};
  TrainingConfig training{};
  EvalConfig eval{};
  BerConfig ber{};
  energy::EnergyTable energy_table{};

  /// Throws std::invalid_argument describing the first broken invariant.
  void validate() const;
};

/// Desk-scale defaults (32x32 crops, T = 5, four classes).
ExperimentConfig default_config();

/// Parses JSON text on top of the defaults. `_db` keys are converted to
/// linear factors here and nowhere else. Unknown keys are rejected.
ExperimentConfig config_from_json(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the resolved config: sorted keys, linear units.
std::string config_to_json(const ExperimentConfig& cfg);

/// 16 hex digits of FNV-1a over config_to_json; insensitive to key order
/// and to dB-vs-linear spelling of the same value.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace spikelink
