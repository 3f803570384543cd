#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spikelink/config.hpp"
#include "spikelink/energy.hpp"
#include "spikelink/events.hpp"
#include "spikelink/pipeline.hpp"
#include "spikelink/snn.hpp"

namespace spikelink::harness {

namespace fs = std::filesystem;

/// Writes `dir/index.json` and one raw int8 file per sequence, [T, H, W].
void save_dataset(const events::Dataset& data, const fs::path& dir);
events::Dataset load_dataset(const fs::path& dir);
/// Loads the dataset and checks it was generated with the same settings.
events::Dataset load_dataset_for(const ExperimentConfig& cfg, const fs::path& dir);

/// Checkpoint of parameters and batch-norm statistics; `manifest` ends in .json.
void save_model(const snn::ModelWeights& weights, const ExperimentConfig& cfg, const fs::path& manifest,
                const std::string& extra_metadata_json = "{}");
snn::ModelWeights load_model(const fs::path& manifest, const ExperimentConfig& cfg);

struct SweepPoint {
  double sigma2g = 0.0;
  std::size_t seed = 0;
  ReceiveMode mode = ReceiveMode::kSoft;
  double accuracy = 0.0;
  std::size_t samples = 0;
};

/// Eval accuracy over cfg.eval.sigma2g_grid x cfg.eval.seeds. The attention
/// stream of a seed is shared by every grid point.
std::vector<SweepPoint> eval_sweep(snn::ModelWeights& weights, const ExperimentConfig& cfg,
                                   const events::Dataset& data, ReceiveMode mode);

/// Records a forward pass over the eval split on the configured link.
energy::EnergyReport measure_energy(snn::ModelWeights& weights, const ExperimentConfig& cfg,
                                    const events::Dataset& data);

struct BerPoint {
  std::string sweep;  ///< "pointing" or "noise"
  double sigma2g = 0.0;
  double noise_floor = 0.0;
  std::size_t bits = 0;
  std::uint64_t errors = 0;
  [[nodiscard]] double ber() const { return bits ? static_cast<double>(errors) / bits : 0.0; }
};

std::vector<BerPoint> ber_sweep(const ExperimentConfig& cfg);

/// Output files of a command plus a one-line JSON summary for stdout.
struct CommandResult {
  std::vector<fs::path> files;
  std::string summary_json;
};

CommandResult generate_dataset(const ExperimentConfig& cfg, const fs::path& out_dir);
/// Trains, then writes model.json/.bin, train_log.csv, eval_sweep.csv,
/// energy.csv, energy.json and run_record.json under out_dir.
CommandResult train(const ExperimentConfig& cfg, const fs::path& out_dir);
CommandResult eval_sweep(const ExperimentConfig& cfg, const fs::path& checkpoint, const fs::path& out_dir);
CommandResult ber(const ExperimentConfig& cfg, const fs::path& out_dir);
CommandResult energy(const ExperimentConfig& cfg, const fs::path& checkpoint, const fs::path& out_dir);

}  // namespace spikelink::harness
