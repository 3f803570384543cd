#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spikelink/channel.hpp"
#include "spikelink/config.hpp"
#include "spikelink/events.hpp"
#include "spikelink/rng.hpp"
#include "spikelink/snn.hpp"

namespace spikelink::pipeline {

/// Samples stacked into encoder inputs.
struct Batch {
  std::vector<ag::Tensor> patch_steps;  ///< T tensors [B, N, 2P^2]
  std::vector<std::size_t> labels;
  std::size_t size = 0;
};

Batch make_batch(std::span<const events::Sample* const> samples, const snn::EncoderConfig& cfg);

struct LinkSetup {
  channel::LinkParams params;
  ReceiveMode mode = ReceiveMode::kSoft;
};

struct ForwardResult {
  ag::Tensor logits;                     ///< [B, C]
  std::vector<ag::Tensor> encoder_out;   ///< T tensors [B, N, D]
  std::vector<ag::Tensor> transmitted;   ///< K*T tensors [B, N, D]
  std::vector<ag::Tensor> received;      ///< K*T tensors [B, N, D]
};

/// Encoder -> time-hopping -> per-sample serialisation -> channel -> decoder.
///
/// Soft receive feeds S * f + r to the decoder, where f is the per-bit fade
/// exp(-G e) and r the remaining additive part, both held constant, so the
/// gradient through the channel is the fade. Hard receive feeds the detected
/// bits with a straight-through gradient. Sample b of the batch uses
/// channel_rng.split(b).
ForwardResult forward(snn::ModelWeights& weights, const ModelConfig& cfg, const Batch& batch, const LinkSetup& link,
                      const Rng& channel_rng, Rng& attention_rng, const snn::SpikeOptions& opts);

struct EvalResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  [[nodiscard]] double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
};

/// Accuracy over `samples` in fixed batches. Batch i draws its channel from
/// channel_root.split(i) and its attention from attention_root.split(i).
EvalResult evaluate(snn::ModelWeights& weights, const ModelConfig& cfg, std::span<const events::Sample* const> samples,
                    const LinkSetup& link, const Rng& channel_root, const Rng& attention_root, std::size_t batch_size,
                    snn::ForwardRecorder* recorder = nullptr);

/// Link parameters for one training batch.
channel::LinkParams draw_training_link(const channel::LinkParams& base, const ChannelRandomization& rz, Rng& rng);

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  double eval_accuracy = 0.0;  ///< on the fixed link with sigma^2 = 0
};

struct TrainResult {
  snn::ModelWeights best;
  std::size_t best_epoch = 0;
  double best_eval_accuracy = -1.0;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Adam on cross-entropy with the channel in the loop. Keeps the weights
/// with the best eval accuracy on the fixed link at sigma^2 = 0. Throws
/// std::runtime_error on a non-finite loss or a non-binary spike tensor.
TrainResult train(const ExperimentConfig& cfg, const events::Dataset& data, const EpochCallback& on_epoch = {});

/// Model size as stored: parameter scalars.
std::size_t parameter_count(const snn::ModelWeights& weights);

}  // namespace spikelink::pipeline
