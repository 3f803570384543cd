#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "spikelink/modem.hpp"
#include "spikelink/ops.hpp"
#include "spikelink/rng.hpp"
#include "spikelink/trace.hpp"

namespace spikelink::snn {

struct LifParams {
  double beta = 0.9;       ///< membrane decay
  double threshold = 1.0;  ///< V_thresh
};

/// Membrane potential of one population. An undefined potential means zero.
struct LifState {
  LifParams params;
  ag::Tensor potential;

  LifState() = default;
  explicit LifState(LifParams p) : params(p) {}
  void reset() { potential = ag::Tensor(); }
};

struct SpikeOptions {
  ag::SurrogateSpec surrogate;
  ag::SpikeMode mode = ag::SpikeMode::kHard;
  bool training = false;               ///< batch statistics in batch norm
  ForwardRecorder* recorder = nullptr;
};

/// V- = beta V+ + I;  O = step(V- - V_thresh);  V+ = V- (1 - O).
ag::Tensor lif_step(LifState& state, const ag::Tensor& current, const SpikeOptions& opts);

/// Elementwise a + b - a*b: logical OR on {0,1} inputs.
ag::Tensor saturating_or(const ag::Tensor& a, const ag::Tensor& b);

struct EncoderConfig {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t patch = 8;
  std::size_t dim = 32;     ///< token dimension D
  std::size_t layers = 2;   ///< L_E
  std::size_t timesteps = 5;
  std::size_t slots = 4;    ///< LTH expansion K

  void validate() const;
  [[nodiscard]] std::size_t tokens() const { return (height / patch) * (width / patch); }
  [[nodiscard]] std::size_t patch_features() const { return 2 * patch * patch; }
};

struct DecoderConfig {
  std::size_t embed_dim = 32;  ///< D_E
  std::size_t heads = 4;       ///< N_H
  std::size_t layers = 1;      ///< L_D
  std::size_t ffn_dim = 64;
  std::size_t classes = 4;

  void validate() const;
  [[nodiscard]] std::size_t head_dim() const { return embed_dim / heads; }
};

struct BatchNormLayer {
  ag::Tensor gamma;
  ag::Tensor beta;
  ag::BatchNormStats stats;
};

struct MixerLayerWeights {
  ag::Tensor value_proj;    ///< W_V [D, D]
  BatchNormLayer value_bn;
  ag::Tensor token_mix;     ///< W_TM [N, N]
  ag::Tensor channel_mix;   ///< W_CM [D, D]
  ag::Tensor channel_bias;  ///< eps_CM [D]
  BatchNormLayer channel_bn;
};

struct EncoderWeights {
  ag::Tensor patch_proj;  ///< [2P^2, D]
  ag::Tensor patch_bias;  ///< [D]
  BatchNormLayer patch_bn;
  std::vector<MixerLayerWeights> layers;
  ag::Tensor lth_map;   ///< [K]
  ag::Tensor lth_bias;  ///< [N, D, K]
};

struct AttentionHead {
  ag::Tensor query;  ///< [D_E, D_K]
  ag::Tensor key;
  ag::Tensor value;
};

struct SvitLayerWeights {
  std::vector<AttentionHead> heads;
  ag::Tensor ffn_in;        ///< W_1 [D_E, F]
  ag::Tensor ffn_in_bias;   ///< eps_1 [F]
  ag::Tensor ffn_out;       ///< W_2 [F, D_E]
  ag::Tensor ffn_out_bias;  ///< eps_2 [D_E]
};

struct DecoderWeights {
  ag::Tensor embed;       ///< W_E [D, D_E]
  ag::Tensor positional;  ///< P_E [L, D_E]
  std::vector<SvitLayerWeights> layers;
  ag::Tensor classifier;  ///< W_cls [D_E, C]
};

struct ModelWeights {
  EncoderWeights encoder;
  DecoderWeights decoder;

  /// Every trainable tensor with a stable checkpoint name, in a fixed order.
  [[nodiscard]] std::vector<std::pair<std::string, ag::Tensor>> named_parameters() const;
  [[nodiscard]] std::vector<ag::Tensor> parameters() const;
  /// Batch-norm running statistics.
  [[nodiscard]] std::vector<std::pair<std::string, std::vector<double>*>> named_buffers();
  /// Deep copy (fresh leaves with identical values and statistics).
  [[nodiscard]] ModelWeights clone() const;
};

/// Scaled-uniform initialisation. Same (configs, seed) -> same weights.
ModelWeights init_weights(const EncoderConfig& enc, const DecoderConfig& dec, Rng rng);
/// All-zero weights and biases (batch-norm gamma = 1).
ModelWeights zero_weights(const EncoderConfig& enc, const DecoderConfig& dec);

modem::LthParams lth_params(const EncoderWeights& weights);

/// Per-sequence LIF state of the encoder. Fresh for every sequence.
struct EncoderState {
  LifState patch;
  struct Mixer {
    LifState value, token, channel;
  };
  std::vector<Mixer> layers;

  EncoderState(const EncoderConfig& cfg, LifParams lif);
};

/// Event frames as patch vectors: for one frame H x W in {-1,0,1}, returns
/// [N, 2P^2] with the positive-polarity channel first, pixels row-major.
std::vector<double> patchify(std::span<const std::int8_t> frame, const EncoderConfig& cfg);

/// patches [B, N, 2P^2] -> binary tokens [B, N, D] via affine -> BN -> LIF.
ag::Tensor patch_split(const ag::Tensor& patches, EncoderWeights& weights, LifState& state,
                       const SpikeOptions& opts);

/// One STMixer block on x [B, N, D]:
///   X  = OR(X~, LIF(W_TM . LIF(BN(X~ W_V))))
///   X <- OR(X,  LIF(BN(X W_CM + eps_CM)))
ag::Tensor stmixer_block(const ag::Tensor& x, MixerLayerWeights& weights, EncoderState::Mixer& state,
                         std::size_t layer_index, const SpikeOptions& opts);

/// patch_steps: T tensors [B, N, 2P^2]. Returns T binary tensors [B, N, D].
std::vector<ag::Tensor> encoder_forward(const std::vector<ag::Tensor>& patch_steps, EncoderWeights& weights,
                                        const EncoderConfig& cfg, LifParams lif, const SpikeOptions& opts);

struct DecoderState {
  LifState embed;
  struct Layer {
    std::vector<LifState> query, key, value;
    LifState ffn_in, ffn_out;
  };
  std::vector<Layer> layers;

  DecoderState(const DecoderConfig& cfg, LifParams lif);
};

/// E = LIF(S W_E + P_E) for S [B, L, D] (binary or real).
ag::Tensor embed(const ag::Tensor& received, const DecoderWeights& weights, LifState& state,
                 const SpikeOptions& opts);

/// Stochastic spiking attention for one head on Q, K, V [B, L, D_K]:
///   M ~ Bern(Q K^T / D_K),  A ~ Bern(M V / L).
ag::Tensor stochastic_attention(const ag::Tensor& q, const ag::Tensor& k, const ag::Tensor& v, Rng& rng,
                                const SpikeOptions& opts, std::string_view trace_name = {});

/// All heads of one layer on E [B, L, D_E]; heads concatenated.
ag::Tensor ssa_attention(const ag::Tensor& e, const SvitLayerWeights& weights, DecoderState::Layer& state,
                         std::size_t layer_index, Rng& rng, const SpikeOptions& opts);

/// Attention followed by the two-layer spiking feed-forward network.
ag::Tensor svit_layer(const ag::Tensor& e, const SvitLayerWeights& weights, DecoderState::Layer& state,
                      std::size_t layer_index, Rng& rng, const SpikeOptions& opts);

/// z = (1/T') sum_t mean_tokens(E^t) W_cls over T' >= 1 steps of [B, L, D_E].
ag::Tensor pool_classify(const std::vector<ag::Tensor>& outputs, const ag::Tensor& classifier,
                         const SpikeOptions& opts = {});

/// received: K*T tensors [B, L, D]. Returns logits [B, C].
ag::Tensor decoder_forward(const std::vector<ag::Tensor>& received, const DecoderWeights& weights,
                           const DecoderConfig& cfg, LifParams lif, Rng& rng, const SpikeOptions& opts);

}  // namespace spikelink::snn
