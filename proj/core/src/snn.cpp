#include "spikelink/snn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spikelink::snn {

using ag::Tensor;

// ---------------------------------------------------------------- recorder

std::string_view stage_name(Stage stage) { return stage == Stage::kEncoder ? "encoder" : "decoder"; }

LayerTally& ForwardRecorder::layer(std::string_view name, Stage stage) {
  auto it = index_.find(name);
  if (it != index_.end()) return layers_[it->second];
  index_.emplace(std::string(name), layers_.size());
  LayerTally& t = layers_.emplace_back();
  t.name = std::string(name);
  t.stage = stage;
  return t;
}

void ForwardRecorder::synapses(std::string_view name, Stage stage, const Tensor& input, std::size_t fan_in,
                               std::size_t fan_out) {
  LayerTally& t = layer(name, stage);
  t.fan_in = fan_in;
  t.fan_out = fan_out;
  t.input_positions += input.size();
  for (double v : input.values()) {
    if (v != 0.0) ++t.active_inputs;
    if (v != 0.0 && v != 1.0) t.binary_input = false;
  }
}

void ForwardRecorder::neurons(std::string_view name, Stage stage, std::uint64_t updates) {
  layer(name, stage).neuron_updates += updates;
}

void ForwardRecorder::comparisons(std::string_view name, Stage stage, std::uint64_t count) {
  layer(name, stage).comparisons += count;
}

void ForwardRecorder::draws(std::string_view name, Stage stage, std::uint64_t count) {
  layer(name, stage).random_draws += count;
}

void ForwardRecorder::spikes(std::string_view name, const Tensor& tensor) {
  ++spike_tensors_;
  for (double v : tensor.values()) {
    if (v != 0.0 && v != 1.0) {
      ++non_binary_;
      if (non_binary_names_.size() < 32) non_binary_names_.emplace_back(name);
      return;
    }
  }
}

// ---------------------------------------------------------------- neurons

Tensor lif_step(LifState& state, const Tensor& current, const SpikeOptions& opts) {
  Tensor v_minus = current;
  if (state.potential.defined()) {
    if (state.potential.shape() != current.shape()) {
      throw std::invalid_argument("lif_step: input " + ag::shape_string(current.shape()) +
                                  " does not match state " + ag::shape_string(state.potential.shape()));
    }
    v_minus = ag::add(ag::scale(state.potential, state.params.beta), current);
  }
  Tensor spikes = ag::heaviside(ag::add_scalar(v_minus, -state.params.threshold), opts.surrogate, opts.mode);
  state.potential = ag::mul(v_minus, ag::one_minus(spikes));
  return spikes;
}

Tensor saturating_or(const Tensor& a, const Tensor& b) { return ag::sub(ag::add(a, b), ag::mul(a, b)); }

// ---------------------------------------------------------------- configs

void EncoderConfig::validate() const {
  if (height == 0 || width == 0 || patch == 0 || dim == 0 || layers == 0 || timesteps == 0 || slots == 0) {
    throw std::invalid_argument("encoder config: all sizes must be positive");
  }
  if (height % patch != 0 || width % patch != 0) {
    throw std::invalid_argument("encoder config: patch size " + std::to_string(patch) + " must divide " +
                                std::to_string(height) + "x" + std::to_string(width));
  }
}

void DecoderConfig::validate() const {
  if (embed_dim == 0 || heads == 0 || layers == 0 || ffn_dim == 0 || classes == 0) {
    throw std::invalid_argument("decoder config: all sizes must be positive");
  }
  if (embed_dim % heads != 0) {
    throw std::invalid_argument("decoder config: heads (" + std::to_string(heads) + ") must divide embed dim (" +
                                std::to_string(embed_dim) + ")");
  }
}

// ---------------------------------------------------------------- weights

namespace {

template <typename W, typename F>
void visit_parameters(W& w, F&& f) {
  auto& e = w.encoder;
  f("enc.patch.w", e.patch_proj);
  f("enc.patch.b", e.patch_bias);
  f("enc.patch.bn.gamma", e.patch_bn.gamma);
  f("enc.patch.bn.beta", e.patch_bn.beta);
  for (std::size_t i = 0; i < e.layers.size(); ++i) {
    auto& l = e.layers[i];
    const std::string p = "enc.l" + std::to_string(i) + ".";
    f(p + "value.w", l.value_proj);
    f(p + "value.bn.gamma", l.value_bn.gamma);
    f(p + "value.bn.beta", l.value_bn.beta);
    f(p + "token.w", l.token_mix);
    f(p + "channel.w", l.channel_mix);
    f(p + "channel.b", l.channel_bias);
    f(p + "channel.bn.gamma", l.channel_bn.gamma);
    f(p + "channel.bn.beta", l.channel_bn.beta);
  }
  f("enc.lth.map", e.lth_map);
  f("enc.lth.bias", e.lth_bias);
  auto& d = w.decoder;
  f("dec.embed.w", d.embed);
  f("dec.embed.pos", d.positional);
  for (std::size_t i = 0; i < d.layers.size(); ++i) {
    auto& l = d.layers[i];
    const std::string p = "dec.l" + std::to_string(i) + ".";
    for (std::size_t h = 0; h < l.heads.size(); ++h) {
      const std::string hp = p + "h" + std::to_string(h) + ".";
      f(hp + "q", l.heads[h].query);
      f(hp + "k", l.heads[h].key);
      f(hp + "v", l.heads[h].value);
    }
    f(p + "ffn_in.w", l.ffn_in);
    f(p + "ffn_in.b", l.ffn_in_bias);
    f(p + "ffn_out.w", l.ffn_out);
    f(p + "ffn_out.b", l.ffn_out_bias);
  }
  f("dec.cls.w", d.classifier);
}

template <typename W, typename F>
void visit_batch_norms(W& w, F&& f) {
  f("enc.patch.bn", w.encoder.patch_bn);
  for (std::size_t i = 0; i < w.encoder.layers.size(); ++i) {
    const std::string p = "enc.l" + std::to_string(i) + ".";
    f(p + "value.bn", w.encoder.layers[i].value_bn);
    f(p + "channel.bn", w.encoder.layers[i].channel_bn);
  }
}

/// Allocates every tensor with the right shape; `fill` supplies the values.
template <typename Fill>
ModelWeights build_weights(const EncoderConfig& enc, const DecoderConfig& dec, Fill&& fill) {
  enc.validate();
  dec.validate();
  const std::size_t n = enc.tokens();
  const std::size_t d = enc.dim;
  const std::size_t de = dec.embed_dim;
  const std::size_t dk = dec.head_dim();
  auto bn = [&](const std::string& name, std::size_t features) {
    BatchNormLayer layer;
    layer.gamma = fill(name + ".gamma", ag::Shape{features}, 0);
    layer.beta = fill(name + ".beta", ag::Shape{features}, 0);
    layer.stats = ag::BatchNormStats(features);
    return layer;
  };
  ModelWeights w;
  auto& e = w.encoder;
  e.patch_proj = fill("enc.patch.w", ag::Shape{enc.patch_features(), d}, enc.patch_features());
  e.patch_bias = fill("enc.patch.b", ag::Shape{d}, 0);
  e.patch_bn = bn("enc.patch.bn", d);
  for (std::size_t i = 0; i < enc.layers; ++i) {
    const std::string p = "enc.l" + std::to_string(i) + ".";
    MixerLayerWeights l;
    l.value_proj = fill(p + "value.w", ag::Shape{d, d}, d);
    l.value_bn = bn(p + "value.bn", d);
    l.token_mix = fill(p + "token.w", ag::Shape{n, n}, n);
    l.channel_mix = fill(p + "channel.w", ag::Shape{d, d}, d);
    l.channel_bias = fill(p + "channel.b", ag::Shape{d}, 0);
    l.channel_bn = bn(p + "channel.bn", d);
    e.layers.push_back(std::move(l));
  }
  e.lth_map = fill("enc.lth.map", ag::Shape{enc.slots}, 0);
  e.lth_bias = fill("enc.lth.bias", ag::Shape{n, d, enc.slots}, 0);

  auto& dd = w.decoder;
  dd.embed = fill("dec.embed.w", ag::Shape{d, de}, d);
  dd.positional = fill("dec.embed.pos", ag::Shape{n, de}, 0);
  for (std::size_t i = 0; i < dec.layers; ++i) {
    const std::string p = "dec.l" + std::to_string(i) + ".";
    SvitLayerWeights l;
    for (std::size_t h = 0; h < dec.heads; ++h) {
      const std::string hp = p + "h" + std::to_string(h) + ".";
      l.heads.push_back({fill(hp + "q", ag::Shape{de, dk}, de), fill(hp + "k", ag::Shape{de, dk}, de),
                         fill(hp + "v", ag::Shape{de, dk}, de)});
    }
    l.ffn_in = fill(p + "ffn_in.w", ag::Shape{de, dec.ffn_dim}, de);
    l.ffn_in_bias = fill(p + "ffn_in.b", ag::Shape{dec.ffn_dim}, 0);
    l.ffn_out = fill(p + "ffn_out.w", ag::Shape{dec.ffn_dim, de}, dec.ffn_dim);
    l.ffn_out_bias = fill(p + "ffn_out.b", ag::Shape{de}, 0);
    dd.layers.push_back(std::move(l));
  }
  dd.classifier = fill("dec.cls.w", ag::Shape{de, dec.classes}, de);
  return w;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> ModelWeights::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  visit_parameters(*this, [&](const std::string& name, const Tensor& t) { out.emplace_back(name, t); });
  return out;
}

std::vector<Tensor> ModelWeights::parameters() const {
  std::vector<Tensor> out;
  visit_parameters(*this, [&](const std::string&, const Tensor& t) { out.push_back(t); });
  return out;
}

std::vector<std::pair<std::string, std::vector<double>*>> ModelWeights::named_buffers() {
  std::vector<std::pair<std::string, std::vector<double>*>> out;
  visit_batch_norms(*this, [&](const std::string& name, BatchNormLayer& bn) {
    out.emplace_back(name + ".running_mean", &bn.stats.running_mean);
    out.emplace_back(name + ".running_var", &bn.stats.running_var);
  });
  return out;
}

ModelWeights ModelWeights::clone() const {
  ModelWeights copy = *this;
  visit_parameters(copy, [](const std::string&, Tensor& t) {
    t = Tensor::from_values(t.shape(), std::vector<double>(t.values().begin(), t.values().end()), true);
  });
  return copy;
}

ModelWeights init_weights(const EncoderConfig& enc, const DecoderConfig& dec, Rng rng) {
  std::uint64_t counter = 0;
  auto fill = [&](const std::string& name, ag::Shape shape, std::size_t fan_in) {
    Rng r = rng.split(counter++);
    const std::size_t n = ag::shape_size(shape);
    std::vector<double> v(n, 0.0);
    if (ends_with(name, ".gamma")) {
      std::fill(v.begin(), v.end(), 1.0);
    } else if (name == "enc.lth.map") {
      std::fill(v.begin(), v.end(), 1.0);
    } else if (name == "enc.lth.bias") {
      // Starts close to the identity code: slot k fires iff the spike is 1.
      for (double& x : v) x = -0.5 + r.uniform(-0.2, 0.2);
    } else if (name == "dec.embed.pos") {
      for (double& x : v) x = r.uniform(-0.5, 0.5);
    } else if (name.find("ffn_") != std::string::npos && ends_with(name, ".b")) {
      // A positive drive keeps the feed-forward neurons active from the start.
      std::fill(v.begin(), v.end(), 0.25);
    } else if (fan_in > 0) {
      // Batch norm rescales the encoder currents; decoder and token-mixing
      // currents feed LIF neurons directly and get a larger gain.
      const bool normalised = name.rfind("enc.", 0) == 0 && name.find(".token.") == std::string::npos;
      const double gain = normalised ? 1.0 : 2.0;
      const double bound = gain * std::sqrt(3.0 / static_cast<double>(fan_in));
      for (double& x : v) x = r.uniform(-bound, bound);
    }
    return Tensor::from_values(std::move(shape), std::move(v), true);
  };
  return build_weights(enc, dec, fill);
}

ModelWeights zero_weights(const EncoderConfig& enc, const DecoderConfig& dec) {
  auto fill = [](const std::string& name, ag::Shape shape, std::size_t) {
    return Tensor::filled(std::move(shape), ends_with(name, ".gamma") ? 1.0 : 0.0, true);
  };
  return build_weights(enc, dec, fill);
}

modem::LthParams lth_params(const EncoderWeights& weights) {
  modem::LthParams p;
  p.slots = weights.lth_map.size();
  p.tokens = weights.lth_bias.dim(0);
  p.dim = weights.lth_bias.dim(1);
  p.shared_map.assign(weights.lth_map.values().begin(), weights.lth_map.values().end());
  p.bias.assign(weights.lth_bias.values().begin(), weights.lth_bias.values().end());
  return p;
}

// ---------------------------------------------------------------- encoder

EncoderState::EncoderState(const EncoderConfig& cfg, LifParams lif) : patch(lif) {
  for (std::size_t i = 0; i < cfg.layers; ++i) layers.push_back({LifState(lif), LifState(lif), LifState(lif)});
}

std::vector<double> patchify(std::span<const std::int8_t> frame, const EncoderConfig& cfg) {
  if (frame.size() != cfg.height * cfg.width) {
    throw std::invalid_argument("patchify: frame has " + std::to_string(frame.size()) + " pixels, expected " +
                                std::to_string(cfg.height * cfg.width));
  }
  const std::size_t p = cfg.patch;
  const std::size_t cols = cfg.width / p;
  const std::size_t features = cfg.patch_features();
  std::vector<double> out(cfg.tokens() * features, 0.0);
  for (std::size_t r = 0; r < cfg.height; ++r) {
    for (std::size_t c = 0; c < cfg.width; ++c) {
      const int v = frame[r * cfg.width + c];
      if (v == 0) continue;
      const std::size_t token = (r / p) * cols + c / p;
      const std::size_t pixel = (r % p) * p + c % p;
      const std::size_t channel = v > 0 ? 0 : 1;
      out[token * features + channel * p * p + pixel] = 1.0;
    }
  }
  return out;
}

namespace {

void observe_spikes(const SpikeOptions& opts, std::string_view name, const Tensor& spikes, Stage stage,
                    bool lif = true) {
  if (!opts.recorder) return;
  if (lif) opts.recorder->neurons(name, stage, spikes.size());
  opts.recorder->spikes(name, spikes);
}

}  // namespace

Tensor patch_split(const Tensor& patches, EncoderWeights& weights, LifState& state, const SpikeOptions& opts) {
  if (patches.rank() != 3 || patches.dim(2) != weights.patch_proj.dim(0)) {
    throw std::invalid_argument("patch_split: expected [B, N, " + std::to_string(weights.patch_proj.dim(0)) +
                                "], got " + ag::shape_string(patches.shape()));
  }
  if (opts.recorder) {
    opts.recorder->synapses("enc.patch", Stage::kEncoder, patches, patches.dim(2), weights.patch_proj.dim(1));
  }
  Tensor current = ag::batch_norm(ag::affine(patches, weights.patch_proj, weights.patch_bias), weights.patch_bn.gamma,
                                  weights.patch_bn.beta, weights.patch_bn.stats, opts.training);
  Tensor spikes = lif_step(state, current, opts);
  observe_spikes(opts, "enc.patch", spikes, Stage::kEncoder);
  return spikes;
}

Tensor stmixer_block(const Tensor& x, MixerLayerWeights& w, EncoderState::Mixer& state, std::size_t layer_index,
                     const SpikeOptions& opts) {
  if (x.rank() != 3 || x.dim(2) != w.value_proj.dim(0) || x.dim(1) != w.token_mix.dim(1)) {
    throw std::invalid_argument("stmixer_block: input " + ag::shape_string(x.shape()) +
                                " does not match layer weights");
  }
  const std::string p = "enc.l" + std::to_string(layer_index) + ".";
  auto* rec = opts.recorder;
  const std::size_t d = x.dim(2);
  const std::size_t n = x.dim(1);

  // Token mixing.
  if (rec) rec->synapses(p + "value", Stage::kEncoder, x, d, d);
  Tensor value = lif_step(state.value,
                          ag::batch_norm(ag::matmul(x, w.value_proj), w.value_bn.gamma, w.value_bn.beta,
                                         w.value_bn.stats, opts.training),
                          opts);
  observe_spikes(opts, p + "value", value, Stage::kEncoder);
  if (rec) rec->synapses(p + "token", Stage::kEncoder, value, n, n);
  Tensor mixed = lif_step(state.token, ag::mix_rows(w.token_mix, value), opts);
  observe_spikes(opts, p + "token", mixed, Stage::kEncoder);
  Tensor merged = saturating_or(x, mixed);
  observe_spikes(opts, p + "residual1", merged, Stage::kEncoder, false);

  // Channel mixing.
  if (rec) rec->synapses(p + "channel", Stage::kEncoder, merged, d, d);
  Tensor channel = lif_step(state.channel,
                            ag::batch_norm(ag::affine(merged, w.channel_mix, w.channel_bias), w.channel_bn.gamma,
                                           w.channel_bn.beta, w.channel_bn.stats, opts.training),
                            opts);
  observe_spikes(opts, p + "channel", channel, Stage::kEncoder);
  Tensor out = saturating_or(merged, channel);
  observe_spikes(opts, p + "residual2", out, Stage::kEncoder, false);
  return out;
}

std::vector<Tensor> encoder_forward(const std::vector<Tensor>& patch_steps, EncoderWeights& weights,
                                    const EncoderConfig& cfg, LifParams lif, const SpikeOptions& opts) {
  if (patch_steps.empty()) throw std::invalid_argument("encoder_forward: no timesteps");
  if (weights.layers.size() != cfg.layers) throw std::invalid_argument("encoder_forward: layer count mismatch");
  EncoderState state(cfg, lif);
  std::vector<Tensor> out;
  out.reserve(patch_steps.size());
  for (const auto& step : patch_steps) {
    Tensor x = patch_split(step, weights, state.patch, opts);
    for (std::size_t i = 0; i < weights.layers.size(); ++i) {
      x = stmixer_block(x, weights.layers[i], state.layers[i], i, opts);
    }
    out.push_back(std::move(x));
  }
  return out;
}

// ---------------------------------------------------------------- decoder

DecoderState::DecoderState(const DecoderConfig& cfg, LifParams lif) : embed(lif) {
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    Layer l;
    l.query.assign(cfg.heads, LifState(lif));
    l.key.assign(cfg.heads, LifState(lif));
    l.value.assign(cfg.heads, LifState(lif));
    l.ffn_in = LifState(lif);
    l.ffn_out = LifState(lif);
    layers.push_back(std::move(l));
  }
}

Tensor embed(const Tensor& received, const DecoderWeights& weights, LifState& state, const SpikeOptions& opts) {
  if (received.rank() != 3 || received.dim(2) != weights.embed.dim(0) ||
      received.dim(1) != weights.positional.dim(0)) {
    throw std::invalid_argument("embed: input " + ag::shape_string(received.shape()) +
                                " does not match embedding weights");
  }
  if (opts.recorder) {
    opts.recorder->synapses("dec.embed", Stage::kDecoder, received, received.dim(2), weights.embed.dim(1));
  }
  Tensor spikes = lif_step(state, ag::add(ag::matmul(received, weights.embed), weights.positional), opts);
  observe_spikes(opts, "dec.embed", spikes, Stage::kDecoder);
  return spikes;
}

Tensor stochastic_attention(const Tensor& q, const Tensor& k, const Tensor& v, Rng& rng, const SpikeOptions& opts,
                            std::string_view trace_name) {
  if (q.rank() != 3 || q.shape() != k.shape() || q.shape() != v.shape()) {
    throw std::invalid_argument("stochastic_attention: Q, K, V must share shape [B, L, D_K]");
  }
  const std::size_t tokens = q.dim(1);
  const std::size_t head_dim = q.dim(2);
  auto* rec = trace_name.empty() ? nullptr : opts.recorder;
  const std::string name(trace_name);

  if (rec) rec->synapses(name + ".qk", Stage::kDecoder, q, head_dim, tokens);
  Tensor attend_p = ag::scale(ag::batched_matmul(q, k, /*transpose_b=*/true), 1.0 / static_cast<double>(head_dim));
  Tensor mask = ag::bernoulli_ste(attend_p, rng, opts.mode);
  if (rec) {
    rec->draws(name + ".qk", Stage::kDecoder, mask.size());
    rec->spikes(name + ".mask", mask);
    rec->synapses(name + ".mv", Stage::kDecoder, mask, tokens, head_dim);
  }
  Tensor output_p = ag::scale(ag::batched_matmul(mask, v), 1.0 / static_cast<double>(tokens));
  Tensor out = ag::bernoulli_ste(output_p, rng, opts.mode);
  if (rec) {
    rec->draws(name + ".mv", Stage::kDecoder, out.size());
    rec->spikes(name + ".attn", out);
  }
  return out;
}

Tensor ssa_attention(const Tensor& e, const SvitLayerWeights& weights, DecoderState::Layer& state,
                     std::size_t layer_index, Rng& rng, const SpikeOptions& opts) {
  const std::size_t heads = weights.heads.size();
  if (heads == 0 || e.rank() != 3) throw std::invalid_argument("ssa_attention: bad input or no heads");
  std::size_t total = 0;
  for (const auto& h : weights.heads) total += h.query.dim(1);
  if (total != e.dim(2)) {
    throw std::invalid_argument("ssa_attention: heads x head dim (" + std::to_string(total) +
                                ") must equal embed dim (" + std::to_string(e.dim(2)) + ")");
  }
  auto* rec = opts.recorder;
  std::vector<Tensor> parts;
  parts.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const auto& w = weights.heads[h];
    const std::string p = "dec.l" + std::to_string(layer_index) + ".h" + std::to_string(h);
    const std::size_t dk = w.query.dim(1);
    if (rec) {
      rec->synapses(p + ".q", Stage::kDecoder, e, e.dim(2), dk);
      rec->synapses(p + ".k", Stage::kDecoder, e, e.dim(2), dk);
      rec->synapses(p + ".v", Stage::kDecoder, e, e.dim(2), dk);
    }
    Tensor q = lif_step(state.query[h], ag::matmul(e, w.query), opts);
    Tensor k = lif_step(state.key[h], ag::matmul(e, w.key), opts);
    Tensor v = lif_step(state.value[h], ag::matmul(e, w.value), opts);
    observe_spikes(opts, p + ".q", q, Stage::kDecoder);
    observe_spikes(opts, p + ".k", k, Stage::kDecoder);
    observe_spikes(opts, p + ".v", v, Stage::kDecoder);
    parts.push_back(stochastic_attention(q, k, v, rng, opts, p));
  }
  return heads == 1 ? parts.front() : ag::concat_last(parts);
}

Tensor svit_layer(const Tensor& e, const SvitLayerWeights& weights, DecoderState::Layer& state,
                  std::size_t layer_index, Rng& rng, const SpikeOptions& opts) {
  const std::string p = "dec.l" + std::to_string(layer_index) + ".";
  auto* rec = opts.recorder;
  Tensor attn = ssa_attention(e, weights, state, layer_index, rng, opts);
  if (rec) rec->synapses(p + "ffn_in", Stage::kDecoder, attn, attn.dim(2), weights.ffn_in.dim(1));
  Tensor hidden = lif_step(state.ffn_in, ag::affine(attn, weights.ffn_in, weights.ffn_in_bias), opts);
  observe_spikes(opts, p + "ffn_in", hidden, Stage::kDecoder);
  if (rec) rec->synapses(p + "ffn_out", Stage::kDecoder, hidden, hidden.dim(2), weights.ffn_out.dim(1));
  Tensor out = lif_step(state.ffn_out, ag::affine(hidden, weights.ffn_out, weights.ffn_out_bias), opts);
  observe_spikes(opts, p + "ffn_out", out, Stage::kDecoder);
  return out;
}

Tensor pool_classify(const std::vector<Tensor>& outputs, const Tensor& classifier, const SpikeOptions& opts) {
  if (outputs.empty()) throw std::invalid_argument("pool_classify: empty sequence");
  auto* rec = opts.recorder;
  Tensor total;
  for (const auto& e : outputs) {
    if (rec) rec->synapses("dec.pool", Stage::kDecoder, e, e.dim(2), 1);
    Tensor pooled = ag::mean_tokens(e);
    if (rec) rec->synapses("dec.cls", Stage::kDecoder, pooled, pooled.dim(1), classifier.dim(1));
    Tensor logits = ag::matmul(pooled, classifier);
    total = total.defined() ? ag::add(total, logits) : logits;
  }
  return ag::scale(total, 1.0 / static_cast<double>(outputs.size()));
}

Tensor decoder_forward(const std::vector<Tensor>& received, const DecoderWeights& weights, const DecoderConfig& cfg,
                       LifParams lif, Rng& rng, const SpikeOptions& opts) {
  if (received.empty()) throw std::invalid_argument("decoder_forward: no timesteps");
  if (weights.layers.size() != cfg.layers) throw std::invalid_argument("decoder_forward: layer count mismatch");
  DecoderState state(cfg, lif);
  std::vector<Tensor> outputs;
  outputs.reserve(received.size());
  for (const auto& s : received) {
    Tensor e = embed(s, weights, state.embed, opts);
    for (std::size_t i = 0; i < weights.layers.size(); ++i) {
      e = svit_layer(e, weights.layers[i], state.layers[i], i, rng, opts);
    }
    outputs.push_back(std::move(e));
  }
  return pool_classify(outputs, weights.classifier, opts);
}

}  // namespace spikelink::snn
