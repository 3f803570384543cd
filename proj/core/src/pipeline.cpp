#include "spikelink/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spikelink/modem.hpp"
#include "spikelink/ops.hpp"
#include "spikelink/optim.hpp"

namespace spikelink::pipeline {

using ag::Tensor;
using snn::Stage;

Batch make_batch(std::span<const events::Sample* const> samples, const snn::EncoderConfig& cfg) {
  if (samples.empty()) throw std::invalid_argument("make_batch: no samples");
  Batch batch;
  batch.size = samples.size();
  const std::size_t n = cfg.tokens();
  const std::size_t f = cfg.patch_features();
  const std::size_t frame = cfg.height * cfg.width;
  for (const auto* s : samples) {
    if (s->events.steps != cfg.timesteps || s->events.height != cfg.height || s->events.width != cfg.width) {
      throw std::invalid_argument(fmt::format("make_batch: sample {} is {}x{}x{}, encoder expects {}x{}x{}", s->index,
                                              s->events.steps, s->events.height, s->events.width, cfg.timesteps,
                                              cfg.height, cfg.width));
    }
    batch.labels.push_back(s->label);
  }
  for (std::size_t t = 0; t < cfg.timesteps; ++t) {
    std::vector<double> values;
    values.reserve(batch.size * n * f);
    for (const auto* s : samples) {
      std::span<const std::int8_t> img(s->events.data.data() + t * frame, frame);
      auto p = snn::patchify(img, cfg);
      values.insert(values.end(), p.begin(), p.end());
    }
    batch.patch_steps.push_back(Tensor::from_values({batch.size, n, f}, std::move(values)));
  }
  return batch;
}

namespace {

std::vector<Tensor> through_channel(const std::vector<Tensor>& sent, const LinkSetup& link, const Rng& channel_rng) {
  if (link.mode == ReceiveMode::kBypass) return sent;
  const std::size_t steps = sent.size();
  const std::size_t b = sent.front().dim(0);
  const std::size_t per = sent.front().size() / b;  // L * D
  const modem::SequenceDims dims{steps, sent.front().dim(1), sent.front().dim(2)};

  // Constant parts of the received signal, laid out like `sent`.
  std::vector<std::vector<double>> gain(steps, std::vector<double>(b * per));
  std::vector<std::vector<double>> offset(steps, std::vector<double>(b * per));
  const double threshold = channel::decision_threshold(link.params);

  for (std::size_t i = 0; i < b; ++i) {
    modem::SpikeSequence seq;
    seq.dims = dims;
    seq.data.resize(dims.size());
    for (std::size_t t = 0; t < steps; ++t) {
      const auto& v = sent[t].values();
      for (std::size_t j = 0; j < per; ++j) seq.data[t * per + j] = v[i * per + j] >= 0.5 ? 1 : 0;
    }
    const auto bits = modem::serialize(seq);
    Rng rng = channel_rng.split(static_cast<std::uint64_t>(i));
    const auto tx = channel::transmit(bits, link.params, rng);
    if (link.mode == ReceiveMode::kSoft) {
      const auto soft = channel::soft_receive(tx.signal.samples, link.params);
      const double g = link.params.pointing_sensitivity;
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t j = 0; j < per; ++j) {
          const std::size_t n = t * per + j;
          const double fade = std::exp(-g * tx.draw.pointing_errors[n]);
          gain[t][i * per + j] = fade;
          offset[t][i * per + j] = soft[n] - fade * static_cast<double>(bits[n]);
        }
      }
    } else {
      const auto hat = channel::detect(tx.signal.samples, threshold);
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t j = 0; j < per; ++j) {
          const std::size_t n = t * per + j;
          gain[t][i * per + j] = 1.0;
          offset[t][i * per + j] = static_cast<double>(hat[n]) - static_cast<double>(bits[n]);
        }
      }
    }
  }

  std::vector<Tensor> out;
  out.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& shape = sent[t].shape();
    // x * f + r with r measured against the transmitted bit; in hard mode a
    // straight-through estimator.
    Tensor f = Tensor::from_values(shape, std::move(gain[t]));
    Tensor r = Tensor::from_values(shape, std::move(offset[t]));
    Tensor bit = Tensor::from_values(shape, [&] {
      std::vector<double> v(sent[t].values().begin(), sent[t].values().end());
      for (auto& x : v) x = x >= 0.5 ? 1.0 : 0.0;
      return v;
    }());
    // Relaxed (non-binary) inputs keep their value offset from the bit.
    Tensor received = ag::add(ag::mul(sent[t], f), ag::add(r, ag::mul(ag::sub(bit, sent[t].detach()), f)));
    out.push_back(std::move(received));
  }
  return out;
}

}  // namespace

ForwardResult forward(snn::ModelWeights& weights, const ModelConfig& cfg, const Batch& batch, const LinkSetup& link,
                      const Rng& channel_rng, Rng& attention_rng, const snn::SpikeOptions& opts) {
  ForwardResult r;
  r.encoder_out = snn::encoder_forward(batch.patch_steps, weights.encoder, cfg.encoder, cfg.lif, opts);
  auto* rec = opts.recorder;
  const std::size_t k = cfg.encoder.slots;
  if (rec) {
    for (const auto& x : r.encoder_out) rec->synapses("enc.lth", Stage::kEncoder, x, 1, k);
  }
  r.transmitted =
      modem::lth_relaxed(r.encoder_out, weights.encoder.lth_map, weights.encoder.lth_bias, opts.surrogate, opts.mode);
  if (rec) {
    for (const auto& s : r.transmitted) {
      rec->comparisons("enc.lth", Stage::kEncoder, s.size());
      rec->spikes("enc.lth", s);
    }
  }
  r.received = through_channel(r.transmitted, link, channel_rng);
  r.logits = snn::decoder_forward(r.received, weights.decoder, cfg.decoder, cfg.lif, attention_rng, opts);
  if (rec) rec->add_inferences(batch.size);
  return r;
}

namespace {

std::size_t argmax_row(std::span<const double> z, std::size_t row, std::size_t c) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < c; ++j)
    if (z[row * c + j] > z[row * c + best]) best = j;
  return best;
}

std::size_t count_correct(const Tensor& logits, const std::vector<std::size_t>& labels) {
  const std::size_t c = logits.dim(1);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (argmax_row(logits.values(), i, c) == labels[i]) ++correct;
  return correct;
}

}  // namespace

EvalResult evaluate(snn::ModelWeights& weights, const ModelConfig& cfg, std::span<const events::Sample* const> samples,
                    const LinkSetup& link, const Rng& channel_root, const Rng& attention_root, std::size_t batch_size,
                    snn::ForwardRecorder* recorder) {
  if (batch_size == 0) throw std::invalid_argument("evaluate: batch_size must be positive");
  snn::SpikeOptions opts;
  opts.surrogate = cfg.surrogate;
  opts.training = false;
  opts.recorder = recorder;
  EvalResult res;
  std::uint64_t index = 0;
  for (std::size_t start = 0; start < samples.size(); start += batch_size, ++index) {
    const auto part = samples.subspan(start, std::min(batch_size, samples.size() - start));
    Batch batch = make_batch(part, cfg.encoder);
    Rng attention = attention_root.split(index);
    auto out = forward(weights, cfg, batch, link, channel_root.split(index), attention, opts);
    res.correct += count_correct(out.logits, batch.labels);
    res.total += batch.size;
  }
  return res;
}

channel::LinkParams draw_training_link(const channel::LinkParams& base, const ChannelRandomization& rz, Rng& rng) {
  channel::LinkParams p = base;
  p.responsivity = rng.uniform(rz.responsivity.lo, rz.responsivity.hi);
  p.amplifier_gain = channel::db_to_gain(rng.uniform(rz.amplifier_gain_db.lo, rz.amplifier_gain_db.hi));
  p.free_space_loss = channel::loss_db_to_factor(rng.uniform(rz.free_space_loss_db.lo, rz.free_space_loss_db.hi));
  p.pointing_variance = rng.uniform(rz.pointing_variance.lo, rz.pointing_variance.hi);
  return p;
}

std::size_t parameter_count(const snn::ModelWeights& weights) {
  std::size_t n = 0;
  for (const auto& p : weights.parameters()) n += p.size();
  return n;
}

TrainResult train(const ExperimentConfig& cfg, const events::Dataset& data, const EpochCallback& on_epoch) {
  cfg.validate();
  const Rng master(cfg.seed);
  TrainResult result;
  snn::ModelWeights weights = snn::init_weights(cfg.model.encoder, cfg.model.decoder, master.split("init"));
  std::vector<Tensor> params = weights.parameters();
  ag::Adam adam(cfg.training.adam);

  const auto train_set = data.split(events::Split::kTrain);
  const auto eval_set = data.split(events::Split::kEval);
  if (train_set.empty() || eval_set.empty()) throw std::invalid_argument("train: empty train or eval split");

  LinkSetup eval_link{cfg.link, cfg.eval.receive_mode};
  eval_link.params.pointing_variance = 0.0;

  const Rng shuffle_root = master.split("shuffle");
  const Rng channel_root = master.split("channel");
  const Rng attention_root = master.split("attention");
  const Rng eval_root = master.split("eval").split("selection");
  const std::size_t bs = cfg.training.batch_size;

  std::vector<const events::Sample*> order(train_set.begin(), train_set.end());
  result.best = weights.clone();
  std::uint64_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.training.epochs; ++epoch) {
    Rng shuffle = shuffle_root.split(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += bs, ++step) {
      std::span<const events::Sample* const> part(order.data() + start, std::min(bs, order.size() - start));
      Batch batch = make_batch(part, cfg.model.encoder);

      Rng link_rng = channel_root.split(step).split("link");
      LinkSetup link{draw_training_link(cfg.link, cfg.training.randomization, link_rng), cfg.training.receive_mode};
      Rng attention = attention_root.split(step);

      snn::ForwardRecorder recorder;
      snn::SpikeOptions opts;
      opts.surrogate = cfg.model.surrogate;
      opts.training = true;
      opts.recorder = step % 16 == 0 ? &recorder : nullptr;

      auto out = forward(weights, cfg.model, batch, link, channel_root.split(step).split("bits"), attention, opts);
      if (opts.recorder && recorder.non_binary_tensors() != 0) {
        throw std::runtime_error(fmt::format("train: non-binary spike tensor '{}' at epoch {}, step {}",
                                             recorder.non_binary_names().front(), epoch, step));
      }
      Tensor loss = ag::softmax_cross_entropy(out.logits, batch.labels);
      const double l = loss.item();
      if (!std::isfinite(l)) {
        throw std::runtime_error(fmt::format("train: non-finite loss {} at epoch {}, step {} (lr {})", l, epoch, step,
                                             cfg.training.adam.learning_rate));
      }
      ag::zero_grad(params);
      loss.backward();
      adam.step(params);
      for (const auto& p : params)
        for (double v : p.values())
          if (!std::isfinite(v))
            throw std::runtime_error(fmt::format("train: non-finite parameter at epoch {}, step {} (lr {})", epoch,
                                                 step, cfg.training.adam.learning_rate));
      loss_sum += l * static_cast<double>(batch.size);
      correct += count_correct(out.logits, batch.labels);
      seen += batch.size;
    }

    EpochLog log;
    log.epoch = epoch;
    log.loss = loss_sum / static_cast<double>(seen);
    log.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    log.eval_accuracy = evaluate(weights, cfg.model, eval_set, eval_link, eval_root.split("channel"),
                                  eval_root.split("attention"), bs).accuracy();
    result.log.push_back(log);
    if (log.eval_accuracy > result.best_eval_accuracy) {
      result.best_eval_accuracy = log.eval_accuracy;
      result.best_epoch = epoch;
      result.best = weights.clone();
    }
    if (on_epoch) on_epoch(log);
  }
  return result;
}

}  // namespace spikelink::pipeline
