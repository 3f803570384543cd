#include <benchmark/benchmark.h>

#include <vector>

#include "spikelink/channel.hpp"
#include "spikelink/config.hpp"
#include "spikelink/pipeline.hpp"

using namespace spikelink;

namespace {

void BM_ChannelTransmit(benchmark::State& state) {
  auto link = default_config().link;
  link.pointing_variance = 0.3 / link.pointing_sensitivity;
  Rng rng(1);
  channel::Bits bits(static_cast<std::size_t>(state.range(0)));
  for (auto& b : bits) b = rng.bernoulli(0.5);
  for (auto _ : state) {
    auto tx = channel::transmit(bits, link, rng);
    benchmark::DoNotOptimize(tx.signal.samples.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ChannelTransmit)->Arg(1 << 12)->Arg(1 << 16);

void BM_BitErrors(benchmark::State& state) {
  auto link = default_config().link;
  link.pointing_variance = 0.3 / link.pointing_sensitivity;
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(channel::count_bit_errors(link, 1 << 16, rng));
  state.SetItemsProcessed(state.iterations() * (1 << 16));
}
BENCHMARK(BM_BitErrors);

struct Fixture {
  ExperimentConfig cfg = default_config();
  snn::ModelWeights weights = snn::init_weights(cfg.model.encoder, cfg.model.decoder, Rng(3));
  std::vector<events::Sample> samples;
  pipeline::Batch batch;

  explicit Fixture(std::size_t n) : samples(n) {
    const auto& ec = cfg.model.encoder;
    Rng rng(4);
    std::vector<const events::Sample*> ptrs;
    for (auto& s : samples) {
      s.events.steps = ec.timesteps;
      s.events.height = ec.height;
      s.events.width = ec.width;
      s.events.data.resize(ec.timesteps * ec.height * ec.width);
      for (auto& v : s.events.data) v = rng.bernoulli(0.1) ? static_cast<std::int8_t>(rng.bernoulli(0.5) ? 1 : -1) : 0;
      ptrs.push_back(&s);
    }
    batch = pipeline::make_batch(ptrs, ec);
  }
};

void BM_Forward(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  const pipeline::LinkSetup link{f.cfg.link, ReceiveMode::kSoft};
  Rng att(5);
  for (auto _ : state) {
    auto out = pipeline::forward(f.weights, f.cfg.model, f.batch, link, Rng(6), att, {});
    benchmark::DoNotOptimize(out.logits.values().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  const pipeline::LinkSetup link{f.cfg.link, ReceiveMode::kSoft};
  auto params = f.weights.parameters();
  Rng att(7);
  snn::SpikeOptions opts;
  opts.surrogate = f.cfg.model.surrogate;
  opts.training = true;
  for (auto _ : state) {
    auto out = pipeline::forward(f.weights, f.cfg.model, f.batch, link, Rng(8), att, opts);
    auto loss = ag::softmax_cross_entropy(out.logits, f.batch.labels);
    ag::zero_grad(params);
    loss.backward();
    benchmark::DoNotOptimize(params.front().grad().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
