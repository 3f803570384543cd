#include "doctest.h"
#include "spikelink/snn.hpp"

using namespace spikelink;
using namespace spikelink::snn;
using ag::Tensor;

namespace {

std::vector<double> values(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

EncoderConfig small_encoder() {
  EncoderConfig c;
  c.height = 8;
  c.width = 8;
  c.patch = 4;
  c.dim = 6;
  c.layers = 1;
  c.timesteps = 3;
  c.slots = 2;
  return c;
}

DecoderConfig small_decoder() {
  DecoderConfig c;
  c.embed_dim = 8;
  c.heads = 2;
  c.layers = 1;
  c.ffn_dim = 10;
  c.classes = 3;
  return c;
}

}  // namespace

TEST_CASE("LIF hand trace") {
  LifState s(LifParams{0.5, 1.0});
  SpikeOptions opts;
  const Tensor i = Tensor::from_values({1}, {0.6});
  std::vector<double> spikes, potentials;
  for (int t = 0; t < 3; ++t) {
    spikes.push_back(lif_step(s, i, opts).values()[0]);
    potentials.push_back(s.potential.values()[0]);
  }
  CHECK(spikes == std::vector<double>{0, 0, 1});
  CHECK(potentials[0] == doctest::Approx(0.6));
  CHECK(potentials[1] == doctest::Approx(0.9));
  CHECK(potentials[2] == 0.0);
}

TEST_CASE("LIF fires at exactly threshold") {
  LifState s(LifParams{0.9, 1.0});
  SpikeOptions opts;
  CHECK(lif_step(s, Tensor::from_values({1}, {1.0}), opts).values()[0] == 1.0);
  CHECK(s.potential.values()[0] == 0.0);
}

TEST_CASE("residual OR truth table") {
  const Tensor a = Tensor::from_values({4}, {0, 0, 1, 1});
  const Tensor b = Tensor::from_values({4}, {0, 1, 0, 1});
  CHECK(values(saturating_or(a, b)) == std::vector<double>{0, 1, 1, 1});
}

TEST_CASE("patchify splits polarities") {
  EncoderConfig c = small_encoder();
  std::vector<std::int8_t> frame(64, 0);
  frame[0] = 1;           // token 0, pixel (0,0)
  frame[1 * 8 + 5] = -1;  // token 1, pixel (1,1) inside the patch
  const auto p = patchify(frame, c);
  REQUIRE(p.size() == 4 * 32);
  CHECK(p[0] == 1.0);
  CHECK(p[32 + 16 + 5] == 1.0);
  double total = 0;
  for (double v : p) total += v;
  CHECK(total == 2.0);
  CHECK_THROWS(patchify(std::vector<std::int8_t>(10), c));
}

TEST_CASE("config validation") {
  EncoderConfig e = small_encoder();
  e.patch = 3;
  CHECK_THROWS_AS(e.validate(), std::invalid_argument);
  DecoderConfig d = small_decoder();
  d.heads = 3;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
}

TEST_CASE("initialisation is seeded") {
  const auto a = init_weights(small_encoder(), small_decoder(), Rng(5));
  const auto b = init_weights(small_encoder(), small_decoder(), Rng(5));
  const auto c = init_weights(small_encoder(), small_decoder(), Rng(6));
  const auto pa = a.named_parameters(), pb = b.named_parameters(), pc = c.named_parameters();
  REQUIRE(pa.size() == pb.size());
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].first == pb[i].first);
    CHECK(values(pa[i].second) == values(pb[i].second));
    differs |= values(pa[i].second) != values(pc[i].second);
  }
  CHECK(differs);
}

TEST_CASE("clone is deep") {
  auto a = init_weights(small_encoder(), small_decoder(), Rng(1));
  auto b = a.clone();
  b.encoder.patch_proj.mutable_values()[0] += 1.0;
  CHECK(a.encoder.patch_proj.values()[0] != b.encoder.patch_proj.values()[0]);
}

TEST_CASE("encoder and decoder shapes") {
  const auto ec = small_encoder();
  const auto dc = small_decoder();
  auto w = init_weights(ec, dc, Rng(2));
  Rng rng(3);
  std::vector<Tensor> steps;
  for (std::size_t t = 0; t < ec.timesteps; ++t) {
    std::vector<double> v(2 * ec.tokens() * ec.patch_features());
    for (auto& x : v) x = rng.bernoulli(0.3);
    steps.push_back(Tensor::from_values({2, ec.tokens(), ec.patch_features()}, v));
  }
  SpikeOptions opts;
  opts.training = true;
  const auto x = encoder_forward(steps, w.encoder, ec, {}, opts);
  REQUIRE(x.size() == ec.timesteps);
  for (const auto& t : x) {
    CHECK(t.shape() == ag::Shape{2, ec.tokens(), ec.dim});
    for (double v : t.values()) CHECK((v == 0.0 || v == 1.0));
  }
  Rng att(4);
  const auto z = decoder_forward(x, w.decoder, dc, {}, att, opts);
  CHECK(z.shape() == ag::Shape{2, dc.classes});
}

TEST_CASE("stochastic attention extremes") {
  SpikeOptions opts;
  Rng rng(7);
  const Tensor ones = Tensor::filled({1, 3, 2}, 1.0);
  const Tensor zeros = Tensor::zeros({1, 3, 2});
  // Q K^T / D_K = 1 and M V / L = 1 everywhere
  const Tensor full = stochastic_attention(ones, ones, ones, rng, opts);
  const Tensor none = stochastic_attention(zeros, ones, ones, rng, opts);
  for (double v : full.values()) CHECK(v == 1.0);
  for (double v : none.values()) CHECK(v == 0.0);
}

TEST_CASE("pooled classifier averages over time and tokens") {
  const Tensor w = Tensor::from_values({2, 1}, {1.0, 2.0});
  const Tensor e1 = Tensor::from_values({1, 2, 2}, {1, 0, 1, 1});
  const Tensor e2 = Tensor::from_values({1, 2, 2}, {0, 0, 0, 1});
  const auto z = pool_classify({e1, e2}, w);
  // means: [1, 0.5] -> 2 ; [0, 0.5] -> 1 ; average 1.5
  CHECK(z.values()[0] == doctest::Approx(1.5));
}
