// Acceptance suite: one PASS/FAIL line per criterion.

#include <fmt/format.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "spikelink/channel.hpp"
#include "spikelink/config.hpp"
#include "spikelink/energy.hpp"
#include "spikelink/harness.hpp"
#include "spikelink/modem.hpp"
#include "spikelink/ops.hpp"
#include "spikelink/snn.hpp"
#include "support/gradcheck.hpp"

using namespace spikelink;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& run) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  fmt::print("{} {:2d} {} | {} ({:.1f} s)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail, secs);
  std::fflush(stdout);
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

channel::LinkParams eval_link() { return default_config().link; }

// Wilson score interval.
std::pair<double, double> wilson(std::uint64_t k, std::uint64_t n, double z) {
  const double p = static_cast<double>(k) / static_cast<double>(n);
  const double nn = static_cast<double>(n);
  const double denom = 1 + z * z / nn;
  const double centre = (p + z * z / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
  return {centre - half, centre + half};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// ---------------------------------------------------------------- 1

Outcome fading_consistency() {
  const auto start = std::chrono::steady_clock::now();
  const double g = 1e6;
  std::string detail;
  bool ok = true;
  for (double s2g : {0.1, 0.3, 0.5}) {
    Rng rng = Rng(101).split(static_cast<std::uint64_t>(s2g * 10));
    const auto e = channel::sample_pointing_error(s2g / g, 1'000'000, rng);
    double mean = 0.0;
    for (double v : e) mean += std::exp(-g * v);
    mean /= static_cast<double>(e.size());
    const double expected = 1.0 / ((1.0 + s2g) * (1.0 + s2g));
    const double rel = std::abs(mean - expected) / expected;
    ok &= rel <= 0.01;
    detail += fmt::format("s2G={} rel={:.2e} ", s2g, rel);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ok &= secs < 10.0;
  return {ok, detail + fmt::format("t={:.2f}s", secs)};
}

// ---------------------------------------------------------------- 2

Outcome noiseless_roundtrip() {
  channel::LinkParams p = eval_link();
  p.pointing_variance = 0.0;
  p.noise_floor = 0.0;
  p.signal_noise_factor = 0.0;
  Rng rng(202);
  channel::Bits bits(10000);
  for (auto& b : bits) b = rng.bernoulli(0.5);
  const auto tx = channel::transmit(bits, p, rng);
  const auto hat = channel::detect(tx.signal.samples, channel::decision_threshold(p));
  std::size_t errors = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) errors += hat[i] != bits[i];

  // BER against the noise floor, 99% Wilson intervals must be disjoint and ordered.
  const std::vector<double> grid{1.8e-5, 2.5e-5, 3.5e-5};
  std::vector<std::pair<double, double>> ci;
  std::string detail = fmt::format("roundtrip errors={} BER:", errors);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    channel::LinkParams q = p;
    q.noise_floor = grid[i];
    Rng r = Rng(203).split(static_cast<std::uint64_t>(i));
    const auto k = channel::count_bit_errors(q, 1'000'000, r);
    ci.push_back(wilson(k, 1'000'000, 2.576));
    detail += fmt::format(" {:.3e}", static_cast<double>(k) / 1e6);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < ci.size(); ++i) monotone &= ci[i - 1].second < ci[i].first;
  return {errors == 0 && monotone, detail};
}

// ---------------------------------------------------------------- 3

// P(error) for equiprobable OOK with chi-square(4) fading, by quadrature.
double ber_oracle(const channel::LinkParams& p) {
  using boost::math::quadrature::gauss_kronrod;
  const double on = p.responsivity * p.amplifier_gain * p.free_space_loss * p.on_power;
  const double s2g = p.pointing_variance * p.pointing_sensitivity;
  const double theta = 0.5 * on / ((1 + s2g) * (1 + s2g));
  const boost::math::normal std_normal;
  const double false_alarm = boost::math::cdf(boost::math::complement(std_normal, theta / std::sqrt(p.noise_floor)));
  // G e = (s2g / 2) X with X ~ chi-square(4), density x e^{-x/2} / 4
  auto integrand = [&](double x) {
    const double received = on * std::exp(-0.5 * s2g * x);
    const double sd = std::sqrt(p.noise_floor + p.signal_noise_factor * received);
    return boost::math::cdf(std_normal, (theta - received) / sd) * x * std::exp(-x / 2) / 4;
  };
  const double miss = gauss_kronrod<double, 61>::integrate(integrand, 0.0, std::numeric_limits<double>::infinity(),
                                                           15, 1e-12);
  return 0.5 * false_alarm + 0.5 * miss;
}

Outcome ber_oracle_check() {
  const auto start = std::chrono::steady_clock::now();
  channel::LinkParams p = eval_link();
  p.pointing_variance = 0.3 / p.pointing_sensitivity;
  p.noise_floor = 2.5e-5;
  p.signal_noise_factor = 1e-4;
  const double oracle = ber_oracle(p);
  const std::uint64_t n = 2'000'000;
  Rng rng(303);
  const auto k = channel::count_bit_errors(p, n, rng);
  const double mc = static_cast<double>(k) / static_cast<double>(n);
  const double half = 2.576 * std::sqrt(oracle * (1 - oracle) / static_cast<double>(n));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = std::abs(mc - oracle) <= half && secs < 60.0;
  return {ok, fmt::format("oracle={:.5e} mc={:.5e} 99%=+-{:.2e} t={:.2f}s", oracle, mc, half, secs)};
}

// ---------------------------------------------------------------- 4

Outcome ppm_identity() {
  Rng rng(404);
  std::size_t bad = 0;
  for (unsigned m : {2u, 4u, 8u, 16u}) {
    const modem::PpmConfig cfg{m};
    for (int trial = 0; trial < 10000; ++trial) {
      modem::Bits bits(cfg.bits_per_symbol() * (1 + rng.below(32)));
      for (auto& b : bits) b = rng.bernoulli(0.5);
      if (modem::ppm_demodulate(modem::ppm_modulate(bits, cfg), cfg) != bits) ++bad;
    }
  }
  return {bad == 0, fmt::format("mismatches={} over 4x10^4 streams", bad)};
}

// ---------------------------------------------------------------- 5

Outcome lif_oracle() {
  snn::SpikeOptions opts;
  snn::LifState s(snn::LifParams{0.5, 1.0});
  const ag::Tensor i = ag::Tensor::from_values({1}, {0.6});
  std::vector<double> spikes, pots;
  for (int t = 0; t < 3; ++t) {
    spikes.push_back(snn::lif_step(s, i, opts).values()[0]);
    pots.push_back(s.potential.values()[0]);
  }
  // exact binary64 result of beta * V + I; 0.9 is not representable
  const bool trace = spikes == std::vector<double>{0, 0, 1} && pots == std::vector<double>{0.6, 0.5 * 0.6 + 0.6, 0.0};

  Rng rng(505);
  std::size_t violations = 0;
  for (int seq = 0; seq < 10000; ++seq) {
    snn::LifState st(snn::LifParams{rng.uniform(0.0, 1.0), rng.uniform(0.2, 2.0)});
    double v = 0.0;
    for (int t = 0; t < 8; ++t) {
      const double cur = rng.uniform(-0.5, 1.5);
      const double minus = st.params.beta * v + cur;
      const double o = snn::lif_step(st, ag::Tensor::from_values({1}, {cur}), opts).values()[0];
      const double plus = st.potential.values()[0];
      const bool fired = minus >= st.params.threshold;
      if (o != (fired ? 1.0 : 0.0) || (fired && plus != 0.0) || (!fired && plus != minus)) ++violations;
      v = plus;
    }
  }
  return {trace && violations == 0,
          fmt::format("spikes=[{},{},{}] V=[{},{},{}] reset violations={}", spikes[0], spikes[1], spikes[2], pots[0],
                      pots[1], pots[2], violations)};
}

// ---------------------------------------------------------------- 6

Outcome gradient_fidelity() {
  double worst = 0.0;
  int draws = 0;
  for (auto kind : {ag::SurrogateSpec::Kind::kBoxcar, ag::SurrogateSpec::Kind::kFastSigmoid}) {
    for (int d = 0; d < 20; ++d, ++draws) {
      Rng rng = Rng(606).split(static_cast<std::uint64_t>(draws));
      auto rand = [&](ag::Shape shape, double scale) {
        std::vector<double> v(ag::shape_size(shape));
        for (auto& x : v) x = rng.uniform(-scale, scale);
        return ag::Tensor::from_values(std::move(shape), std::move(v), true);
      };
      ag::Tensor w1 = rand({4, 6}, 1.0), b1 = rand({6}, 0.5), w2 = rand({6, 3}, 1.0), b2 = rand({3}, 0.5);
      std::vector<ag::Tensor> inputs;
      for (int t = 0; t < 5; ++t) {
        ag::Tensor x = rand({2, 4}, 1.0);
        inputs.push_back(x.detach());
      }
      ag::Tensor target = rand({2, 3}, 1.0).detach();
      snn::SpikeOptions opts;
      opts.surrogate = {kind, kind == ag::SurrogateSpec::Kind::kBoxcar ? 1.0 : 2.0};
      opts.mode = ag::SpikeMode::kRelaxed;
      auto f = [&] {
        snn::LifState l1(snn::LifParams{0.9, 1.0}), l2(snn::LifParams{0.9, 1.0});
        ag::Tensor total;
        for (const auto& x : inputs) {
          ag::Tensor h = snn::lif_step(l1, ag::affine(x, w1, b1), opts);
          ag::Tensor o = snn::lif_step(l2, ag::affine(h, w2, b2), opts);
          total = total.defined() ? ag::add(total, o) : o;
        }
        ag::Tensor diff = ag::sub(total, target);
        return ag::sum(ag::mul(diff, diff));
      };
      std::vector<ag::Tensor> params{w1, b1, w2, b2};
      worst = std::max(worst, testing::gradient_error(params, f, 1e-6));
    }
  }
  return {worst <= 1e-3, fmt::format("worst relative error {:.2e} over {} draws (boxcar + fast-sigmoid)", worst, draws)};
}

// ---------------------------------------------------------------- 7

Outcome attention_statistics() {
  snn::SpikeOptions opts;
  Rng rng(707);
  const int n = 10000;
  bool ok = true;
  std::string detail;
  // Stage 1: M ~ Bern(q.k / D_K) with one token; V = 1 passes M through.
  const std::vector<std::pair<std::vector<double>, double>> overlaps{
      {{0, 0, 0, 0}, 0.0}, {{1, 0, 0, 0}, 0.25}, {{1, 1, 0, 0}, 0.5}, {{1, 1, 1, 1}, 1.0}};
  const ag::Tensor k = ag::Tensor::filled({1, 1, 4}, 1.0);
  for (const auto& [q_row, p] : overlaps) {
    const ag::Tensor q = ag::Tensor::from_values({1, 1, 4}, q_row);
    double sum = 0;
    for (int i = 0; i < n; ++i) sum += snn::stochastic_attention(q, k, k, rng, opts).values()[0];
    const double mean = sum / n;
    const double sd = std::sqrt(p * (1 - p) / n);
    const bool good = (p == 0.0 || p == 1.0) ? mean == p : std::abs(mean - p) <= 4 * sd;
    ok &= good;
    detail += fmt::format("M p={} mean={:.4f}; ", p, mean);
  }
  // Stage 2: Q = K = 1 gives M = 1; column j of V has c_j ones of L = 4.
  const ag::Tensor ones = ag::Tensor::filled({1, 4, 4}, 1.0);
  std::vector<double> v(16, 0.0);
  const int counts[4] = {0, 1, 2, 4};
  for (int j = 0; j < 4; ++j)
    for (int l = 0; l < counts[j]; ++l) v[l * 4 + j] = 1.0;
  const ag::Tensor vt = ag::Tensor::from_values({1, 4, 4}, v);
  std::vector<double> sums(4, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto a = snn::stochastic_attention(ones, ones, vt, rng, opts);
    for (int j = 0; j < 4; ++j) sums[j] += a.values()[j];  // row 0
  }
  for (int j = 0; j < 4; ++j) {
    const double p = counts[j] / 4.0;
    const double mean = sums[j] / n;
    const double sd = std::sqrt(p * (1 - p) / n);
    const bool good = (p == 0.0 || p == 1.0) ? mean == p : std::abs(mean - p) <= 4 * sd;
    ok &= good;
    detail += fmt::format("A p={} mean={:.4f}; ", p, mean);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- 8

Outcome binarity_sweep() {
  const auto cfg = default_config();
  auto w = snn::init_weights(cfg.model.encoder, cfg.model.decoder, Rng(808));
  const auto& ec = cfg.model.encoder;
  Rng rng(809);
  snn::ForwardRecorder rec;
  std::size_t extra_bad = 0, extra_seen = 0;
  for (int b = 0; b < 10; ++b) {
    std::vector<events::Sample> samples(10);
    std::vector<const events::Sample*> ptrs;
    for (auto& s : samples) {
      s.events.steps = ec.timesteps;
      s.events.height = ec.height;
      s.events.width = ec.width;
      s.events.data.resize(ec.timesteps * ec.height * ec.width);
      for (auto& v : s.events.data) v = static_cast<std::int8_t>(static_cast<int>(rng.below(3)) - 1);
      ptrs.push_back(&s);
    }
    const auto batch = pipeline::make_batch(ptrs, ec);
    snn::SpikeOptions opts;
    opts.recorder = &rec;
    Rng att = rng.split(static_cast<std::uint64_t>(b));
    pipeline::LinkSetup link{cfg.link, ReceiveMode::kHard};
    link.params.pointing_variance = 0.3 / link.params.pointing_sensitivity;
    const auto out = pipeline::forward(w, cfg.model, batch, link, rng.split("ch").split(static_cast<std::uint64_t>(b)),
                                       att, opts);
    for (const auto* group : {&out.encoder_out, &out.transmitted, &out.received})
      for (const auto& t : *group) {
        ++extra_seen;
        for (double v : t.values())
          if (v != 0.0 && v != 1.0) {
            ++extra_bad;
            break;
          }
      }
  }
  const bool ok = rec.non_binary_tensors() == 0 && extra_bad == 0 && rec.spike_tensors_seen() > 0;
  return {ok, fmt::format("{} recorded + {} link tensors over 100 inputs, non-binary={}",
                          rec.spike_tensors_seen(), extra_seen, rec.non_binary_tensors() + extra_bad)};
}

// ---------------------------------------------------------------- 9 and 10

struct TrainedRun {
  bool ok = false;
  double cpu = 0.0;
  double acc0 = 0.0;
  double acc5 = 0.0;
  std::size_t best_epoch = 0;
  energy::EnergyReport energy;
};

TrainedRun desk_run(const fs::path& dir) {
  TrainedRun r;
  ExperimentConfig cfg = default_config();
  cfg.dataset_path = (dir / "dataset").string();
  const double c0 = cpu_seconds();
  harness::generate_dataset(cfg, cfg.dataset_path);
  const auto data = harness::load_dataset_for(cfg, cfg.dataset_path);
  auto result = pipeline::train(cfg, data);
  r.cpu = cpu_seconds() - c0;
  r.best_epoch = result.best_epoch;
  const auto points = harness::eval_sweep(result.best, cfg, data, cfg.eval.receive_mode);
  int n0 = 0, n5 = 0;
  for (const auto& p : points) {
    if (p.sigma2g == 0.0) r.acc0 += p.accuracy, ++n0;
    if (p.sigma2g == 0.5) r.acc5 += p.accuracy, ++n5;
  }
  r.acc0 /= n0;
  r.acc5 /= n5;
  r.energy = harness::measure_energy(result.best, cfg, data);
  r.ok = true;
  return r;
}

Outcome end_to_end(const TrainedRun& r) {
  const bool ok = r.cpu <= 600.0 && r.acc0 >= 0.90 && r.acc0 - r.acc5 >= 0.05;
  return {ok, fmt::format("train CPU {:.0f} s, best epoch {}, mean acc s2G=0: {:.3f}, s2G=0.5: {:.3f}, drop {:.1f} pts",
                          r.cpu, r.best_epoch, r.acc0, r.acc5, 100 * (r.acc0 - r.acc5))};
}

// Encoder tallies at a fixed input spike rate, from the layer geometry.
snn::ForwardRecorder synthetic_encoder(double rate) {
  const auto cfg = default_config();
  snn::ForwardRecorder rec;
  for (const auto& l : energy::synaptic_layers(cfg.model.encoder, cfg.model.decoder)) {
    if (l.stage != snn::Stage::kEncoder) continue;
    const std::size_t positions = l.rows * l.fan_in * l.steps;
    const std::size_t active = static_cast<std::size_t>(std::llround(rate * static_cast<double>(positions)));
    std::vector<double> v(positions, 0.0);
    std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(active), 1.0);
    rec.synapses(l.name, l.stage, ag::Tensor::from_values({positions}, v), l.fan_in, l.fan_out);
    const std::uint64_t outputs = static_cast<std::uint64_t>(l.rows) * l.fan_out * l.steps;
    if (l.name == "enc.lth") {
      rec.comparisons(l.name, l.stage, outputs);
    } else {
      rec.neurons(l.name, l.stage, outputs);
    }
  }
  rec.add_inferences(1);
  return rec;
}

Outcome energy_trend(const TrainedRun& run) {
  const auto cfg = default_config();
  bool ok = true;
  std::string detail;
  for (double rate : {0.05, 0.10, 0.15}) {
    const auto rep = energy::build_report(synthetic_encoder(rate), cfg.model.encoder, cfg.model.decoder, {});
    const double ratio = rep.encoder.joules / rep.encoder_dense.joules;
    ok &= ratio <= 0.2;
    detail += fmt::format("rate {:.2f}: spiking/dense {:.3f}; ", rate, ratio);
  }
  if (run.ok) {
    const double ratio = run.energy.encoder.joules / run.energy.encoder_dense.joules;
    const double rate = run.energy.encoder.mean_spike_rate;
    if (rate <= 0.15) ok &= ratio <= 0.2;
    detail += fmt::format("trained: rate {:.3f} spiking/dense {:.3f}; ", rate, ratio);
  }
  // linearity
  const energy::OpCounts a{123, 45, 678, 9, 1011, 1213};
  const energy::OpCounts b{7, 0, 3, 11, 5, 2};
  energy::EnergyTable t;
  energy::EnergyTable t2{2 * t.accumulate_pj, 2 * t.mac_pj, 2 * t.comparison_pj, 2 * t.random_draw_pj,
                         2 * t.memory_read_pj, 2 * t.memory_write_pj};
  const double ea = energy::energy_of(a, t), eb = energy::energy_of(b, t);
  const bool linear = std::abs(energy::energy_of(a + b, t) - (ea + eb)) <= 1e-12 * (ea + eb) &&
                      energy::energy_of(a + a, t) == 2 * ea && energy::energy_of(a, t2) == 2 * ea;
  ok &= linear;
  detail += fmt::format("linear={}", linear);
  return {ok, detail};
}

// ---------------------------------------------------------------- 11

Outcome determinism(const fs::path& dir) {
#ifndef SPIKELINK_CLI_PATH
  (void)dir;
  return {false, "command-line tool not built"};
#else
  const std::string cli = SPIKELINK_CLI_PATH;
  const fs::path config = dir / "tiny.json";
  const fs::path dataset = dir / "dataset";
  std::ofstream(config) << fmt::format(R"({{
  "seed": 5,
  "dataset": {{"classes": 2, "per_class": 8, "crop_height": 16, "crop_width": 16, "scene_size": 24,
              "timesteps": 3, "path": "{}"}},
  "encoder": {{"patch": 8, "dim": 8, "layers": 1, "slots": 2}},
  "decoder": {{"embed_dim": 8, "heads": 2, "layers": 1, "ffn_dim": 8}},
  "training": {{"epochs": 2, "batch_size": 4}},
  "eval": {{"sigma2G": [0, 0.25, 0.5], "seeds": 2}},
  "ber": {{"bits": 100000}}
}})",
                                       dataset.string());
  auto run = [&](const std::string& args) {
    const std::string cmd = fmt::format("\"{}\" {} --config \"{}\" > /dev/null 2>&1", cli, args, config.string());
    if (std::system(cmd.c_str()) != 0) throw std::runtime_error("command failed: " + args);
  };
  std::vector<std::pair<fs::path, fs::path>> compare;
  for (const char* rep : {"a", "b"}) {
    const fs::path out = dir / rep;
    run(fmt::format("generate-dataset --out \"{}\"", (out / "dataset").string()));
    if (std::string(rep) == "a") run(fmt::format("generate-dataset --out \"{}\"", dataset.string()));
    run(fmt::format("train --out \"{}\"", (out / "train").string()));
    run(fmt::format("eval-sweep --checkpoint \"{}\" --out \"{}\"", (out / "train" / "model.json").string(),
                    (out / "sweep").string()));
    run(fmt::format("ber --out \"{}\"", (out / "ber").string()));
    run(fmt::format("energy --checkpoint \"{}\" --out \"{}\"", (out / "train" / "model.json").string(),
                    (out / "energy").string()));
  }
  std::size_t files = 0, csv = 0, differ = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir / "a");
    ++files;
    csv += rel.extension() == ".csv";
    if (slurp(entry.path()) != slurp(dir / "b" / rel)) ++differ;
  }
  return {differ == 0 && csv >= 5,
          fmt::format("{} files ({} CSV) across 5 commands, {} differ", files, csv, differ)};
#endif
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "spikelink_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  report(1, "channel fading consistency", fading_consistency);
  report(2, "noiseless roundtrip and BER monotonicity", noiseless_roundtrip);
  report(3, "semi-analytic BER oracle", ber_oracle_check);
  report(4, "PPM identity", ppm_identity);
  report(5, "LIF oracle", lif_oracle);
  report(6, "gradient fidelity", gradient_fidelity);
  report(7, "stochastic attention statistics", attention_statistics);
  report(8, "binarity sweep", binarity_sweep);

  TrainedRun run;
  report(9, "end-to-end desk-scale learning", [&] {
    run = desk_run(work / "desk");
    return end_to_end(run);
  });
  report(10, "energy trend", [&] { return energy_trend(run); });
  report(11, "determinism", [&] {
    fs::create_directories(work / "cli");
    return determinism(work / "cli");
  });

  fmt::print("{} of 11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
