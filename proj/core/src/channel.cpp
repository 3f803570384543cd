#include "spikelink/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace spikelink::channel {

double db_to_gain(double db) { return std::pow(10.0, db / 10.0); }

double loss_db_to_factor(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

void LinkParams::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid link parameters: " + what); };
  if (!(responsivity >= 0.0)) fail("responsivity must be >= 0");
  if (!(amplifier_gain >= 1.0)) fail("amplifier gain must be >= 1 (linear)");
  if (!(free_space_loss > 0.0 && free_space_loss <= 1.0)) fail("free-space loss factor must lie in (0, 1]");
  if (!(pointing_sensitivity >= 0.0)) fail("pointing sensitivity must be >= 0");
  if (!(pointing_variance >= 0.0)) fail("pointing variance must be >= 0");
  if (!(noise_floor >= 0.0)) fail("noise floor must be >= 0");
  if (!(signal_noise_factor >= 0.0)) fail("signal noise factor must be >= 0");
  if (!(on_power >= 0.0)) fail("on power must be >= 0");
}

std::vector<double> sample_pointing_error(double variance, std::size_t count, Rng& rng) {
  if (!(variance >= 0.0)) throw std::invalid_argument("pointing variance must be >= 0");
  if (count == 0) throw std::invalid_argument("pointing error sample count must be >= 1");
  std::vector<double> e(count, 0.0);
  if (variance == 0.0) return e;
  const double sd = std::sqrt(variance / 2.0);
  for (double& v : e) {
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double z = sd * rng.normal();
      acc += z * z;
    }
    v = acc;
  }
  return e;
}

Transmission transmit(std::span<const std::uint8_t> bits, const LinkParams& params, Rng& rng) {
  if (bits.empty()) throw std::invalid_argument("transmit: empty bit sequence");
  params.validate();
  const std::size_t n = bits.size();
  Transmission t;
  t.draw.seed = rng.seed();
  t.draw.pointing_errors = sample_pointing_error(params.pointing_variance, n, rng);
  t.draw.noise.resize(n);
  t.signal.samples.resize(n);
  const double gain = params.link_gain();
  for (std::size_t i = 0; i < n; ++i) {
    if (bits[i] > 1) throw std::invalid_argument("transmit: non-binary input at index " + std::to_string(i));
    const double x = bits[i] ? params.on_power : 0.0;
    const double fade = std::exp(-params.pointing_sensitivity * t.draw.pointing_errors[i]);
    const double signal = gain * x * fade;
    const double sd = std::sqrt(params.noise_floor + params.signal_noise_factor * signal);
    const double w = sd * rng.normal();
    t.draw.noise[i] = w;
    t.signal.samples[i] = signal + w;
  }
  return t;
}

double decision_threshold(const LinkParams& params) {
  const double fading = 1.0 + params.pointing_sensitivity * params.pointing_variance;
  return 0.5 * params.responsivity * params.amplifier_gain * params.on_power * params.free_space_loss /
         (fading * fading);
}

Bits detect(std::span<const double> samples, double threshold) {
  Bits out(samples.size());
  std::transform(samples.begin(), samples.end(), out.begin(),
                 [threshold](double y) { return static_cast<std::uint8_t>(y > threshold ? 1 : 0); });
  return out;
}

std::vector<double> soft_receive(std::span<const double> samples, const LinkParams& params) {
  if (!(params.on_power > 0.0)) throw std::invalid_argument("soft_receive requires a positive on power");
  const double level = params.link_gain() * params.on_power;
  std::vector<double> out(samples.size());
  std::transform(samples.begin(), samples.end(), out.begin(), [level](double y) { return y / level; });
  return out;
}

std::uint64_t count_bit_errors(const LinkParams& params, std::size_t n_bits, Rng& rng) {
  if (n_bits == 0) throw std::invalid_argument("estimate_ber: n_bits must be >= 1");
  const double theta = decision_threshold(params);
  constexpr std::size_t kChunk = 1 << 16;
  Rng bit_rng = rng.split("bits");
  Rng link_rng = rng.split("link");
  std::uint64_t errors = 0;
  Bits bits;
  for (std::size_t done = 0; done < n_bits; done += kChunk) {
    const std::size_t n = std::min(kChunk, n_bits - done);
    bits.resize(n);
    for (auto& b : bits) b = static_cast<std::uint8_t>(bit_rng.next_u64() >> 63);
    const auto received = transmit(bits, params, link_rng);
    const auto decided = detect(received.signal.samples, theta);
    for (std::size_t i = 0; i < n; ++i) errors += decided[i] != bits[i];
  }
  return errors;
}

double estimate_ber(const LinkParams& params, std::size_t n_bits, Rng& rng) {
  return static_cast<double>(count_bit_errors(params, n_bits, rng)) / static_cast<double>(n_bits);
}

}  // namespace spikelink::channel
