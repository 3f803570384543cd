#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spikelink/rng.hpp"

namespace spikelink::channel {

/// Gain figure in dB to a linear power factor, 10^(dB/10).
double db_to_gain(double db);
/// Loss figure in dB to the multiplicative factor 10^(-dB/10) (<= 1 for dB >= 0).
double loss_db_to_factor(double loss_db);

/// Physical constants of the optical link. Gains and losses are linear
/// factors; conversion from dB happens once, when a config is parsed.
struct LinkParams {
  double responsivity = 0.8;           ///< R, A/W
  double amplifier_gain = 1000.0;      ///< G_o (linear, >= 1)
  double free_space_loss = 0.0371535;  ///< L_FS (linear, in (0, 1])
  double pointing_sensitivity = 1e6;   ///< G
  double pointing_variance = 0.0;      ///< sigma^2
  double noise_floor = 0.0;            ///< sigma_0^2, A^2
  double signal_noise_factor = 0.0;    ///< k
  double on_power = 1e-3;              ///< P_on, W

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
  /// R * G_o * L_FS: photocurrent per watt of transmitted optical power.
  [[nodiscard]] double link_gain() const { return responsivity * amplifier_gain * free_space_loss; }
  /// Noiseless, unfaded photocurrent of a transmitted '1'.
  [[nodiscard]] double on_level() const { return link_gain() * on_power; }
};

using Bits = std::vector<std::uint8_t>;

struct ReceivedSignal {
  std::vector<double> samples;  ///< photocurrent y[n], A
};

/// The random realisation behind one transmission.
struct ChannelDraw {
  std::vector<double> pointing_errors;  ///< e[n] >= 0
  std::vector<double> noise;            ///< w[n]
  std::uint64_t seed = 0;
};

struct Transmission {
  ReceivedSignal signal;
  ChannelDraw draw;
};

/// Residual pointing error per bit: sum of four squared N(0, sigma^2/2)
/// variates, so that E[exp(-G e)] = (1 + G sigma^2)^-2.
std::vector<double> sample_pointing_error(double variance, std::size_t count, Rng& rng);

/// OOK transmission: y[n] = R G_o L_FS x[n] exp(-G e[n]) + w[n] with
/// x[n] = P_on s[n] and Var w[n] = sigma_0^2 + k R G_o L_FS x[n] exp(-G e[n]).
/// Draw order: all pointing errors, then one standard normal per bit.
Transmission transmit(std::span<const std::uint8_t> bits, const LinkParams& params, Rng& rng);

/// theta = 1/2 R G_o P_on L_FS (1 + G sigma^2)^-2
double decision_threshold(const LinkParams& params);

/// s_hat[n] = 1 iff y[n] > theta.
Bits detect(std::span<const double> samples, double threshold);

/// y[n] / (R G_o L_FS P_on), unclipped.
std::vector<double> soft_receive(std::span<const double> samples, const LinkParams& params);

/// Monte-Carlo bit error rate of transmit -> detect on equiprobable bits.
double estimate_ber(const LinkParams& params, std::size_t n_bits, Rng& rng);

/// Bit error count for a fixed number of bits (same procedure as estimate_ber).
std::uint64_t count_bit_errors(const LinkParams& params, std::size_t n_bits, Rng& rng);

}  // namespace spikelink::channel
