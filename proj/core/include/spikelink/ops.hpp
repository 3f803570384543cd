#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spikelink/rng.hpp"
#include "spikelink/tensor.hpp"

namespace spikelink::ag {

/// Stand-in derivative for the unit step.
///   boxcar:       d/dv = 1/width on |v| <= width/2, else 0
///   fast-sigmoid: d/dv = 1 / (1 + slope*|v|)^2
struct SurrogateSpec {
  enum class Kind { kBoxcar, kFastSigmoid };
  Kind kind = Kind::kBoxcar;
  double width = 1.0;  ///< boxcar width or fast-sigmoid slope

  void validate() const;
};

/// How spiking nodes evaluate in the forward pass.
///
/// kHard emits binary spikes and Bernoulli samples, with surrogate/STE
/// derivatives in the backward pass. kRelaxed replaces every step with the
/// antiderivative of its surrogate and every Bernoulli draw with its
/// probability, so that the backward pass is the exact derivative of the
/// forward. Finite-difference checks run against kRelaxed.
enum class SpikeMode { kHard, kRelaxed };

double surrogate_derivative(double v, const SurrogateSpec& spec);
double relaxed_step(double v, const SurrogateSpec& spec);

// Elementwise arithmetic. For add/sub/mul the second operand may have a
// shape equal to a trailing suffix of the first (broadcast over leading dims).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor one_minus(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

/// a[..., k] x w[k, m] -> [..., m]
Tensor matmul(const Tensor& a, const Tensor& w);
/// matmul(a, w) + b, b of shape [m].
Tensor affine(const Tensor& a, const Tensor& w, const Tensor& b);
/// a[B, n, k] x b[B, k, m] -> [B, n, m]; with transpose_b, b is [B, m, k].
Tensor batched_matmul(const Tensor& a, const Tensor& b, bool transpose_b = false);
/// w[n, n'] x x[B, n', d] -> [B, n, d], the same w applied to every batch item.
Tensor mix_rows(const Tensor& w, const Tensor& x);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// x[B, L, D] -> [B, D], mean over the middle axis.
Tensor mean_tokens(const Tensor& x);
/// Columns [begin, begin+count) of the last axis.
Tensor slice_last(const Tensor& x, std::size_t begin, std::size_t count);
/// Concatenate along the last axis; leading dims must agree.
Tensor concat_last(const std::vector<Tensor>& parts);

/// Unit step with Θ(0) = 1 in hard mode.
Tensor heaviside(const Tensor& v, const SurrogateSpec& spec, SpikeMode mode = SpikeMode::kHard);

/// Bernoulli sampling with a straight-through gradient. p is clamped to
/// [0, 1] for the draw only; the gradient w.r.t. p is the identity.
Tensor bernoulli_ste(const Tensor& p, Rng& rng, SpikeMode mode = SpikeMode::kHard);

struct BatchNormStats {
  std::vector<double> running_mean;
  std::vector<double> running_var;

  explicit BatchNormStats(std::size_t features = 0)
      : running_mean(features, 0.0), running_var(features, 1.0) {}
};

inline constexpr double kBatchNormMomentum = 0.9;
inline constexpr double kBatchNormEps = 1e-5;

/// Per-feature normalisation over every leading position of x[..., F].
/// Training mode uses batch statistics and folds them into `stats`
/// (running = 0.9 running + 0.1 batch); eval mode reads `stats`.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                  bool training);

/// Mean cross-entropy over a batch of logits z[B, C] (or a single z[C]).
Tensor softmax_cross_entropy(const Tensor& z, std::span<const std::size_t> labels);

/// Pre-activation of one time-hopping slot: a[k] * x + eps[..., k], with
/// x[B, L, D], a[K], eps[L, D, K].
Tensor time_hop_preactivation(const Tensor& x, const Tensor& a, const Tensor& eps, std::size_t k);

}  // namespace spikelink::ag
