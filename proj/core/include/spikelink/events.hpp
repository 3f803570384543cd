#pragma once

#include <cstdint>
#include <vector>

#include "spikelink/rng.hpp"

namespace spikelink::events {

/// Grayscale image, row-major, values in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w) : height(h), width(w), pixels(h * w, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  [[nodiscard]] double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
};

struct Scene {
  std::size_t class_id = 0;
  Image image;
  std::uint64_t seed = 0;
};

/// Number of distinct procedural scene classes available.
inline constexpr std::size_t kMaxClasses = 21;

enum class Axis { kColumns, kRows };

struct DvsConfig {
  double contrast_threshold = 0.1;
  std::size_t crop_height = 32;
  std::size_t crop_width = 32;
  std::size_t shift = 1;  ///< pixels per timestep
  Axis axis = Axis::kColumns;
  std::size_t timesteps = 5;
  std::size_t scene_size = 48;  ///< square scene side

  void validate() const;
};

struct EventFrameSequence {
  std::size_t steps = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::int8_t> data;  ///< steps x height x width, values in {-1, 0, +1}

  [[nodiscard]] std::int8_t at(std::size_t t, std::size_t r, std::size_t c) const {
    return data[(t * height + r) * width + c];
  }
};

/// Deterministic procedural texture for a class. Classes cycle through
/// seven texture families (square-wave stripes, diagonal sinusoids,
/// checkerboards, Gaussian blob fields, concentric rings, oriented bars,
/// speckle) at three scales. Throws std::out_of_range for class >= kMaxClasses.
Scene generate_scene(std::size_t class_id, std::uint64_t seed, std::size_t size);

struct CropOrigin {
  std::size_t row = 0;
  std::size_t col = 0;
};

/// T crops; crop t starts at origin + t*shift along the configured axis.
/// Throws std::out_of_range if the last crop leaves the scene.
std::vector<Image> frames_from_motion(const Scene& scene, const DvsConfig& cfg, CropOrigin origin = {});

/// I^t = sign(F^t - F^{t-1}) where |F^t - F^{t-1}| > threshold, else 0;
/// the first frame is all zeros.
EventFrameSequence events_from_frames(const std::vector<Image>& frames, double contrast_threshold);

enum class Split { kTrain, kEval };

struct Sample {
  std::size_t index = 0;  ///< position in the dataset, class-major
  std::size_t label = 0;
  Split split = Split::kTrain;
  std::uint64_t seed = 0;
  EventFrameSequence events;
};

struct Dataset {
  std::size_t classes = 0;
  std::size_t per_class = 0;
  DvsConfig dvs;
  std::uint64_t seed = 0;
  std::vector<Sample> samples;

  [[nodiscard]] std::vector<const Sample*> split(Split which) const;
};

/// Draws the split flags for one class: exactly n/2 train, n/2 eval.
/// A pure function of (seed, class).
std::vector<Split> split_assignment(std::uint64_t seed, std::size_t class_id, std::size_t per_class);

/// n sequences per class with per-sample derived seeds and a deterministic
/// 50/50 split. Throws on odd n.
Dataset make_dataset(std::size_t classes, std::size_t per_class, const DvsConfig& cfg, std::uint64_t seed);

}  // namespace spikelink::events
