#include "spikelink/events.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace spikelink::events {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kFamilies = 7;

double square_wave(double phase) { return std::fmod(std::fmod(phase, 1.0) + 1.0, 1.0) < 0.5 ? 1.0 : 0.0; }

/// Bilinear interpolation of a coarse random lattice.
double value_noise(const std::vector<double>& lattice, std::size_t lattice_side, double y, double x) {
  const auto y0 = static_cast<std::size_t>(y);
  const auto x0 = static_cast<std::size_t>(x);
  const double fy = y - static_cast<double>(y0);
  const double fx = x - static_cast<double>(x0);
  auto at = [&](std::size_t r, std::size_t c) { return lattice[r * lattice_side + c]; };
  const double top = at(y0, x0) * (1 - fx) + at(y0, x0 + 1) * fx;
  const double bottom = at(y0 + 1, x0) * (1 - fx) + at(y0 + 1, x0 + 1) * fx;
  return top * (1 - fy) + bottom * fy;
}

}  // namespace

void DvsConfig::validate() const {
  if (!(contrast_threshold > 0.0)) throw std::invalid_argument("contrast threshold must be positive");
  if (crop_height == 0 || crop_width == 0) throw std::invalid_argument("crop size must be positive");
  if (timesteps < 2) throw std::invalid_argument("at least two timesteps are needed to form events");
  const std::size_t travel = (timesteps - 1) * shift;
  const std::size_t need_h = crop_height + (axis == Axis::kRows ? travel : 0);
  const std::size_t need_w = crop_width + (axis == Axis::kColumns ? travel : 0);
  if (need_h > scene_size || need_w > scene_size) {
    throw std::invalid_argument("crop plus motion (" + std::to_string(need_h) + "x" + std::to_string(need_w) +
                                ") does not fit a scene of side " + std::to_string(scene_size));
  }
}

Scene generate_scene(std::size_t class_id, std::uint64_t seed, std::size_t size) {
  if (class_id >= kMaxClasses) {
    throw std::out_of_range("unknown scene class " + std::to_string(class_id) + " (max " +
                            std::to_string(kMaxClasses - 1) + ")");
  }
  if (size == 0) throw std::invalid_argument("scene size must be positive");
  Rng rng(seed);
  const std::size_t family = class_id % kFamilies;
  const double scale = std::array<double, 3>{1.0, 1.6, 2.4}[class_id / kFamilies];
  const double jitter = rng.uniform(0.9, 1.1);
  const double phase = rng.uniform();
  const double s = static_cast<double>(size);

  Scene scene;
  scene.class_id = class_id;
  scene.seed = seed;
  scene.image = Image(size, size);
  Image& img = scene.image;

  switch (family) {
    case 0: {  // vertical square-wave stripes
      const double period = 8.0 * scale * jitter;
      for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c)
          img.at(r, c) = 0.2 + 0.6 * square_wave(static_cast<double>(c) / period + phase);
      break;
    }
    case 1: {  // diagonal sinusoid
      const double period = 10.0 * scale * jitter;
      for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) {
          const double u = (static_cast<double>(r) + static_cast<double>(c)) / std::numbers::sqrt2;
          img.at(r, c) = 0.5 + 0.3 * std::sin(kTwoPi * (u / period + phase));
        }
      break;
    }
    case 2: {  // checkerboard
      const double cell = 5.0 * scale * jitter;
      const double off_r = phase * 2.0 * cell;
      const double off_c = rng.uniform() * 2.0 * cell;
      for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) {
          const auto i = static_cast<long>(std::floor((static_cast<double>(r) + off_r) / cell));
          const auto j = static_cast<long>(std::floor((static_cast<double>(c) + off_c) / cell));
          img.at(r, c) = ((i + j) % 2 == 0) ? 0.1 : 0.6;
        }
      break;
    }
    case 3: {  // Gaussian blob field on a dark background
      const double sigma = 2.5 * scale * jitter;
      const auto count = static_cast<std::size_t>(std::max(1.0, std::round(s * s / (220.0 * scale * scale))));
      std::vector<std::array<double, 3>> blobs(count);
      for (auto& b : blobs) b = {rng.uniform(0.0, s), rng.uniform(0.0, s), rng.uniform(0.5, 0.8)};
      for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) {
          double v = 0.15;
          for (const auto& b : blobs) {
            const double dy = static_cast<double>(r) - b[0];
            const double dx = static_cast<double>(c) - b[1];
            v += b[2] * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
          }
          img.at(r, c) = v;
        }
      break;
    }
    case 4: {  // concentric rings
      const double period = 12.0 * scale * jitter;
      const double cy = rng.uniform(0.0, s);
      const double cx = rng.uniform(0.0, s);
      for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) {
          const double radius = std::hypot(static_cast<double>(r) - cy, static_cast<double>(c) - cx);
          img.at(r, c) = 0.55 + 0.3 * std::cos(kTwoPi * (radius / period + phase));
        }
      break;
    }
    case 5: {  // bars at 60 degrees, square profile
      const double period = 9.0 * scale * jitter;
      const double ux = std::cos(std::numbers::pi / 3.0);
      const double uy = std::sin(std::numbers::pi / 3.0);
      for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) {
          const double u = static_cast<double>(c) * ux + static_cast<double>(r) * uy;
          img.at(r, c) = 0.35 + 0.45 * square_wave(u / period + phase);
        }
      break;
    }
    default: {  // smooth speckle
      const double cell = 6.0 * scale * jitter;
      const std::size_t side = static_cast<std::size_t>(s / cell) + 2;
      std::vector<double> lattice(side * side);
      for (double& v : lattice) v = rng.uniform(0.2, 0.9);
      for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c)
          img.at(r, c) = value_noise(lattice, side, static_cast<double>(r) / cell, static_cast<double>(c) / cell);
      break;
    }
  }

  // Sensor noise, then clip to the valid range.
  for (double& v : img.pixels) v = std::clamp(v + 0.02 * rng.normal(), 0.0, 1.0);
  return scene;
}

std::vector<Image> frames_from_motion(const Scene& scene, const DvsConfig& cfg, CropOrigin origin) {
  if (cfg.crop_height == 0 || cfg.crop_width == 0 || cfg.timesteps == 0) {
    throw std::invalid_argument("frames_from_motion: empty crop or no timesteps");
  }
  const Image& img = scene.image;
  const std::size_t travel = (cfg.timesteps - 1) * cfg.shift;
  const std::size_t last_row = origin.row + (cfg.axis == Axis::kRows ? travel : 0) + cfg.crop_height;
  const std::size_t last_col = origin.col + (cfg.axis == Axis::kColumns ? travel : 0) + cfg.crop_width;
  if (last_row > img.height || last_col > img.width) {
    throw std::out_of_range("motion leaves the scene: needs " + std::to_string(last_row) + "x" +
                            std::to_string(last_col) + ", scene is " + std::to_string(img.height) + "x" +
                            std::to_string(img.width));
  }
  std::vector<Image> frames;
  frames.reserve(cfg.timesteps);
  for (std::size_t t = 0; t < cfg.timesteps; ++t) {
    const std::size_t dr = cfg.axis == Axis::kRows ? t * cfg.shift : 0;
    const std::size_t dc = cfg.axis == Axis::kColumns ? t * cfg.shift : 0;
    Image crop(cfg.crop_height, cfg.crop_width);
    for (std::size_t r = 0; r < cfg.crop_height; ++r)
      for (std::size_t c = 0; c < cfg.crop_width; ++c) crop.at(r, c) = img.at(origin.row + dr + r, origin.col + dc + c);
    frames.push_back(std::move(crop));
  }
  return frames;
}

EventFrameSequence events_from_frames(const std::vector<Image>& frames, double contrast_threshold) {
  if (frames.size() < 2) throw std::invalid_argument("events_from_frames needs at least two frames");
  EventFrameSequence seq;
  seq.steps = frames.size();
  seq.height = frames.front().height;
  seq.width = frames.front().width;
  const std::size_t pixels = seq.height * seq.width;
  seq.data.assign(seq.steps * pixels, 0);
  for (std::size_t t = 1; t < frames.size(); ++t) {
    if (frames[t].height != seq.height || frames[t].width != seq.width) {
      throw std::invalid_argument("events_from_frames: frames differ in size");
    }
    for (std::size_t i = 0; i < pixels; ++i) {
      const double diff = frames[t].pixels[i] - frames[t - 1].pixels[i];
      if (std::abs(diff) > contrast_threshold) seq.data[t * pixels + i] = diff > 0 ? 1 : -1;
    }
  }
  return seq;
}

std::vector<const Sample*> Dataset::split(Split which) const {
  std::vector<const Sample*> out;
  for (const auto& s : samples) {
    if (s.split == which) out.push_back(&s);
  }
  return out;
}

std::vector<Split> split_assignment(std::uint64_t seed, std::size_t class_id, std::size_t per_class) {
  if (per_class % 2 != 0) {
    throw std::invalid_argument("samples per class must be even for a 50/50 split, got " + std::to_string(per_class));
  }
  Rng rng = Rng(seed).split("split").split(class_id);
  std::vector<std::size_t> order(per_class);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = per_class; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<Split> out(per_class, Split::kEval);
  for (std::size_t i = 0; i < per_class / 2; ++i) out[order[i]] = Split::kTrain;
  return out;
}

Dataset make_dataset(std::size_t classes, std::size_t per_class, const DvsConfig& cfg, std::uint64_t seed) {
  if (classes == 0 || classes > kMaxClasses) {
    throw std::invalid_argument("class count must be in [1, " + std::to_string(kMaxClasses) + "]");
  }
  if (per_class == 0) throw std::invalid_argument("samples per class must be positive");
  cfg.validate();
  Dataset ds;
  ds.classes = classes;
  ds.per_class = per_class;
  ds.dvs = cfg;
  ds.seed = seed;
  const Rng root(seed);
  const Rng sample_seeds = root.split("sample");
  const std::size_t travel = (cfg.timesteps - 1) * cfg.shift;
  const std::size_t max_row = cfg.scene_size - cfg.crop_height - (cfg.axis == Axis::kRows ? travel : 0);
  const std::size_t max_col = cfg.scene_size - cfg.crop_width - (cfg.axis == Axis::kColumns ? travel : 0);
  for (std::size_t c = 0; c < classes; ++c) {
    const auto flags = split_assignment(seed, c, per_class);
    for (std::size_t i = 0; i < per_class; ++i) {
      Sample s;
      s.index = c * per_class + i;
      s.label = c;
      s.split = flags[i];
      s.seed = sample_seeds.split(s.index).seed();
      Rng origin_rng = Rng(s.seed).split("origin");
      const CropOrigin origin{origin_rng.below(max_row + 1), origin_rng.below(max_col + 1)};
      const Scene scene = generate_scene(c, s.seed, cfg.scene_size);
      s.events = events_from_frames(frames_from_motion(scene, cfg, origin), cfg.contrast_threshold);
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace spikelink::events
