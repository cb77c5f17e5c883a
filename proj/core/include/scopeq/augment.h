#pragma once

#include <cstddef>
#include <vector>

#include "scopeq/rng.h"

namespace scopeq {

enum class Layout { kVector, kGrid };

// A single frame with normalized intensities in [0, 1]. Vector frames have
// rows == 1; grid frames are rows x cols, stored row-major.
struct FrameTensor {
  std::vector<double> values;
  std::size_t rows = 1;
  std::size_t cols = 0;
  Layout layout = Layout::kVector;

  static FrameTensor vector(std::vector<double> v);
  static FrameTensor grid(std::vector<double> v, std::size_t rows, std::size_t cols);

  std::size_t size() const { return values.size(); }
  bool operator==(const FrameTensor&) const = default;
};

// Throws ShapeError / DegenerateInputError when the tensor is malformed.
void validate(const FrameTensor& frame);

struct AugmentConfig {
  double gaussian_noise_sigma = 0.05;
  double scale_jitter_lo = 0.8;
  double scale_jitter_hi = 1.2;
  double cutout_fraction = 0.25;
  double cutout_fill_sigma = 0.1;
  bool geometric_ops_enabled = false;
  // Largest translation as a fraction of each grid dimension.
  double max_translation = 0.125;
  // Smallest side of the random crop that gets resized back.
  double min_crop_scale = 0.75;

  static AugmentConfig identity() { return {0.0, 1.0, 1.0, 0.0, 0.0, false, 0.0, 1.0}; }
  void validate() const;
  bool operator==(const AugmentConfig&) const = default;
};

// Returns a stochastically perturbed copy. Steps run in a fixed order:
// scale jitter, additive noise, cutout, then (grid only) translation and
// crop-resize. Output is clamped to [0, 1].
FrameTensor augment(const FrameTensor& frame, const AugmentConfig& cfg, Rng& rng);

}  // namespace scopeq
