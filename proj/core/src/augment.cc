#include "scopeq/augment.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "scopeq/error.h"

namespace scopeq {

FrameTensor FrameTensor::vector(std::vector<double> v) {
  FrameTensor f;
  f.cols = v.size();
  f.values = std::move(v);
  return f;
}

FrameTensor FrameTensor::grid(std::vector<double> v, std::size_t rows, std::size_t cols) {
  FrameTensor f;
  f.values = std::move(v);
  f.rows = rows;
  f.cols = cols;
  f.layout = Layout::kGrid;
  return f;
}

void validate(const FrameTensor& frame) {
  if (frame.values.empty() || frame.rows * frame.cols != frame.values.size()) {
    throw ShapeError("frame tensor: " + std::to_string(frame.rows) + "x" + std::to_string(frame.cols) +
                     " does not match " + std::to_string(frame.values.size()) + " values");
  }
  if (frame.layout == Layout::kVector && frame.rows != 1) throw ShapeError("vector frame must have one row");
  for (double v : frame.values) {
    if (!std::isfinite(v)) throw DegenerateInputError("frame tensor contains a non-finite value");
  }
}

void AugmentConfig::validate() const {
  if (!(gaussian_noise_sigma >= 0.0) || !(cutout_fill_sigma >= 0.0)) {
    throw ConfigError("augment: noise sigmas must be >= 0");
  }
  if (!(scale_jitter_lo > 0.0) || !(scale_jitter_lo <= scale_jitter_hi)) {
    throw ConfigError("augment: scale jitter range must satisfy 0 < lo <= hi");
  }
  if (!(cutout_fraction >= 0.0 && cutout_fraction < 1.0)) {
    throw ConfigError("augment: cutout fraction must lie in [0, 1)");
  }
  if (!(max_translation >= 0.0 && max_translation < 1.0) || !(min_crop_scale > 0.0 && min_crop_scale <= 1.0)) {
    throw ConfigError("augment: geometric ranges out of bounds");
  }
}

namespace {

double sample_at(const FrameTensor& f, double r, double c) {
  // Bilinear interpolation with edge clamping.
  r = std::clamp(r, 0.0, static_cast<double>(f.rows - 1));
  c = std::clamp(c, 0.0, static_cast<double>(f.cols - 1));
  const auto r0 = static_cast<std::size_t>(std::floor(r));
  const auto c0 = static_cast<std::size_t>(std::floor(c));
  const std::size_t r1 = std::min(r0 + 1, f.rows - 1);
  const std::size_t c1 = std::min(c0 + 1, f.cols - 1);
  const double fr = r - static_cast<double>(r0);
  const double fc = c - static_cast<double>(c0);
  const auto at = [&](std::size_t i, std::size_t j) { return f.values[i * f.cols + j]; };
  return (1 - fr) * ((1 - fc) * at(r0, c0) + fc * at(r0, c1)) + fr * ((1 - fc) * at(r1, c0) + fc * at(r1, c1));
}

void cutout(FrameTensor& f, const AugmentConfig& cfg, Rng& rng) {
  if (f.layout == Layout::kVector) {
    const auto count = static_cast<std::size_t>(std::llround(cfg.cutout_fraction * static_cast<double>(f.size())));
    if (count == 0) return;
    const std::size_t start = uniform_index(rng, f.size() - count + 1);
    for (std::size_t i = start; i < start + count; ++i) f.values[i] = cfg.cutout_fill_sigma * normal(rng);
    return;
  }
  // Square-ish patch covering the requested fraction of the pixels.
  const double side = std::sqrt(cfg.cutout_fraction);
  const auto h = std::min<std::size_t>(f.rows, static_cast<std::size_t>(std::llround(side * static_cast<double>(f.rows))));
  const auto w = std::min<std::size_t>(f.cols, static_cast<std::size_t>(std::llround(side * static_cast<double>(f.cols))));
  if (h == 0 || w == 0) return;
  const std::size_t r0 = uniform_index(rng, f.rows - h + 1);
  const std::size_t c0 = uniform_index(rng, f.cols - w + 1);
  for (std::size_t r = r0; r < r0 + h; ++r) {
    for (std::size_t c = c0; c < c0 + w; ++c) f.values[r * f.cols + c] = cfg.cutout_fill_sigma * normal(rng);
  }
}

FrameTensor geometric(const FrameTensor& f, const AugmentConfig& cfg, Rng& rng) {
  const double rows = static_cast<double>(f.rows);
  const double cols = static_cast<double>(f.cols);
  const double dy = uniform(rng, -cfg.max_translation, cfg.max_translation) * rows;
  const double dx = uniform(rng, -cfg.max_translation, cfg.max_translation) * cols;
  const double scale = uniform(rng, cfg.min_crop_scale, 1.0);
  const double crop_h = scale * (rows - 1);
  const double crop_w = scale * (cols - 1);
  const double top = uniform(rng, 0.0, (rows - 1) - crop_h);
  const double left = uniform(rng, 0.0, (cols - 1) - crop_w);
  FrameTensor out = f;
  for (std::size_t r = 0; r < f.rows; ++r) {
    for (std::size_t c = 0; c < f.cols; ++c) {
      const double u = f.rows > 1 ? static_cast<double>(r) / (rows - 1) : 0.0;
      const double v = f.cols > 1 ? static_cast<double>(c) / (cols - 1) : 0.0;
      out.values[r * f.cols + c] = sample_at(f, top + u * crop_h - dy, left + v * crop_w - dx);
    }
  }
  return out;
}

}  // namespace

FrameTensor augment(const FrameTensor& frame, const AugmentConfig& cfg, Rng& rng) {
  FrameTensor out = frame;
  if (cfg.scale_jitter_lo != cfg.scale_jitter_hi || cfg.scale_jitter_lo != 1.0) {
    const double s = uniform(rng, cfg.scale_jitter_lo, cfg.scale_jitter_hi);
    for (double& v : out.values) v *= s;
  }
  if (cfg.gaussian_noise_sigma > 0.0) {
    for (double& v : out.values) v += cfg.gaussian_noise_sigma * normal(rng);
  }
  if (cfg.cutout_fraction > 0.0) cutout(out, cfg, rng);
  if (cfg.geometric_ops_enabled && out.layout == Layout::kGrid) out = geometric(out, cfg, rng);
  for (double& v : out.values) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace scopeq
