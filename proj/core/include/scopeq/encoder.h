#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scopeq/adam.h"
#include "scopeq/augment.h"

namespace scopeq {

enum class Activation { kIdentity, kRelu, kTanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// y = act(W x + b), W stored row-major with `out` rows and `in` columns.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  bool operator==(const DenseLayer&) const = default;
};

// Encoder f followed by a one-hidden-layer projection head g. Only f is used
// to embed frames for clustering; g exists for contrastive training.
struct EncoderParams {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> projection;
  std::size_t embed_dim = 0;

  std::size_t input_dim() const { return encoder.empty() ? 0 : encoder.front().in; }
  std::size_t parameter_count() const;
  bool operator==(const EncoderParams&) const = default;
};

// Throws ShapeError unless layer dimensions chain, the encoder ends at
// embed_dim and the projection has exactly two layers.
void validate(const EncoderParams& params);

struct EncoderArch {
  std::size_t input_dim = 64;
  std::vector<std::size_t> hidden = {32};
  std::size_t embed_dim = 16;
  std::size_t projection_hidden = 16;
  std::size_t projection_dim = 16;
  Activation activation = Activation::kRelu;

  bool operator==(const EncoderArch&) const = default;
};

// Random (scaled normal) weights, zero biases. The last encoder layer and the
// projection output are linear.
EncoderParams init_encoder(const EncoderArch& arch, std::uint64_t seed);

// Flattened parameter vector in layer order (encoder then projection,
// weights then bias per layer), and its inverse.
std::vector<double> pack(const EncoderParams& params);
void unpack(std::span<const double> flat, EncoderParams& params);

// f(x); the projection head is not applied.
std::vector<double> encoder_forward(const EncoderParams& params, const FrameTensor& frame);
std::vector<double> encoder_forward(const EncoderParams& params, std::span<const double> input);

// g(f(x)).
std::vector<double> project_forward(const EncoderParams& params, std::span<const double> input);

struct EncoderGradient {
  std::vector<double> input;   // d s / d x
  std::vector<double> params;  // d s / d theta, packed layout
};

// Gradient of the scalar s = <seed, f(x)> (projection excluded).
EncoderGradient encoder_backward(const EncoderParams& params, std::span<const double> input,
                                 std::span<const double> seed);

struct ViewBatch {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
};

struct BatchGradient {
  double loss = 0.0;
  std::vector<double> params;  // packed layout
};

// Contrastive loss of g(f(.)) over already-augmented views and its gradient
// with respect to every encoder and projection parameter.
BatchGradient contrastive_step_gradient(const EncoderParams& params, const ViewBatch& views, double tau);

struct ContrastiveConfig {
  double temperature = 0.5;
  std::size_t batch_size = 32;
  int epochs = 50;
  AdamHyper adam;
  AugmentConfig augmentation;
  EncoderArch arch;
  bool shuffle = true;
  std::uint64_t seed = 42;

  void validate() const;
};

struct EncoderTrainResult {
  EncoderParams params;
  std::vector<double> loss_trace;  // mean batch loss per epoch
};

// Trains from a seeded initialization derived from cfg.arch and cfg.seed.
EncoderTrainResult train_encoder(std::span<const FrameTensor> frames, const ContrastiveConfig& cfg);
// Continues from `initial`.
EncoderTrainResult train_encoder(std::span<const FrameTensor> frames, const ContrastiveConfig& cfg,
                                 EncoderParams initial);

}  // namespace scopeq
