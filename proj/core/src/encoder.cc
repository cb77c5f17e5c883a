#include "scopeq/encoder.h"

#include <cmath>
#include <numeric>

#include "scopeq/contrastive.h"
#include "scopeq/error.h"
#include "scopeq/rng.h"

namespace scopeq {
namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kIdentity:
      break;
  }
  return z;
}

// Derivative expressed through the pre-activation z.
double activate_grad(Activation a, double z) {
  switch (a) {
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::kIdentity:
      break;
  }
  return 1.0;
}

std::size_t layer_size(const DenseLayer& l) { return l.weights.size() + l.bias.size(); }

std::size_t stack_size(std::span<const DenseLayer> layers) {
  std::size_t n = 0;
  for (const auto& l : layers) n += layer_size(l);
  return n;
}

// Per-layer inputs and pre-activations recorded during a forward pass.
struct Tape {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> preact;
  std::vector<double> output;
};

Tape forward_stack(std::span<const DenseLayer> layers, std::span<const double> x) {
  Tape t;
  std::vector<double> cur(x.begin(), x.end());
  for (const auto& l : layers) {
    if (cur.size() != l.in) {
      throw ShapeError("layer expects " + std::to_string(l.in) + " inputs, got " + std::to_string(cur.size()));
    }
    std::vector<double> z(l.bias);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* row = l.weights.data() + o * l.in;
      double s = 0.0;
      for (std::size_t i = 0; i < l.in; ++i) s += row[i] * cur[i];
      z[o] += s;
    }
    std::vector<double> y(l.out);
    for (std::size_t o = 0; o < l.out; ++o) y[o] = activate(l.activation, z[o]);
    t.inputs.push_back(std::move(cur));
    t.preact.push_back(std::move(z));
    cur = std::move(y);
  }
  t.output = std::move(cur);
  return t;
}

// Accumulates parameter gradients into grad[offset...] and returns d/d input.
std::vector<double> backward_stack(std::span<const DenseLayer> layers, const Tape& t, std::vector<double> dy,
                                   std::span<double> grad) {
  std::vector<std::size_t> offsets(layers.size());
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offsets[l] = off;
    off += layer_size(layers[l]);
  }
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const auto& a = t.inputs[l];
    std::vector<double> dz(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) dz[o] = dy[o] * activate_grad(layer.activation, t.preact[l][o]);
    double* gw = grad.data() + offsets[l];
    double* gb = gw + layer.weights.size();
    std::vector<double> dx(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double d = dz[o];
      gb[o] += d;
      const double* row = layer.weights.data() + o * layer.in;
      double* grow = gw + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) {
        grow[i] += d * a[i];
        dx[i] += d * row[i];
      }
    }
    dy = std::move(dx);
  }
  return dy;
}

DenseLayer random_layer(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  DenseLayer l{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0), act};
  const double scale = act == Activation::kRelu ? std::sqrt(2.0 / static_cast<double>(in))
                                                : std::sqrt(1.0 / static_cast<double>(in));
  for (double& w : l.weights) w = scale * normal(rng);
  return l;
}

void check_stack(std::span<const DenseLayer> layers, const char* name) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.in == 0 || l.out == 0 || l.weights.size() != l.in * l.out || l.bias.size() != l.out) {
      throw ShapeError(std::string(name) + " layer " + std::to_string(i) + " has inconsistent dimensions");
    }
    if (i > 0 && layers[i - 1].out != l.in) {
      throw ShapeError(std::string(name) + " layer " + std::to_string(i) + " does not chain with previous layer");
    }
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      break;
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity" || s == "linear") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + s + "'");
}

std::size_t EncoderParams::parameter_count() const { return stack_size(encoder) + stack_size(projection); }

void validate(const EncoderParams& params) {
  if (params.encoder.empty()) throw ShapeError("encoder has no layers");
  check_stack(params.encoder, "encoder");
  check_stack(params.projection, "projection");
  if (params.projection.size() != 2) throw ShapeError("projection head must have exactly one hidden layer");
  if (params.encoder.back().out != params.embed_dim) throw ShapeError("encoder output does not match embed_dim");
  if (params.projection.front().in != params.embed_dim) throw ShapeError("projection input does not match embed_dim");
}

EncoderParams init_encoder(const EncoderArch& arch, std::uint64_t seed) {
  if (arch.input_dim == 0 || arch.embed_dim == 0 || arch.projection_hidden == 0 || arch.projection_dim == 0) {
    throw ConfigError("encoder dimensions must be positive");
  }
  Rng rng = make_rng(seed, 0x656e63);
  EncoderParams p;
  p.embed_dim = arch.embed_dim;
  std::size_t in = arch.input_dim;
  for (std::size_t h : arch.hidden) {
    p.encoder.push_back(random_layer(in, h, arch.activation, rng));
    in = h;
  }
  p.encoder.push_back(random_layer(in, arch.embed_dim, Activation::kIdentity, rng));
  p.projection.push_back(random_layer(arch.embed_dim, arch.projection_hidden, Activation::kRelu, rng));
  p.projection.push_back(random_layer(arch.projection_hidden, arch.projection_dim, Activation::kIdentity, rng));
  return p;
}

std::vector<double> pack(const EncoderParams& params) {
  std::vector<double> flat;
  flat.reserve(params.parameter_count());
  for (const auto* stack : {&params.encoder, &params.projection}) {
    for (const auto& l : *stack) {
      flat.insert(flat.end(), l.weights.begin(), l.weights.end());
      flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
  }
  return flat;
}

void unpack(std::span<const double> flat, EncoderParams& params) {
  if (flat.size() != params.parameter_count()) throw ShapeError("unpack: parameter count mismatch");
  std::size_t off = 0;
  for (auto* stack : {&params.encoder, &params.projection}) {
    for (auto& l : *stack) {
      std::copy_n(flat.begin() + off, l.weights.size(), l.weights.begin());
      off += l.weights.size();
      std::copy_n(flat.begin() + off, l.bias.size(), l.bias.begin());
      off += l.bias.size();
    }
  }
}

std::vector<double> encoder_forward(const EncoderParams& params, std::span<const double> input) {
  return forward_stack(params.encoder, input).output;
}

std::vector<double> encoder_forward(const EncoderParams& params, const FrameTensor& frame) {
  return encoder_forward(params, std::span<const double>(frame.values));
}

std::vector<double> project_forward(const EncoderParams& params, std::span<const double> input) {
  const auto h = forward_stack(params.encoder, input).output;
  return forward_stack(params.projection, h).output;
}

EncoderGradient encoder_backward(const EncoderParams& params, std::span<const double> input,
                                 std::span<const double> seed) {
  const Tape t = forward_stack(params.encoder, input);
  if (seed.size() != t.output.size()) throw ShapeError("encoder_backward: seed length mismatch");
  EncoderGradient g;
  g.params.assign(params.parameter_count(), 0.0);
  g.input = backward_stack(params.encoder, t, std::vector<double>(seed.begin(), seed.end()), g.params);
  return g;
}

BatchGradient contrastive_step_gradient(const EncoderParams& params, const ViewBatch& views, double tau) {
  const std::size_t n = views.first.size();
  if (views.second.size() != n) throw ShapeError("view batch: mismatched view counts");
  std::vector<Tape> enc_tapes;
  std::vector<Tape> proj_tapes;
  enc_tapes.reserve(2 * n);
  proj_tapes.reserve(2 * n);
  std::vector<ViewPair> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 2; ++a) {
      const auto& x = a == 0 ? views.first[i] : views.second[i];
      enc_tapes.push_back(forward_stack(params.encoder, x));
      proj_tapes.push_back(forward_stack(params.projection, enc_tapes.back().output));
      (a == 0 ? z[i].first : z[i].second) = proj_tapes.back().output;
    }
  }
  const NtXentGradient lg = nt_xent_grad(z, tau);

  BatchGradient out;
  out.loss = lg.loss;
  out.params.assign(params.parameter_count(), 0.0);
  std::span<double> enc_grad(out.params.data(), stack_size(params.encoder));
  std::span<double> proj_grad(out.params.data() + enc_grad.size(), stack_size(params.projection));
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 2; ++a) {
      const std::size_t v = 2 * i + static_cast<std::size_t>(a);
      const auto& dz = a == 0 ? lg.grads[i].first : lg.grads[i].second;
      auto dh = backward_stack(params.projection, proj_tapes[v], dz, proj_grad);
      backward_stack(params.encoder, enc_tapes[v], std::move(dh), enc_grad);
    }
  }
  return out;
}

void ContrastiveConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (batch_size < 2) throw ConfigError("contrastive batch size must be at least 2");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  augmentation.validate();
}

EncoderTrainResult train_encoder(std::span<const FrameTensor> frames, const ContrastiveConfig& cfg) {
  return train_encoder(frames, cfg, init_encoder(cfg.arch, cfg.seed));
}

EncoderTrainResult train_encoder(std::span<const FrameTensor> frames, const ContrastiveConfig& cfg,
                                 EncoderParams initial) {
  cfg.validate();
  validate(initial);
  if (frames.size() < 2 * cfg.batch_size) {
    throw InsufficientDataError("train_encoder needs at least " + std::to_string(2 * cfg.batch_size) +
                                " frames, got " + std::to_string(frames.size()));
  }
  for (const auto& f : frames) {
    validate(f);
    if (f.size() != initial.input_dim()) throw ShapeError("frame size does not match encoder input");
  }

  EncoderTrainResult result;
  result.params = std::move(initial);
  std::vector<double> flat = pack(result.params);
  AdamState state = AdamState::zeros(flat.size());
  Rng order_rng = make_rng(cfg.seed, 1);
  Rng aug_rng = make_rng(cfg.seed, 2);

  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batches = frames.size() / cfg.batch_size;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle) shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      ViewBatch views;
      for (std::size_t j = 0; j < cfg.batch_size; ++j) {
        const auto& f = frames[order[b * cfg.batch_size + j]];
        views.first.push_back(augment(f, cfg.augmentation, aug_rng).values);
        views.second.push_back(augment(f, cfg.augmentation, aug_rng).values);
      }
      const BatchGradient g = contrastive_step_gradient(result.params, views, cfg.temperature);
      if (!std::isfinite(g.loss)) throw DivergenceError(epoch, "non-finite contrastive loss");
      adam_step(state, flat, g.params, cfg.adam);
      unpack(flat, result.params);
      epoch_loss += g.loss;
    }
    epoch_loss /= static_cast<double>(batches);
    if (!std::isfinite(epoch_loss)) throw DivergenceError(epoch, "non-finite epoch loss");
    result.loss_trace.push_back(epoch_loss);
  }
  return result;
}

}  // namespace scopeq
