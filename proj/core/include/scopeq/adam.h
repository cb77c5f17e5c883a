#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace scopeq {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamHyper&) const = default;
};

// First/second moment estimates for a flat parameter vector.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
};

// One bias-corrected Adam update of `params` in place. Throws ShapeError when
// the sizes of params, grads and state disagree.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               const AdamHyper& hyper);

}  // namespace scopeq
