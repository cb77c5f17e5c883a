#include "scopeq/adam.h"

#include <cmath>
#include <string>

#include "scopeq/error.h"

namespace scopeq {

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               const AdamHyper& hyper) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
    throw ShapeError("adam_step: params=" + std::to_string(n) + " grads=" + std::to_string(grads.size()) +
                     " state=" + std::to_string(state.m.size()));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(hyper.beta1, t);
  const double bc2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

}  // namespace scopeq
