#include "scopeq/contrastive.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "scopeq/error.h"

namespace scopeq {
namespace {

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double checked_norm(std::span<const double> u) {
  const double n = std::sqrt(dot(u, u));
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw DegenerateInputError("zero-norm or non-finite vector in cosine similarity");
  }
  return n;
}

// Unit-normalized copies of all 2N views, index 2*i + a.
struct NormalizedBatch {
  std::vector<std::vector<double>> unit;
  std::vector<double> norm;
};

NormalizedBatch normalize(std::span<const ViewPair> pairs, double tau) {
  if (pairs.size() < 2) {
    throw UndefinedLossError("contrastive loss needs at least 2 pairs, got " + std::to_string(pairs.size()));
  }
  if (!(tau > 0.0)) throw DegenerateInputError("temperature must be positive");
  const std::size_t dim = pairs.front().first.size();
  NormalizedBatch out;
  out.unit.reserve(2 * pairs.size());
  out.norm.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    for (const auto* z : {&p.first, &p.second}) {
      if (z->size() != dim) throw ShapeError("projected vectors differ in length");
      const double n = checked_norm(*z);
      std::vector<double> u(*z);
      for (double& x : u) x /= n;
      out.unit.push_back(std::move(u));
      out.norm.push_back(n);
    }
  }
  return out;
}

}  // namespace

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ShapeError("cosine_similarity: length mismatch");
  const double nu = checked_norm(u);
  const double nv = checked_norm(v);
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

NtXentGradient nt_xent_grad(std::span<const ViewPair> pairs, double tau) {
  const NormalizedBatch b = normalize(pairs, tau);
  const std::size_t n = pairs.size();
  const std::size_t views = 2 * n;
  const std::size_t dim = b.unit.front().size();

  std::vector<double> sim(views * views);
  for (std::size_t p = 0; p < views; ++p) {
    for (std::size_t q = p; q < views; ++q) {
      sim[p * views + q] = sim[q * views + p] = dot(b.unit[p], b.unit[q]);
    }
  }

  // Gradient with respect to the unit vectors first, then through the
  // normalization.
  std::vector<std::vector<double>> grad_unit(views, std::vector<double>(dim, 0.0));
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  std::vector<double> logits;
  logits.reserve(4 * (n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    logits.clear();
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t c = 0; c < 2; ++c) logits.push_back(sim[(2 * i + a) * views + 2 * k + c] / tau);
      }
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    const double lse = mx + std::log(z);
    const double positive = sim[(2 * i) * views + 2 * i + 1] / tau;
    total += lse - positive;

    // d l_i / d s(i1,i2) = -1/tau
    const double gp = -inv_n / tau;
    for (std::size_t d = 0; d < dim; ++d) {
      grad_unit[2 * i][d] += gp * b.unit[2 * i + 1][d];
      grad_unit[2 * i + 1][d] += gp * b.unit[2 * i][d];
    }
    // d l_i / d s(ia,kc) = softmax weight / tau
    std::size_t idx = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t c = 0; c < 2; ++c, ++idx) {
          const double w = std::exp(logits[idx] - lse) * inv_n / tau;
          const auto& ua = b.unit[2 * i + a];
          const auto& uk = b.unit[2 * k + c];
          auto& ga = grad_unit[2 * i + a];
          auto& gk = grad_unit[2 * k + c];
          for (std::size_t d = 0; d < dim; ++d) {
            ga[d] += w * uk[d];
            gk[d] += w * ua[d];
          }
        }
      }
    }
  }

  NtXentGradient out;
  out.loss = total * inv_n;
  out.grads.resize(n);
  for (std::size_t p = 0; p < views; ++p) {
    const auto& u = b.unit[p];
    const auto& g = grad_unit[p];
    const double radial = dot(u, g);
    std::vector<double> gz(dim);
    for (std::size_t d = 0; d < dim; ++d) gz[d] = (g[d] - radial * u[d]) / b.norm[p];
    if (p % 2 == 0) {
      out.grads[p / 2].first = std::move(gz);
    } else {
      out.grads[p / 2].second = std::move(gz);
    }
  }
  return out;
}

double nt_xent_loss(std::span<const ViewPair> pairs, double tau) {
  const NormalizedBatch b = normalize(pairs, tau);
  const std::size_t n = pairs.size();
  double total = 0.0;
  std::vector<double> logits;
  logits.reserve(4 * (n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    logits.clear();
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t c = 0; c < 2; ++c) logits.push_back(dot(b.unit[2 * i + a], b.unit[2 * k + c]) / tau);
      }
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    total += mx + std::log(z) - dot(b.unit[2 * i], b.unit[2 * i + 1]) / tau;
  }
  return total / static_cast<double>(n);
}

}  // namespace scopeq
