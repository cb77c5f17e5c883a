#pragma once

// Independent reference routines used as test oracles. None of these call
// into the library code they check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "scopeq/contrastive.h"

namespace oracle {

inline long double cos_sim(const std::vector<double>& u, const std::vector<double>& v) {
  long double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<long double>(u[i]) * v[i];
    nu += static_cast<long double>(u[i]) * u[i];
    nv += static_cast<long double>(v[i]) * v[i];
  }
  return dot / std::sqrt(nu * nv);
}

// Lists every numerator and denominator term of the per-frame loss and
// averages -log(num / den) over frames.
inline double nt_xent_brute_force(const std::vector<scopeq::ViewPair>& pairs, double tau) {
  const std::size_t n = pairs.size();
  auto view = [&](std::size_t i, int a) -> const std::vector<double>& {
    return a == 0 ? pairs[i].first : pairs[i].second;
  };
  long double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long double num = std::exp(cos_sim(view(i, 0), view(i, 1)) / tau);
    std::vector<long double> terms;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) terms.push_back(std::exp(cos_sim(view(i, a), view(k, b)) / tau));
      }
    }
    long double den = 0;
    for (long double t : terms) den += t;
    total += -std::log(num / den);
  }
  return static_cast<double>(total / n);
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline std::vector<scopeq::ViewPair> random_batch(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::vector<scopeq::ViewPair> pairs(n);
  for (auto& p : pairs) {
    p.first = random_vector(rng, dim);
    p.second = random_vector(rng, dim);
  }
  return pairs;
}

// Central differences of f around x, one coordinate at a time.
inline std::vector<double> central_diff(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

// |a - b| / max(|b|, tiny), norms over the whole vector.
inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, ref = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    ref += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(ref), 1e-300);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace oracle
