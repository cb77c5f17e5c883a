#include "scopeq/clustering.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scopeq/error.h"
#include "scopeq/rng.h"

namespace scopeq {
namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::size_t count_distinct(std::span<const std::vector<double>> points, std::size_t enough) {
  std::vector<const std::vector<double>*> ptrs;
  ptrs.reserve(points.size());
  for (const auto& p : points) ptrs.push_back(&p);
  std::sort(ptrs.begin(), ptrs.end(), [](auto* a, auto* b) { return *a < *b; });
  std::size_t distinct = ptrs.empty() ? 0 : 1;
  for (std::size_t i = 1; i < ptrs.size() && distinct < enough; ++i) {
    if (*ptrs[i] != *ptrs[i - 1]) ++distinct;
  }
  return distinct;
}

// Index drawn with probability proportional to weights[i].
std::size_t sample_weighted(std::span<const double> weights, double total, Rng& rng) {
  const double target = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (target < acc) return i;
  }
  // Floating round-off: fall back to the last point with positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

std::vector<std::vector<double>> seed_plus_plus(std::span<const std::vector<double>> points, std::size_t k,
                                                Rng& rng) {
  const std::size_t n = points.size();
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<std::vector<double>> centers;
  centers.push_back(points[uniform_index(rng, n)]);
  std::vector<double> closest(n);
  for (std::size_t i = 0; i < n; ++i) closest[i] = sq_dist(points[i], centers[0]);
  std::vector<double> candidate(n);
  std::vector<double> best(n);
  while (centers.size() < k) {
    double total = 0.0;
    for (double d : closest) total += d;
    double best_potential = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t idx = sample_weighted(closest, total, rng);
      double potential = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        candidate[i] = std::min(closest[i], sq_dist(points[i], points[idx]));
        potential += candidate[i];
      }
      if (potential < best_potential) {
        best_potential = potential;
        best_idx = idx;
        best.swap(candidate);
      }
    }
    centers.push_back(points[best_idx]);
    closest.swap(best);
  }
  return centers;
}

double assign_all(std::span<const std::vector<double>> points, const std::vector<std::vector<double>>& centers,
                  std::vector<std::size_t>& labels, std::vector<double>& dist) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = sq_dist(points[i], centers[c]);
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    labels[i] = arg;
    dist[i] = best;
    inertia += best;
  }
  return inertia;
}

// Recomputes means; returns the largest center displacement.
double update_centers(std::span<const std::vector<double>> points, std::vector<std::vector<double>>& centers,
                      std::vector<std::size_t>& labels, std::vector<double>& dist) {
  const std::size_t k = centers.size();
  const std::size_t dim = centers.front().size();
  std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    ++counts[labels[i]];
    auto& s = sums[labels[i]];
    for (std::size_t d = 0; d < dim; ++d) s[d] += points[i][d];
  }
  double shift = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) {
      // Farthest point from its own center among clusters that can spare one.
      std::size_t far = points.size();
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (counts[labels[i]] > 1 && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      if (far == points.size()) continue;
      const std::size_t donor = labels[far];
      for (std::size_t d = 0; d < dim; ++d) sums[donor][d] -= points[far][d];
      --counts[donor];
      labels[far] = c;
      dist[far] = 0.0;
      counts[c] = 1;
      sums[c] = points[far];
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> mean(dim);
    for (std::size_t d = 0; d < dim; ++d) mean[d] = sums[c][d] / static_cast<double>(counts[c]);
    shift = std::max(shift, std::sqrt(sq_dist(mean, centers[c])));
    centers[c] = std::move(mean);
  }
  return shift;
}

KMeansResult lloyd(std::span<const std::vector<double>> points, const KMeansConfig& cfg, Rng& rng) {
  KMeansResult r;
  std::vector<std::vector<double>> centers = seed_plus_plus(points, cfg.k, rng);
  std::vector<std::size_t> labels(points.size(), 0);
  std::vector<std::size_t> previous;
  std::vector<double> dist(points.size(), 0.0);
  bool stale = true;
  for (int it = 0; it < cfg.max_iters; ++it) {
    r.inertia_trace.push_back(assign_all(points, centers, labels, dist));
    stale = false;
    r.iterations = it + 1;
    if (labels == previous) break;
    previous = labels;
    const double shift = update_centers(points, centers, labels, dist);
    stale = true;
    if (shift < cfg.tol) break;
  }
  if (stale) r.inertia_trace.push_back(assign_all(points, centers, labels, dist));
  r.model.centers = std::move(centers);
  r.model.alpha = cfg.alpha;
  r.model.epsilon = cfg.epsilon;
  r.labels = std::move(labels);
  return r;
}

}  // namespace

void validate(const ClusterModel& model) {
  if (model.k() < 2) throw ShapeError("cluster model needs K >= 2, got " + std::to_string(model.k()));
  if (!(model.alpha > 0.0) || !std::isfinite(model.alpha)) throw DegenerateInputError("alpha must be positive");
  if (!(model.epsilon > 0.0) || !std::isfinite(model.epsilon)) throw DegenerateInputError("epsilon must be positive");
  const std::size_t dim = model.dim();
  if (dim == 0) throw ShapeError("cluster centers are empty");
  for (std::size_t c = 0; c < model.k(); ++c) {
    if (model.centers[c].size() != dim) throw ShapeError("cluster centers differ in dimension");
    for (double v : model.centers[c]) {
      if (!std::isfinite(v)) throw DegenerateInputError("cluster center has a non-finite value");
    }
    for (std::size_t o = 0; o < c; ++o) {
      if (model.centers[o] == model.centers[c]) {
        throw DegenerateInputError("cluster centers " + std::to_string(o) + " and " + std::to_string(c) +
                                   " coincide");
      }
    }
  }
}

KMeansResult kmeans_fit(std::span<const std::vector<double>> points, const KMeansConfig& cfg) {
  if (cfg.k < 2) throw ConfigError("k-means needs K >= 2");
  if (cfg.n_init < 1 || cfg.max_iters < 1) throw ConfigError("k-means needs n_init >= 1 and max_iters >= 1");
  if (points.empty()) throw InfeasibleError("k-means on an empty point set");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim || dim == 0) throw ShapeError("k-means points differ in dimension");
    for (double v : p) {
      if (!std::isfinite(v)) throw DegenerateInputError("k-means point has a non-finite value");
    }
  }
  const std::size_t distinct = count_distinct(points, cfg.k);
  if (distinct < cfg.k) {
    throw InfeasibleError("k-means: only " + std::to_string(distinct) + " distinct points for K=" +
                          std::to_string(cfg.k));
  }
  KMeansResult best;
  for (int run = 0; run < cfg.n_init; ++run) {
    Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(run));
    KMeansResult r = lloyd(points, cfg, rng);
    if (run == 0 || r.inertia() < best.inertia()) best = std::move(r);
  }
  return best;
}

std::size_t nearest_center(std::span<const double> x, const ClusterModel& model) {
  if (x.size() != model.dim()) throw ShapeError("embedding dimension does not match cluster centers");
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t c = 0; c < model.k(); ++c) {
    const double d = sq_dist(x, model.centers[c]);
    if (d < best) {
      best = d;
      arg = c;
    }
  }
  return arg;
}

std::vector<double> soft_assign(std::span<const double> x, const ClusterModel& model) {
  if (x.size() != model.dim()) {
    throw ShapeError("embedding has dimension " + std::to_string(x.size()) + ", centers have " +
                     std::to_string(model.dim()));
  }
  const std::size_t k = model.k();
  std::vector<double> r(k);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    r[c] = -model.alpha * std::log(sq_dist(x, model.centers[c]) + model.epsilon);
    mx = std::max(mx, r[c]);
  }
  double z = 0.0;
  for (double& v : r) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : r) v /= z;
  return r;
}

std::vector<std::vector<double>> assign_stream(std::span<const std::vector<double>> xs, const ClusterModel& model) {
  std::vector<std::vector<double>> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(soft_assign(x, model));
  return out;
}

}  // namespace scopeq
