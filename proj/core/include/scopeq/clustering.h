#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace scopeq {

// K centers in embedding space plus the sharpness and distance guard used by
// soft assignment.
struct ClusterModel {
  std::vector<std::vector<double>> centers;
  double alpha = 16.0;
  double epsilon = 1e-12;

  std::size_t k() const { return centers.size(); }
  std::size_t dim() const { return centers.empty() ? 0 : centers.front().size(); }
  bool operator==(const ClusterModel&) const = default;
};

// Throws ShapeError/DegenerateInputError unless K >= 2, all centers share a
// dimension, are finite and pairwise distinct, alpha > 0 and epsilon > 0.
void validate(const ClusterModel& model);

struct KMeansConfig {
  std::size_t k = 10;
  std::uint64_t seed = 42;
  int max_iters = 300;
  double tol = 1e-10;
  // Independent seeded restarts; the lowest final inertia wins.
  int n_init = 4;
  double alpha = 16.0;
  double epsilon = 1e-12;
};

struct KMeansResult {
  ClusterModel model;
  std::vector<double> inertia_trace;  // one entry per assignment pass
  std::vector<std::size_t> labels;    // nearest center per input point
  int iterations = 0;

  double inertia() const { return inertia_trace.empty() ? 0.0 : inertia_trace.back(); }
};

// Lloyd iterations from greedy k-means++ seeding. A cluster that loses all of
// its points is re-seeded at the point farthest from its current center.
// Throws InfeasibleError when there are fewer than K distinct points.
KMeansResult kmeans_fit(std::span<const std::vector<double>> points, const KMeansConfig& cfg);

// Index of the nearest center (lowest index on ties).
std::size_t nearest_center(std::span<const double> x, const ClusterModel& model);

// r_k proportional to (1 / (|x - c_k|^2 + epsilon))^alpha, normalized to sum
// to one. Computed in the log domain.
std::vector<double> soft_assign(std::span<const double> x, const ClusterModel& model);

std::vector<std::vector<double>> assign_stream(std::span<const std::vector<double>> xs, const ClusterModel& model);

}  // namespace scopeq
