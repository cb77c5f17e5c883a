#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scopeq/procedure.h"

namespace scopeq {

// Synthetic colonoscopy generator with planted ground truth.
//
// Each procedure alternates between an informative and a non-informative
// inspection state (two-state Markov chain); within a state frames come from
// one of that state's clusters and are emitted as Gaussian draws around the
// planted center. The true local quality of a window is its fraction of
// informative frames. Polyps are planted uniformly over the withdrawal phase
// and detected with probability sigmoid(a * q_true + b).
struct SimConfig {
  std::size_t n_clusters = 10;
  std::size_t embed_dim = 16;
  double cluster_separation = 10.0;  // distance between centers, in emission sigmas
  double emission_sigma = 1.0;
  std::vector<std::size_t> informative_cluster_ids = {1, 2, 7};
  double frame_rate_hz = 4.0;
  double procedure_len_s = 600.0;
  double withdrawal_fraction = 0.6;
  double polyp_rate_per_procedure = 5.0;
  double detection_a = 10.0;
  double detection_b = -4.0;
  // Per-procedure stationary share of informative time, drawn uniformly.
  double skill_lo = 0.2;
  double skill_hi = 0.8;
  double mean_cycle_s = 5.0;      // informative + non-informative dwell
  double cluster_switch_s = 4.0;  // mean time before re-drawing a cluster within a state
  double polyp_visible_s = 5.0;
  double quality_window_s = 10.0;
  // > 0 emits raw vectors in (0, 1) of this length instead of embeddings.
  std::size_t raw_dim = 0;
  std::uint64_t seed = 42;

  void validate() const;
};

struct PlantedPolyp {
  std::int64_t exists_at_ms = 0;
  double true_window_quality = 0.0;
  bool detected = false;
};

struct SimProcedure {
  Procedure procedure;
  ProcedureAnnotation annotation;
  std::vector<PlantedPolyp> truth;
  std::vector<std::size_t> planted_cluster;  // per frame
  double skill = 0.0;
};

struct SimCohort {
  std::vector<std::vector<double>> centers;
  std::vector<SimProcedure> procedures;
};

// Deterministic for a given cfg.seed; procedure i uses a seed derived from
// (cfg.seed, i) so procedures are independent of cohort size.
SimCohort generate_cohort(const SimConfig& cfg, std::size_t n_procedures);

std::vector<std::vector<double>> planted_centers(const SimConfig& cfg);

// Fraction of informative frames with timestamp in (t - window, t].
double true_window_quality(const SimProcedure& p, const SimConfig& cfg, std::int64_t t_ms);

double planted_detection_probability(const SimConfig& cfg, double q);

// Planted curve sigmoid(a * q + b) at each of the given points.
std::vector<double> truth_detection_curve(const SimConfig& cfg, std::span<const double> q);

}  // namespace scopeq
