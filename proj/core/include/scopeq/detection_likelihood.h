#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scopeq/procedure.h"
#include "scopeq/quality_online.h"

namespace scopeq {

// Histogram-based estimate of the chance to detect an existing polyp given
// the local quality q:
//   P(D | E, q) ~= pds * P(q | D) / P(q),   pds = P(D) / P(E).
struct BayesTable {
  std::vector<double> bin_edges;  // n_bins + 1, strictly increasing
  std::vector<double> p_q;
  std::vector<double> p_q_given_d;
  double pds = 0.775;
  std::vector<std::optional<double>> p_d_given_e_q;  // nullopt where P(q) = 0

  std::size_t n_bins() const { return p_q.size(); }
  double bin_center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
  bool operator==(const BayesTable&) const = default;
};

void validate(const BayesTable& table);

// Bin of v: bin i holds [e_i, e_{i+1}), the last bin is closed on the right.
// Throws RangeError outside [e_0, e_n].
std::size_t bin_index(double v, std::span<const double> edges);

// Normalized frequencies of `values` over the given edges.
std::vector<double> histogram(std::span<const double> values, std::span<const double> edges);

// n_bins + 1 equal-width edges over [lo, hi]; a degenerate range is widened
// to [lo - 0.5, lo + 0.5].
std::vector<double> equal_width_edges(double lo, double hi, std::size_t n_bins);

struct BayesOptions {
  double pds = 0.775;
  std::size_t n_bins = 10;
  // Add one pseudo-count to every bin of both histograms.
  bool smoothing = false;
};

BayesTable fit_bayes(std::span<const double> q_random, std::span<const double> q_pre_polyp,
                     const BayesOptions& options = {});

// Stored likelihood of the bin holding q, or nullopt for an empty bin.
std::optional<double> p_detect_given_exists(const BayesTable& table, double q);

// Quality samples for the estimator: q over random windows from the
// withdrawal phase and q over the windows that end where a polyp appears.
struct BayesSamples {
  std::vector<double> q_random;
  std::vector<double> q_pre_polyp;
};

// n_random == 0 uses every stride window of every withdrawal phase.
BayesSamples gather_bayes_samples(std::span<const AssignedProcedure> procedures,
                                  std::span<const ProcedureAnnotation> annotations, const QualityModel& model,
                                  std::size_t n_random, std::uint64_t seed, const WindowParams& params = {});

}  // namespace scopeq
