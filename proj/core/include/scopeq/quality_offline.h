#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scopeq/procedure.h"
#include "scopeq/quality_online.h"

namespace scopeq {

struct OfflineScore {
  double sum = 0.0;
  double mean = 0.0;
  std::size_t n_windows = 0;
};

// Sum and mean of q over windows whose end lies in [start_ms, end_ms]. The
// sum is taken over sorted values so it does not depend on input order.
// Throws InsufficientDataError when no window ends inside the interval.
OfflineScore offline_score(std::span<const WindowScore> windows, std::int64_t start_ms, std::int64_t end_ms);

struct ProcedureScore {
  std::string procedure_id;
  double q_offline_sum = 0.0;
  double q_offline_mean = 0.0;
  std::size_t n_windows = 0;
  std::size_t polyps_detected = 0;

  bool operator==(const ProcedureScore&) const = default;
};

// Offline score over the annotated withdrawal phase; polyps_detected counts
// the annotated polyp events.
ProcedureScore score_procedure(std::span<const WindowScore> windows, const ProcedureAnnotation& annotation);

struct QuintileRow {
  double range_lo = 0.0;
  double range_hi = 0.0;
  double mean_ppc = 0.0;
  std::size_t n = 0;
};

// Five groups by ascending (q_offline_sum, procedure_id); sizes differ by at
// most one with the extra procedures in the lowest groups.
std::vector<QuintileRow> quintile_report(std::span<const ProcedureScore> scores);

struct DistributionReport {
  std::vector<double> bin_edges;
  std::optional<std::vector<double>> no_polyp;  // absent when the group is empty
  std::optional<std::vector<double>> polyp;
};

// Normalized histograms of q_offline_sum for procedures without and with
// detected polyps, on shared equal-width bins.
DistributionReport score_distribution_report(std::span<const ProcedureScore> scores, std::size_t n_bins = 10);

}  // namespace scopeq
