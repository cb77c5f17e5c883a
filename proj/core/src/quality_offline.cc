#include "scopeq/quality_offline.h"

#include <algorithm>
#include <string>
#include <tuple>

#include "scopeq/detection_likelihood.h"
#include "scopeq/error.h"

namespace scopeq {

OfflineScore offline_score(std::span<const WindowScore> windows, std::int64_t start_ms, std::int64_t end_ms) {
  std::vector<double> q;
  for (const auto& w : windows) {
    if (w.window_end_ms >= start_ms && w.window_end_ms <= end_ms) q.push_back(w.q);
  }
  if (q.empty()) {
    throw InsufficientDataError("no scored window ends inside withdrawal [" + std::to_string(start_ms) + ", " +
                                std::to_string(end_ms) + "]");
  }
  std::sort(q.begin(), q.end());
  OfflineScore s;
  for (double v : q) s.sum += v;
  s.n_windows = q.size();
  s.mean = s.sum / static_cast<double>(q.size());
  return s;
}

ProcedureScore score_procedure(std::span<const WindowScore> windows, const ProcedureAnnotation& annotation) {
  const OfflineScore s = offline_score(windows, annotation.withdrawal_start_ms, annotation.withdrawal_end_ms);
  return {annotation.procedure_id, s.sum, s.mean, s.n_windows, annotation.polyp_events.size()};
}

std::vector<QuintileRow> quintile_report(std::span<const ProcedureScore> scores) {
  constexpr std::size_t kGroups = 5;
  if (scores.size() < kGroups) {
    throw InsufficientDataError("quintile report needs at least 5 procedures, got " + std::to_string(scores.size()));
  }
  std::vector<const ProcedureScore*> sorted;
  for (const auto& s : scores) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(), [](const ProcedureScore* a, const ProcedureScore* b) {
    return std::tie(a->q_offline_sum, a->procedure_id) < std::tie(b->q_offline_sum, b->procedure_id);
  });
  const std::size_t base = sorted.size() / kGroups;
  const std::size_t extra = sorted.size() % kGroups;
  std::vector<QuintileRow> rows;
  std::size_t at = 0;
  for (std::size_t g = 0; g < kGroups; ++g) {
    const std::size_t n = base + (g < extra ? 1 : 0);
    QuintileRow row;
    row.n = n;
    row.range_lo = sorted[at]->q_offline_sum;
    row.range_hi = sorted[at + n - 1]->q_offline_sum;
    double polyps = 0.0;
    for (std::size_t i = at; i < at + n; ++i) polyps += static_cast<double>(sorted[i]->polyps_detected);
    row.mean_ppc = polyps / static_cast<double>(n);
    rows.push_back(row);
    at += n;
  }
  return rows;
}

DistributionReport score_distribution_report(std::span<const ProcedureScore> scores, std::size_t n_bins) {
  if (scores.empty()) throw InsufficientDataError("distribution report of an empty cohort");
  std::vector<double> none;
  std::vector<double> some;
  double lo = scores.front().q_offline_sum;
  double hi = lo;
  for (const auto& s : scores) {
    (s.polyps_detected == 0 ? none : some).push_back(s.q_offline_sum);
    lo = std::min(lo, s.q_offline_sum);
    hi = std::max(hi, s.q_offline_sum);
  }
  DistributionReport r;
  r.bin_edges = equal_width_edges(lo, hi, n_bins);
  if (!none.empty()) r.no_polyp = histogram(none, r.bin_edges);
  if (!some.empty()) r.polyp = histogram(some, r.bin_edges);
  return r;
}

}  // namespace scopeq
