#include "scopeq/detection_likelihood.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "scopeq/error.h"
#include "scopeq/rng.h"

namespace scopeq {

void validate(const BayesTable& table) {
  const std::size_t n = table.p_q.size();
  if (n == 0 || table.bin_edges.size() != n + 1 || table.p_q_given_d.size() != n || table.p_d_given_e_q.size() != n) {
    throw SchemaError("bayes table: inconsistent bin counts");
  }
  for (std::size_t i = 0; i + 1 < table.bin_edges.size(); ++i) {
    if (!(table.bin_edges[i] < table.bin_edges[i + 1])) throw SchemaError("bayes table: bin edges not increasing");
  }
  if (!(table.pds >= 0.0 && table.pds <= 1.0)) throw SchemaError("bayes table: pds outside [0, 1]");
  for (const auto& v : table.p_d_given_e_q) {
    if (v && !(*v >= 0.0 && *v <= 1.0)) throw SchemaError("bayes table: likelihood outside [0, 1]");
  }
}

std::size_t bin_index(double v, std::span<const double> edges) {
  if (edges.size() < 2) throw ShapeError("histogram needs at least two edges");
  if (!(v >= edges.front() && v <= edges.back())) {
    throw RangeError("value " + std::to_string(v) + " outside histogram range [" + std::to_string(edges.front()) +
                     ", " + std::to_string(edges.back()) + "]");
  }
  const auto it = std::upper_bound(edges.begin(), edges.end(), v);
  const auto idx = static_cast<std::size_t>(it - edges.begin());
  return std::min(idx, edges.size() - 1) - 1;
}

std::vector<double> histogram(std::span<const double> values, std::span<const double> edges) {
  if (values.empty()) throw InsufficientDataError("histogram of an empty sample");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i] < edges[i + 1])) throw ShapeError("histogram edges must be strictly increasing");
  }
  std::vector<double> freq(edges.size() - 1, 0.0);
  for (double v : values) freq[bin_index(v, edges)] += 1.0;
  const double n = static_cast<double>(values.size());
  for (double& f : freq) f /= n;
  return freq;
}

std::vector<double> equal_width_edges(double lo, double hi, std::size_t n_bins) {
  if (n_bins == 0) throw ConfigError("need at least one bin");
  if (!(lo < hi)) {
    lo -= 0.5;
    hi = lo + 1.0;
  }
  std::vector<double> edges(n_bins + 1);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) edges[i] = lo + width * static_cast<double>(i);
  edges[n_bins] = hi;
  return edges;
}

BayesTable fit_bayes(std::span<const double> q_random, std::span<const double> q_pre_polyp,
                     const BayesOptions& options) {
  if (q_random.empty() || q_pre_polyp.empty()) {
    throw InsufficientDataError("fit_bayes needs non-empty random and pre-polyp samples");
  }
  if (!(options.pds >= 0.0 && options.pds <= 1.0)) throw ConfigError("pds must lie in [0, 1]");
  const auto [rlo, rhi] = std::minmax_element(q_random.begin(), q_random.end());
  const auto [plo, phi] = std::minmax_element(q_pre_polyp.begin(), q_pre_polyp.end());
  BayesTable t;
  t.bin_edges = equal_width_edges(std::min(*rlo, *plo), std::max(*rhi, *phi), options.n_bins);
  t.pds = options.pds;
  if (options.smoothing) {
    const auto smoothed = [&](std::span<const double> values) {
      std::vector<double> c(options.n_bins, 1.0);
      for (double v : values) c[bin_index(v, t.bin_edges)] += 1.0;
      const double total = static_cast<double>(values.size() + options.n_bins);
      for (double& x : c) x /= total;
      return c;
    };
    t.p_q = smoothed(q_random);
    t.p_q_given_d = smoothed(q_pre_polyp);
  } else {
    t.p_q = histogram(q_random, t.bin_edges);
    t.p_q_given_d = histogram(q_pre_polyp, t.bin_edges);
  }
  t.p_d_given_e_q.resize(options.n_bins);
  for (std::size_t i = 0; i < options.n_bins; ++i) {
    if (t.p_q[i] > 0.0) t.p_d_given_e_q[i] = std::min(1.0, t.pds * (t.p_q_given_d[i] / t.p_q[i]));
  }
  return t;
}

std::optional<double> p_detect_given_exists(const BayesTable& table, double q) {
  return table.p_d_given_e_q[bin_index(q, table.bin_edges)];
}

BayesSamples gather_bayes_samples(std::span<const AssignedProcedure> procedures,
                                  std::span<const ProcedureAnnotation> annotations, const QualityModel& model,
                                  std::size_t n_random, std::uint64_t seed, const WindowParams& params) {
  std::unordered_map<std::string, const ProcedureAnnotation*> by_id;
  for (const auto& a : annotations) by_id[a.procedure_id] = &a;

  struct Candidate {
    std::size_t proc;
    std::int64_t end;
  };
  std::vector<Candidate> random_pool;
  BayesSamples out;
  for (std::size_t pi = 0; pi < procedures.size(); ++pi) {
    const auto& proc = procedures[pi];
    const auto it = by_id.find(proc.id);
    if (it == by_id.end()) throw SchemaError("no annotation for procedure " + proc.id);
    const auto& ann = *it->second;
    for (std::int64_t e : stride_window_ends(proc.frames, params.stride_ms)) {
      if (e >= ann.withdrawal_start_ms && e <= ann.withdrawal_end_ms) random_pool.push_back({pi, e});
    }
    std::vector<std::int64_t> starts;
    for (const auto& ev : ann.polyp_events) starts.push_back(ev.start_ms);
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
    const auto q = score_windows(proc.frames, starts, model, params);
    out.q_pre_polyp.insert(out.q_pre_polyp.end(), q.begin(), q.end());
  }
  if (n_random > 0) {
    if (random_pool.size() < n_random) {
      throw SamplingError("not enough withdrawal windows for " + std::to_string(n_random) + " random samples",
                          out.q_pre_polyp.size(), random_pool.size());
    }
    Rng rng = make_rng(seed, 0x6261);
    shuffle(random_pool.begin(), random_pool.end(), rng);
    random_pool.resize(n_random);
    std::sort(random_pool.begin(), random_pool.end(), [](const Candidate& a, const Candidate& b) {
      return a.proc != b.proc ? a.proc < b.proc : a.end < b.end;
    });
  }
  for (std::size_t i = 0; i < random_pool.size();) {
    std::size_t j = i;
    std::vector<std::int64_t> ends;
    while (j < random_pool.size() && random_pool[j].proc == random_pool[i].proc) ends.push_back(random_pool[j++].end);
    const auto q = score_windows(procedures[random_pool[i].proc].frames, ends, model, params);
    out.q_random.insert(out.q_random.end(), q.begin(), q.end());
    i = j;
  }
  return out;
}

}  // namespace scopeq
