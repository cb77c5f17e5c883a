#include "scopeq/procedure_sim.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "scopeq/error.h"
#include "scopeq/rng.h"

namespace scopeq {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::size_t poisson(double mean, Rng& rng) {
  // Knuth's product method; means here are small.
  const double limit = std::exp(-mean);
  std::size_t k = 0;
  double p = uniform01(rng);
  while (p > limit) {
    ++k;
    p *= uniform01(rng);
  }
  return k;
}

double leave_probability(double mean_dwell_s, double dt_s) {
  if (mean_dwell_s <= 0.0) return 1.0;
  return 1.0 - std::exp(-dt_s / mean_dwell_s);
}

std::vector<std::vector<double>> raw_projection(const SimConfig& cfg) {
  Rng rng = make_rng(cfg.seed, 0x726177);
  std::vector<std::vector<double>> a(cfg.raw_dim, std::vector<double>(cfg.embed_dim));
  for (auto& row : a) {
    for (double& v : row) v = normal(rng);
  }
  return a;
}

SimProcedure generate_one(const SimConfig& cfg, std::size_t index, const std::vector<std::vector<double>>& centers,
                          const std::vector<std::vector<double>>& projection) {
  Rng rng = make_rng(cfg.seed, 0x70726f63ULL + index);
  SimProcedure sp;
  char id[32];
  std::snprintf(id, sizeof id, "p%05zu", index);
  sp.procedure.id = id;
  sp.annotation.procedure_id = id;
  sp.skill = uniform(rng, cfg.skill_lo, cfg.skill_hi);

  std::vector<std::size_t> informative = cfg.informative_cluster_ids;
  std::vector<std::size_t> other;
  for (std::size_t k = 0; k < cfg.n_clusters; ++k) {
    if (std::find(informative.begin(), informative.end(), k) == informative.end()) other.push_back(k);
  }

  const double dt = 1.0 / cfg.frame_rate_hz;
  const auto n_frames = static_cast<std::size_t>(std::llround(cfg.procedure_len_s * cfg.frame_rate_hz));
  // A skill of exactly 0 or 1 pins the chain to one state.
  const double leave_inf = sp.skill >= 1.0 ? 0.0 : leave_probability(sp.skill * cfg.mean_cycle_s, dt);
  const double leave_non = sp.skill <= 0.0 ? 0.0 : leave_probability((1.0 - sp.skill) * cfg.mean_cycle_s, dt);
  const double switch_p = leave_probability(cfg.cluster_switch_s, dt);

  bool in_informative = uniform01(rng) < sp.skill;
  const auto pick = [&](bool inf) {
    const auto& group = inf ? informative : other;
    return group[uniform_index(rng, group.size())];
  };
  std::size_t cluster = pick(in_informative);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim));

  sp.procedure.frames.reserve(n_frames);
  sp.planted_cluster.reserve(n_frames);
  for (std::size_t j = 0; j < n_frames; ++j) {
    if (j > 0) {
      if (uniform01(rng) < (in_informative ? leave_inf : leave_non)) {
        in_informative = !in_informative;
        cluster = pick(in_informative);
      } else if (uniform01(rng) < switch_p) {
        cluster = pick(in_informative);
      }
    }
    std::vector<double> e(cfg.embed_dim);
    for (std::size_t d = 0; d < cfg.embed_dim; ++d) e[d] = centers[cluster][d] + cfg.emission_sigma * normal(rng);

    FrameRecord f;
    f.procedure_id = sp.procedure.id;
    f.frame_idx = static_cast<std::int64_t>(j);
    f.timestamp_ms = std::llround(static_cast<double>(j) * 1000.0 / cfg.frame_rate_hz);
    if (cfg.raw_dim > 0) {
      f.kind = PayloadKind::kRaw;
      f.payload.resize(cfg.raw_dim);
      for (std::size_t r = 0; r < cfg.raw_dim; ++r) {
        double s = 0.0;
        for (std::size_t d = 0; d < cfg.embed_dim; ++d) s += projection[r][d] * e[d];
        f.payload[r] = sigmoid(0.25 * scale * s);
      }
    } else {
      f.kind = PayloadKind::kEmbedding;
      f.payload = std::move(e);
    }
    f.cols = f.payload.size();
    sp.procedure.frames.push_back(std::move(f));
    sp.planted_cluster.push_back(cluster);
  }

  const std::int64_t end_ms = sp.procedure.frames.empty() ? 0 : sp.procedure.frames.back().timestamp_ms;
  sp.annotation.withdrawal_start_ms = std::llround(static_cast<double>(end_ms) * (1.0 - cfg.withdrawal_fraction));
  sp.annotation.withdrawal_end_ms = end_ms;

  const auto window_ms = std::llround(cfg.quality_window_s * 1000.0);
  const auto visible_ms = std::llround(cfg.polyp_visible_s * 1000.0);
  const std::int64_t lo = sp.annotation.withdrawal_start_ms + window_ms;
  const std::int64_t hi = end_ms - visible_ms;
  const std::size_t n_polyps = hi > lo ? poisson(cfg.polyp_rate_per_procedure, rng) : 0;
  std::vector<std::int64_t> times;
  for (std::size_t i = 0; i < n_polyps; ++i) {
    times.push_back(lo + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1))));
  }
  std::sort(times.begin(), times.end());
  for (std::int64_t t : times) {
    PlantedPolyp p;
    p.exists_at_ms = t;
    p.true_window_quality = true_window_quality(sp, cfg, t);
    p.detected = uniform01(rng) < planted_detection_probability(cfg, p.true_window_quality);
    if (p.detected) sp.annotation.polyp_events.push_back({t, t + visible_ms});
    sp.truth.push_back(p);
  }
  for (auto& f : sp.procedure.frames) {
    for (const auto& ev : sp.annotation.polyp_events) {
      if (f.timestamp_ms >= ev.start_ms && f.timestamp_ms < ev.end_ms) f.excluded = true;
    }
  }
  return sp;
}

}  // namespace

void SimConfig::validate() const {
  if (n_clusters < 2 || embed_dim == 0) throw ConfigError("simulator needs >= 2 clusters and a positive dimension");
  if (informative_cluster_ids.empty() || informative_cluster_ids.size() >= n_clusters) {
    throw ConfigError("informative clusters must be a non-empty proper subset");
  }
  for (std::size_t k : informative_cluster_ids) {
    if (k >= n_clusters) throw ConfigError("informative cluster id " + std::to_string(k) + " out of range");
  }
  if (!(frame_rate_hz > 0.0) || frame_rate_hz > 1000.0 || !(procedure_len_s > 0.0)) {
    throw ConfigError("frame rate must lie in (0, 1000] Hz and procedure length must be positive");
  }
  if (!(withdrawal_fraction > 0.0 && withdrawal_fraction <= 1.0)) throw ConfigError("withdrawal fraction in (0, 1]");
  if (!(polyp_rate_per_procedure >= 0.0)) throw ConfigError("polyp rate must be >= 0");
  if (!(skill_lo >= 0.0 && skill_lo <= skill_hi && skill_hi <= 1.0)) throw ConfigError("skill range within [0, 1]");
  if (!(cluster_separation > 0.0) || !(emission_sigma >= 0.0) || !(mean_cycle_s > 0.0) || !(cluster_switch_s > 0.0) ||
      !(polyp_visible_s >= 0.0) || !(quality_window_s > 0.0)) {
    throw ConfigError("simulator rates and durations must be positive");
  }
}

std::vector<std::vector<double>> planted_centers(const SimConfig& cfg) {
  const double dist = cfg.cluster_separation * cfg.emission_sigma;
  std::vector<std::vector<double>> centers(cfg.n_clusters, std::vector<double>(cfg.embed_dim, 0.0));
  if (cfg.n_clusters <= cfg.embed_dim) {
    // Scaled basis vectors: every pair is exactly `dist` apart.
    for (std::size_t k = 0; k < cfg.n_clusters; ++k) centers[k][k] = dist / std::sqrt(2.0);
    return centers;
  }
  Rng rng = make_rng(cfg.seed, 0x63656e);
  const double box = dist * std::pow(static_cast<double>(cfg.n_clusters), 1.0 / static_cast<double>(cfg.embed_dim)) * 2.0;
  for (std::size_t k = 0; k < cfg.n_clusters;) {
    for (double& v : centers[k]) v = uniform(rng, 0.0, box);
    bool ok = true;
    for (std::size_t o = 0; o < k && ok; ++o) {
      double s = 0.0;
      for (std::size_t d = 0; d < cfg.embed_dim; ++d) s += (centers[k][d] - centers[o][d]) * (centers[k][d] - centers[o][d]);
      ok = s >= dist * dist;
    }
    if (ok) ++k;
  }
  return centers;
}

SimCohort generate_cohort(const SimConfig& cfg, std::size_t n_procedures) {
  cfg.validate();
  SimCohort cohort;
  cohort.centers = planted_centers(cfg);
  const auto projection = cfg.raw_dim > 0 ? raw_projection(cfg) : std::vector<std::vector<double>>{};
  cohort.procedures.reserve(n_procedures);
  for (std::size_t i = 0; i < n_procedures; ++i) cohort.procedures.push_back(generate_one(cfg, i, cohort.centers, projection));
  return cohort;
}

double true_window_quality(const SimProcedure& p, const SimConfig& cfg, std::int64_t t_ms) {
  const auto window_ms = std::llround(cfg.quality_window_s * 1000.0);
  std::size_t n = 0;
  std::size_t good = 0;
  const auto& frames = p.procedure.frames;
  for (std::size_t j = 0; j < frames.size(); ++j) {
    const auto ts = frames[j].timestamp_ms;
    if (ts <= t_ms - window_ms || ts > t_ms) continue;
    ++n;
    const auto& inf = cfg.informative_cluster_ids;
    if (std::find(inf.begin(), inf.end(), p.planted_cluster[j]) != inf.end()) ++good;
  }
  return n == 0 ? 0.0 : static_cast<double>(good) / static_cast<double>(n);
}

double planted_detection_probability(const SimConfig& cfg, double q) {
  return sigmoid(cfg.detection_a * q + cfg.detection_b);
}

std::vector<double> truth_detection_curve(const SimConfig& cfg, std::span<const double> q) {
  std::vector<double> out;
  out.reserve(q.size());
  for (double v : q) out.push_back(planted_detection_probability(cfg, v));
  return out;
}

}  // namespace scopeq
