#include "scopeq/quality_online.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "scopeq/error.h"
#include "scopeq/rng.h"

namespace scopeq {
namespace {

// [first, last) indices of frames with timestamp in (end - len, end].
std::pair<std::size_t, std::size_t> window_range(std::span<const TimedAssignment> frames, std::int64_t end,
                                                 std::int64_t len) {
  const auto by_ts = [](const TimedAssignment& f, std::int64_t t) { return f.timestamp_ms <= t; };
  const auto lo = std::lower_bound(frames.begin(), frames.end(), end - len, by_ts);
  const auto hi = std::lower_bound(lo, frames.end(), end, by_ts);
  return {static_cast<std::size_t>(lo - frames.begin()), static_cast<std::size_t>(hi - frames.begin())};
}

std::vector<double> mean_of(std::span<const TimedAssignment> frames) {
  std::vector<double> sum(frames.front().r.size(), 0.0);
  for (const auto& f : frames) {
    if (f.r.size() != sum.size()) throw ShapeError("soft assignments differ in length within a window");
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += f.r[k];
  }
  const double n = static_cast<double>(frames.size());
  for (double& v : sum) v /= n;
  return sum;
}

bool overlaps(const Interval& iv, std::int64_t end, std::int64_t len) {
  // Integer-millisecond window (end - len, end] against [start, end).
  return std::max(end - len + 1, iv.start_ms) <= std::min(end, iv.end_ms - 1);
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Binary cross-entropy of sigmoid(z) against label y, computed from logits.
double bce_from_logit(double z, double y) { return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

AssignedProcedure to_assigned(const Procedure& procedure) {
  AssignedProcedure out;
  out.id = procedure.id;
  out.frames.reserve(procedure.frames.size());
  for (const auto& f : procedure.frames) {
    if (f.kind != PayloadKind::kAssignment) {
      throw SchemaError("procedure " + procedure.id + ": frame " + std::to_string(f.frame_idx) +
                        " carries no soft assignment");
    }
    if (!out.frames.empty() && f.timestamp_ms < out.frames.back().timestamp_ms) {
      throw OrderingError("procedure " + procedure.id + ": timestamps decrease at frame " +
                          std::to_string(f.frame_idx));
    }
    if (f.excluded) continue;
    out.frames.push_back({f.timestamp_ms, f.payload});
  }
  return out;
}

std::vector<double> window_average(std::span<const TimedAssignment> frames, std::int64_t window_end_ms,
                                   std::int64_t window_len_ms, std::size_t min_frames) {
  const auto [lo, hi] = window_range(frames, window_end_ms, window_len_ms);
  const std::size_t n = hi - lo;
  if (n == 0 || n < min_frames) {
    throw InsufficientDataError("window ending at " + std::to_string(window_end_ms) + " ms has " +
                                std::to_string(n) + " frames, needs " + std::to_string(std::max<std::size_t>(min_frames, 1)));
  }
  return mean_of(frames.subspan(lo, n));
}

std::string to_string(WindowLabel label) {
  switch (label) {
    case WindowLabel::kPositive:
      return "positive";
    case WindowLabel::kExcluded:
      return "excluded";
    case WindowLabel::kNegative:
      break;
  }
  return "negative";
}

WindowLabel label_window(std::int64_t window_end_ms, const ProcedureAnnotation& annotation, std::int64_t horizon_ms,
                         std::int64_t window_len_ms) {
  for (const auto& iv : annotation.polyp_events) {
    if (overlaps(iv, window_end_ms, window_len_ms)) return WindowLabel::kExcluded;
  }
  for (const auto& iv : annotation.exclusion_intervals) {
    if (overlaps(iv, window_end_ms, window_len_ms)) return WindowLabel::kExcluded;
  }
  for (const auto& iv : annotation.polyp_events) {
    if (iv.start_ms > window_end_ms && iv.start_ms <= window_end_ms + horizon_ms) return WindowLabel::kPositive;
  }
  return WindowLabel::kNegative;
}

std::vector<std::int64_t> stride_window_ends(std::span<const TimedAssignment> frames, std::int64_t stride_ms) {
  if (stride_ms <= 0) throw ConfigError("stride must be positive");
  std::vector<std::int64_t> ends;
  if (frames.empty()) return ends;
  const std::int64_t last = frames.back().timestamp_ms;
  for (std::int64_t e = frames.front().timestamp_ms + stride_ms; e <= last; e += stride_ms) ends.push_back(e);
  return ends;
}

std::vector<WindowSample> build_training_set(std::span<const AssignedProcedure> procedures,
                                             std::span<const ProcedureAnnotation> annotations,
                                             std::size_t n_per_class, std::uint64_t seed,
                                             const WindowParams& params) {
  std::unordered_map<std::string, const ProcedureAnnotation*> by_id;
  for (const auto& a : annotations) by_id[a.procedure_id] = &a;

  struct Candidate {
    std::size_t proc;
    std::int64_t end;
  };
  std::vector<Candidate> positives;
  std::vector<Candidate> negatives;
  const auto enough = [&](const AssignedProcedure& p, std::int64_t end) {
    const auto [lo, hi] = window_range(p.frames, end, params.window_len_ms);
    return hi - lo >= std::max<std::size_t>(params.min_frames, 1);
  };
  for (std::size_t pi = 0; pi < procedures.size(); ++pi) {
    const auto& proc = procedures[pi];
    const auto it = by_id.find(proc.id);
    if (it == by_id.end()) throw SchemaError("no annotation for procedure " + proc.id);
    const auto& ann = *it->second;

    std::vector<std::int64_t> starts;
    for (const auto& ev : ann.polyp_events) starts.push_back(ev.start_ms);
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
    for (std::int64_t s : starts) {
      if (enough(proc, s)) positives.push_back({pi, s});
    }
    for (std::int64_t e : stride_window_ends(proc.frames, params.stride_ms)) {
      if (label_window(e, ann, params.horizon_ms, params.window_len_ms) == WindowLabel::kNegative && enough(proc, e)) {
        negatives.push_back({pi, e});
      }
    }
  }

  const std::size_t n = n_per_class == 0 ? positives.size() : n_per_class;
  if (n == 0 || positives.size() < n || negatives.size() < n) {
    throw SamplingError("not enough eligible windows for " + std::to_string(n) + " per class", positives.size(),
                        negatives.size());
  }

  Rng rng = make_rng(seed, 0x7472);
  const auto pick = [&](std::vector<Candidate>& pool, WindowLabel label, std::vector<WindowSample>& out) {
    shuffle(pool.begin(), pool.end(), rng);
    pool.resize(n);
    std::sort(pool.begin(), pool.end(),
              [](const Candidate& a, const Candidate& b) { return std::tie(a.proc, a.end) < std::tie(b.proc, b.end); });
    for (const auto& c : pool) {
      const auto& proc = procedures[c.proc];
      out.push_back({proc.id, c.end, window_average(proc.frames, c.end, params.window_len_ms, params.min_frames), label});
    }
  };
  std::vector<WindowSample> out;
  out.reserve(2 * n);
  pick(positives, WindowLabel::kPositive, out);
  pick(negatives, WindowLabel::kNegative, out);
  return out;
}

double q_logit(const QualityModel& model, std::span<const double> r_bar) {
  if (r_bar.size() != model.weights.size()) {
    throw ShapeError("quality model expects " + std::to_string(model.weights.size()) + " features, got " +
                     std::to_string(r_bar.size()));
  }
  double z = model.bias;
  for (std::size_t k = 0; k < r_bar.size(); ++k) z += model.weights[k] * r_bar[k];
  return z;
}

double q_forward(const QualityModel& model, std::span<const double> r_bar) { return sigmoid(q_logit(model, r_bar)); }

QTrainResult train_q(std::span<const WindowSample> samples, const QTrainConfig& cfg) {
  if (cfg.epochs <= 0 || cfg.batch_size == 0) throw ConfigError("train_q needs positive epochs and batch size");
  std::vector<const WindowSample*> data;
  std::size_t pos = 0;
  for (const auto& s : samples) {
    if (s.label == WindowLabel::kExcluded) continue;
    data.push_back(&s);
    if (s.label == WindowLabel::kPositive) ++pos;
  }
  if (pos == 0 || pos == data.size()) {
    throw DegenerateTrainingError("train_q needs both classes, got " + std::to_string(pos) + " positive of " +
                                  std::to_string(data.size()));
  }
  const std::size_t k = data.front()->r_bar.size();
  for (const auto* s : data) {
    if (s->r_bar.size() != k) throw ShapeError("window features differ in length");
  }

  QTrainResult result;
  result.model.weights.assign(k, 0.0);
  std::vector<double> flat(k + 1, 0.0);
  std::vector<double> grad(k + 1);
  AdamState state = AdamState::zeros(k + 1);
  Rng rng = make_rng(cfg.seed, 0x71);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t j = b; j < e; ++j) {
        const auto& s = *data[order[j]];
        const double y = s.label == WindowLabel::kPositive ? 1.0 : 0.0;
        const double z = q_logit(result.model, s.r_bar);
        epoch_loss += bce_from_logit(z, y);
        const double dz = sigmoid(z) - y;
        for (std::size_t i = 0; i < k; ++i) grad[i] += dz * s.r_bar[i];
        grad[k] += dz;
      }
      const double inv = 1.0 / static_cast<double>(e - b);
      for (double& g : grad) g *= inv;
      adam_step(state, flat, grad, cfg.adam);
      std::copy_n(flat.begin(), k, result.model.weights.begin());
      result.model.bias = flat[k];
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) throw DivergenceError(epoch, "non-finite quality loss");
    result.loss_trace.push_back(epoch_loss);
  }
  return result;
}

OnlineScorer::OnlineScorer(QualityModel model, WindowParams params) : model_(std::move(model)), params_(params) {
  if (params_.stride_ms <= 0 || params_.window_len_ms <= 0) throw ConfigError("stride and window length must be positive");
}

void OnlineScorer::push(std::int64_t timestamp_ms, std::span<const double> r) {
  if (!next_end_) {
    next_end_ = timestamp_ms + params_.stride_ms;
  } else if (timestamp_ms < last_ts_) {
    throw OrderingError("timestamp " + std::to_string(timestamp_ms) + " ms after " + std::to_string(last_ts_) + " ms");
  }
  while (timestamp_ms > *next_end_) {
    emit(*next_end_);
    *next_end_ += params_.stride_ms;
  }
  last_ts_ = timestamp_ms;
  buffer_.push_back({timestamp_ms, std::vector<double>(r.begin(), r.end())});
  // Frames at or before next_end - len can no longer fall in any window.
  while (head_ < buffer_.size() && buffer_[head_].timestamp_ms <= *next_end_ - params_.window_len_ms) ++head_;
  if (head_ > 1024 && head_ * 2 > buffer_.size()) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(head_));
    head_ = 0;
  }
}

void OnlineScorer::finish() {
  if (!next_end_) return;
  while (*next_end_ <= last_ts_) {
    emit(*next_end_);
    *next_end_ += params_.stride_ms;
  }
}

void OnlineScorer::emit(std::int64_t end) {
  const std::span<const TimedAssignment> live(buffer_.data() + head_, buffer_.size() - head_);
  const auto [lo, hi] = window_range(live, end, params_.window_len_ms);
  if (hi - lo == 0 || hi - lo < params_.min_frames) {
    out_.skipped.push_back(end);
    return;
  }
  out_.scores.push_back({end, q_forward(model_, mean_of(live.subspan(lo, hi - lo)))});
}

OnlineScores score_online(std::span<const TimedAssignment> frames, const QualityModel& model,
                          const WindowParams& params) {
  OnlineScorer scorer(model, params);
  for (const auto& f : frames) scorer.push(f.timestamp_ms, f.r);
  scorer.finish();
  return scorer.take();
}

OnlineScores score_online(std::span<const TimedEmbedding> frames, const ClusterModel& clusters,
                          const QualityModel& model, const WindowParams& params) {
  OnlineScorer scorer(model, params);
  for (const auto& f : frames) scorer.push(f.timestamp_ms, soft_assign(f.embedding, clusters));
  scorer.finish();
  return scorer.take();
}

std::vector<double> score_windows(std::span<const TimedAssignment> frames, std::span<const std::int64_t> ends,
                                  const QualityModel& model, const WindowParams& params) {
  std::vector<double> out;
  out.reserve(ends.size());
  for (std::int64_t e : ends) {
    const auto [lo, hi] = window_range(frames, e, params.window_len_ms);
    if (hi - lo == 0 || hi - lo < params.min_frames) continue;
    out.push_back(q_forward(model, mean_of(frames.subspan(lo, hi - lo))));
  }
  return out;
}

}  // namespace scopeq
