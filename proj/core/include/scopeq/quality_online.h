#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scopeq/adam.h"
#include "scopeq/clustering.h"
#include "scopeq/procedure.h"

namespace scopeq {

// Soft cluster assignment of one frame at a point in time.
struct TimedAssignment {
  std::int64_t timestamp_ms = 0;
  std::vector<double> r;
};

struct AssignedProcedure {
  std::string id;
  std::vector<TimedAssignment> frames;  // time-sorted, excluded frames removed
};

// Turns assignment-payload frame records into a time-sorted stream, dropping
// excluded frames.
AssignedProcedure to_assigned(const Procedure& procedure);

struct WindowParams {
  std::int64_t window_len_ms = 10000;
  std::int64_t horizon_ms = 2000;
  std::int64_t stride_ms = 1000;
  std::size_t min_frames = 5;
};

// Unweighted mean of r over frames with timestamp in
// (window_end_ms - window_len_ms, window_end_ms]. Throws
// InsufficientDataError with fewer than min_frames frames.
std::vector<double> window_average(std::span<const TimedAssignment> frames, std::int64_t window_end_ms,
                                   std::int64_t window_len_ms = 10000, std::size_t min_frames = 5);

enum class WindowLabel { kPositive, kNegative, kExcluded };

std::string to_string(WindowLabel label);

// kExcluded when the window itself overlaps a polyp or exclusion interval;
// kPositive when a polyp event starts in (end, end + horizon]; otherwise
// kNegative.
WindowLabel label_window(std::int64_t window_end_ms, const ProcedureAnnotation& annotation,
                         std::int64_t horizon_ms = 2000, std::int64_t window_len_ms = 10000);

struct WindowSample {
  std::string procedure_id;
  std::int64_t window_end_ms = 0;
  std::vector<double> r_bar;
  WindowLabel label = WindowLabel::kNegative;
};

// Window ends t0 + j * stride (j >= 1, end <= last timestamp) of a stream.
std::vector<std::int64_t> stride_window_ends(std::span<const TimedAssignment> frames, std::int64_t stride_ms);

// Balanced set: n_per_class positive windows ending at polyp event starts and
// n_per_class negative windows drawn uniformly from the stride grid.
// n_per_class == 0 takes every eligible positive window. Throws SamplingError
// when either class runs short.
std::vector<WindowSample> build_training_set(std::span<const AssignedProcedure> procedures,
                                             std::span<const ProcedureAnnotation> annotations,
                                             std::size_t n_per_class, std::uint64_t seed,
                                             const WindowParams& params = {});

// Single linear layer followed by a sigmoid.
struct QualityModel {
  std::vector<double> weights;
  double bias = 0.0;

  bool operator==(const QualityModel&) const = default;
};

double q_logit(const QualityModel& model, std::span<const double> r_bar);
double q_forward(const QualityModel& model, std::span<const double> r_bar);

struct QTrainConfig {
  int epochs = 500;
  std::size_t batch_size = 64;
  AdamHyper adam;
  std::uint64_t seed = 42;
};

struct QTrainResult {
  QualityModel model;
  std::vector<double> loss_trace;  // mean binary cross-entropy per epoch
};

// Adam on binary cross-entropy from zero weights. Excluded samples are
// ignored; a single remaining class throws DegenerateTrainingError.
QTrainResult train_q(std::span<const WindowSample> samples, const QTrainConfig& cfg);

struct WindowScore {
  std::int64_t window_end_ms = 0;
  double q = 0.0;

  bool operator==(const WindowScore&) const = default;
};

struct OnlineScores {
  std::vector<WindowScore> scores;
  std::vector<std::int64_t> skipped;  // window ends with fewer than min_frames
};

// Incremental sliding-window scorer for one procedure. Feeding the same
// frames in any chunking yields the same scores.
class OnlineScorer {
 public:
  OnlineScorer(QualityModel model, WindowParams params);

  // Throws OrderingError when timestamps decrease.
  void push(std::int64_t timestamp_ms, std::span<const double> r);
  // Emits every window that ends at or before the last frame.
  void finish();

  const OnlineScores& result() const { return out_; }
  OnlineScores take() { return std::move(out_); }

 private:
  void emit(std::int64_t end);

  QualityModel model_;
  WindowParams params_;
  std::vector<TimedAssignment> buffer_;
  std::size_t head_ = 0;
  std::optional<std::int64_t> next_end_;
  std::int64_t last_ts_ = 0;
  OnlineScores out_;
};

OnlineScores score_online(std::span<const TimedAssignment> frames, const QualityModel& model,
                          const WindowParams& params = {});

struct TimedEmbedding {
  std::int64_t timestamp_ms = 0;
  std::vector<double> embedding;
};

// Soft-assigns each embedding, then scores as above.
OnlineScores score_online(std::span<const TimedEmbedding> frames, const ClusterModel& clusters,
                          const QualityModel& model, const WindowParams& params = {});

// q of the windows ending at `ends`; windows short of min_frames are skipped.
std::vector<double> score_windows(std::span<const TimedAssignment> frames, std::span<const std::int64_t> ends,
                                  const QualityModel& model, const WindowParams& params = {});

}  // namespace scopeq
