#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scopeq {

enum class PayloadKind { kEmbedding, kRaw, kAssignment };

// One video frame as stored in a JSONL frame stream.
struct FrameRecord {
  std::string procedure_id;
  std::int64_t frame_idx = 0;
  std::int64_t timestamp_ms = 0;
  PayloadKind kind = PayloadKind::kEmbedding;
  std::vector<double> payload;
  // Grid shape of raw frames; {1, payload.size()} for vectors.
  std::size_t rows = 1;
  std::size_t cols = 0;
  bool excluded = false;

  bool operator==(const FrameRecord&) const = default;
};

struct Procedure {
  std::string id;
  std::vector<FrameRecord> frames;

  bool operator==(const Procedure&) const = default;
};

// Half-open [start_ms, end_ms).
struct Interval {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;

  bool operator==(const Interval&) const = default;
};

struct ProcedureAnnotation {
  std::string procedure_id;
  std::int64_t withdrawal_start_ms = 0;
  std::int64_t withdrawal_end_ms = 0;
  std::vector<Interval> polyp_events;
  std::vector<Interval> exclusion_intervals;

  bool operator==(const ProcedureAnnotation&) const = default;
};

// Throws SchemaError on an empty withdrawal or an inverted interval.
void validate(const ProcedureAnnotation& annotation);

}  // namespace scopeq
