#pragma once

#include <functional>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scopeq/clustering.h"
#include "scopeq/detection_likelihood.h"
#include "scopeq/encoder.h"
#include "scopeq/procedure.h"
#include "scopeq/procedure_sim.h"
#include "scopeq/quality_offline.h"
#include "scopeq/quality_online.h"

namespace scopeq::io {

using Json = nlohmann::json;

// Receives non-fatal diagnostics such as unknown fields. Defaults to stderr.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

// --- frame streams (JSONL, one FrameRecord per line) ---------------------
//
// {"procedure_id": "p00001", "frame_idx": 0, "timestamp_ms": 0,
//  "embedding": [...] | "raw": [...] | "r": [...],
//  "shape": [rows, cols]   (raw grids only, optional),
//  "excluded": false        (optional)}
//
// Procedures keep their first-appearance order. Payload length must be
// constant over the file and timestamps non-decreasing per procedure.
std::vector<Procedure> read_frames(std::istream& in);
std::vector<Procedure> load_frames(const std::string& path);
void write_frames(std::ostream& out, const std::vector<Procedure>& procedures);
void save_frames(const std::string& path, const std::vector<Procedure>& procedures);

// --- annotations (JSONL, one ProcedureAnnotation per line) ---------------
std::vector<ProcedureAnnotation> read_annotations(std::istream& in);
std::vector<ProcedureAnnotation> load_annotations(const std::string& path);
void write_annotations(std::ostream& out, const std::vector<ProcedureAnnotation>& annotations);
void save_annotations(const std::string& path, const std::vector<ProcedureAnnotation>& annotations);

// --- models (JSON) --------------------------------------------------------
Json to_json(const EncoderParams& p);
Json to_json(const ClusterModel& m);
Json to_json(const QualityModel& m);
Json to_json(const BayesTable& t);

EncoderParams encoder_from_json(const Json& j);
ClusterModel clusters_from_json(const Json& j);
QualityModel quality_from_json(const Json& j);
BayesTable bayes_from_json(const Json& j);

void save_json(const std::string& path, const Json& j);
Json load_json(const std::string& path);

template <typename Model>
void save_model(const std::string& path, const Model& m) {
  save_json(path, to_json(m));
}
EncoderParams load_encoder(const std::string& path);
ClusterModel load_clusters(const std::string& path);
QualityModel load_quality(const std::string& path);
BayesTable load_bayes(const std::string& path);

// --- window scores (JSONL: procedure_id, window_end_ms, q) ---------------
struct ProcedureWindowScores {
  std::string procedure_id;
  std::vector<WindowScore> windows;
};
void write_window_scores(std::ostream& out, const std::vector<ProcedureWindowScores>& scores);
std::vector<ProcedureWindowScores> read_window_scores(std::istream& in);
std::vector<ProcedureWindowScores> load_window_scores(const std::string& path);
void save_window_scores(const std::string& path, const std::vector<ProcedureWindowScores>& scores);

// --- CSV reports -----------------------------------------------------------
// procedure_id,q_offline_sum,q_offline_mean,n_windows,polyps_detected
void write_procedure_scores_csv(std::ostream& out, const std::vector<ProcedureScore>& scores);
std::vector<ProcedureScore> read_procedure_scores_csv(std::istream& in);
std::vector<ProcedureScore> load_procedure_scores_csv(const std::string& path);
// range_lo,range_hi,mean_ppc,n
void write_quintile_csv(std::ostream& out, const std::vector<QuintileRow>& rows);
// bin_lo,bin_hi,freq_no_polyp,freq_polyp (empty cell for an absent group)
void write_distribution_csv(std::ostream& out, const DistributionReport& report);
// bin_lo,bin_hi,bin_center,p_q,p_q_given_d,p_d_given_e_q (empty when undefined)
void write_bayes_curve_csv(std::ostream& out, const BayesTable& table);
// procedure_id,frame_idx,timestamp_ms,e0,e1,...
void write_embeddings_csv(std::ostream& out, const std::vector<Procedure>& procedures);

// --- simulator ground truth (JSONL, one procedure per line) ---------------
void write_truth(std::ostream& out, const SimCohort& cohort);

// Opens for writing/reading or throws Error naming the path.
std::ofstream open_out(const std::string& path);
std::ifstream open_in(const std::string& path);

}  // namespace scopeq::io
