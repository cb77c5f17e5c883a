#include "scopeq/io.h"

#include <charconv>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "scopeq/error.h"

namespace scopeq::io {
namespace {

WarningSink& sink() {
  static WarningSink s = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  return s;
}

// Tracks unknown-field warnings so each name is reported once per file.
class FieldChecker {
 public:
  FieldChecker(std::string what, std::set<std::string> known) : what_(std::move(what)), known_(std::move(known)) {}

  void check(const Json& obj, std::size_t line) {
    for (const auto& [key, _] : obj.items()) {
      if (!known_.contains(key) && reported_.insert(key).second) {
        warn(what_ + " line " + std::to_string(line) + ": ignoring unknown field '" + key + "'");
      }
    }
  }

 private:
  std::string what_;
  std::set<std::string> known_;
  std::set<std::string> reported_;
};

Json parse_line(const std::string& text, std::size_t line) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(line, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(line, "expected a JSON object");
  return j;
}

const Json& require(const Json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  return *it;
}

std::int64_t require_int(const Json& obj, const char* key, std::size_t line) {
  const Json& v = require(obj, key, line);
  if (!v.is_number_integer()) throw ParseError(line, std::string("field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::string require_string(const Json& obj, const char* key, std::size_t line) {
  const Json& v = require(obj, key, line);
  if (!v.is_string()) throw ParseError(line, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> number_array(const Json& v, const std::string& what, std::size_t line) {
  if (!v.is_array()) throw ParseError(line, what + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) throw ParseError(line, what + " must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<Interval> interval_array(const Json& v, const std::string& what, std::size_t line) {
  if (!v.is_array()) throw ParseError(line, what + " must be an array of [start_ms, end_ms] pairs");
  std::vector<Interval> out;
  for (const auto& x : v) {
    if (!x.is_array() || x.size() != 2 || !x[0].is_number_integer() || !x[1].is_number_integer()) {
      throw ParseError(line, what + " must be an array of [start_ms, end_ms] pairs");
    }
    out.push_back({x[0].get<std::int64_t>(), x[1].get<std::int64_t>()});
  }
  return out;
}

void append_array(std::string& s, std::span<const double> v) {
  s += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  s += ']';
}

std::string quoted(const std::string& s) { return Json(s).dump(); }

const char* payload_key(PayloadKind k) {
  switch (k) {
    case PayloadKind::kRaw:
      return "raw";
    case PayloadKind::kAssignment:
      return "r";
    case PayloadKind::kEmbedding:
      break;
  }
  return "embedding";
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(text, line);
  }
}

Json layers_to_json(const std::vector<DenseLayer>& layers) {
  Json arr = Json::array();
  for (const auto& l : layers) {
    Json rows = Json::array();
    for (std::size_t o = 0; o < l.out; ++o) {
      rows.push_back(std::vector<double>(l.weights.begin() + static_cast<std::ptrdiff_t>(o * l.in),
                                         l.weights.begin() + static_cast<std::ptrdiff_t>((o + 1) * l.in)));
    }
    arr.push_back({{"in", l.in}, {"out", l.out}, {"activation", to_string(l.activation)}, {"weights", rows}, {"bias", l.bias}});
  }
  return arr;
}

std::vector<DenseLayer> layers_from_json(const Json& arr, const std::string& what) {
  if (!arr.is_array()) throw SchemaError(what + " must be an array of layers");
  std::vector<DenseLayer> out;
  for (const auto& j : arr) {
    DenseLayer l;
    l.in = j.at("in").get<std::size_t>();
    l.out = j.at("out").get<std::size_t>();
    l.activation = activation_from_string(j.at("activation").get<std::string>());
    const Json& rows = j.at("weights");
    if (!rows.is_array() || rows.size() != l.out) throw SchemaError(what + ": weight rows do not match 'out'");
    for (const auto& row : rows) {
      const auto r = number_array(row, what + " weights", 0);
      if (r.size() != l.in) throw SchemaError(what + ": weight row length does not match 'in'");
      l.weights.insert(l.weights.end(), r.begin(), r.end());
    }
    l.bias = number_array(j.at("bias"), what + " bias", 0);
    out.push_back(std::move(l));
  }
  return out;
}

template <typename Fn>
auto schema_guard(const char* what, const Json& j, Fn&& fn) {
  try {
    if (!j.is_object()) throw SchemaError(std::string(what) + ": expected a JSON object");
    if (const auto it = j.find("type"); it != j.end() && *it != what) {
      throw SchemaError(std::string(what) + ": file holds a " + it->dump() + " model");
    }
    return fn();
  } catch (const Json::exception& e) {
    throw SchemaError(std::string(what) + ": " + e.what());
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void set_warning_sink(WarningSink s) { sink() = std::move(s); }
void warn(const std::string& message) {
  if (sink()) sink()(message);
}

std::string format_double(double v) {
  if (!std::isfinite(v)) throw DegenerateInputError("cannot serialize a non-finite number");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ParseError(0, "not a number: '" + s + "'");
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

std::vector<Procedure> read_frames(std::istream& in) {
  FieldChecker fields("frames", {"procedure_id", "frame_idx", "timestamp_ms", "embedding", "raw", "r", "shape", "excluded"});
  std::vector<Procedure> procs;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t dim = 0;
  bool have_dim = false;
  for_each_line(in, [&](const std::string& text, std::size_t line) {
    const Json j = parse_line(text, line);
    fields.check(j, line);
    FrameRecord f;
    f.procedure_id = require_string(j, "procedure_id", line);
    f.frame_idx = require_int(j, "frame_idx", line);
    f.timestamp_ms = require_int(j, "timestamp_ms", line);
    int payloads = 0;
    for (PayloadKind k : {PayloadKind::kEmbedding, PayloadKind::kRaw, PayloadKind::kAssignment}) {
      const auto it = j.find(payload_key(k));
      if (it == j.end()) continue;
      ++payloads;
      f.kind = k;
      f.payload = number_array(*it, std::string("field '") + payload_key(k) + "'", line);
    }
    if (payloads != 1) throw ParseError(line, "expected exactly one of 'embedding', 'raw' or 'r'");
    f.cols = f.payload.size();
    if (const auto it = j.find("shape"); it != j.end()) {
      if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_unsigned() || !(*it)[1].is_number_unsigned()) {
        throw ParseError(line, "field 'shape' must be [rows, cols]");
      }
      f.rows = (*it)[0].get<std::size_t>();
      f.cols = (*it)[1].get<std::size_t>();
      if (f.rows * f.cols != f.payload.size()) {
        throw SchemaError("frame_idx " + std::to_string(f.frame_idx) + " (line " + std::to_string(line) +
                          "): shape does not match payload length");
      }
    }
    if (const auto it = j.find("excluded"); it != j.end()) {
      if (!it->is_boolean()) throw ParseError(line, "field 'excluded' must be a boolean");
      f.excluded = it->get<bool>();
    }
    if (!have_dim) {
      dim = f.payload.size();
      have_dim = true;
    } else if (f.payload.size() != dim) {
      throw SchemaError("frame_idx " + std::to_string(f.frame_idx) + " of procedure " + f.procedure_id + " (line " +
                        std::to_string(line) + "): payload length " + std::to_string(f.payload.size()) +
                        " differs from " + std::to_string(dim));
    }
    auto [it, inserted] = index.try_emplace(f.procedure_id, procs.size());
    if (inserted) procs.push_back({f.procedure_id, {}});
    auto& frames = procs[it->second].frames;
    if (!frames.empty() && f.timestamp_ms < frames.back().timestamp_ms) {
      throw SchemaError("frame_idx " + std::to_string(f.frame_idx) + " of procedure " + f.procedure_id + " (line " +
                        std::to_string(line) + "): timestamp decreases");
    }
    frames.push_back(std::move(f));
  });
  return procs;
}

std::vector<Procedure> load_frames(const std::string& path) {
  auto in = open_in(path);
  return read_frames(in);
}

void write_frames(std::ostream& out, const std::vector<Procedure>& procedures) {
  std::string s;
  for (const auto& p : procedures) {
    for (const auto& f : p.frames) {
      s.clear();
      s += "{\"procedure_id\":";
      s += quoted(f.procedure_id);
      s += ",\"frame_idx\":" + std::to_string(f.frame_idx);
      s += ",\"timestamp_ms\":" + std::to_string(f.timestamp_ms);
      s += ",\"";
      s += payload_key(f.kind);
      s += "\":";
      append_array(s, f.payload);
      if (f.rows != 1) s += ",\"shape\":[" + std::to_string(f.rows) + "," + std::to_string(f.cols) + "]";
      if (f.excluded) s += ",\"excluded\":true";
      s += "}\n";
      out << s;
    }
  }
}

void save_frames(const std::string& path, const std::vector<Procedure>& procedures) {
  auto out = open_out(path);
  write_frames(out, procedures);
}

std::vector<ProcedureAnnotation> read_annotations(std::istream& in) {
  FieldChecker fields("annotations", {"procedure_id", "withdrawal_start_ms", "withdrawal_end_ms", "polyp_events",
                                      "exclusion_intervals"});
  std::vector<ProcedureAnnotation> out;
  for_each_line(in, [&](const std::string& text, std::size_t line) {
    const Json j = parse_line(text, line);
    fields.check(j, line);
    ProcedureAnnotation a;
    a.procedure_id = require_string(j, "procedure_id", line);
    a.withdrawal_start_ms = require_int(j, "withdrawal_start_ms", line);
    a.withdrawal_end_ms = require_int(j, "withdrawal_end_ms", line);
    if (const auto it = j.find("polyp_events"); it != j.end()) a.polyp_events = interval_array(*it, "polyp_events", line);
    if (const auto it = j.find("exclusion_intervals"); it != j.end()) {
      a.exclusion_intervals = interval_array(*it, "exclusion_intervals", line);
    }
    try {
      validate(a);
    } catch (const SchemaError& e) {
      throw ParseError(line, e.what());
    }
    out.push_back(std::move(a));
  });
  return out;
}

std::vector<ProcedureAnnotation> load_annotations(const std::string& path) {
  auto in = open_in(path);
  return read_annotations(in);
}

void write_annotations(std::ostream& out, const std::vector<ProcedureAnnotation>& annotations) {
  const auto intervals = [](const std::vector<Interval>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += "[" + std::to_string(v[i].start_ms) + "," + std::to_string(v[i].end_ms) + "]";
    }
    return s + "]";
  };
  for (const auto& a : annotations) {
    out << "{\"procedure_id\":" << quoted(a.procedure_id) << ",\"withdrawal_start_ms\":" << a.withdrawal_start_ms
        << ",\"withdrawal_end_ms\":" << a.withdrawal_end_ms << ",\"polyp_events\":" << intervals(a.polyp_events)
        << ",\"exclusion_intervals\":" << intervals(a.exclusion_intervals) << "}\n";
  }
}

void save_annotations(const std::string& path, const std::vector<ProcedureAnnotation>& annotations) {
  auto out = open_out(path);
  write_annotations(out, annotations);
}

Json to_json(const EncoderParams& p) {
  return {{"type", "encoder"},
          {"embed_dim", p.embed_dim},
          {"encoder", layers_to_json(p.encoder)},
          {"projection", layers_to_json(p.projection)}};
}

Json to_json(const ClusterModel& m) {
  return {{"type", "clusters"}, {"k", m.k()}, {"alpha", m.alpha}, {"epsilon", m.epsilon}, {"centers", m.centers}};
}

Json to_json(const QualityModel& m) { return {{"type", "quality"}, {"weights", m.weights}, {"bias", m.bias}}; }

Json to_json(const BayesTable& t) {
  Json likelihood = Json::array();
  for (const auto& v : t.p_d_given_e_q) likelihood.push_back(v ? Json(*v) : Json(nullptr));
  return {{"type", "bayes"},
          {"bin_edges", t.bin_edges},
          {"p_q", t.p_q},
          {"p_q_given_d", t.p_q_given_d},
          {"pds", t.pds},
          {"p_d_given_e_q", likelihood}};
}

EncoderParams encoder_from_json(const Json& j) {
  return schema_guard("encoder", j, [&] {
    EncoderParams p;
    p.embed_dim = j.at("embed_dim").get<std::size_t>();
    p.encoder = layers_from_json(j.at("encoder"), "encoder");
    p.projection = layers_from_json(j.at("projection"), "projection");
    validate(p);
    return p;
  });
}

ClusterModel clusters_from_json(const Json& j) {
  return schema_guard("clusters", j, [&] {
    ClusterModel m;
    m.alpha = j.at("alpha").get<double>();
    m.epsilon = j.at("epsilon").get<double>();
    for (const auto& c : j.at("centers")) m.centers.push_back(number_array(c, "center", 0));
    if (j.at("k").get<std::size_t>() != m.k()) throw SchemaError("clusters: 'k' does not match the number of centers");
    validate(m);
    return m;
  });
}

QualityModel quality_from_json(const Json& j) {
  return schema_guard("quality", j, [&] {
    QualityModel m;
    m.weights = number_array(j.at("weights"), "weights", 0);
    m.bias = j.at("bias").get<double>();
    return m;
  });
}

BayesTable bayes_from_json(const Json& j) {
  return schema_guard("bayes", j, [&] {
    BayesTable t;
    t.bin_edges = number_array(j.at("bin_edges"), "bin_edges", 0);
    t.p_q = number_array(j.at("p_q"), "p_q", 0);
    t.p_q_given_d = number_array(j.at("p_q_given_d"), "p_q_given_d", 0);
    t.pds = j.at("pds").get<double>();
    for (const auto& v : j.at("p_d_given_e_q")) {
      if (v.is_null()) {
        t.p_d_given_e_q.emplace_back(std::nullopt);
      } else {
        t.p_d_given_e_q.emplace_back(v.get<double>());
      }
    }
    validate(t);
    return t;
  });
}

void save_json(const std::string& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Json load_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(0, path + ": " + e.what());
  }
}

EncoderParams load_encoder(const std::string& path) { return encoder_from_json(load_json(path)); }
ClusterModel load_clusters(const std::string& path) { return clusters_from_json(load_json(path)); }
QualityModel load_quality(const std::string& path) { return quality_from_json(load_json(path)); }
BayesTable load_bayes(const std::string& path) { return bayes_from_json(load_json(path)); }

void write_window_scores(std::ostream& out, const std::vector<ProcedureWindowScores>& scores) {
  for (const auto& p : scores) {
    const std::string id = quoted(p.procedure_id);
    for (const auto& w : p.windows) {
      out << "{\"procedure_id\":" << id << ",\"window_end_ms\":" << w.window_end_ms << ",\"q\":" << format_double(w.q)
          << "}\n";
    }
  }
}

std::vector<ProcedureWindowScores> read_window_scores(std::istream& in) {
  FieldChecker fields("window scores", {"procedure_id", "window_end_ms", "q"});
  std::vector<ProcedureWindowScores> out;
  std::unordered_map<std::string, std::size_t> index;
  for_each_line(in, [&](const std::string& text, std::size_t line) {
    const Json j = parse_line(text, line);
    fields.check(j, line);
    const std::string id = require_string(j, "procedure_id", line);
    const std::int64_t end = require_int(j, "window_end_ms", line);
    const Json& q = require(j, "q", line);
    if (!q.is_number()) throw ParseError(line, "field 'q' must be a number");
    auto [it, inserted] = index.try_emplace(id, out.size());
    if (inserted) out.push_back({id, {}});
    out[it->second].windows.push_back({end, q.get<double>()});
  });
  return out;
}

std::vector<ProcedureWindowScores> load_window_scores(const std::string& path) {
  auto in = open_in(path);
  return read_window_scores(in);
}

void save_window_scores(const std::string& path, const std::vector<ProcedureWindowScores>& scores) {
  auto out = open_out(path);
  write_window_scores(out, scores);
}

void write_procedure_scores_csv(std::ostream& out, const std::vector<ProcedureScore>& scores) {
  out << "procedure_id,q_offline_sum,q_offline_mean,n_windows,polyps_detected\n";
  for (const auto& s : scores) {
    out << s.procedure_id << ',' << format_double(s.q_offline_sum) << ',' << format_double(s.q_offline_mean) << ','
        << s.n_windows << ',' << s.polyps_detected << '\n';
  }
}

std::vector<ProcedureScore> read_procedure_scores_csv(std::istream& in) {
  std::vector<ProcedureScore> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (line == 1 || text.empty()) continue;
    const auto cells = split_csv(text);
    if (cells.size() != 5) throw ParseError(line, "expected 5 columns");
    try {
      ProcedureScore s;
      s.procedure_id = cells[0];
      s.q_offline_sum = parse_double(cells[1]);
      s.q_offline_mean = parse_double(cells[2]);
      s.n_windows = std::stoull(cells[3]);
      s.polyps_detected = std::stoull(cells[4]);
      out.push_back(std::move(s));
    } catch (const ParseError& e) {
      throw ParseError(line, e.what());
    } catch (const std::logic_error&) {
      throw ParseError(line, "malformed integer column");
    }
  }
  return out;
}

std::vector<ProcedureScore> load_procedure_scores_csv(const std::string& path) {
  auto in = open_in(path);
  return read_procedure_scores_csv(in);
}

void write_quintile_csv(std::ostream& out, const std::vector<QuintileRow>& rows) {
  out << "range_lo,range_hi,mean_ppc,n\n";
  for (const auto& r : rows) {
    out << format_double(r.range_lo) << ',' << format_double(r.range_hi) << ',' << format_double(r.mean_ppc) << ','
        << r.n << '\n';
  }
}

void write_distribution_csv(std::ostream& out, const DistributionReport& report) {
  out << "bin_lo,bin_hi,freq_no_polyp,freq_polyp\n";
  for (std::size_t i = 0; i + 1 < report.bin_edges.size(); ++i) {
    out << format_double(report.bin_edges[i]) << ',' << format_double(report.bin_edges[i + 1]) << ',';
    if (report.no_polyp) out << format_double((*report.no_polyp)[i]);
    out << ',';
    if (report.polyp) out << format_double((*report.polyp)[i]);
    out << '\n';
  }
}

void write_bayes_curve_csv(std::ostream& out, const BayesTable& table) {
  out << "bin_lo,bin_hi,bin_center,p_q,p_q_given_d,p_d_given_e_q\n";
  for (std::size_t i = 0; i < table.n_bins(); ++i) {
    out << format_double(table.bin_edges[i]) << ',' << format_double(table.bin_edges[i + 1]) << ','
        << format_double(table.bin_center(i)) << ',' << format_double(table.p_q[i]) << ','
        << format_double(table.p_q_given_d[i]) << ',';
    if (table.p_d_given_e_q[i]) out << format_double(*table.p_d_given_e_q[i]);
    out << '\n';
  }
}

void write_embeddings_csv(std::ostream& out, const std::vector<Procedure>& procedures) {
  std::size_t dim = 0;
  for (const auto& p : procedures) {
    if (!p.frames.empty()) {
      dim = p.frames.front().payload.size();
      break;
    }
  }
  out << "procedure_id,frame_idx,timestamp_ms";
  for (std::size_t d = 0; d < dim; ++d) out << ",e" << d;
  out << '\n';
  for (const auto& p : procedures) {
    for (const auto& f : p.frames) {
      out << f.procedure_id << ',' << f.frame_idx << ',' << f.timestamp_ms;
      for (double v : f.payload) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

void write_truth(std::ostream& out, const SimCohort& cohort) {
  for (const auto& sp : cohort.procedures) {
    std::string s = "{\"procedure_id\":" + quoted(sp.procedure.id) + ",\"skill\":" + format_double(sp.skill) +
                    ",\"polyps\":[";
    for (std::size_t i = 0; i < sp.truth.size(); ++i) {
      const auto& p = sp.truth[i];
      if (i) s += ',';
      s += "{\"exists_at_ms\":" + std::to_string(p.exists_at_ms) +
           ",\"true_window_quality\":" + format_double(p.true_window_quality) +
           ",\"detected\":" + (p.detected ? "true" : "false") + "}";
    }
    s += "],\"planted_cluster\":[";
    for (std::size_t i = 0; i < sp.planted_cluster.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(sp.planted_cluster[i]);
    }
    s += "]}\n";
    out << s;
  }
}

}  // namespace scopeq::io
