#include "cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "scopeq/clustering.h"
#include "scopeq/detection_likelihood.h"
#include "scopeq/encoder.h"
#include "scopeq/error.h"
#include "scopeq/io.h"
#include "scopeq/procedure_sim.h"
#include "scopeq/quality_offline.h"
#include "scopeq/quality_online.h"
#include "scopeq/rng.h"

namespace scopeq::cli {
namespace {

constexpr int kUsage = 1;
constexpr int kDataError = 2;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SCOPEQ_SEED"); env != nullptr && *env != '\0') {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring malformed SCOPEQ_SEED='" << env << "'\n";
    }
  }
  return 42;
}

struct Common {
  std::uint64_t seed = 0;
  std::string config;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Random seed (default: $SCOPEQ_SEED or 42)");
  sub->add_option("--config", c.config, "JSON file whose keys mirror this subcommand's flags");
}

void add_window_options(CLI::App* sub, WindowParams& w) {
  sub->add_option("--window-ms", w.window_len_ms, "Quality window length in ms")->capture_default_str();
  sub->add_option("--horizon-ms", w.horizon_ms, "Detection horizon after a window in ms")->capture_default_str();
  sub->add_option("--stride-ms", w.stride_ms, "Stride between window ends in ms")->capture_default_str();
  sub->add_option("--min-frames", w.min_frames, "Minimum frames per scored window")->capture_default_str();
}

std::vector<std::vector<double>> collect_payloads(const std::vector<Procedure>& procs, bool skip_excluded) {
  std::vector<std::vector<double>> out;
  for (const auto& p : procs) {
    for (const auto& f : p.frames) {
      if (skip_excluded && f.excluded) continue;
      out.push_back(f.payload);
    }
  }
  return out;
}

std::vector<AssignedProcedure> assigned(const std::vector<Procedure>& procs) {
  std::vector<AssignedProcedure> out;
  out.reserve(procs.size());
  for (const auto& p : procs) out.push_back(to_assigned(p));
  return out;
}

void write_trace(const std::string& path, const std::vector<double>& trace) {
  if (path.empty()) return;
  auto out = io::open_out(path);
  out << "epoch,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << (i + 1) << ',' << io::format_double(trace[i]) << '\n';
}

// ---------------------------------------------------------------------------

struct SimulateCmd {
  Common common;
  SimConfig cfg;
  std::size_t procedures = 200;
  std::string frames_out = "frames.jsonl";
  std::string annotations_out = "annotations.jsonl";
  std::string truth_out;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("simulate", "Generate a synthetic cohort with planted ground truth");
    add_common(sub, common);
    sub->add_option("--procedures", procedures, "Number of procedures")->capture_default_str();
    sub->add_option("--frames-out", frames_out, "Frame stream (JSONL)")->capture_default_str();
    sub->add_option("--annotations-out", annotations_out, "Annotations (JSONL)")->capture_default_str();
    sub->add_option("--truth-out", truth_out, "Planted ground truth (JSONL)");
    sub->add_option("--clusters", cfg.n_clusters, "Planted clusters")->capture_default_str();
    sub->add_option("--embed-dim", cfg.embed_dim, "Embedding dimension")->capture_default_str();
    sub->add_option("--separation", cfg.cluster_separation, "Center distance in sigmas")->capture_default_str();
    sub->add_option("--informative", cfg.informative_cluster_ids, "Informative cluster ids")->capture_default_str();
    sub->add_option("--frame-rate", cfg.frame_rate_hz, "Frames per second")->capture_default_str();
    sub->add_option("--procedure-len", cfg.procedure_len_s, "Procedure length in s")->capture_default_str();
    sub->add_option("--withdrawal-fraction", cfg.withdrawal_fraction, "Trailing share that is withdrawal")
        ->capture_default_str();
    sub->add_option("--polyp-rate", cfg.polyp_rate_per_procedure, "Mean planted polyps per procedure")
        ->capture_default_str();
    sub->add_option("--link-a", cfg.detection_a, "Detection link slope")->capture_default_str();
    sub->add_option("--link-b", cfg.detection_b, "Detection link intercept")->capture_default_str();
    sub->add_option("--skill-lo", cfg.skill_lo, "Lowest informative share")->capture_default_str();
    sub->add_option("--skill-hi", cfg.skill_hi, "Highest informative share")->capture_default_str();
    sub->add_option("--cycle", cfg.mean_cycle_s, "Mean informative plus non-informative dwell in s")
        ->capture_default_str();
    sub->add_option("--raw-dim", cfg.raw_dim, "Emit raw vectors of this length instead of embeddings")
        ->capture_default_str();
    sub->callback([this] { run(); });
  }

  void run() {
    cfg.seed = common.seed;
    const SimCohort cohort = generate_cohort(cfg, procedures);
    std::vector<Procedure> procs;
    std::vector<ProcedureAnnotation> anns;
    for (const auto& sp : cohort.procedures) {
      procs.push_back(sp.procedure);
      anns.push_back(sp.annotation);
    }
    io::save_frames(frames_out, procs);
    io::save_annotations(annotations_out, anns);
    if (!truth_out.empty()) {
      auto out = io::open_out(truth_out);
      io::write_truth(out, cohort);
    }
  }
};

struct TrainEncoderCmd {
  Common common;
  ContrastiveConfig cfg;
  std::string frames;
  std::string out = "encoder.json";
  std::string trace_out;
  std::size_t max_frames = 0;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("train-encoder", "Contrastive training of the frame encoder");
    add_common(sub, common);
    sub->add_option("--frames", frames, "Raw frame stream (JSONL)")->required();
    sub->add_option("--out", out, "Encoder parameters (JSON)")->capture_default_str();
    sub->add_option("--loss-trace-out", trace_out, "Per-epoch loss (CSV)");
    sub->add_option("--max-frames", max_frames, "Random subsample size, 0 for all")->capture_default_str();
    sub->add_option("--epochs", cfg.epochs)->capture_default_str();
    sub->add_option("--batch-size", cfg.batch_size)->capture_default_str();
    sub->add_option("--tau", cfg.temperature, "Temperature")->capture_default_str();
    sub->add_option("--lr", cfg.adam.learning_rate)->capture_default_str();
    sub->add_option("--hidden", cfg.arch.hidden, "Hidden layer widths")->capture_default_str();
    sub->add_option("--embed-dim", cfg.arch.embed_dim)->capture_default_str();
    sub->add_option("--projection-hidden", cfg.arch.projection_hidden)->capture_default_str();
    sub->add_option("--projection-dim", cfg.arch.projection_dim)->capture_default_str();
    sub->add_option("--noise", cfg.augmentation.gaussian_noise_sigma)->capture_default_str();
    sub->add_option("--jitter-lo", cfg.augmentation.scale_jitter_lo)->capture_default_str();
    sub->add_option("--jitter-hi", cfg.augmentation.scale_jitter_hi)->capture_default_str();
    sub->add_option("--cutout", cfg.augmentation.cutout_fraction)->capture_default_str();
    sub->add_option("--cutout-sigma", cfg.augmentation.cutout_fill_sigma)->capture_default_str();
    sub->add_flag("--geometric", cfg.augmentation.geometric_ops_enabled, "Translation and crop-resize on grids");
    sub->callback([this] { run(); });
  }

  void run() {
    cfg.seed = common.seed;
    std::vector<FrameTensor> tensors;
    for (const auto& p : io::load_frames(frames)) {
      for (const auto& f : p.frames) {
        if (f.excluded) continue;
        tensors.push_back(f.rows > 1 ? FrameTensor::grid(f.payload, f.rows, f.cols) : FrameTensor::vector(f.payload));
      }
    }
    if (tensors.empty()) throw InsufficientDataError("no usable frames in " + frames);
    if (max_frames > 0 && tensors.size() > max_frames) {
      Rng rng = make_rng(cfg.seed, 0x73756273);
      shuffle(tensors.begin(), tensors.end(), rng);
      tensors.resize(max_frames);
    }
    cfg.arch.input_dim = tensors.front().size();
    const auto result = train_encoder(tensors, cfg);
    io::save_model(out, result.params);
    write_trace(trace_out, result.loss_trace);
  }
};

struct EmbedCmd {
  Common common;
  std::string encoder;
  std::string frames;
  std::string out = "embeddings.jsonl";
  std::string csv_out;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("embed", "Map raw frames through the trained encoder");
    add_common(sub, common);
    sub->add_option("--encoder", encoder, "Encoder parameters (JSON)")->required();
    sub->add_option("--frames", frames, "Raw frame stream (JSONL)")->required();
    sub->add_option("--out", out, "Embedding stream (JSONL)")->capture_default_str();
    sub->add_option("--csv-out", csv_out, "Embeddings as CSV for external projection");
    sub->callback([this] { run(); });
  }

  void run() {
    const EncoderParams params = io::load_encoder(encoder);
    auto procs = io::load_frames(frames);
    for (auto& p : procs) {
      for (auto& f : p.frames) {
        f.payload = encoder_forward(params, std::span<const double>(f.payload));
        f.kind = PayloadKind::kEmbedding;
        f.rows = 1;
        f.cols = f.payload.size();
      }
    }
    io::save_frames(out, procs);
    if (!csv_out.empty()) {
      auto csv = io::open_out(csv_out);
      io::write_embeddings_csv(csv, procs);
    }
  }
};

struct FitClustersCmd {
  Common common;
  KMeansConfig cfg;
  std::string frames;
  std::string out = "clusters.json";
  std::size_t max_points = 0;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("fit-clusters", "k-means over frame embeddings");
    add_common(sub, common);
    sub->add_option("--frames", frames, "Embedding stream (JSONL)")->required();
    sub->add_option("--out", out, "Cluster model (JSON)")->capture_default_str();
    sub->add_option("--k", cfg.k, "Number of clusters")->capture_default_str();
    sub->add_option("--alpha", cfg.alpha, "Soft assignment sharpness")->capture_default_str();
    sub->add_option("--epsilon", cfg.epsilon, "Squared-distance guard")->capture_default_str();
    sub->add_option("--max-iters", cfg.max_iters)->capture_default_str();
    sub->add_option("--tol", cfg.tol, "Stop when no center moves more than this")->capture_default_str();
    sub->add_option("--n-init", cfg.n_init, "Seeded restarts")->capture_default_str();
    sub->add_option("--max-points", max_points, "Random subsample size, 0 for all")->capture_default_str();
    sub->callback([this] { run(); });
  }

  void run() {
    cfg.seed = common.seed;
    auto points = collect_payloads(io::load_frames(frames), true);
    if (max_points > 0 && points.size() > max_points) {
      Rng rng = make_rng(cfg.seed, 0x73756273);
      shuffle(points.begin(), points.end(), rng);
      points.resize(max_points);
    }
    io::save_model(out, kmeans_fit(points, cfg).model);
  }
};

struct AssignCmd {
  Common common;
  std::string frames;
  std::string clusters;
  std::string out = "assignments.jsonl";

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("assign", "Soft cluster assignment of every frame");
    add_common(sub, common);
    sub->add_option("--frames", frames, "Embedding stream (JSONL)")->required();
    sub->add_option("--clusters", clusters, "Cluster model (JSON)")->required();
    sub->add_option("--out", out, "Assignment stream (JSONL)")->capture_default_str();
    sub->callback([this] { run(); });
  }

  void run() {
    const ClusterModel model = io::load_clusters(clusters);
    auto procs = io::load_frames(frames);
    for (auto& p : procs) {
      for (auto& f : p.frames) {
        f.payload = soft_assign(f.payload, model);
        f.kind = PayloadKind::kAssignment;
        f.rows = 1;
        f.cols = f.payload.size();
      }
    }
    io::save_frames(out, procs);
  }
};

struct TrainQCmd {
  Common common;
  QTrainConfig cfg;
  WindowParams window;
  std::string assignments;
  std::string annotations;
  std::string out = "quality.json";
  std::string trace_out;
  std::size_t n_per_class = 0;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("train-q", "Train the windowed quality classifier");
    add_common(sub, common);
    sub->add_option("--assignments", assignments, "Assignment stream (JSONL)")->required();
    sub->add_option("--annotations", annotations, "Annotations (JSONL)")->required();
    sub->add_option("--out", out, "Quality model (JSON)")->capture_default_str();
    sub->add_option("--loss-trace-out", trace_out, "Per-epoch loss (CSV)");
    sub->add_option("--n-per-class", n_per_class, "Windows per class, 0 for every eligible positive")
        ->capture_default_str();
    sub->add_option("--epochs", cfg.epochs)->capture_default_str();
    sub->add_option("--batch-size", cfg.batch_size)->capture_default_str();
    sub->add_option("--lr", cfg.adam.learning_rate)->capture_default_str();
    add_window_options(sub, window);
    sub->callback([this] { run(); });
  }

  void run() {
    cfg.seed = common.seed;
    const auto procs = assigned(io::load_frames(assignments));
    const auto anns = io::load_annotations(annotations);
    const auto samples = build_training_set(procs, anns, n_per_class, cfg.seed, window);
    const auto result = train_q(samples, cfg);
    io::save_model(out, result.model);
    write_trace(trace_out, result.loss_trace);
  }
};

struct FitBayesCmd {
  Common common;
  BayesOptions options;
  WindowParams window;
  std::string assignments;
  std::string annotations;
  std::string quality;
  std::string out = "bayes.json";
  std::string curve_out;
  std::size_t n_random = 0;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("fit-bayes", "Estimate P(detect | exists, q) from quality histograms");
    add_common(sub, common);
    sub->add_option("--assignments", assignments, "Assignment stream (JSONL)")->required();
    sub->add_option("--annotations", annotations, "Annotations (JSONL)")->required();
    sub->add_option("--q", quality, "Quality model (JSON)")->required();
    sub->add_option("--out", out, "Likelihood table (JSON)")->capture_default_str();
    sub->add_option("--curve-out", curve_out, "Likelihood curve (CSV)");
    sub->add_option("--pds", options.pds, "Detection sensitivity P(D)/P(E)")->capture_default_str();
    sub->add_option("--bins", options.n_bins)->capture_default_str();
    sub->add_flag("--smoothing", options.smoothing, "Add one pseudo-count per bin");
    sub->add_option("--n-random", n_random, "Random withdrawal windows, 0 for all")->capture_default_str();
    add_window_options(sub, window);
    sub->callback([this] { run(); });
  }

  void run() {
    const auto procs = assigned(io::load_frames(assignments));
    const auto anns = io::load_annotations(annotations);
    const auto model = io::load_quality(quality);
    const auto samples = gather_bayes_samples(procs, anns, model, n_random, common.seed, window);
    const auto table = fit_bayes(samples.q_random, samples.q_pre_polyp, options);
    io::save_model(out, table);
    if (!curve_out.empty()) {
      auto csv = io::open_out(curve_out);
      io::write_bayes_curve_csv(csv, table);
    }
  }
};

struct ScoreOnlineCmd {
  Common common;
  WindowParams window;
  std::string assignments;
  std::string frames;
  std::string clusters;
  std::string quality;
  std::string out = "scores.jsonl";

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("score-online", "Sliding-window quality scores");
    add_common(sub, common);
    sub->add_option("--assignments", assignments, "Assignment stream (JSONL)");
    sub->add_option("--frames", frames, "Embedding stream (JSONL), used with --clusters");
    sub->add_option("--clusters", clusters, "Cluster model (JSON)");
    sub->add_option("--q", quality, "Quality model (JSON)")->required();
    sub->add_option("--out", out, "Window scores (JSONL)")->capture_default_str();
    add_window_options(sub, window);
    sub->callback([this] { run(); });
  }

  void run() {
    const auto model = io::load_quality(quality);
    std::vector<io::ProcedureWindowScores> all;
    std::size_t skipped = 0;
    if (!assignments.empty()) {
      for (const auto& p : assigned(io::load_frames(assignments))) {
        auto s = score_online(p.frames, model, window);
        skipped += s.skipped.size();
        all.push_back({p.id, std::move(s.scores)});
      }
    } else if (!frames.empty() && !clusters.empty()) {
      const auto cm = io::load_clusters(clusters);
      for (const auto& p : io::load_frames(frames)) {
        std::vector<TimedEmbedding> stream;
        for (const auto& f : p.frames) {
          if (!f.excluded) stream.push_back({f.timestamp_ms, f.payload});
        }
        auto s = score_online(stream, cm, model, window);
        skipped += s.skipped.size();
        all.push_back({p.id, std::move(s.scores)});
      }
    } else {
      throw CLI::ValidationError("score-online", "needs --assignments, or --frames with --clusters");
    }
    io::save_window_scores(out, all);
    if (skipped > 0) std::cerr << "score-online: skipped " << skipped << " windows below --min-frames\n";
  }
};

struct ScoreOfflineCmd {
  Common common;
  WindowParams window;
  std::string scores;
  std::string assignments;
  std::string quality;
  std::string annotations;
  std::string out = "offline.csv";

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("score-offline", "Per-procedure quality over the withdrawal phase");
    add_common(sub, common);
    sub->add_option("--scores", scores, "Window scores (JSONL)");
    sub->add_option("--assignments", assignments, "Assignment stream (JSONL), used with --q");
    sub->add_option("--q", quality, "Quality model (JSON)");
    sub->add_option("--annotations", annotations, "Annotations (JSONL)")->required();
    sub->add_option("--out", out, "Procedure scores (CSV)")->capture_default_str();
    add_window_options(sub, window);
    sub->callback([this] { run(); });
  }

  void run() {
    std::vector<io::ProcedureWindowScores> windows;
    if (!scores.empty()) {
      windows = io::load_window_scores(scores);
    } else if (!assignments.empty() && !quality.empty()) {
      const auto model = io::load_quality(quality);
      for (const auto& p : assigned(io::load_frames(assignments))) {
        windows.push_back({p.id, score_online(p.frames, model, window).scores});
      }
    } else {
      throw CLI::ValidationError("score-offline", "needs --scores, or --assignments with --q");
    }
    std::map<std::string, const ProcedureAnnotation*> by_id;
    const auto anns = io::load_annotations(annotations);
    for (const auto& a : anns) by_id[a.procedure_id] = &a;
    std::vector<ProcedureScore> result;
    for (const auto& w : windows) {
      const auto it = by_id.find(w.procedure_id);
      if (it == by_id.end()) throw SchemaError("no annotation for procedure " + w.procedure_id);
      result.push_back(score_procedure(w.windows, *it->second));
    }
    auto csv = io::open_out(out);
    io::write_procedure_scores_csv(csv, result);
  }
};

struct ReportCmd {
  Common common;
  std::string offline;
  std::string quintiles_out = "quintiles.csv";
  std::string distribution_out = "distribution.csv";
  std::size_t bins = 10;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("report", "Cohort reports from procedure scores");
    add_common(sub, common);
    sub->add_option("--offline", offline, "Procedure scores (CSV)")->required();
    sub->add_option("--quintiles-out", quintiles_out, "Quintile table (CSV)")->capture_default_str();
    sub->add_option("--distribution-out", distribution_out, "Score histograms (CSV)")->capture_default_str();
    sub->add_option("--bins", bins)->capture_default_str();
    sub->callback([this] { run(); });
  }

  void run() {
    const auto scores = io::load_procedure_scores_csv(offline);
    const auto rows = quintile_report(scores);
    {
      auto csv = io::open_out(quintiles_out);
      io::write_quintile_csv(csv, rows);
    }
    const auto dist = score_distribution_report(scores, bins);
    if (!dist.no_polyp) std::cerr << "report: no polyp-free procedures; histogram absent\n";
    if (!dist.polyp) std::cerr << "report: no procedures with polyps; histogram absent\n";
    auto csv = io::open_out(distribution_out);
    io::write_distribution_csv(csv, dist);
  }
};

// Appends "--key value" for every config key that the subcommand knows and
// the command line does not already set.
std::vector<std::string> expand_config(const CLI::App& sub, std::vector<std::string> args) {
  const auto flag_pos = std::find(args.begin(), args.end(), "--config");
  if (flag_pos == args.end() || flag_pos + 1 == args.end()) return args;
  const io::Json cfg = io::load_json(*(flag_pos + 1));
  if (!cfg.is_object()) throw ConfigError("--config must hold a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    if (key == "config") continue;
    if (sub.get_option_no_throw(flag) == nullptr) {
      io::warn("config key '" + key + "' is not a flag of '" + sub.get_name() + "'; ignored");
      continue;
    }
    if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
    const auto as_text = [](const io::Json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_float()) return io::format_double(v.get<double>());
      return v.dump();
    };
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      args.push_back(flag);
      for (const auto& v : value) args.push_back(as_text(v));
    } else {
      args.push_back(flag);
      args.push_back(as_text(value));
    }
  }
  return args;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"scopeq: colonoscopy quality metrics from frame-embedding streams", "scopeq"};
  app.require_subcommand(1);

  SimulateCmd simulate;
  TrainEncoderCmd train_encoder_cmd;
  EmbedCmd embed;
  FitClustersCmd fit_clusters;
  AssignCmd assign;
  TrainQCmd train_q_cmd;
  FitBayesCmd fit_bayes_cmd;
  ScoreOnlineCmd score_online_cmd;
  ScoreOfflineCmd score_offline;
  ReportCmd report;
  simulate.attach(app);
  train_encoder_cmd.attach(app);
  embed.attach(app);
  fit_clusters.attach(app);
  assign.attach(app);
  train_q_cmd.attach(app);
  fit_bayes_cmd.attach(app);
  score_online_cmd.attach(app);
  score_offline.attach(app);
  report.attach(app);

  const std::uint64_t seed = default_seed();
  for (Common* c : {&simulate.common, &train_encoder_cmd.common, &embed.common, &fit_clusters.common, &assign.common,
                    &train_q_cmd.common, &fit_bayes_cmd.common, &score_online_cmd.common, &score_offline.common,
                    &report.common}) {
    c->seed = seed;
  }

  if (argc < 2) {
    std::cerr << app.help();
    return kUsage;
  }

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    for (const CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
      if (sub->get_name() == args.front()) args = expand_config(*sub, std::move(args));
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (app.get_subcommands().empty()) std::cerr << app.help();
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return 0;
}

}  // namespace scopeq::cli
