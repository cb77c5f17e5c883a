#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "oracles.h"
#include "scopeq/clustering.h"
#include "scopeq/error.h"
#include "scopeq/quality_online.h"

using namespace scopeq;

namespace {

std::vector<TimedAssignment> constant_stream(std::int64_t t0, std::int64_t t1, std::int64_t step,
                                             std::vector<double> r) {
  std::vector<TimedAssignment> out;
  for (std::int64_t t = t0; t <= t1; t += step) out.push_back({t, r});
  return out;
}

std::vector<TimedAssignment> random_stream(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> gap(100, 400);
  std::vector<TimedAssignment> out;
  std::int64_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r(k);
    for (auto& x : r) x = u(rng);
    const double s = std::accumulate(r.begin(), r.end(), 0.0);
    for (auto& x : r) x /= s;
    out.push_back({t, r});
    t += gap(rng);
  }
  return out;
}

ProcedureAnnotation annotation(std::vector<Interval> polyps, std::vector<Interval> exclusions = {}) {
  return {"p", 0, 600000, std::move(polyps), std::move(exclusions)};
}

std::vector<WindowSample> separable_samples(std::size_t per_class, std::uint64_t seed) {
  // Class decided by r_0 with a 0.2 gap around 0.5.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> hi(0.6, 1.0), lo(0.0, 0.4), u(0.0, 1.0);
  std::vector<WindowSample> out;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const bool pos = i % 2 == 0;
    const double r0 = pos ? hi(rng) : lo(rng);
    const double split = u(rng);
    out.push_back({"p", static_cast<std::int64_t>(i), {r0, (1 - r0) * split, (1 - r0) * (1 - split)},
                   pos ? WindowLabel::kPositive : WindowLabel::kNegative});
  }
  return out;
}

}  // namespace

TEST(WindowAverage, Examples) {
  const auto c = constant_stream(0, 9000, 1000, {0.2, 0.8});
  const auto avg = window_average(c, 9000);
  EXPECT_NEAR(avg[0], 0.2, 1e-15);
  EXPECT_NEAR(avg[1], 0.8, 1e-15);
  const std::vector<TimedAssignment> two{{1000, {0.2, 0.8}}, {2000, {0.4, 0.6}}};
  const auto a2 = window_average(two, 2000, 10000, 1);
  EXPECT_NEAR(a2[0], 0.3, 1e-15);
  EXPECT_NEAR(a2[1], 0.7, 1e-15);
  EXPECT_THROW(window_average(two, 50000, 10000, 1), InsufficientDataError);
  EXPECT_THROW(window_average(two, 2000), InsufficientDataError);
}

TEST(WindowAverage, HalfOpenInterval) {
  const std::vector<TimedAssignment> s{{0, {1, 0}}, {10000, {0, 1}}};
  const auto a = window_average(s, 10000, 10000, 1);
  EXPECT_EQ(a, (std::vector<double>{0, 1}));
}

TEST(WindowAverage, StaysOnSimplex) {
  std::mt19937_64 rng(1);
  const auto s = random_stream(rng, 400, 5);
  for (std::int64_t end = 12000; end < s.back().timestamp_ms; end += 3000) {
    const auto a = window_average(s, end);
    EXPECT_NEAR(std::accumulate(a.begin(), a.end(), 0.0), 1.0, 1e-12);
    for (double v : a) EXPECT_GE(v, 0.0);
  }
}

TEST(LabelWindow, Examples) {
  EXPECT_EQ(label_window(20000, annotation({{21500, 24000}})), WindowLabel::kPositive);
  EXPECT_EQ(label_window(20000, annotation({{23000, 25000}})), WindowLabel::kNegative);
  EXPECT_EQ(label_window(20000, annotation({{15000, 16000}})), WindowLabel::kExcluded);
  EXPECT_EQ(label_window(20000, annotation({}, {{19000, 19500}})), WindowLabel::kExcluded);
  EXPECT_EQ(label_window(20000, annotation({{22000, 23000}})), WindowLabel::kPositive);
  EXPECT_EQ(label_window(20000, annotation({{20000, 23000}})), WindowLabel::kExcluded);
}

TEST(LabelWindow, IgnoresEventsOutsideSpan) {
  const std::vector<Interval> far{{0, 5000}, {9000, 10000}, {22001, 30000}, {100000, 101000}};
  EXPECT_EQ(label_window(20000, annotation(far)), WindowLabel::kNegative);
  auto with_pos = far;
  with_pos.push_back({21000, 21400});
  EXPECT_EQ(label_window(20000, annotation(with_pos)), WindowLabel::kPositive);
}

TEST(BuildTrainingSet, BalancedUniqueDeterministic) {
  std::vector<AssignedProcedure> procs;
  std::vector<ProcedureAnnotation> anns;
  for (int p = 0; p < 4; ++p) {
    const std::string id = "p" + std::to_string(p);
    procs.push_back({id, constant_stream(0, 120000, 250, {0.5, 0.5})});
    anns.push_back({id, 0, 120000, {{30000 + 10000 * p, 33000 + 10000 * p}, {80000, 83000}}, {}});
  }
  const auto a = build_training_set(procs, anns, 6, 3);
  const auto b = build_training_set(procs, anns, 6, 3);
  ASSERT_EQ(a.size(), 12u);
  std::set<std::pair<std::string, std::int64_t>> keys;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].procedure_id, b[i].procedure_id);
    EXPECT_EQ(a[i].window_end_ms, b[i].window_end_ms);
    keys.insert({a[i].procedure_id, a[i].window_end_ms});
    if (a[i].label == WindowLabel::kPositive) {
      ++pos;
      bool at_event = false;
      for (const auto& ann : anns) {
        if (ann.procedure_id != a[i].procedure_id) continue;
        for (const auto& e : ann.polyp_events) at_event |= e.start_ms == a[i].window_end_ms;
      }
      EXPECT_TRUE(at_event);
    } else {
      EXPECT_EQ(a[i].label, WindowLabel::kNegative);
    }
  }
  EXPECT_EQ(pos, 6u);
  EXPECT_EQ(keys.size(), a.size());
  EXPECT_THROW(build_training_set(procs, anns, 9, 3), SamplingError);
}

TEST(BuildTrainingSet, NoPolypsIsSamplingError) {
  std::vector<AssignedProcedure> procs{{"p", constant_stream(0, 60000, 250, {1, 0})}};
  std::vector<ProcedureAnnotation> anns{{"p", 0, 60000, {}, {}}};
  EXPECT_THROW(build_training_set(procs, anns, 1, 0), SamplingError);
}

TEST(QForward, Examples) {
  QualityModel zero{{0, 0, 0}, 0};
  EXPECT_EQ(q_forward(zero, std::vector<double>{0.2, 0.3, 0.5}), 0.5);
  QualityModel m{{1.0, 0.0}, 0.0};
  EXPECT_NEAR(q_forward(m, std::vector<double>{0.4, 0.6}), 0.598687660, 1e-9);
  QualityModel w{{2.0, -1.0}, 0.1};
  EXPECT_LT(q_logit(w, std::vector<double>{0.3, 0.5}), q_logit(w, std::vector<double>{0.4, 0.5}));
  EXPECT_THROW(q_forward(w, std::vector<double>{1.0}), ShapeError);
}

TEST(QForward, StrictlyInsideUnitInterval) {
  QualityModel m{{30.0, -30.0}, 0.0};
  for (double x : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double q = q_forward(m, std::vector<double>{x, 1 - x});
    EXPECT_GT(q, 0.0);
    EXPECT_LT(q, 1.0);
  }
}

TEST(TrainQ, SeparableReachesHighAccuracy) {
  const auto samples = separable_samples(500, 4);
  const auto r = train_q(samples, QTrainConfig{});
  std::size_t correct = 0;
  for (const auto& s : samples) {
    correct += (q_forward(r.model, s.r_bar) >= 0.5) == (s.label == WindowLabel::kPositive);
  }
  EXPECT_GE(static_cast<double>(correct) / samples.size(), 0.99);
  EXPECT_EQ(r.loss_trace.size(), 500u);
}

TEST(TrainQ, LossTraceBitReproducible) {
  const auto samples = separable_samples(100, 5);
  QTrainConfig cfg;
  cfg.epochs = 50;
  const auto a = train_q(samples, cfg);
  const auto b = train_q(samples, cfg);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_EQ(a.model, b.model);
}

TEST(TrainQ, NoSignalGivesHalf) {
  std::vector<WindowSample> samples;
  for (int i = 0; i < 200; ++i) {
    samples.push_back({"p", i, {0.3, 0.7}, i % 2 ? WindowLabel::kPositive : WindowLabel::kNegative});
  }
  QTrainConfig cfg;
  cfg.batch_size = samples.size();
  const auto r = train_q(samples, cfg);
  EXPECT_NEAR(q_forward(r.model, std::vector<double>{0.3, 0.7}), 0.5, 1e-3);
  EXPECT_NEAR(r.loss_trace.back(), std::log(2.0), 1e-5);
}

TEST(TrainQ, SingleClassRejected) {
  std::vector<WindowSample> samples{{"p", 1, {0.5, 0.5}, WindowLabel::kPositive},
                                    {"p", 2, {0.4, 0.6}, WindowLabel::kPositive},
                                    {"p", 3, {0.4, 0.6}, WindowLabel::kExcluded}};
  EXPECT_THROW(train_q(samples, QTrainConfig{}), DegenerateTrainingError);
}

TEST(ScoreOnline, ConstantStream) {
  const auto s = constant_stream(0, 60000, 250, {0.3, 0.7});
  const QualityModel m{{2.0, -1.0}, 0.25};
  const auto out = score_online(s, m);
  ASSERT_FALSE(out.scores.empty());
  for (const auto& w : out.scores) EXPECT_NEAR(w.q, out.scores.front().q, 1e-14);
  EXPECT_NEAR(out.scores.front().q, oracle::sigmoid(2.0 * 0.3 - 0.7 + 0.25), 1e-12);
}

TEST(ScoreOnline, StrideOfStreamLengthGivesOneWindow) {
  const auto s = constant_stream(0, 8000, 250, {0.5, 0.5});
  WindowParams p;
  p.stride_ms = 8000;
  const auto out = score_online(s, QualityModel{{1, 1}, 0}, p);
  ASSERT_EQ(out.scores.size(), 1u);
  EXPECT_EQ(out.scores[0].window_end_ms, 8000);
}

TEST(ScoreOnline, MatchesPerWindowComposition) {
  std::mt19937_64 rng(9);
  const auto s = random_stream(rng, 600, 4);
  const QualityModel m{{1.5, -0.5, 0.3, -2.0}, 0.1};
  const WindowParams p;
  const auto out = score_online(s, m, p);
  const auto ends = stride_window_ends(s, p.stride_ms);
  std::size_t scored = 0;
  for (auto end : ends) {
    std::vector<double> avg;
    try {
      avg = window_average(s, end, p.window_len_ms, p.min_frames);
    } catch (const InsufficientDataError&) {
      continue;
    }
    ASSERT_LT(scored, out.scores.size());
    EXPECT_EQ(out.scores[scored].window_end_ms, end);
    EXPECT_EQ(out.scores[scored].q, q_forward(m, avg));
    ++scored;
  }
  EXPECT_EQ(scored, out.scores.size());
  EXPECT_EQ(scored + out.skipped.size(), ends.size());
}

TEST(ScoreOnline, ChunkingDoesNotMatter) {
  std::mt19937_64 rng(10);
  const auto s = random_stream(rng, 500, 3);
  const QualityModel m{{1.0, -1.0, 0.5}, 0.0};
  const auto whole = score_online(s, m);
  OnlineScorer scorer(m, WindowParams{});
  std::vector<WindowScore> streamed;
  for (std::size_t i = 0; i < s.size(); ++i) {
    scorer.push(s[i].timestamp_ms, s[i].r);
    if (i % 37 == 0) {
      const auto& part = scorer.result().scores;
      EXPECT_LE(part.size(), whole.scores.size());
    }
  }
  scorer.finish();
  EXPECT_EQ(scorer.result().scores, whole.scores);
}

TEST(ScoreOnline, UnsortedStreamRejected) {
  std::vector<TimedAssignment> s{{0, {1, 0}}, {500, {1, 0}}, {300, {0, 1}}};
  EXPECT_THROW(score_online(s, QualityModel{{1, 1}, 0}), OrderingError);
}

TEST(ScoreOnline, FromEmbeddings) {
  ClusterModel cm;
  cm.centers = {{0, 0}, {5, 5}};
  std::vector<TimedEmbedding> e;
  std::vector<TimedAssignment> a;
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x{0.1 * (i % 7), 0.05 * (i % 11)};
    e.push_back({i * 250, x});
    a.push_back({i * 250, soft_assign(x, cm)});
  }
  const QualityModel m{{1.0, -1.0}, 0.0};
  EXPECT_EQ(score_online(e, cm, m).scores, score_online(a, m).scores);
}
