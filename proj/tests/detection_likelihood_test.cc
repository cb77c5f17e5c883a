#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "scopeq/detection_likelihood.h"
#include "scopeq/error.h"
#include "scopeq/procedure_sim.h"

using namespace scopeq;

TEST(Histogram, AllInOneBin) {
  const auto edges = equal_width_edges(0.0, 1.0, 10);
  const std::vector<double> v{0.31, 0.32, 0.35, 0.39};
  const auto h = histogram(v, edges);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(h[i], i == 3 ? 1.0 : 0.0);
}

TEST(Histogram, OnePerBin) {
  const auto edges = equal_width_edges(0.0, 1.0, 10);
  std::vector<double> v;
  for (int i = 0; i < 10; ++i) v.push_back(0.05 + 0.1 * i);
  for (double f : histogram(v, edges)) EXPECT_DOUBLE_EQ(f, 0.1);
}

TEST(Histogram, MatchesCountingOracle) {
  SimConfig cfg;
  cfg.procedure_len_s = 300;
  cfg.polyp_rate_per_procedure = 4;
  const auto cohort = generate_cohort(cfg, 200);
  std::vector<double> v;
  for (const auto& p : cohort.procedures) {
    for (const auto& t : p.truth) v.push_back(t.true_window_quality);
  }
  ASSERT_GE(v.size(), 543u);
  v.resize(543);
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const auto edges = equal_width_edges(*lo, *hi, 10);
  std::vector<std::size_t> counts(10, 0);
  for (double x : v) {
    for (std::size_t b = 0; b < 10; ++b) {
      const bool last = b == 9;
      if (x >= edges[b] && (x < edges[b + 1] || (last && x <= edges[b + 1]))) {
        ++counts[b];
        break;
      }
    }
  }
  EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::size_t{0}), 543u);
  const auto h = histogram(v, edges);
  for (std::size_t b = 0; b < 10; ++b) EXPECT_EQ(h[b], static_cast<double>(counts[b]) / 543.0);
}

TEST(Histogram, RangeAndEdges) {
  const std::vector<double> edges{0.0, 0.5, 1.0};
  EXPECT_EQ(bin_index(1.0, edges), 1u);
  EXPECT_EQ(bin_index(0.5, edges), 1u);
  EXPECT_EQ(bin_index(0.0, edges), 0u);
  EXPECT_THROW(bin_index(1.0000001, edges), RangeError);
  EXPECT_THROW(bin_index(-0.1, edges), RangeError);
  const auto degenerate = equal_width_edges(0.3, 0.3, 4);
  EXPECT_DOUBLE_EQ(degenerate.front(), -0.2);
  EXPECT_DOUBLE_EQ(degenerate.back(), 0.8);
}

TEST(FitBayes, IdenticalListsGivePds) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 0.7);
  std::vector<double> q(300);
  for (auto& x : q) x = u(rng);
  for (double pds : {0.775, 0.5, 1.0}) {
    BayesOptions opt;
    opt.pds = pds;
    const auto t = fit_bayes(q, q, opt);
    for (std::size_t i = 0; i < t.n_bins(); ++i) {
      if (t.p_q[i] > 0) {
        ASSERT_TRUE(t.p_d_given_e_q[i].has_value());
        EXPECT_EQ(*t.p_d_given_e_q[i], pds);
      } else {
        EXPECT_FALSE(t.p_d_given_e_q[i].has_value());
      }
    }
  }
}

TEST(FitBayes, ZeroPdsGivesZero) {
  const std::vector<double> a{0.1, 0.2, 0.5, 0.9}, b{0.5, 0.9, 0.9};
  BayesOptions opt;
  opt.pds = 0.0;
  const auto t = fit_bayes(a, b, opt);
  for (const auto& v : t.p_d_given_e_q) {
    if (v) EXPECT_EQ(*v, 0.0);
  }
}

TEST(FitBayes, ClampedAndNormalized) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(500), b(80);
  for (auto& x : a) x = u(rng);
  for (auto& x : b) x = std::sqrt(u(rng));
  const auto t = fit_bayes(a, b);
  EXPECT_NEAR(std::accumulate(t.p_q.begin(), t.p_q.end(), 0.0), 1.0, 1e-9);
  EXPECT_NEAR(std::accumulate(t.p_q_given_d.begin(), t.p_q_given_d.end(), 0.0), 1.0, 1e-9);
  for (const auto& v : t.p_d_given_e_q) {
    if (!v) continue;
    EXPECT_GE(*v, 0.0);
    EXPECT_LE(*v, 1.0);
  }
  EXPECT_EQ(t.bin_edges.front(), std::min(*std::min_element(a.begin(), a.end()), *std::min_element(b.begin(), b.end())));
  EXPECT_EQ(t.bin_edges.back(), std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end())));
  EXPECT_NO_THROW(validate(t));
}

TEST(FitBayes, DuplicationInvariance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(120), b(40);
  for (auto& x : a) x = u(rng);
  for (auto& x : b) x = u(rng) * u(rng);
  const auto base = fit_bayes(a, b);
  for (int m : {2, 3, 7}) {
    std::vector<double> am, bm;
    for (int r = 0; r < m; ++r) {
      am.insert(am.end(), a.begin(), a.end());
      bm.insert(bm.end(), b.begin(), b.end());
    }
    EXPECT_EQ(fit_bayes(am, bm), base);
  }
}

TEST(FitBayes, SmoothingDefinesEveryBin) {
  const std::vector<double> a{0.0, 1.0}, b{1.0};
  BayesOptions opt;
  opt.smoothing = true;
  const auto t = fit_bayes(a, b, opt);
  for (const auto& v : t.p_d_given_e_q) EXPECT_TRUE(v.has_value());
}

TEST(FitBayes, Errors) {
  const std::vector<double> a{0.1, 0.2}, empty;
  EXPECT_THROW(fit_bayes(empty, a), InsufficientDataError);
  EXPECT_THROW(fit_bayes(a, empty), InsufficientDataError);
  BayesOptions opt;
  opt.pds = 1.5;
  EXPECT_THROW(fit_bayes(a, a, opt), ConfigError);
}

TEST(PDetect, Lookup) {
  const std::vector<double> a{0.0, 0.05, 0.15, 0.95, 1.0}, b{0.05, 0.95, 1.0};
  const auto t = fit_bayes(a, b);
  for (std::size_t i = 0; i < t.n_bins(); ++i) EXPECT_EQ(p_detect_given_exists(t, t.bin_center(i)), t.p_d_given_e_q[i]);
  EXPECT_FALSE(p_detect_given_exists(t, 0.5).has_value());
  EXPECT_THROW(p_detect_given_exists(t, 1.01), RangeError);
}

TEST(PDetect, UniformTable) {
  std::vector<double> q;
  for (int i = 0; i < 100; ++i) q.push_back(i / 99.0);
  const auto t = fit_bayes(q, q);
  for (double x = 0.0; x <= 1.0; x += 0.01) EXPECT_EQ(p_detect_given_exists(t, x), 0.775);
}
