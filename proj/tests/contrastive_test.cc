#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.h"
#include "scopeq/contrastive.h"
#include "scopeq/error.h"

using scopeq::ViewPair;

namespace {

std::vector<double> flatten(const std::vector<ViewPair>& pairs) {
  std::vector<double> flat;
  for (const auto& p : pairs) {
    flat.insert(flat.end(), p.first.begin(), p.first.end());
    flat.insert(flat.end(), p.second.begin(), p.second.end());
  }
  return flat;
}

std::vector<ViewPair> unflatten(const std::vector<double>& flat, std::size_t n, std::size_t dim) {
  std::vector<ViewPair> pairs(n);
  for (std::size_t i = 0; i < n; ++i) {
    pairs[i].first.assign(flat.begin() + 2 * i * dim, flat.begin() + (2 * i + 1) * dim);
    pairs[i].second.assign(flat.begin() + (2 * i + 1) * dim, flat.begin() + (2 * i + 2) * dim);
  }
  return pairs;
}

}  // namespace

TEST(CosineSimilarity, Examples) {
  const std::vector<double> a{3, 4}, e1{1, 0}, e2{0, 1}, d{1, 1};
  EXPECT_DOUBLE_EQ(scopeq::cosine_similarity(a, a), 1.0);
  EXPECT_DOUBLE_EQ(scopeq::cosine_similarity(e1, e2), 0.0);
  EXPECT_NEAR(scopeq::cosine_similarity(d, e1), 0.7071067811865475, 1e-15);
}

TEST(CosineSimilarity, Errors) {
  const std::vector<double> z{0, 0}, a{1, 2}, b{1, 2, 3};
  EXPECT_THROW(scopeq::cosine_similarity(z, a), scopeq::DegenerateInputError);
  EXPECT_THROW(scopeq::cosine_similarity(a, b), scopeq::ShapeError);
}

TEST(NtXentLoss, TwoOrthogonalClasses) {
  const std::vector<ViewPair> pairs{{{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
  const double expected = oracle::nt_xent_brute_force(pairs, 1.0);
  EXPECT_NEAR(expected, std::log(4.0) - 1.0, 1e-15);
  EXPECT_NEAR(scopeq::nt_xent_loss(pairs, 1.0), expected, 1e-12);
  EXPECT_NEAR(scopeq::nt_xent_loss(pairs, 1.0), 0.3862944, 1e-7);
}

TEST(NtXentLoss, AllIdenticalIsLog4) {
  const std::vector<double> v{0.3, -1.2, 2.0};
  const std::vector<ViewPair> pairs{{v, v}, {v, v}};
  for (double tau : {0.1, 0.5, 1.0, 3.0}) EXPECT_NEAR(scopeq::nt_xent_loss(pairs, tau), std::log(4.0), 1e-12);
}

TEST(NtXentLoss, MatchesBruteForce) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 7;
    const auto pairs = oracle::random_batch(rng, n, 5);
    const double tau = 0.1 + 0.05 * trial;
    EXPECT_NEAR(scopeq::nt_xent_loss(pairs, tau), oracle::nt_xent_brute_force(pairs, tau), 1e-10);
  }
}

TEST(NtXentLoss, ScaleInvariance) {
  std::mt19937_64 rng(3);
  auto pairs = oracle::random_batch(rng, 6, 4);
  const double base = scopeq::nt_xent_loss(pairs, 0.5);
  auto scaled = pairs;
  for (auto& p : scaled) {
    for (auto& x : p.first) x *= 7;
    for (auto& x : p.second) x *= 7;
  }
  EXPECT_NEAR(scopeq::nt_xent_loss(scaled, 0.5), base, 1e-12);
  auto one = pairs;
  for (auto& x : one[2].second) x *= 0.013;
  EXPECT_NEAR(scopeq::nt_xent_loss(one, 0.5), base, 1e-12);
}

TEST(NtXentLoss, PermutationInvariance) {
  std::mt19937_64 rng(5);
  auto pairs = oracle::random_batch(rng, 7, 3);
  const double base = scopeq::nt_xent_loss(pairs, 0.3);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  EXPECT_NEAR(scopeq::nt_xent_loss(pairs, 0.3), base, 1e-12);
}

TEST(NtXentLoss, LowerBound) {
  // Each term is at least log(4(N-1)) - 2/tau since cosines lie in [-1, 1].
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const double tau = 0.2 + 0.1 * trial;
    const auto pairs = oracle::random_batch(rng, n, 6);
    EXPECT_GE(scopeq::nt_xent_loss(pairs, tau), std::log(4.0 * (n - 1)) - 2.0 / tau - 1e-12);
  }
}

TEST(NtXentLoss, Errors) {
  const std::vector<ViewPair> single{{{1, 0}, {0, 1}}};
  EXPECT_THROW(scopeq::nt_xent_loss(single, 0.5), scopeq::UndefinedLossError);
  const std::vector<ViewPair> zero{{{1, 0}, {0, 0}}, {{0, 1}, {1, 1}}};
  EXPECT_THROW(scopeq::nt_xent_loss(zero, 0.5), scopeq::DegenerateInputError);
}

TEST(NtXentGrad, MatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + trial % 4, dim = 3 + trial % 3;
    const double tau = 0.2 + 0.1 * trial;
    const auto pairs = oracle::random_batch(rng, n, dim);
    const auto analytic = scopeq::nt_xent_grad(pairs, tau);
    EXPECT_NEAR(analytic.loss, scopeq::nt_xent_loss(pairs, tau), 1e-12);
    const auto fd = oracle::central_diff(
        [&](const std::vector<double>& x) { return scopeq::nt_xent_loss(unflatten(x, n, dim), tau); },
        flatten(pairs));
    EXPECT_LE(oracle::rel_error(flatten(analytic.grads), fd), 1e-5) << "trial " << trial;
  }
}

TEST(NtXentGrad, RadialComponentVanishes) {
  std::mt19937_64 rng(4);
  const auto pairs = oracle::random_batch(rng, 5, 4);
  const auto g = scopeq::nt_xent_grad(pairs, 0.5);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (int a = 0; a < 2; ++a) {
      const auto& z = a == 0 ? pairs[i].first : pairs[i].second;
      const auto& gz = a == 0 ? g.grads[i].first : g.grads[i].second;
      double radial = 0, norm = 0;
      for (std::size_t d = 0; d < z.size(); ++d) {
        radial += z[d] * gz[d];
        norm += z[d] * z[d];
      }
      EXPECT_NEAR(radial / std::sqrt(norm), 0.0, 1e-8);
    }
  }
}

TEST(NtXentGrad, SymmetricConfigurationIsAntisymmetric) {
  // Mirror symmetry x <-> y swaps the two classes, so the gradient of class 2
  // is the mirrored gradient of class 1.
  const std::vector<ViewPair> pairs{{{1, 0.2}, {1, -0.1}}, {{0.2, 1}, {-0.1, 1}}};
  const auto g = scopeq::nt_xent_grad(pairs, 1.0);
  const auto fd = oracle::central_diff(
      [&](const std::vector<double>& x) { return scopeq::nt_xent_loss(unflatten(x, 2, 2), 1.0); }, flatten(pairs));
  EXPECT_LE(oracle::rel_error(flatten(g.grads), fd), 1e-5);
  EXPECT_NEAR(g.grads[0].first[0], g.grads[1].first[1], 1e-12);
  EXPECT_NEAR(g.grads[0].first[1], g.grads[1].first[0], 1e-12);
  EXPECT_NEAR(g.grads[0].second[0], g.grads[1].second[1], 1e-12);
  EXPECT_NEAR(g.grads[0].second[1], g.grads[1].second[0], 1e-12);

  // Projected on the direction from class 1 to class 2, the two classes get
  // opposite components: both are pushed apart by the same amount.
  const std::vector<ViewPair> sym{{{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
  const auto gs = scopeq::nt_xent_grad(sym, 1.0);
  const double d[2] = {-1, 1};
  auto along = [&](const std::vector<double>& g) { return g[0] * d[0] + g[1] * d[1]; };
  EXPECT_GT(std::abs(along(gs.grads[0].first)), 1e-3);
  EXPECT_NEAR(along(gs.grads[0].first), -along(gs.grads[1].first), 1e-12);
  EXPECT_NEAR(along(gs.grads[0].second), -along(gs.grads[1].second), 1e-12);
  const auto fds = oracle::central_diff(
      [&](const std::vector<double>& x) { return scopeq::nt_xent_loss(unflatten(x, 2, 2), 1.0); }, flatten(sym));
  EXPECT_LE(oracle::rel_error(flatten(gs.grads), fds), 1e-5);
}
