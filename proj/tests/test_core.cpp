#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "somsne/core.hpp"
#include "test_util.hpp"

using namespace somsne;
using somsne::testing::random_map;
using somsne::testing::random_probs;
using somsne::testing::random_vector;

namespace {

MapModel line_map(std::vector<double> w1d) {
  Matrix z(w1d.size(), 2);
  Matrix w(w1d.size(), 1);
  for (std::size_t i = 0; i < w1d.size(); ++i) {
    z(i, 0) = static_cast<double>(i);
    w(i, 0) = w1d[i];
  }
  return MapModel(std::move(z), std::move(w));
}

}  // namespace

TEST(Softmax, UniformForEqualDistances) {
  const std::vector<double> sq{0, 0, 0};
  const auto p = softmax_neg_sqdist(sq, 1.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(p[i], 1.0 / 3.0);
}

TEST(Softmax, TwoPointLogistic) {
  const std::vector<double> sq{0, 1};
  const auto p = softmax_neg_sqdist(sq, 1.0);
  EXPECT_NEAR(p[0], 0.7310585786300049, 1e-15);
  EXPECT_NEAR(p[1], 0.2689414213699951, 1e-15);
}

TEST(Softmax, UnderflowGuard) {
  const std::vector<double> sq{0, 1e6};
  const auto p = softmax_neg_sqdist(sq, 1.0);
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_FALSE(std::isnan(p.log_probs()[1]));
  EXPECT_DOUBLE_EQ(p.log_probs()[1], -1e6);
}

TEST(Softmax, ExcludedEntryIsExactlyZero) {
  const std::vector<double> sq{0, 1, 2};
  const auto p = softmax_neg_sqdist(sq, 1.0, 0);
  EXPECT_EQ(p[0], 0.0);
  EXPECT_NEAR(p[1] + p[2], 1.0, 1e-15);
  EXPECT_THROW(softmax_neg_sqdist(std::vector<double>{0.0}, 1.0, 0), InvalidArgument);
}

TEST(Softmax, AllInfiniteIsInvalid) {
  const std::vector<double> sq{kInf, kInf};
  EXPECT_THROW(softmax_neg_sqdist(sq, 1.0), InvalidArgument);
  const std::vector<double> nan{std::nan(""), 0.0};
  EXPECT_THROW(softmax_neg_sqdist(nan, 1.0), InvalidArgument);
}

TEST(Softmax, ShiftInvariance) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 50.0), c(0.0, 1000.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> sq(1 + trial % 9);
    for (double& v : sq) v = u(rng);
    const double shift = c(rng);
    std::vector<double> shifted = sq;
    for (double& v : shifted) v += shift;
    const auto a = softmax_neg_sqdist(sq, 0.7);
    const auto b = softmax_neg_sqdist(shifted, 0.7);
    for (std::size_t i = 0; i < sq.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(Winner, NearestWeight) {
  EXPECT_EQ(winner(line_map({0, 1, 2}), std::vector<double>{0.4}), 0u);
}

TEST(Winner, TieGoesToLowestIndex) {
  EXPECT_EQ(winner(line_map({0, 1}), std::vector<double>{0.5}), 0u);
}

TEST(Winner, TwoDimensional) {
  MapModel map(Matrix(2, 2), Matrix::from_rows({{0, 0}, {3, 4}}));
  EXPECT_EQ(winner(map, std::vector<double>{3, 3}), 1u);
}

TEST(Winner, DimensionMismatch) {
  EXPECT_THROW(winner(line_map({0, 1}), std::vector<double>{0, 0}), DimensionMismatch);
}

TEST(Winner, ArgmaxOfPForEverySigma) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto map = random_map(2 + trial % 7, 1 + trial % 4, rng);
    const auto x = random_vector(map.dim(), rng);
    const std::size_t win = winner(map, x);
    for (double sigma : {0.01, 1.0, 100.0}) {
      const auto p = p_conditional(map, x, sigma);
      const auto arg = static_cast<std::size_t>(
          std::max_element(p.probs().begin(), p.probs().end()) - p.probs().begin());
      ASSERT_EQ(arg, win) << "sigma " << sigma;
    }
  }
}

TEST(PConditional, TwoNeurons) {
  const auto p = p_conditional(line_map({0, 1}), std::vector<double>{0}, 1.0);
  EXPECT_NEAR(p[0], 0.7310585786300049, 1e-15);
  EXPECT_NEAR(p[1], 0.2689414213699951, 1e-15);
}

TEST(PConditional, EquidistantIsUniform) {
  const auto p = p_conditional(line_map({-1, 1}), std::vector<double>{0}, 0.3);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(PConditional, WideSigmaFlattens) {
  const auto p = p_conditional(line_map({0, 1, 2, 5}), std::vector<double>{0.3}, 1e8);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p[i], 0.25, 1e-6);
}

TEST(PConditional, ExcludeWinnerSelf) {
  const auto map = line_map({0, 1, 2});
  const auto p = p_conditional(map, std::vector<double>{1}, 1.0, true);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  // not a weight: nothing excluded
  const auto p2 = p_conditional(map, std::vector<double>{1.1}, 1.0, true);
  EXPECT_GT(p2[1], 0.0);
  EXPECT_THROW(p_conditional(map, std::vector<double>{1}, 0.0), InvalidArgument);
}

TEST(QConditional, LineWinnerInMiddle) {
  const auto q = q_conditional(line_map({5, 6, 7}), 1, 1.0);
  EXPECT_NEAR(q[0], 0.21194155761708544, 1e-15);
  EXPECT_NEAR(q[1], 0.5761168847658291, 1e-15);
  EXPECT_NEAR(q[2], 0.21194155761708544, 1e-15);
}

TEST(QConditional, IdenticalPointsUniform) {
  MapModel map(Matrix(4, 2, 1.5), Matrix::from_rows({{0}, {1}, {2}, {3}}));
  const auto q = q_conditional(map, 2, 0.1);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(q[i], 0.25);
}

TEST(QConditional, WinnerIsMaximum) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto map = random_map(2 + trial % 9, 2, rng);
    const std::size_t win = static_cast<std::size_t>(trial) % map.n();
    const auto q = q_conditional(map, win, 0.5 + (trial % 5));
    for (std::size_t i = 0; i < map.n(); ++i) ASSERT_LE(q[i], q[win]);
  }
}

TEST(QConditional, OutOfRange) {
  EXPECT_THROW(q_conditional(line_map({0, 1}), 2, 1.0), InvalidArgument);
}

TEST(LogDensity, SingleComponentAtMean) {
  EXPECT_NEAR(log_density(line_map({0.25}), std::vector<double>{0.25}, 1.0), -0.5723649429247001,
              1e-14);
}

TEST(LogDensity, TwoComponents) {
  EXPECT_NEAR(log_density(line_map({0, 1}), std::vector<double>{0}, 1.0), -0.9522504359664224,
              1e-14);
}

TEST(LogDensity, TranslationInvariant) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto map = random_map(1 + trial % 6, 3, rng);
    const auto x = random_vector(3, rng);
    const auto shift = random_vector(3, rng, -10, 10);
    Matrix w = map.weights();
    Vector xs = x;
    for (std::size_t i = 0; i < w.rows(); ++i)
      for (std::size_t k = 0; k < 3; ++k) w(i, k) += shift[k];
    for (std::size_t k = 0; k < 3; ++k) xs[k] += shift[k];
    const MapModel moved(map.points(), w);
    EXPECT_NEAR(log_density(map, x, 0.8), log_density(moved, xs, 0.8), 1e-9);
  }
}

TEST(LogDensity, FarStimulusStaysFinite) {
  const double ld = log_density(line_map({0, 1}), std::vector<double>{1e4}, 0.01);
  EXPECT_TRUE(std::isfinite(ld));
}

TEST(Entropy, UniformAndDelta) {
  EXPECT_DOUBLE_EQ(entropy_bits(CondDist::from_probs({0.25, 0.25, 0.25, 0.25})), 2.0);
  EXPECT_DOUBLE_EQ(entropy_bits(CondDist::from_probs({0, 1, 0})), 0.0);
  const double s = 0.7310585786300049;
  EXPECT_NEAR(entropy_bits(CondDist::from_probs({s, 1 - s})), 0.8399415379831693, 1e-12);
}

TEST(Perplexity, KnownValues) {
  EXPECT_NEAR(perplexity(CondDist::from_probs(std::vector<double>(7, 1.0 / 7))), 7.0, 1e-12);
  EXPECT_DOUBLE_EQ(perplexity(CondDist::from_probs({1, 0})), 1.0);
  const double s = 0.7310585786300049;
  EXPECT_NEAR(perplexity(CondDist::from_probs({s, 1 - s})), 1.7899776055137309, 1e-12);
}

TEST(Perplexity, BoundedAndPermutationInvariant) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    auto probs = random_probs(1 + trial % 12, rng);
    const double perp = perplexity(CondDist::from_probs(probs));
    ASSERT_GE(perp, 1.0);
    ASSERT_LE(perp, static_cast<double>(probs.size()));
    std::shuffle(probs.begin(), probs.end(), rng);
    ASSERT_NEAR(perplexity(CondDist::from_probs(probs)), perp, 1e-12);
  }
}

TEST(KlDivergence, KnownValues) {
  const auto a = CondDist::from_probs({1, 0});
  const auto b = CondDist::from_probs({0.5, 0.5});
  EXPECT_NEAR(kl_divergence(a, b), 0.6931471805599453, 1e-15);
  EXPECT_EQ(kl_divergence(b, a), kInf);
  EXPECT_EQ(kl_divergence(b, b), 0.0);
  EXPECT_THROW(kl_divergence(a, CondDist::from_probs({1.0})), DimensionMismatch);
}

TEST(KlDivergence, NonnegativeAndZeroOnlyForEqual) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + trial % 10;
    const auto a = CondDist::from_probs(random_probs(n, rng));
    const auto b = CondDist::from_probs(random_probs(n, rng));
    double max_diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diff = std::max(max_diff, std::abs(a[i] - b[i]));
    const double kl = kl_divergence(a, b);
    ASSERT_GE(kl, 0.0);
    if (max_diff >= 1e-12) {
      ASSERT_GT(kl, 1e-12);
    }
    ASSERT_NEAR(kl_divergence(a, a), 0.0, 1e-12);
  }
}

TEST(KlDivergence, FiniteWhenEntriesUnderflow) {
  // exp(-2000) underflows, but the log-probabilities keep the divergence exact
  const auto p = softmax_neg_sqdist(std::vector<double>{0, 1}, 1.0);
  const auto q = softmax_neg_sqdist(std::vector<double>{0, 2000}, 1.0);
  EXPECT_EQ(q[1], 0.0);
  const double kl = kl_divergence(p, q);
  EXPECT_TRUE(std::isfinite(kl));
  EXPECT_NEAR(kl, p[0] * (p.log_probs()[0] - q.log_probs()[0]) +
                      p[1] * (p.log_probs()[1] - q.log_probs()[1]),
              1e-9);
}

TEST(CondDistInvariants, RandomMapsAreNormalized) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> logscale(-3.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto map = random_map(1 + trial % 10, 1 + trial % 5, rng);
    const auto x = random_vector(map.dim(), rng, -5, 5);
    const double sigma = std::pow(10.0, logscale(rng));
    const auto p = p_conditional(map, x, sigma);
    const auto q = q_conditional(map, winner(map, x), std::pow(10.0, logscale(rng)));
    for (const auto* d : {&p, &q}) {
      double sum = 0.0;
      for (double v : d->probs()) {
        ASSERT_GE(v, 0.0);
        ASSERT_FALSE(std::isnan(v));
        sum += v;
      }
      ASSERT_NEAR(sum, 1.0, 1e-9);
    }
    ASSERT_TRUE(std::isfinite(log_density(map, x, sigma)));
  }
}

TEST(MapModelTest, Invariants) {
  EXPECT_THROW(MapModel(Matrix(2, 2), Matrix(3, 1)), DimensionMismatch);
  EXPECT_THROW(MapModel(Matrix(0, 2), Matrix(0, 1)), InvalidArgument);
  EXPECT_THROW(MapModel(Matrix(1, 3), Matrix(1, 1)), DimensionMismatch);
  Matrix bad(1, 1);
  bad(0, 0) = std::nan("");
  EXPECT_THROW(MapModel(Matrix(1, 2), bad), InvalidArgument);
  EXPECT_THROW(CondDist::from_probs({0.5, 0.6}), InvalidArgument);
}
