#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "expadam/ensemble.hpp"
#include "expadam/metrics.hpp"
#include "expadam/rng.hpp"
#include "metric_oracle.hpp"

using namespace expadam;

namespace {

ProbabilityMatrix random_pm(Rng& rng, std::size_t n, std::size_t c) {
  std::vector<double> v(n * c);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < c; ++j) s += (v[i * c + j] = rng.uniform() + 1e-3);
    for (std::size_t j = 0; j < c; ++j) v[i * c + j] /= s;
  }
  return ProbabilityMatrix(n, c, std::move(v));
}

ProbabilityMatrix one_hot(const std::vector<int>& cls, std::size_t c) {
  std::vector<double> v(cls.size() * c, 0.0);
  for (std::size_t i = 0; i < cls.size(); ++i) v[i * c + static_cast<std::size_t>(cls[i])] = 1.0;
  return ProbabilityMatrix(cls.size(), c, std::move(v));
}

}  // namespace

TEST(ProbabilityMatrix, Validation) {
  EXPECT_NO_THROW(ProbabilityMatrix(1, 2, {0.3, 0.7}));
  EXPECT_THROW(ProbabilityMatrix(1, 2, {0.3, 0.6}), std::invalid_argument);
  EXPECT_THROW(ProbabilityMatrix(1, 2, {-0.1, 1.1}), std::invalid_argument);
  EXPECT_THROW(ProbabilityMatrix(2, 2, {0.5, 0.5}), std::invalid_argument);
  EXPECT_EQ(ProbabilityMatrix(1, 3, {0.4, 0.2, 0.4}).argmax(0), 0u);
}

TEST(Fusion, AverageOfTwo) {
  const std::vector<ProbabilityMatrix> m{ProbabilityMatrix(1, 2, {0.8, 0.2}), ProbabilityMatrix(1, 2, {0.6, 0.4})};
  const auto f = fuse_average(m);
  EXPECT_NEAR(f(0, 0), 0.7, 1e-16);
  EXPECT_NEAR(f(0, 1), 0.3, 1e-16);
}

TEST(Fusion, IdenticalMembersReproduceExactly) {
  Rng rng(3);
  for (int k = 1; k <= 12; ++k) {
    const auto p = random_pm(rng, 9, 4);
    const std::vector<ProbabilityMatrix> copies(static_cast<std::size_t>(k), p);
    EXPECT_EQ(fuse_average(copies), p);
  }
}

TEST(Fusion, AverageCanOverruleMajorityVote) {
  // Grid over three 2-class members; fused argmax must follow the mean,
  // which sometimes disagrees with the vote.
  int disagreements = 0;
  for (int a = 0; a <= 20; ++a)
    for (int b = 0; b <= 20; ++b)
      for (int c = 0; c <= 20; ++c) {
        const double pa = a / 20.0, pb = b / 20.0, pc = c / 20.0;
        const std::vector<ProbabilityMatrix> m{ProbabilityMatrix(1, 2, {pa, 1 - pa}),
                                               ProbabilityMatrix(1, 2, {pb, 1 - pb}),
                                               ProbabilityMatrix(1, 2, {pc, 1 - pc})};
        const double mean0 = (pa + pb + pc) / 3.0;
        if (std::fabs(mean0 - 0.5) < 1e-9) continue;
        const std::size_t expected = mean0 > 0.5 ? 0 : 1;
        EXPECT_EQ(fuse_average(m).argmax(0), expected);
        const int votes0 = (pa > 0.5) + (pb > 0.5) + (pc > 0.5);
        const bool any_tie = pa == 0.5 || pb == 0.5 || pc == 0.5;
        if (!any_tie && (votes0 >= 2 ? 0u : 1u) != expected) ++disagreements;
      }
  EXPECT_GT(disagreements, 0);
  // The canonical case: argmaxes {0, 1, 1} with near-uniform losers.
  const std::vector<ProbabilityMatrix> m{ProbabilityMatrix(1, 2, {0.9, 0.1}), ProbabilityMatrix(1, 2, {0.45, 0.55}),
                                         ProbabilityMatrix(1, 2, {0.45, 0.55})};
  EXPECT_EQ(fuse_average(m).argmax(0), 0u);
}

TEST(Fusion, WeightedSum) {
  const std::vector<ProbabilityMatrix> ab{ProbabilityMatrix(1, 2, {1, 0}), ProbabilityMatrix(1, 2, {0, 1})};
  const std::vector<double> w{1, 2};
  const auto f = fuse_weighted_sum(ab, w);
  EXPECT_NEAR(f(0, 0), 1.0 / 3.0, 1e-16);
  EXPECT_NEAR(f(0, 1), 2.0 / 3.0, 1e-16);

  EXPECT_THROW(fuse_weighted_sum(ab, std::vector<double>{0, 0}), std::invalid_argument);
  EXPECT_THROW(fuse_weighted_sum(ab, std::vector<double>{1}), std::invalid_argument);
  EXPECT_THROW(fuse_weighted_sum(ab, std::vector<double>{-1, 2}), std::invalid_argument);
  EXPECT_THROW(fuse_average(std::vector<ProbabilityMatrix>{}), std::invalid_argument);
  const std::vector<ProbabilityMatrix> ragged{ProbabilityMatrix(1, 2, {1, 0}), ProbabilityMatrix(1, 3, {0, 1, 0})};
  EXPECT_THROW(fuse_average(ragged), std::invalid_argument);
}

TEST(Fusion, HereComposition) {
  // baseline group weight 1, new-optimizer group (its own average) weight 2.
  Rng rng(12);
  std::vector<ProbabilityMatrix> baseline, fresh;
  for (int i = 0; i < 5; ++i) baseline.push_back(random_pm(rng, 6, 3));
  for (int i = 0; i < 4; ++i) fresh.push_back(random_pm(rng, 6, 3));
  const std::vector<ProbabilityMatrix> groups{fuse_average(baseline), fuse_average(fresh)};
  const auto here = fuse_weighted_sum(groups, std::vector<double>{1, 2});
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      double b = 0, f = 0;
      for (const auto& p : baseline) b += p(i, c);
      for (const auto& p : fresh) f += p(i, c);
      EXPECT_NEAR(here(i, c), (b / 5.0 + 2.0 * f / 4.0) / 3.0, 1e-15);
    }
}

TEST(FusionProperty, EqualWeightsAndRescaling) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.below(8), n = 1 + rng.below(10), c = 2 + rng.below(5);
    std::vector<ProbabilityMatrix> m;
    for (std::size_t i = 0; i < k; ++i) m.push_back(random_pm(rng, n, c));
    const auto avg = fuse_average(m);
    const std::vector<double> equal(k, rng.uniform(0.1, 10));
    const auto eq = fuse_weighted_sum(m, equal);
    std::vector<double> w(k), scaled(k);
    const double factor = std::pow(10.0, rng.uniform(-3, 3));
    for (std::size_t i = 0; i < k; ++i) scaled[i] = factor * (w[i] = rng.uniform(0.0, 5.0));
    w[0] += 0.1;
    scaled[0] = factor * w[0];
    const auto a = fuse_weighted_sum(m, w), b = fuse_weighted_sum(m, scaled);
    for (std::size_t i = 0; i < avg.values().size(); ++i) {
      EXPECT_NEAR(eq.values()[i], avg.values()[i], 1e-15);
      EXPECT_NEAR(a.values()[i], b.values()[i], 1e-15);
    }
  }
}

TEST(Fusion, CsvRoundTrip) {
  Rng rng(2);
  const auto p = random_pm(rng, 7, 3);
  std::stringstream ss;
  write_csv(p, ss);
  EXPECT_EQ(ss.str().substr(0, 9), "c0,c1,c2\n");
  EXPECT_EQ(read_probability_csv(ss), p);
  std::stringstream bad("c0,c2\n0.5,0.5\n");
  EXPECT_THROW(read_probability_csv(bad), std::runtime_error);
}

TEST(Metrics, Accuracy) {
  EXPECT_EQ(accuracy(one_hot({0, 1, 2}, 3), std::vector<int>{0, 1, 2}), 1.0);
  const ProbabilityMatrix uniform(4, 2, std::vector<double>(8, 0.5));
  EXPECT_EQ(accuracy(uniform, std::vector<int>{0, 0, 0, 0}), 1.0);
  EXPECT_EQ(accuracy(one_hot({0, 1, 1, 0}, 2), std::vector<int>{0, 1, 1, 1}), 0.75);
}

TEST(Metrics, PerfectPredictions) {
  const std::vector<int> y{0, 2, 2, 1, 0, 0};
  const auto pm = one_hot(y, 3);
  EXPECT_EQ(weighted_f_score(pm, y), 1.0);
  EXPECT_EQ(weighted_g_mean(pm, y), 1.0);
}

TEST(Metrics, ImbalancedAllClassZero) {
  const std::vector<int> y{0, 0, 0, 1};
  const auto pm = one_hot({0, 0, 0, 0}, 2);
  EXPECT_NEAR(weighted_f_score(pm, y), 0.6428571428571429, 1e-15);
  EXPECT_EQ(weighted_g_mean(pm, y), 0.0);
}

TEST(Metrics, Confusion) {
  const std::vector<int> y{0, 1, 1, 2, 2, 2};
  const auto perfect = confusion(one_hot(y, 3), y);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(perfect(i, j), i == j ? static_cast<std::int64_t>(i + 1) : 0);

  const auto single = confusion(one_hot({0}, 2), std::vector<int>{1});
  EXPECT_EQ(single(1, 0), 1);
  EXPECT_EQ(single.total(), 1);
  EXPECT_THROW(confusion(one_hot({0}, 2), std::vector<int>{0, 1}), std::invalid_argument);
  EXPECT_THROW(confusion(one_hot({0}, 2), std::vector<int>{2}), std::invalid_argument);
}

TEST(MetricsProperty, AgreeWithPerSampleOracle) {
  Rng rng(1000);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(50), c = 1 + rng.below(6);
    const auto pm = random_pm(rng, n, c);
    std::vector<int> y(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(c));
      pred[i] = static_cast<int>(pm.argmax(i));
    }
    const auto cm = confusion(pm, y);
    const auto o = metric_oracle::score(y, pred, static_cast<int>(c));
    ASSERT_NEAR(cm.accuracy(), o.accuracy, 1e-12);
    ASSERT_NEAR(cm.weighted_f_score(), o.f, 1e-12);
    ASSERT_NEAR(cm.weighted_g_mean(), o.g, 1e-12);
    for (double v : {cm.weighted_f_score(), cm.weighted_g_mean()}) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0 + 1e-15);
    }
    for (std::size_t k = 0; k < c; ++k)
      ASSERT_EQ(cm.row_sum(k), std::count(y.begin(), y.end(), static_cast<int>(k)));

    // Order of samples does not matter.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<double> shuffled;
    std::vector<int> ys;
    for (auto i : perm) {
      shuffled.insert(shuffled.end(), pm.row(i).begin(), pm.row(i).end());
      ys.push_back(y[i]);
    }
    const ProbabilityMatrix pms(n, c, shuffled);
    ASSERT_NEAR(weighted_f_score(pms, ys), cm.weighted_f_score(), 1e-12);
    ASSERT_NEAR(weighted_g_mean(pms, ys), cm.weighted_g_mean(), 1e-12);
  }
}
