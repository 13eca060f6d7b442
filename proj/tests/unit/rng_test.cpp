#include <gtest/gtest.h>

#include <set>

#include "dcre/parallel.hpp"
#include "dcre/rng.hpp"

namespace dcre {
namespace {

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DifferentSeedsDiffer) {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_EQ(same, 0);
}

TEST(Rng, SplitIsReproducibleAndIndependentOfParentPosition) {
  Rng parent(9);
  Rng s1 = parent.split("kmeans");
  parent.next_u64();
  parent.next_u64();
  Rng s2 = parent.split("kmeans");
  for (int i = 0; i < 100; ++i) ASSERT_EQ(s1.next_u64(), s2.next_u64());
}

TEST(Rng, NamedAndIndexedSplitsDiffer) {
  Rng root(5);
  Rng a = root.split("a"), b = root.split("b"), c = root.split(std::uint64_t{0}), d = root.split(std::uint64_t{1});
  std::set<std::uint64_t> firsts{a.next_u64(), b.next_u64(), c.next_u64(), d.next_u64()};
  EXPECT_EQ(firsts.size(), 4u);
}

TEST(Rng, UniformInUnitInterval) {
  Rng r(3);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
}

TEST(Rng, BelowIsInRangeAndCoversAllValues) {
  Rng r(4);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = r.below(7);
    ASSERT_LT(v, 7u);
    ++hits[v];
  }
  for (int h : hits) EXPECT_GT(h, 800);
}

TEST(Rng, NormalHasUnitMoments) {
  Rng r(8);
  double s = 0.0, s2 = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.03);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng r(12);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  auto w = v;
  r.shuffle(w);
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

TEST(Parallel, VisitsEveryIndexOnceAndRethrows) {
  set_max_threads(4);
  std::vector<int> seen(1000, 0);
  parallel_for(seen.size(), [&](std::size_t i) { ++seen[i]; });
  for (int s : seen) ASSERT_EQ(s, 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
  set_max_threads(0);
}

}  // namespace
}  // namespace dcre
