#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dcre/detector.hpp"
#include "helpers.hpp"

namespace dcre {
namespace {

using testing::random_matrix;
using testing::random_vector;

TEST(Coupling, SingleSentenceBag) {
  const auto a = coupling_scores(Matrix::from_rows({{0.3, -2.0}}), std::vector<double>{1.0, 4.0});
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0], 1.0);
}

TEST(Coupling, HandComputedPair) {
  // dot products 0 and ln 3
  const auto a = coupling_scores(Matrix::from_rows({{0.0}, {std::log(3.0)}}), std::vector<double>{1.0});
  EXPECT_NEAR(a[0], 0.25, 1e-15);
  EXPECT_NEAR(a[1], 0.75, 1e-15);
}

TEST(Coupling, IdenticalSentencesAreUniform) {
  Matrix reps(5, 3);
  for (std::size_t i = 0; i < 5; ++i) {
    reps(i, 0) = 0.4;
    reps(i, 1) = -1.0;
    reps(i, 2) = 2.0;
  }
  for (double v : coupling_scores(reps, std::vector<double>{1.0, 2.0, 3.0})) EXPECT_NEAR(v, 0.2, 1e-15);
}

TEST(Coupling, WidthMismatchAndEmptyBagAreRejected) {
  EXPECT_THROW(coupling_scores(Matrix(2, 3), std::vector<double>{1.0}), ContractViolation);
  EXPECT_THROW(coupling_scores(Matrix(0, 1), std::vector<double>{1.0}), ContractViolation);
}

TEST(Partition, StrictBoundary) {
  const auto p = partition_bag(std::vector<double>{0.85, 0.05, 0.10}, 0.1);
  EXPECT_EQ(p.valid, 0);
  EXPECT_EQ(p.noisy, std::vector<int>{1});
  EXPECT_EQ(p.ignored, std::vector<int>{2});
}

TEST(Partition, ZeroThresholdNeverFlags) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto a = softmax(random_vector(1 + rng.below(10), rng, 5.0));
    EXPECT_TRUE(partition_bag(a, 0.0).noisy.empty());
  }
}

TEST(Partition, UniformLargeBagProtectsFirst) {
  const std::vector<double> a(20, 0.05);
  const auto p = partition_bag(a, 0.1);
  EXPECT_EQ(p.valid, 0);
  EXPECT_EQ(p.noisy.size(), 19u);
  EXPECT_TRUE(p.ignored.empty());
  // the protected argmax is below phi yet valid
  EXPECT_LT(a[0], 0.1);
}

TEST(Partition, BadThresholdIsRejected) {
  EXPECT_THROW(partition_bag(std::vector<double>{1.0}, 1.0), ContractViolation);
  EXPECT_THROW(partition_bag(std::vector<double>{1.0}, -0.1), ContractViolation);
  EXPECT_THROW(partition_bag(std::vector<double>{}, 0.1), ContractViolation);
}

TEST(PartitionProperty, DisjointCover) {
  Rng rng(17);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t b = 1 + rng.below(12);
    const auto a = softmax(random_vector(b, rng, 3.0));
    const double phi = rng.uniform(0.0, 0.99);
    const auto p = partition_bag(a, phi);
    std::set<int> all{p.valid};
    for (int i : p.noisy) {
      EXPECT_LT(a[static_cast<std::size_t>(i)], phi);
      all.insert(i);
    }
    for (int i : p.ignored) {
      EXPECT_GE(a[static_cast<std::size_t>(i)], phi);
      all.insert(i);
    }
    ASSERT_EQ(all.size(), b);
    ASSERT_EQ(1 + p.noisy.size() + p.ignored.size(), b);
    for (std::size_t i = 0; i < b; ++i) ASSERT_LE(a[i], a[static_cast<std::size_t>(p.valid)]);
  }
}

TEST(PartitionProperty, MonotoneInThreshold) {
  Rng rng(19);
  for (int t = 0; t < 500; ++t) {
    const auto a = softmax(random_vector(2 + rng.below(10), rng, 3.0));
    const double lo = rng.uniform(0.0, 0.5);
    const double hi = lo + rng.uniform(0.0, 0.49);
    const auto small = partition_bag(a, lo).noisy;
    const auto large = partition_bag(a, hi).noisy;
    const std::set<int> big(large.begin(), large.end());
    for (int i : small) EXPECT_TRUE(big.count(i));
  }
}

TEST(PartitionProperty, ShiftInvariance) {
  Rng rng(23);
  for (int t = 0; t < 300; ++t) {
    const std::size_t b = 1 + rng.below(8);
    const Matrix reps = random_matrix(b, 4, rng);
    auto l = random_vector(4, rng);
    const auto a = coupling_scores(reps, l);
    // shifting every dot product by c: append a constant feature to each rep
    const double c = rng.uniform(-5.0, 5.0);
    Matrix shifted(b, 5);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < 4; ++j) shifted(i, j) = reps(i, j);
      shifted(i, 4) = 1.0;
    }
    l.push_back(c);
    const auto a2 = coupling_scores(shifted, l);
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      EXPECT_NEAR(a[i], a2[i], 1e-12);
      total += a[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    const double phi = 0.2;
    const auto p1 = partition_bag(a, phi), p2 = partition_bag(a2, phi);
    EXPECT_EQ(p1.valid, p2.valid);
  }
}

}  // namespace
}  // namespace dcre
