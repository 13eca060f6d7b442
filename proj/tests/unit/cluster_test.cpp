#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "dcre/cluster.hpp"
#include "helpers.hpp"

namespace dcre {
namespace {

using testing::random_matrix;
using testing::random_stochastic;

struct Blobs {
  Matrix points;
  std::vector<int> labels;
  Matrix means;
};

Blobs make_blobs(std::size_t per, std::size_t dims, double spread, Rng& rng) {
  Blobs b;
  b.means = Matrix::from_rows({{0, 0, 0}, {10, 0, 0}, {0, 10, 5}});
  b.points = Matrix(3 * per, dims);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < per; ++i) {
      for (std::size_t d = 0; d < dims; ++d) b.points(c * per + i, d) = b.means(c, d) + spread * rng.normal();
      b.labels.push_back(static_cast<int>(c));
    }
  }
  return b;
}

TEST(SoftAssign, HandComputed) {
  // distances² 0 and 1 -> kernel 1 and 0.5
  const Matrix q = soft_assign(Matrix::from_rows({{0.0}}), Matrix::from_rows({{0.0}, {1.0}}));
  EXPECT_NEAR(q(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(q(0, 1), 1.0 / 3.0, 1e-15);
}

TEST(SoftAssign, RowsSumToOneAndShapeErrors) {
  Rng rng(1);
  const Matrix q = soft_assign(random_matrix(20, 4, rng, 3.0), random_matrix(5, 4, rng, 3.0));
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double s = 0.0;
    for (double v : q.row(i)) {
      EXPECT_GT(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_THROW(soft_assign(Matrix(2, 3), Matrix(1, 3)), ContractViolation);
  EXPECT_THROW(soft_assign(Matrix(2, 3), Matrix(2, 2)), ContractViolation);
}

TEST(Target, WorkedExample) {
  const Matrix p = target_distribution(Matrix::from_rows({{0.8, 0.2}, {0.6, 0.4}}));
  EXPECT_NEAR(p(0, 0), 0.8727, 1e-3);
  EXPECT_NEAR(p(0, 1), 0.1273, 1e-3);
  EXPECT_NEAR(p(1, 0), 0.4909, 1e-3);
  EXPECT_NEAR(p(1, 1), 0.5091, 1e-3);
}

TEST(Target, SingleRowIsFixedPoint) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const Matrix q = random_stochastic(1, 2 + rng.below(5), rng);
    const Matrix p = target_distribution(q);
    for (std::size_t j = 0; j < q.cols(); ++j) EXPECT_NEAR(p(0, j), q(0, j), 1e-12);
  }
}

TEST(Target, RowDuplicationInvariance) {
  Rng rng(3);
  const Matrix q = random_stochastic(6, 4, rng);
  Matrix doubled(12, 4);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 4; ++j) doubled(i, j) = q(i % 6, j);
  const Matrix p = target_distribution(q);
  const Matrix p2 = target_distribution(doubled);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(p2(i, j), p(i % 6, j), 1e-12);
}

TEST(Target, SharpensTowardDominantCluster) {
  Rng rng(4);
  const Matrix q = random_stochastic(30, 3, rng);
  const Matrix p = target_distribution(q);
  // sharpening never makes the most likely entry less extreme relative to the runner-up
  int sharper = 0;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    const auto qi = q.row(i);
    const auto j = static_cast<std::size_t>(std::max_element(qi.begin(), qi.end()) - qi.begin());
    sharper += p(i, j) >= q(i, j) - 1e-12;
  }
  EXPECT_GT(sharper, 20);
}

TEST(Kl, KnownValuesAndProperties) {
  EXPECT_NEAR(kl_divergence(Matrix::from_rows({{1.0, 0.0}}), Matrix::from_rows({{0.5, 0.5}})),
              std::log(2.0), 1e-15);
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const Matrix q = random_stochastic(4, 3, rng);
    EXPECT_GE(kl_divergence(random_stochastic(4, 3, rng), q), -1e-12);
    EXPECT_LT(std::abs(kl_divergence(q, q)), 1e-12);
  }
  EXPECT_THROW(kl_divergence(Matrix(2, 2), Matrix(2, 3)), ContractViolation);
}

TEST(KlLoss, GradientMatchesFiniteDifferences) {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix h = random_matrix(9, 24, rng, 0.5);
    const Matrix l = random_matrix(4, 24, rng, 0.5);
    const Matrix b = random_matrix(1, 4, rng, 0.5);
    const Matrix mu = random_matrix(4, 4, rng, 1.0);
    const Matrix p = random_stochastic(9, 4, rng);
    const auto g = kl_loss(p, h, l, b, mu);
    auto f = [&](const std::vector<Matrix>& t) { return kl_loss(p, h, t[1], t[2], t[0]).loss; };
    const auto res = finite_diff_check(f, {mu, l, b}, {g.centers, g.relation, g.bias}, 1e-4);
    EXPECT_LT(res.max_rel_error, 1e-4) << "tensor " << res.tensor;
    EXPECT_NEAR(g.loss, kl_divergence(p, soft_assign(project_relation_space(h, l, b), mu)), 1e-12);
  }
}

TEST(KMeans, RecoversSeparatedBlobs) {
  Rng rng(7);
  const auto b = make_blobs(60, 3, 0.3, rng);
  const auto km = init_centers_kmeans(b.points, 3, b.labels, 100, rng);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t d = 0; d < 3; ++d) EXPECT_NEAR(km.centers(c, d), b.means(c, d), 0.1);
  for (std::size_t i = 0; i < b.labels.size(); ++i) EXPECT_EQ(km.assignment[i], b.labels[i]);
}

TEST(KMeans, InertiaNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    const std::size_t n = 40 + rng.below(60);
    const Matrix pts = random_matrix(n, 2 + rng.below(4), rng, 5.0);
    std::vector<int> seeds(n);
    for (int& s : seeds) s = static_cast<int>(rng.below(5));
    const auto km = init_centers_kmeans(pts, 5, seeds, 100, rng);
    ASSERT_FALSE(km.inertia.empty());
    for (std::size_t i = 1; i < km.inertia.size(); ++i) {
      EXPECT_LE(km.inertia[i], km.inertia[i - 1] * (1.0 + 1e-12)) << "seed " << seed << " iter " << i;
    }
  }
}

TEST(KMeans, MissingLabelFallsBackToFarthestPoint) {
  const Matrix pts = Matrix::from_rows({{0, 0}, {0.1, 0}, {5, 5}});
  const std::vector<int> seeds{0, 0, -1};
  Rng rng(1);
  const auto km = init_centers_kmeans(pts, 2, seeds, 1, rng);
  EXPECT_EQ(km.centers(1, 0), 5.0);
  EXPECT_THROW(init_centers_kmeans(pts, 4, {}, 10, rng), ConfigError);
}

TEST(Resample, CapsAndTopsUp) {
  std::vector<int> group;
  for (int i = 0; i < 50; ++i) group.push_back(0);
  for (int i = 0; i < 3; ++i) group.push_back(1);
  group.push_back(-1);
  Rng rng(8);
  const auto idx = resample(group, 3, 10, 20, rng);
  std::map<int, int> per;
  for (auto i : idx) {
    ASSERT_LT(i, group.size());
    ASSERT_GE(group[i], 0);
    ++per[group[i]];
  }
  EXPECT_EQ(per[0], 20);
  EXPECT_EQ(per[1], 10);
  EXPECT_EQ(per.count(2), 0u);
  Rng again(8);
  EXPECT_EQ(resample(group, 3, 10, 20, again), idx);
  EXPECT_THROW(resample(group, 3, 30, 20, rng), ContractViolation);
}

ClusterConfig small_config(int epochs) {
  ClusterConfig c;
  c.epochs = epochs;
  c.batch_size = 32;
  return c;
}

TEST(Clustering, ZeroEpochsEqualsKMeans) {
  Rng rng(9);
  const auto b = make_blobs(30, 3, 0.5, rng);
  const Matrix eye = Matrix::identity(3);
  const Matrix zero(1, 3);
  Rng r1(3), r2(3);
  const auto st = run_clustering(b.points, b.labels, eye, zero, 3, small_config(0), 0.01, r1);
  Rng kr = r2.split("kmeans");
  const auto km = init_centers_kmeans(b.points, 3, b.labels, 100, kr);
  EXPECT_EQ(st.centers, km.centers);
  EXPECT_EQ(st.relation, eye);
  EXPECT_TRUE(st.epoch_losses.empty());
}

TEST(Clustering, BlobsAreConfidentlyAssignedAndLossDecreases) {
  Rng rng(10);
  const auto b = make_blobs(80, 3, 0.4, rng);
  Rng crng(4);
  const auto st = run_clustering(b.points, b.labels, Matrix::identity(3), Matrix(1, 3), 3,
                                 small_config(10), 0.01, crng);
  ASSERT_EQ(st.epoch_losses.size(), 10u);
  EXPECT_LT(st.epoch_losses.back(), st.epoch_losses.front());
  for (std::size_t i = 0; i < st.q.rows(); ++i) {
    const auto row = st.q.row(i);
    const auto top = std::max_element(row.begin(), row.end()) - row.begin();
    EXPECT_GE(row[static_cast<std::size_t>(top)], 0.9);
    EXPECT_EQ(top, b.labels[i]);
  }
}

TEST(Clustering, FewerThanTwoClustersIsAConfigError) {
  Rng rng(1);
  EXPECT_THROW(run_clustering(Matrix(4, 3), {}, Matrix::identity(3), Matrix(1, 3), 1, small_config(1),
                              0.01, rng),
               ConfigError);
}

TEST(Retained, CountsThreshold) {
  const std::vector<int> labels{0, 0, 1, 2, 2, 2, 3};
  EXPECT_EQ(retained_relations(labels, 5, 2), (std::vector<int>{0, 2}));
  EXPECT_EQ(retained_relations(labels, 5, 1), (std::vector<int>{0, 1, 2, 3}));
}

TEST(Vote, MajorityAndOutcomes) {
  // clusters map to relations {0 (NA), 2, 5}
  const std::vector<int> rels{0, 2, 5};
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  const std::vector<int> orig{2, 2, 5, 2};
  const Matrix r1 = Matrix::from_rows({{0.1, 0.8, 0.1}, {0.7, 0.2, 0.1}, {0.1, 0.1, 0.8}, {0.2, 0.3, 0.5}});
  const Matrix r2 = Matrix::from_rows({{0.1, 0.7, 0.2}, {0.6, 0.3, 0.1}, {0.2, 0.7, 0.1}, {0.2, 0.5, 0.3}});
  const Matrix r3 = Matrix::from_rows({{0.5, 0.4, 0.1}, {0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.2, 0.7}});
  const auto out = vote_labels({r1, r2, r3}, rels, ids, orig, 0);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0].outcome, RelabelOutcome::Kept);
  EXPECT_EQ(out[1].outcome, RelabelOutcome::Removed);
  EXPECT_EQ(out[2].outcome, RelabelOutcome::Relabeled);
  EXPECT_EQ(out[2].new_label, 2);
  EXPECT_NEAR(out[2].confidence, (0.1 + 0.7 + 0.8) / 3.0, 1e-12);
  EXPECT_EQ(out[3].outcome, RelabelOutcome::Relabeled);
  EXPECT_EQ(out[3].new_label, 5);
  for (const auto& r : out) EXPECT_TRUE(r.noisy);
}

TEST(Vote, TieGoesToHigherMeanThenLowerIndex) {
  const std::vector<int> rels{0, 1, 2};
  const std::vector<std::string> ids{"a", "b"};
  const std::vector<int> orig{1, 1};
  const Matrix r1 = Matrix::from_rows({{0.2, 0.3, 0.5}, {0.5, 0.25, 0.25}});
  const Matrix r2 = Matrix::from_rows({{0.1, 0.6, 0.3}, {0.25, 0.5, 0.25}});
  const auto out = vote_labels({r1, r2}, rels, ids, orig, 0);
  // a: one vote each for 1 and 2, mean q 0.45 vs 0.4 -> 1
  EXPECT_EQ(out[0].outcome, RelabelOutcome::Kept);
  // b: tie in votes and mean q between 0 and 1 -> lower index 0 (NA)
  EXPECT_EQ(out[1].outcome, RelabelOutcome::Removed);
  EXPECT_THROW(vote_labels({Matrix(2, 2)}, rels, ids, orig, 0), ContractViolation);
}

TEST(Outcome, NamesRoundTrip) {
  for (auto o : {RelabelOutcome::Kept, RelabelOutcome::Relabeled, RelabelOutcome::Removed, RelabelOutcome::Ignored}) {
    EXPECT_EQ(parse_outcome(outcome_name(o)), o);
  }
  EXPECT_THROW(parse_outcome("moved"), DataError);
}

}  // namespace
}  // namespace dcre
