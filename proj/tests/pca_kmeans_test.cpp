#include <filesystem>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "strconf/kmeans.hpp"
#include "strconf/pca.hpp"

using namespace strconf;

namespace {

FeatureMatrix from_rows(const oracle::Matrix& m) {
  FeatureMatrix out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m[0].size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[0].size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j];
  return out;
}

FeatureMatrix random_features(std::uint64_t seed, std::size_t n, std::size_t f) {
  std::mt19937_64 rng(seed);
  return from_rows(oracle::random_matrix(rng, n, f));
}

}  // namespace

TEST(Pca, FullRankReconstruction) {
  const auto x = random_features(1, 40, 12);
  const auto p = fit_pca(x, 12);
  const FeatureMatrix back = p.reconstruct(p.project(x));
  EXPECT_LT((back - x).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Pca, CollinearPoints) {
  FeatureMatrix x(6, 2);
  for (int i = 0; i < 6; ++i) {
    x(i, 0) = i - 2.5;
    x(i, 1) = 2.0 * (i - 2.5);
  }
  const auto p = fit_pca(x, 2);
  EXPECT_LT(p.explained_variance(1), 1e-8);
  EXPECT_NEAR(p.explained_variance(0) / p.explained_variance.sum(), 1.0, 1e-12);
  EXPECT_NEAR(p.components(0, 0), 1.0 / std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(p.components(0, 1), 2.0 / std::sqrt(5.0), 1e-12);
}

TEST(Pca, ExplainedVarianceMatchesJacobi) {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    std::mt19937_64 rng(seed);
    const auto rows = oracle::random_matrix(rng, 50, 10);
    const auto expected = oracle::covariance_eigenvalues(rows);
    const auto p = fit_pca(from_rows(rows), 10);
    for (std::size_t c = 0; c < 10; ++c) EXPECT_NEAR(p.explained_variance(static_cast<Eigen::Index>(c)), expected[c], 1e-6);
  }
}

TEST(Pca, RowsOrthonormalAndVariancesNonIncreasing) {
  const auto p = fit_pca(random_features(2, 100, 20), 8);
  const Eigen::MatrixXd gram = p.components * p.components.transpose();
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-6);
  for (Eigen::Index c = 1; c < 8; ++c) EXPECT_LE(p.explained_variance(c), p.explained_variance(c - 1));
}

TEST(Pca, SignConvention) {
  const auto p = fit_pca(random_features(3, 60, 9), 9);
  for (Eigen::Index c = 0; c < 9; ++c) {
    Eigen::Index arg = 0;
    p.components.row(c).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(p.components(c, arg), 0.0);
  }
}

TEST(Pca, ProjectionsAreCentered) {
  const auto x = random_features(4, 30, 5);
  const FeatureMatrix z = fit_pca(x, 3).project(x);
  EXPECT_LT(z.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pca, KOutOfRange) {
  const auto x = random_features(5, 6, 10);
  EXPECT_THROW(fit_pca(x, 0), ValidationError);
  EXPECT_THROW(fit_pca(x, 7), ValidationError);
  EXPECT_NO_THROW(fit_pca(x, 6));
}

TEST(Pca, ColumnMismatch) {
  const auto p = fit_pca(random_features(6, 20, 5), 2);
  EXPECT_THROW(p.project(random_features(7, 3, 4)), ValidationError);
}

TEST(Pca, JsonRoundTrip) {
  const auto x = random_features(8, 25, 6);
  const auto p = fit_pca(x, 4);
  const auto path = std::filesystem::temp_directory_path() / "strconf_pca_test.json";
  save_projector(p, path.string());
  const auto q = load_projector(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(q.mean, p.mean);
  EXPECT_EQ(q.components, p.components);
  EXPECT_EQ(q.explained_variance, p.explained_variance);
  EXPECT_EQ(q.project(x), p.project(x));
}

TEST(KMeans, CentroidScoresZero) {
  const auto train = random_features(20, 50, 3);
  const auto model = fit_kmeans(train, 4);
  FeatureMatrix test = model.centroids;
  const auto scores = kmeans_outlier_score(train, test, 4);
  for (double s : scores) EXPECT_EQ(s, 0.0);
}

TEST(KMeans, SingleClusterIsDistanceToMean) {
  const auto train = random_features(21, 40, 4);
  const auto test = random_features(22, 10, 4);
  const Eigen::RowVectorXd mean = train.colwise().mean();
  const auto scores = kmeans_outlier_score(train, test, 1);
  for (Eigen::Index i = 0; i < test.rows(); ++i)
    EXPECT_NEAR(scores[static_cast<std::size_t>(i)], -(test.row(i) - mean).norm(), 1e-12);
}

TEST(KMeans, RecoversTwoBlobs) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n(0.0, 0.3);
  FeatureMatrix x(200, 2);
  for (Eigen::Index i = 0; i < 200; ++i) {
    const double cx = i < 100 ? -5.0 : 5.0;
    const double cy = i < 100 ? 0.0 : 3.0;
    x(i, 0) = cx + n(rng);
    x(i, 1) = cy + n(rng);
  }
  auto m = fit_kmeans(x, 2);
  if (m.centroids(0, 0) > m.centroids(1, 0)) m.centroids.row(0).swap(m.centroids.row(1));
  EXPECT_NEAR(m.centroids(0, 0), -5.0, 0.1);
  EXPECT_NEAR(m.centroids(0, 1), 0.0, 0.1);
  EXPECT_NEAR(m.centroids(1, 0), 5.0, 0.1);
  EXPECT_NEAR(m.centroids(1, 1), 3.0, 0.1);
}

TEST(KMeans, ScoresAreNonPositiveAndDeterministic) {
  const auto train = random_features(24, 80, 5);
  const auto test = random_features(25, 20, 5);
  const auto a = kmeans_outlier_score(train, test, 8, 100, 7);
  EXPECT_EQ(a, kmeans_outlier_score(train, test, 8, 100, 7));
  for (double s : a) EXPECT_LE(s, 0.0);
}

TEST(KMeans, Errors) {
  const auto train = random_features(26, 5, 3);
  EXPECT_THROW(fit_kmeans(train, 6), ValidationError);
  EXPECT_THROW(kmeans_outlier_score(train, FeatureMatrix(0, 3), 2), ValidationError);
  EXPECT_THROW(kmeans_outlier_score(train, random_features(27, 2, 4), 2), ValidationError);
}
