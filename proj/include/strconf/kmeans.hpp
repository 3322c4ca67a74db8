#pragma once

// k-means outlier baseline: confidence = -(distance to the nearest centroid).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "strconf/error.hpp"
#include "strconf/gbdt.hpp"

namespace strconf {

struct KMeansModel {
  FeatureMatrix centroids;  // k x F
  std::size_t iterations = 0;

  std::size_t nearest(const Eigen::Ref<const Eigen::RowVectorXd>& x, double* dist2 = nullptr) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double d = (centroids.row(c) - x).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<std::size_t>(c);
      }
    }
    if (dist2) *dist2 = best_d;
    return best;
  }
};

/// Lloyd's algorithm. Initialization: a seeded random first centroid, then
/// repeatedly the training point farthest from all chosen centroids
/// (lowest index on ties). Empty clusters keep their previous centroid.
inline KMeansModel fit_kmeans(const FeatureMatrix& x, std::size_t k, std::size_t iters = 100,
                              std::uint64_t seed = 42) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (k < 1) throw ValidationError("kmeans: k must be >= 1");
  if (n < k) {
    throw ValidationError("kmeans: need N >= k (N=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
  }
  if (!x.allFinite()) throw ValidationError("kmeans: non-finite feature value");

  KMeansModel m;
  m.centroids.resize(static_cast<Eigen::Index>(k), x.cols());
  std::mt19937_64 rng(seed);
  const auto first = static_cast<Eigen::Index>(rng() % n);
  m.centroids.row(0) = x.row(first);

  std::vector<double> min_d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    min_d2[i] = (x.row(static_cast<Eigen::Index>(i)) - m.centroids.row(0)).squaredNorm();
  }
  for (std::size_t c = 1; c < k; ++c) {
    std::size_t far = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (min_d2[i] > min_d2[far]) far = i;
    }
    m.centroids.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(far));
    for (std::size_t i = 0; i < n; ++i) {
      min_d2[i] = std::min(min_d2[i], (x.row(static_cast<Eigen::Index>(i)) -
                                       m.centroids.row(static_cast<Eigen::Index>(c))).squaredNorm());
    }
  }

  std::vector<std::size_t> assign(n, k);
  for (std::size_t it = 0; it < iters; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = m.nearest(x.row(static_cast<Eigen::Index>(i)));
      if (c != assign[i]) {
        assign[i] = c;
        changed = true;
      }
    }
    m.iterations = it + 1;
    if (!changed) break;

    FeatureMatrix sums = FeatureMatrix::Zero(static_cast<Eigen::Index>(k), x.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(assign[i])) += x.row(static_cast<Eigen::Index>(i));
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        m.centroids.row(static_cast<Eigen::Index>(c)) =
            sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
      }
    }
  }
  return m;
}

inline std::vector<double> kmeans_outlier_score(const FeatureMatrix& train_features,
                                                const FeatureMatrix& test_features, std::size_t k = 8,
                                                std::size_t iters = 100, std::uint64_t seed = 42) {
  if (test_features.rows() == 0) throw ValidationError("kmeans: empty test set");
  if (test_features.cols() != train_features.cols()) {
    throw ValidationError("kmeans: train/test column count mismatch");
  }
  const auto model = fit_kmeans(train_features, k, iters, seed);
  std::vector<double> scores(static_cast<std::size_t>(test_features.rows()));
  for (Eigen::Index i = 0; i < test_features.rows(); ++i) {
    double d2 = 0.0;
    model.nearest(test_features.row(i), &d2);
    scores[static_cast<std::size_t>(i)] = d2 == 0.0 ? 0.0 : -std::sqrt(d2);
  }
  return scores;
}

}  // namespace strconf
