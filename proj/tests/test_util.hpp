#pragma once

#include <random>

#include "oracles.hpp"
#include "strconf/descriptors.hpp"
#include "strconf/gbdt.hpp"

namespace testutil {

inline strconf::StateMatrixD to_eigen(const oracle::Matrix& m) {
  strconf::StateMatrixD out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m[0].size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[0].size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j];
  return out;
}

inline oracle::Matrix to_rows(const strconf::StateMatrixD& m) {
  oracle::Matrix out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return out;
}

inline strconf::StateMatrixD random_states(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  return to_eigen(oracle::random_matrix(rng, rows, cols));
}

inline double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-300});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

struct LabeledSet {
  strconf::FeatureMatrix x;
  std::vector<int> y;
};

// Two informative columns shifted to +-1 by class (sd 0.5); the rest N(0, 1).
inline LabeledSet separable_set(std::uint64_t seed, std::size_t n, std::size_t features = 70) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0), tight(0.0, 0.5);
  LabeledSet s{strconf::FeatureMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(features)),
               std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(rng() % 2);
    s.y[i] = y;
    const double mu = y == 1 ? 1.0 : -1.0;
    const auto r = static_cast<Eigen::Index>(i);
    s.x(r, 0) = mu + tight(rng);
    s.x(r, 1) = mu + tight(rng);
    for (Eigen::Index j = 2; j < s.x.cols(); ++j) s.x(r, j) = noise(rng);
  }
  return s;
}

inline std::vector<int> shuffled(std::vector<int> y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(y.begin(), y.end(), rng);
  return y;
}

}  // namespace testutil
