#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "strconf/error.hpp"
#include "strconf/gbdt.hpp"

namespace strconf {

struct PcaProjector {
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd components;           // k x F, orthonormal rows
  Eigen::VectorXd explained_variance;   // length k, non-increasing

  std::size_t k() const { return static_cast<std::size_t>(components.rows()); }
  std::size_t n_features() const { return static_cast<std::size_t>(components.cols()); }

  FeatureMatrix project(const FeatureMatrix& x) const {
    if (static_cast<std::size_t>(x.cols()) != n_features()) {
      throw ValidationError("pca: expected " + std::to_string(n_features()) + " columns, got " +
                            std::to_string(x.cols()));
    }
    return (x.rowwise() - mean) * components.transpose();
  }

  FeatureMatrix reconstruct(const FeatureMatrix& z) const {
    if (static_cast<std::size_t>(z.cols()) != k()) {
      throw ValidationError("pca: expected " + std::to_string(k()) + " components, got " +
                            std::to_string(z.cols()));
    }
    return (z * components).rowwise() + mean;
  }
};

/// Principal components by descending explained (sample) variance. Each
/// component is signed so its largest-magnitude entry is positive.
inline PcaProjector fit_pca(const FeatureMatrix& x, std::size_t k) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto f = static_cast<std::size_t>(x.cols());
  if (k < 1 || k > std::min(n, f)) {
    throw ValidationError("pca: k=" + std::to_string(k) + " outside [1, min(N, F)] = [1, " +
                          std::to_string(std::min(n, f)) + "]");
  }
  if (!x.allFinite()) throw ValidationError("pca: non-finite feature value");

  PcaProjector p;
  p.mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - p.mean;
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw ComputationError("pca: eigensolver did not converge");
  }
  p.components.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(f));
  p.explained_variance.resize(static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < k; ++c) {
    const auto src = static_cast<Eigen::Index>(f - 1 - c);  // eigenvalues ascend
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    p.components.row(static_cast<Eigen::Index>(c)) = v.transpose();
    p.explained_variance(static_cast<Eigen::Index>(c)) = std::max(0.0, solver.eigenvalues()(src));
  }
  return p;
}

inline nlohmann::json to_json(const PcaProjector& p) {
  nlohmann::json j;
  j["version"] = 1;
  j["k"] = p.k();
  j["n_features"] = p.n_features();
  j["mean"] = std::vector<double>(p.mean.data(), p.mean.data() + p.mean.size());
  j["explained_variance"] = std::vector<double>(
      p.explained_variance.data(), p.explained_variance.data() + p.explained_variance.size());
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < p.components.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(p.components.cols()));
    for (Eigen::Index c = 0; c < p.components.cols(); ++c) row[static_cast<std::size_t>(c)] = p.components(r, c);
    rows.push_back(row);
  }
  j["components"] = std::move(rows);
  return j;
}

inline PcaProjector projector_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw ValidationError("pca: unsupported projector version");
    const auto k = j.at("k").get<std::size_t>();
    const auto f = j.at("n_features").get<std::size_t>();
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto var = j.at("explained_variance").get<std::vector<double>>();
    const auto rows = j.at("components").get<std::vector<std::vector<double>>>();
    if (mean.size() != f || var.size() != k || rows.size() != k) {
      throw ValidationError("pca: projector dimensions inconsistent");
    }
    PcaProjector p;
    p.mean = Eigen::Map<const Eigen::RowVectorXd>(mean.data(), static_cast<Eigen::Index>(f));
    p.explained_variance = Eigen::Map<const Eigen::VectorXd>(var.data(), static_cast<Eigen::Index>(k));
    p.components.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(f));
    for (std::size_t r = 0; r < k; ++r) {
      if (rows[r].size() != f) throw ValidationError("pca: projector row length mismatch");
      for (std::size_t c = 0; c < f; ++c) {
        p.components(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("pca: malformed projector: ") + e.what());
  }
}

inline void save_projector(const PcaProjector& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot create " + path);
  out << to_json(p).dump() << "\n";
}

inline PcaProjector load_projector(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return projector_from_json(nlohmann::json::parse(buf.str()));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("pca: invalid JSON: ") + e.what());
  }
}

}  // namespace strconf
