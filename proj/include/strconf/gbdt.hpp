#pragma once

// Gradient-boosted regression trees with a binary logistic objective.
// Exact greedy split search, leaf-wise growth capped by max_leaves, no depth
// cap. Training is deterministic: equal-gain splits resolve to the lowest
// feature index, then the lowest threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "strconf/error.hpp"

namespace strconf {

using FeatureMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TreeNode {
  // Internal node: feature >= 0, samples with x[feature] <= threshold go left.
  // Leaf: feature == -1, `value` is the (unscaled) log-odds increment.
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double evaluate(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
  }

  std::size_t depth() const {
    if (nodes.empty()) return 0;
    std::size_t best = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      if (!nodes[i].is_leaf()) {
        stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
        stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
      }
    }
    return best;
  }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct TrainConfig {
  std::size_t n_trees = 200;
  double learning_rate = 0.05;
  std::size_t max_leaves = 31;
  std::size_t min_samples_leaf = 20;
  double l2_leaf = 1.0;
  std::uint64_t seed = 42;  // kept for reproducibility records; ties are resolved without it

  void validate() const {
    if (n_trees < 1) throw ValidationError("n_trees must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
    if (max_leaves < 2) throw ValidationError("max_leaves must be >= 2");
    if (min_samples_leaf < 1) throw ValidationError("min_samples_leaf must be >= 1");
    if (!(l2_leaf >= 0.0)) throw ValidationError("l2_leaf must be >= 0");
  }
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct ConfidenceModel {
  static constexpr int kFormatVersion = 1;

  std::vector<RegressionTree> trees;
  double base_score = 0.0;
  double learning_rate = 0.05;
  std::size_t n_features = 0;
  std::optional<std::vector<std::size_t>> feature_subset;

  double margin(std::span<const double> x) const {
    if (x.size() != n_features) {
      throw ValidationError("predict: expected " + std::to_string(n_features) +
                            " features, got " + std::to_string(x.size()));
    }
    double sum = 0.0;
    for (const auto& t : trees) sum += t.evaluate(x);
    return base_score + learning_rate * sum;
  }

  std::size_t max_depth() const {
    std::size_t d = 0;
    for (const auto& t : trees) d = std::max(d, t.depth());
    return d;
  }

  friend bool operator==(const ConfidenceModel&, const ConfidenceModel&) = default;
};

/// Confidence in (0, 1): sigmoid of the ensemble margin, clamped away from
/// the endpoints.
inline double predict(const ConfidenceModel& model, std::span<const double> x) {
  const double p = sigmoid(model.margin(x));
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

inline std::vector<double> predict_batch(const ConfidenceModel& model, const FeatureMatrix& x) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] =
        predict(model, std::span<const double>(x.row(i).data(), static_cast<std::size_t>(x.cols())));
  }
  return out;
}

inline double log_loss(std::span<const double> probs, std::span<const int> labels) {
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-15, 1.0 - 1e-15);
    sum -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return sum / static_cast<double>(probs.size());
}

struct TrainResult {
  ConfidenceModel model;
  std::vector<double> loss_per_round;  // training log-loss after each tree
};

namespace detail {

struct SplitCandidate {
  double gain = 0.0;
  std::int32_t feature = -1;
  double threshold = 0.0;
  bool valid() const { return feature >= 0; }
};

struct GrowingLeaf {
  std::int32_t node = 0;
  // One sorted sample list per active feature; every list holds the same
  // samples.
  std::vector<std::vector<std::uint32_t>> sorted;
  double grad = 0.0;
  double hess = 0.0;
  SplitCandidate best;
};

inline double leaf_objective(double g, double h, double l2) { return g * g / (h + l2); }

inline SplitCandidate find_split(const GrowingLeaf& leaf, const FeatureMatrix& x,
                                 std::span<const std::size_t> active,
                                 std::span<const double> grad, std::span<const double> hess,
                                 const TrainConfig& cfg) {
  SplitCandidate best;
  const std::size_t n = leaf.sorted.front().size();
  if (n < 2 * cfg.min_samples_leaf) return best;
  const double parent = leaf_objective(leaf.grad, leaf.hess, cfg.l2_leaf);

  for (std::size_t a = 0; a < active.size(); ++a) {
    const auto feature = static_cast<Eigen::Index>(active[a]);
    const auto& order = leaf.sorted[a];
    double gl = 0.0;
    double hl = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      gl += grad[order[i]];
      hl += hess[order[i]];
      const std::size_t n_left = i + 1;
      if (n_left < cfg.min_samples_leaf) continue;
      if (n - n_left < cfg.min_samples_leaf) break;
      const double lo = x(order[i], feature);
      const double hi = x(order[i + 1], feature);
      if (lo == hi) continue;
      const double gain = leaf_objective(gl, hl, cfg.l2_leaf) +
                          leaf_objective(leaf.grad - gl, leaf.hess - hl, cfg.l2_leaf) - parent;
      if (gain > best.gain) {
        double threshold = lo + 0.5 * (hi - lo);
        if (!(threshold < hi)) threshold = lo;
        best = {gain, static_cast<std::int32_t>(feature), threshold};
      }
    }
  }
  return best;
}

}  // namespace detail

/// Fits the ensemble. `feature_subset`, when given, restricts split search to
/// those columns; the model still consumes full rows of `features`.
inline TrainResult train_with_trace(const FeatureMatrix& features, std::span<const int> labels,
                                    const TrainConfig& cfg = {},
                                    std::optional<std::vector<std::size_t>> feature_subset = std::nullopt) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(features.rows());
  const auto n_features = static_cast<std::size_t>(features.cols());
  if (n < 2) throw ValidationError("train: need at least 2 samples");
  if (labels.size() != n) {
    throw ValidationError("train: " + std::to_string(n) + " rows vs " +
                          std::to_string(labels.size()) + " labels");
  }
  if (n_features == 0) throw ValidationError("train: no feature columns");
  if (!features.allFinite()) throw ValidationError("train: non-finite feature value");
  std::size_t n_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw ValidationError("train: labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(y);
  }
  if (n_pos == 0 || n_pos == n) {
    throw ValidationError("train: single-class labels; both classes are required");
  }

  std::vector<std::size_t> active;
  if (feature_subset) {
    active = *feature_subset;
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
    if (active.empty()) throw ValidationError("train: empty feature subset");
    if (active.back() >= n_features) {
      throw ValidationError("train: feature subset index " + std::to_string(active.back()) +
                            " >= n_features " + std::to_string(n_features));
    }
    feature_subset = active;
  } else {
    active.resize(n_features);
    std::iota(active.begin(), active.end(), std::size_t{0});
  }

  // Presorted sample order per active feature, ties by sample index.
  std::vector<std::vector<std::uint32_t>> presorted(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    auto& order = presorted[a];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    const auto f = static_cast<Eigen::Index>(active[a]);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t i, std::uint32_t j) {
      return features(i, f) < features(j, f);
    });
  }

  const double prior = static_cast<double>(n_pos) / static_cast<double>(n);
  TrainResult result;
  auto& model = result.model;
  model.base_score = std::log(prior / (1.0 - prior));
  model.learning_rate = cfg.learning_rate;
  model.n_features = n_features;
  model.feature_subset = feature_subset;

  std::vector<double> margin(n, model.base_score);
  std::vector<double> grad(n), hess(n), prob(n);
  std::vector<char> goes_left(n);

  for (std::size_t round = 0; round < cfg.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      prob[i] = sigmoid(margin[i]);
      grad[i] = prob[i] - static_cast<double>(labels[i]);
      hess[i] = prob[i] * (1.0 - prob[i]);
    }

    RegressionTree tree;
    tree.nodes.emplace_back();
    std::vector<detail::GrowingLeaf> leaves(1);
    leaves[0].sorted = presorted;
    leaves[0].grad = std::accumulate(grad.begin(), grad.end(), 0.0);
    leaves[0].hess = std::accumulate(hess.begin(), hess.end(), 0.0);
    leaves[0].best = detail::find_split(leaves[0], features, active, grad, hess, cfg);

    while (leaves.size() < cfg.max_leaves) {
      // Best-first: largest gain; equal gains go to the earliest-created node.
      std::size_t pick = leaves.size();
      for (std::size_t l = 0; l < leaves.size(); ++l) {
        if (!leaves[l].best.valid()) continue;
        if (pick == leaves.size() || leaves[l].best.gain > leaves[pick].best.gain ||
            (leaves[l].best.gain == leaves[pick].best.gain && leaves[l].node < leaves[pick].node)) {
          pick = l;
        }
      }
      if (pick == leaves.size()) break;

      detail::GrowingLeaf parent = std::move(leaves[pick]);
      const auto split = parent.best;
      for (std::uint32_t i : parent.sorted.front()) {
        goes_left[i] = features(i, split.feature) <= split.threshold ? 1 : 0;
      }
      detail::GrowingLeaf left, right;
      left.sorted.resize(active.size());
      right.sorted.resize(active.size());
      for (std::size_t a = 0; a < active.size(); ++a) {
        for (std::uint32_t i : parent.sorted[a]) {
          (goes_left[i] ? left.sorted[a] : right.sorted[a]).push_back(i);
        }
      }
      for (std::uint32_t i : left.sorted.front()) {
        left.grad += grad[i];
        left.hess += hess[i];
      }
      for (std::uint32_t i : right.sorted.front()) {
        right.grad += grad[i];
        right.hess += hess[i];
      }

      auto& node = tree.nodes[static_cast<std::size_t>(parent.node)];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = static_cast<std::int32_t>(tree.nodes.size());
      node.right = node.left + 1;
      left.node = node.left;
      right.node = node.right;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();

      left.best = detail::find_split(left, features, active, grad, hess, cfg);
      right.best = detail::find_split(right, features, active, grad, hess, cfg);
      leaves[pick] = std::move(left);
      leaves.push_back(std::move(right));
    }

    for (const auto& leaf : leaves) {
      const double value = -leaf.grad / (leaf.hess + cfg.l2_leaf);
      tree.nodes[static_cast<std::size_t>(leaf.node)].value = value;
      for (std::uint32_t i : leaf.sorted.front()) margin[i] += cfg.learning_rate * value;
    }
    model.trees.push_back(std::move(tree));

    for (std::size_t i = 0; i < n; ++i) prob[i] = sigmoid(margin[i]);
    result.loss_per_round.push_back(log_loss(prob, labels));
  }
  return result;
}

inline ConfidenceModel train(const FeatureMatrix& features, std::span<const int> labels,
                             const TrainConfig& cfg = {},
                             std::optional<std::vector<std::size_t>> feature_subset = std::nullopt) {
  return train_with_trace(features, labels, cfg, std::move(feature_subset)).model;
}

// Model file: JSON text, doubles in shortest round-trip form.

inline nlohmann::json to_json(const ConfidenceModel& m) {
  nlohmann::json j;
  j["version"] = ConfidenceModel::kFormatVersion;
  j["n_features"] = m.n_features;
  j["base_score"] = m.base_score;
  j["learning_rate"] = m.learning_rate;
  j["feature_subset"] = m.feature_subset ? nlohmann::json(*m.feature_subset) : nlohmann::json(nullptr);
  auto trees = nlohmann::json::array();
  for (const auto& t : m.trees) {
    auto nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) {
        nodes.push_back({{"leaf", n.value}});
      } else {
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold},
                         {"left", n.left}, {"right", n.right}});
      }
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  return j;
}

inline ConfidenceModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != ConfidenceModel::kFormatVersion) {
      throw ValidationError("model: unsupported version " + j.at("version").dump());
    }
    ConfidenceModel m;
    m.n_features = j.at("n_features").get<std::size_t>();
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    if (!j.at("feature_subset").is_null()) {
      m.feature_subset = j.at("feature_subset").get<std::vector<std::size_t>>();
    }
    for (const auto& jt : j.at("trees")) {
      RegressionTree t;
      for (const auto& jn : jt.at("nodes")) {
        TreeNode n;
        if (jn.contains("leaf")) {
          n.value = jn.at("leaf").get<double>();
        } else {
          n.feature = jn.at("feature").get<std::int32_t>();
          n.threshold = jn.at("threshold").get<double>();
          n.left = jn.at("left").get<std::int32_t>();
          n.right = jn.at("right").get<std::int32_t>();
        }
        t.nodes.push_back(n);
      }
      const auto count = static_cast<std::int32_t>(t.nodes.size());
      if (count == 0) throw ValidationError("model: empty tree");
      for (const auto& n : t.nodes) {
        if (n.is_leaf()) continue;
        if (static_cast<std::size_t>(n.feature) >= m.n_features) {
          throw ValidationError("model: feature index " + std::to_string(n.feature) +
                                " >= n_features");
        }
        if (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count) {
          throw ValidationError("model: child index out of range");
        }
      }
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model: malformed file: ") + e.what());
  }
}

inline std::string serialize_model(const ConfidenceModel& m) { return to_json(m).dump() + "\n"; }

inline ConfidenceModel parse_model(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model: invalid JSON: ") + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const ConfidenceModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot create " + path);
  out << serialize_model(m);
}

inline ConfidenceModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace strconf
