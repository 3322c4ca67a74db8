#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "strconf/error.hpp"

namespace strconf::metrics {

struct EvalReport {
  double auroc = 0.0;
  double aupr = 0.0;
  double brier = 0.0;
  double ece = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t ece_bins = 10;
  bool calibration = true;  // false when scores are not probabilities; brier/ece are NaN
};

namespace detail {

inline void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError("metrics: " + std::to_string(scores.size()) + " scores vs " +
                          std::to_string(labels.size()) + " labels");
  }
  if (scores.empty()) throw ValidationError("metrics: empty input");
  for (int y : labels) {
    if (y != 0 && y != 1) throw ValidationError("metrics: labels must be 0 or 1");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw ValidationError("metrics: non-finite score");
  }
}

inline void check_probabilities(std::span<const double> scores) {
  for (double s : scores) {
    if (s < 0.0 || s > 1.0) {
      throw ValidationError("metrics: score " + std::to_string(s) + " outside [0, 1]");
    }
  }
}

inline std::size_t count_positives(std::span<const int> labels) {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

// Indices ordered by descending score; ties keep input order.
inline std::vector<std::size_t> order_descending(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace detail

/// Mann-Whitney AUROC with half credit for ties, via midranks.
inline double auroc(std::span<const double> scores, std::span<const int> labels) {
  detail::check_inputs(scores, labels);
  const std::size_t n_pos = detail::count_positives(labels);
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw ValidationError("auroc: single-class labels (" + std::to_string(n_pos) +
                          " positive, " + std::to_string(n_neg) + " negative)");
  }

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of doubled midranks of positives keeps everything integral.
  std::size_t rank_sum_x2 = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      pos_in_group += static_cast<std::size_t>(labels[idx[j]]);
      ++j;
    }
    // ranks i+1..j, doubled midrank = i + 1 + j
    rank_sum_x2 += pos_in_group * (i + 1 + j);
    i = j;
  }
  const double u = 0.5 * static_cast<double>(rank_sum_x2) -
                   0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

/// Average precision; tied scores form one group sharing the precision
/// reached at the end of the group.
inline double aupr(std::span<const double> scores, std::span<const int> labels) {
  detail::check_inputs(scores, labels);
  const std::size_t n_pos = detail::count_positives(labels);
  if (n_pos == 0) throw ValidationError("aupr: no positive labels");

  const auto idx = detail::order_descending(scores);
  double ap = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      pos_in_group += static_cast<std::size_t>(labels[idx[j]]);
      ++j;
    }
    tp += pos_in_group;
    seen = j;
    if (pos_in_group > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(seen);
      ap += static_cast<double>(pos_in_group) / static_cast<double>(n_pos) * precision;
    }
    i = j;
  }
  return ap;
}

inline double brier(std::span<const double> scores, std::span<const int> labels) {
  detail::check_inputs(scores, labels);
  detail::check_probabilities(scores);
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double diff = scores[i] - static_cast<double>(labels[i]);
    sum += diff * diff;
  }
  return sum / static_cast<double>(scores.size());
}

/// Equal-width-bin expected calibration error; a score of exactly 1 falls
/// in the last bin.
inline double ece(std::span<const double> scores, std::span<const int> labels,
                  std::size_t bins = 10) {
  if (bins < 1) throw ValidationError("ece: bins must be >= 1");
  detail::check_inputs(scores, labels);
  detail::check_probabilities(scores);

  std::vector<double> conf_sum(bins, 0.0);
  std::vector<double> pos(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto b = static_cast<std::size_t>(std::floor(scores[i] * static_cast<double>(bins)));
    b = std::min(b, bins - 1);
    conf_sum[b] += scores[i];
    pos[b] += static_cast<double>(labels[i]);
    ++count[b];
  }
  const double n = static_cast<double>(scores.size());
  double total = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double nb = static_cast<double>(count[b]);
    total += nb / n * std::abs(pos[b] / nb - conf_sum[b] / nb);
  }
  return total;
}

/// Ranking metrics always; calibration metrics only when every score lies in
/// [0, 1]. Otherwise (e.g. negated distances) `calibration` is false.
inline EvalReport evaluate(std::span<const double> scores, std::span<const int> labels,
                           std::size_t ece_bins = 10) {
  EvalReport r;
  r.ece_bins = ece_bins;
  r.auroc = auroc(scores, labels);
  r.aupr = aupr(scores, labels);
  r.calibration = std::all_of(scores.begin(), scores.end(), [](double s) { return s >= 0.0 && s <= 1.0; });
  if (r.calibration) {
    r.brier = brier(scores, labels);
    r.ece = ece(scores, labels, ece_bins);
  } else {
    r.brier = r.ece = std::numeric_limits<double>::quiet_NaN();
  }
  r.n_pos = detail::count_positives(labels);
  r.n_neg = labels.size() - r.n_pos;
  return r;
}

}  // namespace strconf::metrics
