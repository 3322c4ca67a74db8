#pragma once

// Structural descriptors of a hidden-state trajectory H (T x D):
//   spectral (48) = low-frequency DFT power (32) + normalized-Laplacian
//                   spectrum of the token similarity graph (16)
//   local    (6)  = displacement statistics
//   shape    (16) = normalized histogram of pairwise distances
// composed as u(H) in R^70 under global / local / two-scale granularity.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "strconf/error.hpp"
#include "strconf/fft.hpp"
#include "strconf/trajectory_io.hpp"

namespace strconf {

using StateMatrixD =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using StatesView = Eigen::Ref<const StateMatrixD>;

inline constexpr std::size_t kDftPad = 256;
inline constexpr std::size_t kDftFrequencies = 16;
inline constexpr std::size_t kLaplacianEigenvalues = 16;
inline constexpr std::size_t kShapeBins = 16;

inline constexpr std::size_t kFftFeatures = 2 * kDftFrequencies;                   // 32
inline constexpr std::size_t kSpectralFeatures = kFftFeatures + kLaplacianEigenvalues;  // 48
inline constexpr std::size_t kLocalFeatures = 6;
inline constexpr std::size_t kShapeFeatures = kShapeBins;
inline constexpr std::size_t kDescriptorSize =
    kSpectralFeatures + kLocalFeatures + kShapeFeatures;  // 70

// Column offsets of each family inside the flattened descriptor.
inline constexpr std::size_t kFftOffset = 0;
inline constexpr std::size_t kLaplacianOffset = kFftFeatures;
inline constexpr std::size_t kLocalOffset = kSpectralFeatures;
inline constexpr std::size_t kShapeOffset = kSpectralFeatures + kLocalFeatures;

inline constexpr double kDegreeFloor = 1e-12;
inline constexpr double kEigenSentinel = 2.0;

struct StructuralDescriptor {
  std::array<double, kSpectralFeatures> spectral{};
  std::array<double, kLocalFeatures> local{};
  std::array<double, kShapeFeatures> shape{};

  std::array<double, kDescriptorSize> flatten() const {
    std::array<double, kDescriptorSize> out{};
    std::copy(spectral.begin(), spectral.end(), out.begin());
    std::copy(local.begin(), local.end(), out.begin() + kLocalOffset);
    std::copy(shape.begin(), shape.end(), out.begin() + kShapeOffset);
    return out;
  }

  static StructuralDescriptor unflatten(const std::array<double, kDescriptorSize>& v) {
    StructuralDescriptor d;
    std::copy_n(v.begin(), kSpectralFeatures, d.spectral.begin());
    std::copy_n(v.begin() + kLocalOffset, kLocalFeatures, d.local.begin());
    std::copy_n(v.begin() + kShapeOffset, kShapeFeatures, d.shape.begin());
    return d;
  }

  friend bool operator==(const StructuralDescriptor&, const StructuralDescriptor&) = default;
};

enum class Granularity { global, local, two_scale };

inline std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::global: return "global";
    case Granularity::local: return "local";
    case Granularity::two_scale: return "two_scale";
  }
  return "?";
}

inline Granularity parse_granularity(std::string_view s) {
  if (s == "global") return Granularity::global;
  if (s == "local") return Granularity::local;
  if (s == "two_scale" || s == "two-scale") return Granularity::two_scale;
  throw ValidationError("unknown granularity mode '" + std::string(s) +
                        "' (expected global, local or two_scale)");
}

struct GranularityConfig {
  Granularity mode = Granularity::two_scale;
  std::size_t window = 5;
  std::size_t stride = 2;

  void validate() const {
    if (window < 2) throw ValidationError("window must be >= 2");
    if (stride < 1) throw ValidationError("stride must be >= 1");
  }
};

namespace detail {

inline void require_trajectory(const StatesView& h, std::string_view op) {
  if (h.rows() < 2) {
    throw ValidationError(std::string(op) + ": trajectory needs T >= 2, got T=" +
                          std::to_string(h.rows()));
  }
  if (h.cols() < 1) {
    throw ValidationError(std::string(op) + ": hidden dimension must be >= 1");
  }
  if (!h.allFinite()) {
    throw ValidationError(std::string(op) + ": non-finite hidden state");
  }
}

}  // namespace detail

/// Mean and max (over hidden dimensions) DFT power of frequencies 1..K of
/// each dimension's token series, zero-padded to `pad_to`. Layout is
/// [mean_1, max_1, ..., mean_K, max_K].
inline std::vector<double> fft_features(const StatesView& h,
                                        std::size_t pad_to = kDftPad,
                                        std::size_t frequencies = kDftFrequencies) {
  detail::require_trajectory(h, "fft_features");
  const auto rows = static_cast<std::size_t>(h.rows());
  const auto dims = static_cast<Eigen::Index>(h.cols());
  if (rows > pad_to) {
    throw ValidationError("fft_features: T=" + std::to_string(rows) +
                          " exceeds pad length " + std::to_string(pad_to));
  }
  if (frequencies == 0 || 2 * frequencies >= pad_to) {
    throw ValidationError("fft_features: need 1 <= K < pad_to/2");
  }

  // power(k-1, d) = |X_k[d]|^2 for k = 1..K
  Eigen::MatrixXd power(static_cast<Eigen::Index>(frequencies), dims);
  std::size_t log2_pad = 0;
  while ((std::size_t{1} << log2_pad) < pad_to) ++log2_pad;
  const bool use_fft =
      fft::is_power_of_two(pad_to) && rows * frequencies > pad_to * log2_pad;

  if (use_fft) {
    // Two real series per complex transform: z = a + ib gives
    // A_k = (Z_k + conj(Z_{n-k})) / 2 and B_k = (Z_k - conj(Z_{n-k})) / 2i.
    const fft::Radix2 transform(pad_to);
    std::vector<std::complex<double>> buf(pad_to);
    for (Eigen::Index d = 0; d < dims; d += 2) {
      const bool pair = d + 1 < dims;
      std::fill(buf.begin(), buf.end(), std::complex<double>{});
      for (std::size_t t = 0; t < rows; ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        buf[t] = {h(row, d), pair ? h(row, d + 1) : 0.0};
      }
      transform.forward(buf);
      for (std::size_t k = 1; k <= frequencies; ++k) {
        const auto z = buf[k];
        const auto zc = std::conj(buf[pad_to - k]);
        const double a_re = 0.5 * (z.real() + zc.real());
        const double a_im = 0.5 * (z.imag() + zc.imag());
        power(static_cast<Eigen::Index>(k - 1), d) = a_re * a_re + a_im * a_im;
        if (pair) {
          const double b_re = 0.5 * (z.imag() - zc.imag());
          const double b_im = -0.5 * (z.real() - zc.real());
          power(static_cast<Eigen::Index>(k - 1), d + 1) = b_re * b_re + b_im * b_im;
        }
      }
    }
  } else {
    // Only T samples are nonzero, so the K retained bins are two small
    // matrix products against the DFT basis restricted to those samples.
    Eigen::MatrixXd cos_basis(static_cast<Eigen::Index>(frequencies),
                              static_cast<Eigen::Index>(rows));
    Eigen::MatrixXd sin_basis(cos_basis.rows(), cos_basis.cols());
    for (std::size_t k = 1; k <= frequencies; ++k) {
      for (std::size_t t = 0; t < rows; ++t) {
        // reduce k*t mod pad first so the angle stays in [0, 2pi)
        const double angle = 2.0 * std::numbers::pi *
                             static_cast<double>((k * t) % pad_to) /
                             static_cast<double>(pad_to);
        cos_basis(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(t)) = std::cos(angle);
        sin_basis(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(t)) = std::sin(angle);
      }
    }
    const Eigen::MatrixXd re = cos_basis * h;
    const Eigen::MatrixXd im = sin_basis * h;
    power = re.cwiseAbs2() + im.cwiseAbs2();
  }

  std::vector<double> out(2 * frequencies);
  for (std::size_t k = 0; k < frequencies; ++k) {
    const auto row = power.row(static_cast<Eigen::Index>(k));
    out[2 * k] = row.sum() / static_cast<double>(dims);
    out[2 * k + 1] = row.maxCoeff();
  }
  return out;
}

/// Smallest `count` eigenvalues (ascending) of the symmetric normalized
/// Laplacian of the token graph with weights max(0, cos(h_i, h_j)).
/// Graphs with fewer than `count` nodes are padded with 2.0.
inline std::vector<double> laplacian_spectrum(const StatesView& h,
                                              std::size_t count = kLaplacianEigenvalues) {
  detail::require_trajectory(h, "laplacian_spectrum");
  const Eigen::Index n = h.rows();

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  w.selfadjointView<Eigen::Lower>().rankUpdate(h);
  w.triangularView<Eigen::StrictlyUpper>() = w.transpose().triangularView<Eigen::StrictlyUpper>();
  const Eigen::VectorXd norms = w.diagonal().cwiseSqrt();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j || norms(i) == 0.0 || norms(j) == 0.0) {
        w(i, j) = 0.0;
      } else {
        w(i, j) = std::max(0.0, w(i, j) / (norms(i) * norms(j)));
      }
    }
  }

  Eigen::VectorXd inv_sqrt_degree(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    inv_sqrt_degree(i) = 1.0 / std::sqrt(std::max(w.row(i).sum(), kDegreeFloor));
  }
  Eigen::MatrixXd lap =
      -(inv_sqrt_degree.asDiagonal() * w * inv_sqrt_degree.asDiagonal());
  lap.diagonal().array() += 1.0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ComputationError("laplacian_spectrum: eigensolver did not converge");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending

  std::vector<double> out(count, kEigenSentinel);
  const auto available = std::min<std::size_t>(count, static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < available; ++i) {
    out[i] = std::max(0.0, values(static_cast<Eigen::Index>(i)));
  }
  return out;
}

/// (path length, mean step, step variance, start-end distance,
///  mean per-dimension variance, centroid norm). Variances are population.
inline std::array<double, kLocalFeatures> local_variation(const StatesView& h) {
  detail::require_trajectory(h, "local_variation");
  const Eigen::Index n = h.rows();
  const double steps = static_cast<double>(n - 1);

  Eigen::VectorXd delta(n - 1);
  for (Eigen::Index t = 1; t < n; ++t) {
    delta(t - 1) = (h.row(t) - h.row(t - 1)).norm();
  }
  const double path = delta.sum();
  const double mean_step = path / steps;
  const double step_var = (delta.array() - mean_step).square().sum() / steps;
  const double start_end = (h.row(n - 1) - h.row(0)).norm();

  const Eigen::RowVectorXd centroid = h.colwise().mean();
  const double embed_var =
      (h.rowwise() - centroid).array().square().colwise().sum().mean() /
      static_cast<double>(n);

  return {path, mean_step, step_var, start_end, embed_var, centroid.norm()};
}

/// Histogram of the T(T-1)/2 pairwise distances, normalized by the largest
/// distance into `bins` equal bins on [0, 1] (last bin closed) and by the
/// number of pairs. All-identical states give (1, 0, ..., 0).
inline std::vector<double> shape_coherence(const StatesView& h,
                                           std::size_t bins = kShapeBins) {
  detail::require_trajectory(h, "shape_coherence");
  if (bins == 0) throw ValidationError("shape_coherence: bins must be >= 1");
  const Eigen::Index n = h.rows();

  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dist.push_back((h.row(i) - h.row(j)).norm());
    }
  }
  const double max_dist = *std::max_element(dist.begin(), dist.end());

  std::vector<double> hist(bins, 0.0);
  if (max_dist == 0.0) {
    hist[0] = 1.0;
    return hist;
  }
  std::vector<std::size_t> counts(bins, 0);
  for (double d : dist) {
    const auto idx = static_cast<std::size_t>(std::floor(d / max_dist * static_cast<double>(bins)));
    ++counts[std::min(idx, bins - 1)];
  }
  const double pairs = static_cast<double>(dist.size());
  for (std::size_t b = 0; b < bins; ++b) hist[b] = static_cast<double>(counts[b]) / pairs;
  return hist;
}

/// Start rows of the local windows for a trajectory of length `rows`.
/// Windows start at 0, stride, 2*stride, ... while they fit; a final window ending at
/// the last row is appended when the stride grid misses it. T <= window
/// yields the single full-length window (start 0, length T).
inline std::vector<std::size_t> window_starts(std::size_t rows, const GranularityConfig& cfg) {
  cfg.validate();
  if (rows <= cfg.window) return {0};
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + cfg.window <= rows; s += cfg.stride) starts.push_back(s);
  if (starts.back() + cfg.window != rows) starts.push_back(rows - cfg.window);
  return starts;
}

inline std::size_t window_length(std::size_t rows, const GranularityConfig& cfg) {
  return std::min(rows, cfg.window);
}

/// All three families on the full input.
inline StructuralDescriptor global_descriptor(const StatesView& h) {
  StructuralDescriptor d;
  const auto spec = fft_features(h);
  const auto lap = laplacian_spectrum(h);
  std::copy(spec.begin(), spec.end(), d.spectral.begin());
  std::copy(lap.begin(), lap.end(), d.spectral.begin() + kFftFeatures);
  d.local = local_variation(h);
  const auto shape = shape_coherence(h);
  std::copy(shape.begin(), shape.end(), d.shape.begin());
  return d;
}

inline StructuralDescriptor local_descriptor(const StatesView& h, const GranularityConfig& cfg) {
  const auto rows = static_cast<std::size_t>(h.rows());
  const auto starts = window_starts(rows, cfg);
  const auto len = static_cast<Eigen::Index>(window_length(rows, cfg));
  std::array<double, kDescriptorSize> sum{};
  for (std::size_t s : starts) {
    const auto part = global_descriptor(h.middleRows(static_cast<Eigen::Index>(s), len)).flatten();
    for (std::size_t i = 0; i < kDescriptorSize; ++i) sum[i] += part[i];
  }
  for (double& v : sum) v /= static_cast<double>(starts.size());
  return StructuralDescriptor::unflatten(sum);
}

/// u(H) under the requested granularity.
inline StructuralDescriptor descriptor(const StatesView& h, const GranularityConfig& cfg = {}) {
  cfg.validate();
  switch (cfg.mode) {
    case Granularity::global:
      return global_descriptor(h);
    case Granularity::local:
      return local_descriptor(h, cfg);
    case Granularity::two_scale: {
      const auto g = global_descriptor(h).flatten();
      const auto l = local_descriptor(h, cfg).flatten();
      std::array<double, kDescriptorSize> mix{};
      for (std::size_t i = 0; i < kDescriptorSize; ++i) mix[i] = 0.5 * (g[i] + l[i]);
      return StructuralDescriptor::unflatten(mix);
    }
  }
  throw ValidationError("unknown granularity mode");
}

inline StructuralDescriptor descriptor(const Trajectory& t, const GranularityConfig& cfg = {}) {
  const StateMatrixD h = t.states.cast<double>();
  return descriptor(h, cfg);
}

}  // namespace strconf
