#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace strconf::fft {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Precomputed iterative radix-2 transform of a fixed power-of-two size.
class Radix2 {
 public:
  explicit Radix2(std::size_t n) : n_(n), twiddle_(n / 2), bitrev_(n) {
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) {
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      }
      bitrev_[i] = r;
    }
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) /
                           static_cast<double>(n);
      twiddle_[k] = {std::cos(angle), std::sin(angle)};
    }
  }

  std::size_t size() const { return n_; }

  /// In-place forward DFT: X_k = sum_t x_t exp(-2 pi i k t / n).
  void forward(std::span<std::complex<double>> data) const {
    for (std::size_t i = 0; i < n_; ++i) {
      if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t step = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t j = 0; j < half; ++j) {
          const auto w = twiddle_[j * step];
          const auto u = data[start + j];
          const auto x = data[start + j + half];
          // plain complex product; operator* takes the slow Annex G path
          const std::complex<double> v{x.real() * w.real() - x.imag() * w.imag(),
                                       x.real() * w.imag() + x.imag() * w.real()};
          data[start + j] = u + v;
          data[start + j + half] = u - v;
        }
      }
    }
  }

 private:
  std::size_t n_;
  std::vector<std::complex<double>> twiddle_;
  std::vector<std::size_t> bitrev_;
};

}  // namespace strconf::fft
