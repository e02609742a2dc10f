#pragma once

// Radix-2 FFT, sufficient for power-of-two filter windows.
// Forward transform is unscaled; the inverse carries the 1/n factor.

#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "tomograd/core.hpp"

namespace tomograd {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

enum class FftDirection { forward, inverse };

inline void fft_1d(std::vector<std::complex<double>>& a, FftDirection dir) {
  const std::size_t n = a.size();
  check(is_pow2(n), "fft length must be a power of two");
  if (n == 1) return;

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  const double sign = (dir == FftDirection::forward) ? -1.0 : 1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / double(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (dir == FftDirection::inverse) {
    const double inv = 1.0 / double(n);
    for (auto& c : a) c *= inv;
  }
}

inline std::vector<std::complex<double>> fft_1d(
    const std::vector<std::complex<double>>& a, FftDirection dir) {
  auto copy = a;
  fft_1d(copy, dir);
  return copy;
}

}  // namespace tomograd
