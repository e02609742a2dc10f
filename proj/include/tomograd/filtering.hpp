#pragma once

// Reconstruction filters and projection weight maps.
//
// Filters are real frequency-weight vectors over a zero-padded power-of-two
// window (at least twice the detector width).  Weights are in physical
// frequency units (cycles per length), so filtered rows approximate the
// continuous ramp-filtered projection independent of bin count.
//
// The band-limited ramp is built two ways: directly from |f_k|, and as the
// DFT of the classical discrete spatial kernel (which fixes the DC bias the
// plain ramp introduces on finite windows).

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "tomograd/core.hpp"
#include "tomograd/fft.hpp"
#include "tomograd/geometry.hpp"
#include "tomograd/image.hpp"

namespace tomograd {

struct Filter1D {
  std::size_t n_bins = 0;     // detector bins the filter was built for
  std::size_t padded_n = 0;   // power-of-two FFT window
  double spacing = 1.0;       // detector bin pitch
  std::vector<double> weights;  // real frequency weights, length padded_n
};

inline std::size_t filter_window(std::size_t n_bins) {
  check(n_bins >= 1, "filter needs at least one detector bin");
  return next_pow2(2 * n_bins);
}

// |f_k| with f_k = k / (padded_n * spacing), mirrored above Nyquist
inline std::vector<double> ramp_weights(std::size_t padded_n, double spacing) {
  check(is_pow2(padded_n), "filter window must be a power of two");
  check(spacing > 0.0, "detector spacing must be positive");
  std::vector<double> w(padded_n, 0.0);
  for (std::size_t k = 0; k <= padded_n / 2; ++k) {
    const double f = double(k) / (double(padded_n) * spacing);
    w[k] = f;
    if (k != 0) w[padded_n - k] = f;
  }
  return w;
}

inline Filter1D ramp_filter(std::size_t n_bins, double spacing,
                            std::size_t padded_n = 0) {
  const std::size_t padded = padded_n ? padded_n : filter_window(n_bins);
  check(padded >= n_bins, "filter window is smaller than the detector row");
  return {n_bins, padded, spacing, ramp_weights(padded, spacing)};
}

// classical discrete ramp kernel sample at offset m
inline double ramlak_spatial(long m, double spacing) {
  if (m == 0) return 1.0 / (4.0 * spacing * spacing);
  if (m % 2 == 0) return 0.0;
  const double mpi = double(m) * std::numbers::pi * spacing;
  return -1.0 / (mpi * mpi);
}

// real DFT of the wrap-around embedded spatial kernel, times the spacing
inline std::vector<double> ramlak_weights(std::size_t padded_n, double spacing) {
  check(is_pow2(padded_n), "filter window must be a power of two");
  check(spacing > 0.0, "detector spacing must be positive");
  std::vector<std::complex<double>> kernel(padded_n, 0.0);
  kernel[0] = ramlak_spatial(0, spacing);
  for (std::size_t m = 1; m <= padded_n / 2; ++m) {
    const double v = ramlak_spatial(long(m), spacing);
    kernel[m] = v;
    kernel[padded_n - m] = v;  // negative offsets wrap around
  }
  fft_1d(kernel, FftDirection::forward);
  std::vector<double> w(padded_n);
  for (std::size_t k = 0; k < padded_n; ++k) w[k] = kernel[k].real() * spacing;
  return w;
}

inline Filter1D ramlak_filter(std::size_t n_bins, double spacing,
                              std::size_t padded_n = 0) {
  const std::size_t padded = padded_n ? padded_n : filter_window(n_bins);
  check(padded >= n_bins, "filter window is smaller than the detector row");
  return {n_bins, padded, spacing, ramlak_weights(padded, spacing)};
}

namespace detail {

// filter contiguous rows of length n in place
template <typename T>
void filter_rows(T* data, std::size_t n_rows, std::size_t n,
                 const Filter1D& filt) {
  check(filt.weights.size() == filt.padded_n && is_pow2(filt.padded_n),
        "filter window is inconsistent with its weight vector");
  check(filt.padded_n >= n, "filter window is smaller than the detector row");
  std::vector<std::complex<double>> buf(filt.padded_n);
  for (std::size_t r = 0; r < n_rows; ++r) {
    T* row = data + r * n;
    for (std::size_t j = 0; j < n; ++j) buf[j] = double(row[j]);
    for (std::size_t j = n; j < filt.padded_n; ++j) buf[j] = 0.0;
    fft_1d(buf, FftDirection::forward);
    for (std::size_t k = 0; k < filt.padded_n; ++k) buf[k] *= filt.weights[k];
    fft_1d(buf, FftDirection::inverse);
    for (std::size_t j = 0; j < n; ++j) row[j] = T(buf[j].real());
  }
}

}  // namespace detail

// Filter every detector row of the stack (cone data: along u, per v row).
template <typename T>
Sinogram<T> apply_filter(const Sinogram<T>& sino, const Filter1D& filt) {
  const std::size_t n = sino.is_cone() ? sino.detector2d.n_u : sino.detector1d.n_bins;
  const double ds = sino.is_cone() ? sino.detector2d.spacing_u : sino.detector1d.spacing;
  check(filt.n_bins == n, "filter was built for a different detector width");
  check(std::abs(filt.spacing - ds) <= 1e-12 * std::max(1.0, std::abs(ds)),
        "filter spacing does not match the detector spacing");
  Sinogram<T> out = sino;
  detail::filter_rows(out.data.data(), out.data.size() / n, n, filt);
  return out;
}

// --- projection weight maps -------------------------------------------------

// Shape (fastest axis first) either equals the sinogram shape or the
// detector shape alone (the latter broadcasts over views).
struct WeightMap {
  std::vector<std::size_t> shape;
  std::vector<double> data;
};

template <typename T>
Sinogram<T> apply_weights(const Sinogram<T>& sino, const WeightMap& map) {
  const auto ss = sino.shape();
  Sinogram<T> out = sino;
  if (map.shape == ss) {
    for (std::size_t i = 0; i < out.data.size(); ++i)
      out.data[i] = T(double(out.data[i]) * map.data[i]);
    return out;
  }
  const std::vector<std::size_t> det_shape(ss.begin(), ss.end() - 1);
  check(map.shape == det_shape,
        "weight map shape matches neither the sinogram nor its detector");
  const std::size_t per_view = map.data.size();
  for (std::size_t i = 0; i < sino.n_projections; ++i)
    for (std::size_t j = 0; j < per_view; ++j)
      out.data[i * per_view + j] =
          T(double(out.data[i * per_view + j]) * map.data[j]);
  return out;
}

// flat-detector cosine weights: SID / sqrt(SID^2 + u^2 [+ v^2])
inline WeightMap cosine_weights(const FanGeometry& geo) {
  WeightMap m;
  m.shape = {geo.detector.n_bins};
  m.data.resize(geo.detector.n_bins);
  for (std::size_t j = 0; j < geo.detector.n_bins; ++j) {
    const double u = geo.detector.origin + double(j) * geo.detector.spacing;
    m.data[j] = geo.sid / std::sqrt(geo.sid * geo.sid + u * u);
  }
  return m;
}

inline WeightMap cosine_weights(const ConeGeometry& geo) {
  WeightMap m;
  m.shape = {geo.detector.n_u, geo.detector.n_v};
  m.data.resize(geo.detector.n_u * geo.detector.n_v);
  for (std::size_t iv = 0; iv < geo.detector.n_v; ++iv) {
    const double v = geo.detector.origin_v + double(iv) * geo.detector.spacing_v;
    for (std::size_t iu = 0; iu < geo.detector.n_u; ++iu) {
      const double u = geo.detector.origin_u + double(iu) * geo.detector.spacing_u;
      m.data[iv * geo.detector.n_u + iu] =
          geo.sid / std::sqrt(geo.sid * geo.sid + u * u + v * v);
    }
  }
  return m;
}

namespace detail {

// Short-scan redundancy weight for source angle beta (measured from scan
// start) and ray fan angle gamma.  `delta` is the half fan angle the scan
// range implies: range = pi + 2*delta, so conjugate rays (beta + pi + 2*gamma)
// land in the opposite smooth ramp and the pair sums to exactly 1.
inline double parker_weight(double beta, double gamma, double delta,
                            double range) {
  constexpr double tiny = 1e-12;
  if (delta - gamma > tiny && beta < 2.0 * (delta - gamma)) {
    const double s = std::sin(0.25 * std::numbers::pi * beta / (delta - gamma));
    return s * s;
  }
  if (delta + gamma > tiny && beta > range - 2.0 * (delta + gamma)) {
    const double s =
        std::sin(0.25 * std::numbers::pi * (range - beta) / (delta + gamma));
    return s * s;
  }
  return 1.0;
}

inline double parker_delta(double range, double fan_half_angle) {
  constexpr double eps = 1e-6;
  check(range + eps >= std::numbers::pi + 2.0 * fan_half_angle,
        "scan range is too short for redundancy weighting (need pi + fan angle)");
  check(range <= 2.0 * std::numbers::pi + eps,
        "redundancy weighting expects at most a full turn");
  return 0.5 * (range - std::numbers::pi);
}

}  // namespace detail

inline WeightMap parker_weights(const FanGeometry& geo) {
  const double delta = detail::parker_delta(geo.angular_range, geo.fan_half_angle());
  WeightMap m;
  m.shape = {geo.detector.n_bins, geo.n_projections};
  m.data.resize(geo.n_projections * geo.detector.n_bins);
  for (std::size_t i = 0; i < geo.n_projections; ++i) {
    const double beta = geo.angles[i] - geo.angles[0];
    for (std::size_t j = 0; j < geo.detector.n_bins; ++j) {
      const double u = geo.detector.origin + double(j) * geo.detector.spacing;
      const double gamma = std::atan(u / geo.sdd);
      m.data[i * geo.detector.n_bins + j] =
          detail::parker_weight(beta, gamma, delta, geo.angular_range);
    }
  }
  return m;
}

// cone beam: weight depends on the transaxial fan angle only, so every
// detector row of a view carries the same profile
inline WeightMap parker_weights(const ConeGeometry& geo) {
  const double delta = detail::parker_delta(geo.angular_range, geo.fan_half_angle());
  const std::size_t nu = geo.detector.n_u, nv = geo.detector.n_v;
  WeightMap m;
  m.shape = {nu, nv, geo.n_projections};
  m.data.resize(geo.n_projections * nv * nu);
  for (std::size_t i = 0; i < geo.n_projections; ++i) {
    const double beta = geo.angles[i] - geo.angles[0];
    for (std::size_t iu = 0; iu < nu; ++iu) {
      const double u = geo.detector.origin_u + double(iu) * geo.detector.spacing_u;
      const double gamma = std::atan(u / geo.sdd);
      const double w = detail::parker_weight(beta, gamma, delta, geo.angular_range);
      for (std::size_t iv = 0; iv < nv; ++iv)
        m.data[(i * nv + iv) * nu + iu] = w;
    }
  }
  return m;
}

}  // namespace tomograd
