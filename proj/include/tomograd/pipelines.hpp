#pragma once

// Reconstruction pipelines and the shipped experiments.
//
// Filtered backprojection composes the module operators:
//   x = BP( F^-1 diag(K) F p ) * (pi / n_projections)
// with K a band-limited ramp in physical frequency units.  Filter weights
// built by ramp_filter/ramlak_filter already include the detector-pitch
// quadrature of the underlying convolution, so the pipeline constant is the
// angular quadrature alone; adding another pitch factor would scale
// reconstructions by the pitch.  A unit disk comes back at value 1 for any
// detector spacing.
//
// The cone-beam short-scan pipeline weights each projection with cosine and
// redundancy maps before row-wise filtering.  Its constant uses the actual
// view spacing (angular_range / n) and carries the magnification factor
// SDD/SID that row-wise filtering in physical detector coordinates
// introduces.
//
// Experiments mirror the pipeline compositions as graph programs so their
// parameters (filter weights, the reconstruction itself) can be trained.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "tomograd/core.hpp"
#include "tomograd/filtering.hpp"
#include "tomograd/geometry.hpp"
#include "tomograd/graph.hpp"
#include "tomograd/image.hpp"
#include "tomograd/phantom.hpp"
#include "tomograd/projector.hpp"

namespace tomograd {

enum class FilterKind { ramp, ramlak };

inline Filter1D make_filter(FilterKind kind, std::size_t n_bins, double spacing,
                            std::size_t padded_n = 0) {
  return kind == FilterKind::ramp ? ramp_filter(n_bins, spacing, padded_n)
                                  : ramlak_filter(n_bins, spacing, padded_n);
}

template <typename T>
Image<T> fbp_reconstruct(const Sinogram<T>& sino, const ParallelGeometry& geo,
                         const Filter1D& filt) {
  Image<T> img = back_project(apply_filter(sino, filt), geo);
  const double c = std::numbers::pi / double(geo.n_projections);
  for (auto& v : img.data) v = T(double(v) * c);
  return img;
}

template <typename T>
Image<T> fbp_reconstruct(const Sinogram<T>& sino, const ParallelGeometry& geo,
                         FilterKind kind = FilterKind::ramlak) {
  return fbp_reconstruct(sino, geo,
                         make_filter(kind, geo.detector.n_bins, geo.detector.spacing));
}

// Cone-beam filtered backprojection: cosine weights, optional short-scan
// redundancy weights, row-wise Ram-Lak, weighted backprojection.  The
// constant (range/n)·(SDD/SID) makes amplitudes physical: the filter
// already carries the detector-pitch quadrature, and SDD/SID maps
// filtering done in physical detector coordinates to the iso-center scale
// the backprojection integral wants.  Redundancy weights make conjugate
// rays count once; without them every ray counts twice (full-scan
// convention), hence 1/2.
template <typename T>
Image<T> fdk_reconstruct(const Sinogram<T>& sino, const ConeGeometry& geo,
                         bool use_parker = true) {
  Sinogram<T> weighted = apply_weights(sino, cosine_weights(geo));
  if (use_parker) weighted = apply_weights(weighted, parker_weights(geo));
  const Filter1D filt = ramlak_filter(geo.detector.n_u, geo.detector.spacing_u);
  Image<T> img = back_project(apply_filter(weighted, filt), geo);
  const double c = geo.angular_range / double(geo.n_projections) *
                   (geo.sdd / geo.sid) * (use_parker ? 1.0 : 0.5);
  for (auto& v : img.data) v = T(double(v) * c);
  return img;
}

// --- noise ------------------------------------------------------------------

namespace detail {

// Box-Muller on explicit mt19937_64 draws; identical streams on every
// platform, unlike std::normal_distribution.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_) {
      have_ = false;
      return cached_;
    }
    const double u1 = (double(rng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = double(rng_() >> 11) * 0x1.0p-53;          // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    have_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 rng_;
  bool have_ = false;
  double cached_ = 0.0;
};

}  // namespace detail

// Additive white noise with sigma = relative_std * max(sino).
template <typename T>
Sinogram<T> add_gaussian_noise(const Sinogram<T>& sino, double relative_std,
                               std::uint64_t seed) {
  check(relative_std >= 0.0, "noise level must be non-negative");
  if (relative_std == 0.0) return sino;
  double peak = 0.0;
  for (auto v : sino.data) peak = std::max(peak, double(v));
  const double sigma = relative_std * peak;
  detail::GaussianSource gauss(seed);
  Sinogram<T> out = sino;
  for (auto& v : out.data) v = T(double(v) + sigma * gauss.next());
  return out;
}

// --- experiment configuration ------------------------------------------------

struct ExperimentConfig {
  std::string phantom = "shepp-logan";
  double noise_relative_std = 0.0;
  double learning_rate = 1e-3;
  std::size_t iterations = 100;
  double tv_lambda = 0.0;
  std::uint64_t seed = 1337;
  std::size_t filter_window = 0;  // FFT window for learned filters; 0 = default
};

template <typename T = double>
Image<T> make_phantom_2d(const std::string& name, const VolumeSpec& vol) {
  if (name == "shepp-logan") return shepp_logan_2d<T>(vol);
  if (name == "disk")
    return disk_phantom<T>(vol, 0.4 * 2.0 * fov_half_extent(vol), 1.0);
  throw Error("unknown phantom: " + name);
}

inline void check_converging(double loss, std::size_t iteration) {
  if (!std::isfinite(loss))
    throw Error("optimization diverged at iteration " + std::to_string(iteration) +
                " (loss is not finite); lower the learning rate");
}

// --- cone-beam short-scan experiment -----------------------------------------

struct FdkResult {
  Image<> phantom;
  Sinogram<> sinogram;
  Image<> reconstruction;
};

inline FdkResult experiment_fdk_short_scan(const ConeGeometry& geo,
                                           const ExperimentConfig& cfg,
                                           bool use_parker = true) {
  FdkResult r;
  check(cfg.phantom == "shepp-logan", "cone-beam experiment expects the head phantom");
  r.phantom = shepp_logan_3d(geo.volume);
  r.sinogram = forward_project(r.phantom, geo);
  if (cfg.noise_relative_std > 0.0)
    r.sinogram = add_gaussian_noise(r.sinogram, cfg.noise_relative_std, cfg.seed);
  r.reconstruction = fdk_reconstruct(r.sinogram, geo, use_parker);
  return r;
}

// --- reconstruction-filter learning -------------------------------------------

struct FilterLearningResult {
  std::vector<double> loss_history;      // iterations + 1 entries
  std::vector<double> distance_history;  // |K - ramlak| / |ramp - ramlak|
  std::vector<double> learned_weights;
  Filter1D ramp_init;
  Filter1D ramlak_reference;
  Image<> reconstruction;
};

// Train frequency weights, initialized to the plain ramp, so that filtered
// backprojection of a known phantom's sinogram reproduces the Ram-Lak-filtered
// reconstruction of the same data.
inline FilterLearningResult experiment_learn_filter(const ParallelGeometry& geo,
                                                    const ExperimentConfig& cfg) {
  FilterLearningResult r;
  Image<> phantom = make_phantom_2d<double>(cfg.phantom, geo.volume);
  Sinogram<> sino = forward_project(phantom, geo);
  if (cfg.noise_relative_std > 0.0)
    sino = add_gaussian_noise(sino, cfg.noise_relative_std, cfg.seed);

  r.ramp_init =
      ramp_filter(geo.detector.n_bins, geo.detector.spacing, cfg.filter_window);
  r.ramlak_reference = ramlak_filter(geo.detector.n_bins, geo.detector.spacing,
                                     cfg.filter_window);
  const std::size_t padded = r.ramp_init.padded_n;

  double gap = 0.0;
  for (std::size_t k = 0; k < padded; ++k) {
    const double d = r.ramp_init.weights[k] - r.ramlak_reference.weights[k];
    gap += d * d;
  }
  gap = std::sqrt(gap);

  // Supervision target: the same pipeline evaluated with the Ram-Lak weights.
  // The loss is a quadratic in K whose minimum sits exactly at the Ram-Lak
  // filter (zero loss), so descent from the ramp moves toward it.
  Image<> reference = fbp_reconstruct(sino, geo, r.ramlak_reference);

  Graph g;
  const NodeId p = g.input(sino.shape());
  const NodeId K =
      g.parameter(Tensor<>({padded}, r.ramp_init.weights), /*trainable=*/true);
  const NodeId target =
      g.parameter(reference.tensor(), /*trainable=*/false);
  const NodeId filtered = g.fourier_filter(p, K, padded);
  const NodeId bp = g.backproject(filtered, geo);
  const NodeId recon =
      g.scale(bp, std::numbers::pi / double(geo.n_projections));
  const NodeId loss = g.l2_loss(recon, target);

  const std::map<NodeId, Tensor<>> feeds{{p, sino.tensor()}};
  auto record = [&](const Graph& gr) {
    r.loss_history.push_back(gr.value(loss).scalar_value());
    double d2 = 0.0;
    const auto& w = gr.node(K).value.data;
    for (std::size_t k = 0; k < padded; ++k) {
      const double d = w[k] - r.ramlak_reference.weights[k];
      d2 += d * d;
    }
    r.distance_history.push_back(gap > 0.0 ? std::sqrt(d2) / gap : 0.0);
  };

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    g.forward(feeds);
    record(g);
    check_converging(r.loss_history.back(), it);
    const auto grads = g.backward(loss);
    gradient_descent_step(g, grads, cfg.learning_rate);
  }
  g.forward(feeds);
  record(g);
  check_converging(r.loss_history.back(), cfg.iterations);

  r.learned_weights = g.node(K).value.data;
  Image<> rec(geo.volume);
  rec.data = g.value(recon).data;
  r.reconstruction = rec;
  return r;
}

// --- iterative reconstruction with a total-variation prior --------------------

struct TvResult {
  Image<> phantom;
  Sinogram<> noisy_sinogram;
  Image<> reconstruction;       // trained image parameter
  Image<> fbp_reference;        // filtered backprojection of the same data
  std::vector<double> loss_history;
};

// min_x |Ax - p|^2 + lambda * TV(x), plain gradient descent from zero
inline std::pair<Image<>, std::vector<double>> tv_reconstruct(
    const Sinogram<>& sino, const ParallelGeometry& geo,
    const ExperimentConfig& cfg) {
  Graph g;
  const NodeId x = g.parameter(Tensor<>(geo.volume.shape), /*trainable=*/true);
  const NodeId p = g.input(sino.shape());
  const NodeId fp = g.forward_project(x, geo);
  const NodeId data_term = g.l2_loss(fp, p);
  const NodeId loss = g.add(data_term, g.scale(g.tv_loss(x), cfg.tv_lambda));

  std::vector<double> history;
  const std::map<NodeId, Tensor<>> feeds{{p, sino.tensor()}};
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    g.forward(feeds);
    history.push_back(g.value(loss).scalar_value());
    check_converging(history.back(), it);
    const auto grads = g.backward(loss);
    gradient_descent_step(g, grads, cfg.learning_rate);
  }
  g.forward(feeds);
  history.push_back(g.value(loss).scalar_value());
  check_converging(history.back(), cfg.iterations);

  Image<> rec(geo.volume);
  rec.data = g.node(x).value.data;
  return {std::move(rec), std::move(history)};
}

inline TvResult experiment_iterative_tv(const ParallelGeometry& geo,
                                        const ExperimentConfig& cfg) {
  TvResult r;
  r.phantom = make_phantom_2d<double>(cfg.phantom, geo.volume);
  Sinogram<> sino = forward_project(r.phantom, geo);
  r.noisy_sinogram = add_gaussian_noise(sino, cfg.noise_relative_std, cfg.seed);
  r.fbp_reference = fbp_reconstruct(r.noisy_sinogram, geo, FilterKind::ramlak);
  auto [rec, history] = tv_reconstruct(r.noisy_sinogram, geo, cfg);
  r.reconstruction = std::move(rec);
  r.loss_history = std::move(history);
  return r;
}

}  // namespace tomograd
