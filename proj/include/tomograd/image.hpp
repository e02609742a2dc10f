#pragma once

// Dense containers for volumes and projection data.
//
// Axis convention: shape/spacing/origin lists are in world-axis order
// (x, y[, z]).  Memory is x-fastest: 2D data[iy*nx+ix], 3D
// data[(iz*ny+iy)*nx+ix] (slice-major).  `origin` is the world position of
// the first element center; the default places the element-center grid
// symmetric about the world origin.

#include <cstddef>
#include <vector>

#include "tomograd/core.hpp"

namespace tomograd {

struct VolumeSpec {
  std::vector<std::size_t> shape;   // (nx, ny) or (nx, ny, nz)
  std::vector<double> spacing;      // element pitch per axis, > 0
  std::vector<double> origin;       // world position of first element center

  static VolumeSpec centered(std::vector<std::size_t> shape,
                             std::vector<double> spacing) {
    VolumeSpec s;
    s.shape = std::move(shape);
    s.spacing = std::move(spacing);
    s.validate_shape();
    for (std::size_t a = 0; a < s.shape.size(); ++a)
      s.origin.push_back(-0.5 * double(s.shape[a] - 1) * s.spacing[a]);
    return s;
  }

  void validate_shape() const {
    check(shape.size() == 2 || shape.size() == 3, "volume must be 2D or 3D");
    check(spacing.size() == shape.size(), "spacing rank mismatch");
    for (auto n : shape) check(n >= 1, "volume shape entries must be >= 1");
    for (auto s : spacing) check(s > 0.0, "volume spacing must be positive");
  }

  void validate() const {
    validate_shape();
    check(origin.size() == shape.size(), "origin rank mismatch");
  }

  std::size_t dims() const { return shape.size(); }
  std::size_t element_count() const {
    std::size_t n = 1;
    for (auto v : shape) n *= v;
    return n;
  }
  // physical extent of axis a (element count times pitch)
  double extent(std::size_t a) const { return double(shape[a]) * spacing[a]; }
};

// 1D detector line (parallel / fan beam)
struct Detector1D {
  std::size_t n_bins = 0;
  double spacing = 1.0;
  double origin = 0.0;  // coordinate of first bin center along the detector axis

  static Detector1D centered(std::size_t n, double spacing) {
    check(n >= 1, "detector needs at least one bin");
    check(spacing > 0.0, "detector spacing must be positive");
    return {n, spacing, -0.5 * double(n - 1) * spacing};
  }
};

// 2D flat panel (cone beam): u = columns, v = rows, u fastest in memory
struct Detector2D {
  std::size_t n_u = 0, n_v = 0;
  double spacing_u = 1.0, spacing_v = 1.0;
  double origin_u = 0.0, origin_v = 0.0;

  static Detector2D centered(std::size_t n_u, std::size_t n_v, double du, double dv) {
    check(n_u >= 1 && n_v >= 1, "detector needs at least one pixel per axis");
    check(du > 0.0 && dv > 0.0, "detector spacing must be positive");
    return {n_u, n_v, du, dv,
            -0.5 * double(n_u - 1) * du, -0.5 * double(n_v - 1) * dv};
  }
};

template <typename T = double>
struct Image {
  VolumeSpec spec;
  std::vector<T> data;

  Image() = default;
  explicit Image(VolumeSpec s) : spec(std::move(s)) {
    spec.validate();
    data.assign(spec.element_count(), T(0));
  }

  std::size_t dims() const { return spec.dims(); }
  std::size_t nx() const { return spec.shape[0]; }
  std::size_t ny() const { return spec.shape[1]; }
  std::size_t nz() const { return spec.dims() == 3 ? spec.shape[2] : 1; }

  T& at(std::size_t ix, std::size_t iy) { return data[iy * nx() + ix]; }
  T at(std::size_t ix, std::size_t iy) const { return data[iy * nx() + ix]; }
  T& at(std::size_t ix, std::size_t iy, std::size_t iz) {
    return data[(iz * ny() + iy) * nx() + ix];
  }
  T at(std::size_t ix, std::size_t iy, std::size_t iz) const {
    return data[(iz * ny() + iy) * nx() + ix];
  }

  // world coordinate of an element center along axis a
  double coord(std::size_t a, std::size_t idx) const {
    return spec.origin[a] + double(idx) * spec.spacing[a];
  }

  Tensor<T> tensor() const { return Tensor<T>(spec.shape, data); }
};

// Projection stack.  2D geometries: shape (n_projections, n_bins).
// Cone beam: shape (n_projections, n_v, n_u), u fastest.
template <typename T = double>
struct Sinogram {
  std::size_t n_projections = 0;
  Detector1D detector1d;       // valid when is_cone() == false
  Detector2D detector2d;       // valid when is_cone() == true
  bool cone = false;
  std::vector<T> data;

  Sinogram() = default;

  static Sinogram planar(std::size_t n_proj, Detector1D det) {
    check(n_proj >= 1, "need at least one projection");
    Sinogram s;
    s.n_projections = n_proj;
    s.detector1d = det;
    s.data.assign(n_proj * det.n_bins, T(0));
    return s;
  }

  static Sinogram cone_beam(std::size_t n_proj, Detector2D det) {
    check(n_proj >= 1, "need at least one projection");
    Sinogram s;
    s.n_projections = n_proj;
    s.detector2d = det;
    s.cone = true;
    s.data.assign(n_proj * det.n_u * det.n_v, T(0));
    return s;
  }

  bool is_cone() const { return cone; }
  std::size_t n_bins() const { return detector1d.n_bins; }

  T& at(std::size_t proj, std::size_t bin) { return data[proj * n_bins() + bin]; }
  T at(std::size_t proj, std::size_t bin) const { return data[proj * n_bins() + bin]; }
  T& at(std::size_t proj, std::size_t v, std::size_t u) {
    return data[(proj * detector2d.n_v + v) * detector2d.n_u + u];
  }
  T at(std::size_t proj, std::size_t v, std::size_t u) const {
    return data[(proj * detector2d.n_v + v) * detector2d.n_u + u];
  }

  // fastest axis first, like VolumeSpec::shape
  std::vector<std::size_t> shape() const {
    if (cone) return {detector2d.n_u, detector2d.n_v, n_projections};
    return {detector1d.n_bins, n_projections};
  }

  Tensor<T> tensor() const { return Tensor<T>(shape(), data); }
};

}  // namespace tomograd
