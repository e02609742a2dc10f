#pragma once

// Analytic phantoms rasterized on element-center grids.  Primitives are
// additive: a voxel's value is the intensity sum of every primitive that
// contains its center.  Head-phantom tables follow the classical published
// ellipse set (outer shell normalized to 1, values in [0, ~1]); lengths are
// given in unit-disk coordinates and scaled to fill the volume's field of
// view (isotropic scale = smallest half-extent).

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "tomograd/core.hpp"
#include "tomograd/image.hpp"

namespace tomograd {

struct EllipseSpec {
  double cx = 0.0, cy = 0.0;      // center
  double a = 1.0, b = 1.0;        // semi-axes along x / y before rotation
  double phi_deg = 0.0;           // rotation about z, counter-clockwise
  double intensity = 1.0;
};

struct EllipsoidSpec {
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double a = 1.0, b = 1.0, c = 1.0;
  double phi_deg = 0.0;           // rotation about z only
  double intensity = 1.0;
};

template <typename T = double>
Image<T> rasterize(const std::vector<EllipseSpec>& specs, const VolumeSpec& vol) {
  vol.validate();
  check(vol.dims() == 2, "ellipse list needs a 2D volume");
  for (const auto& e : specs)
    check(e.a > 0.0 && e.b > 0.0, "ellipse semi-axes must be positive");
  Image<T> img(vol);
  const std::size_t nx = vol.shape[0], ny = vol.shape[1];
  for (const auto& e : specs) {
    const double phi = e.phi_deg * std::numbers::pi / 180.0;
    const double c = std::cos(phi), s = std::sin(phi);
    parallel_for(ny, [&](std::size_t iy) {
      const double y = vol.origin[1] + double(iy) * vol.spacing[1];
      const double dy = y - e.cy;
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const double dx = vol.origin[0] + double(ix) * vol.spacing[0] - e.cx;
        const double u = (c * dx + s * dy) / e.a;
        const double v = (-s * dx + c * dy) / e.b;
        if (u * u + v * v <= 1.0) img.data[iy * nx + ix] += T(e.intensity);
      }
    });
  }
  return img;
}

template <typename T = double>
Image<T> rasterize(const std::vector<EllipsoidSpec>& specs, const VolumeSpec& vol) {
  vol.validate();
  check(vol.dims() == 3, "ellipsoid list needs a 3D volume");
  for (const auto& e : specs)
    check(e.a > 0.0 && e.b > 0.0 && e.c > 0.0, "ellipsoid semi-axes must be positive");
  Image<T> img(vol);
  const std::size_t nx = vol.shape[0], ny = vol.shape[1], nz = vol.shape[2];
  for (const auto& e : specs) {
    const double phi = e.phi_deg * std::numbers::pi / 180.0;
    const double cph = std::cos(phi), sph = std::sin(phi);
    parallel_for(nz, [&](std::size_t iz) {
      const double dz = vol.origin[2] + double(iz) * vol.spacing[2] - e.cz;
      const double wz = dz / e.c;
      const double rem = 1.0 - wz * wz;
      if (rem < 0.0) return;  // slice misses the ellipsoid entirely
      for (std::size_t iy = 0; iy < ny; ++iy) {
        const double dy = vol.origin[1] + double(iy) * vol.spacing[1] - e.cy;
        for (std::size_t ix = 0; ix < nx; ++ix) {
          const double dx = vol.origin[0] + double(ix) * vol.spacing[0] - e.cx;
          const double u = (cph * dx + sph * dy) / e.a;
          const double v = (-sph * dx + cph * dy) / e.b;
          if (u * u + v * v <= rem)
            img.data[(iz * ny + iy) * nx + ix] += T(e.intensity);
        }
      }
    });
  }
  return img;
}

// classical 10-ellipse head phantom, lengths scaled by `fov_half`
inline std::vector<EllipseSpec> head_phantom_ellipses(double fov_half) {
  const double F = fov_half;
  return {
      {0.0, 0.0, 0.6900 * F, 0.9200 * F, 0.0, 1.00},
      {0.0, -0.0184 * F, 0.6624 * F, 0.8740 * F, 0.0, -0.98},
      {0.22 * F, 0.0, 0.1100 * F, 0.3100 * F, -18.0, -0.02},
      {-0.22 * F, 0.0, 0.1600 * F, 0.4100 * F, 18.0, -0.02},
      {0.0, 0.35 * F, 0.2100 * F, 0.2500 * F, 0.0, 0.01},
      {0.0, 0.10 * F, 0.0460 * F, 0.0460 * F, 0.0, 0.01},
      {0.0, -0.10 * F, 0.0460 * F, 0.0460 * F, 0.0, 0.01},
      {-0.08 * F, -0.605 * F, 0.0460 * F, 0.0230 * F, 0.0, 0.01},
      {0.0, -0.606 * F, 0.0230 * F, 0.0230 * F, 0.0, 0.01},
      {0.06 * F, -0.605 * F, 0.0230 * F, 0.0460 * F, 0.0, 0.01},
  };
}

// 3D companion table (rotations about z only)
inline std::vector<EllipsoidSpec> head_phantom_ellipsoids(double fov_half) {
  const double F = fov_half;
  return {
      {0.0, 0.0, 0.0, 0.6900 * F, 0.9200 * F, 0.810 * F, 0.0, 1.00},
      {0.0, -0.0184 * F, 0.0, 0.6624 * F, 0.8740 * F, 0.780 * F, 0.0, -0.98},
      {0.22 * F, 0.0, 0.0, 0.1100 * F, 0.3100 * F, 0.220 * F, -18.0, -0.02},
      {-0.22 * F, 0.0, 0.0, 0.1600 * F, 0.4100 * F, 0.280 * F, 18.0, -0.02},
      {0.0, 0.35 * F, -0.15 * F, 0.2100 * F, 0.2500 * F, 0.410 * F, 0.0, 0.01},
      {0.0, 0.10 * F, 0.25 * F, 0.0460 * F, 0.0460 * F, 0.050 * F, 0.0, 0.01},
      {0.0, -0.10 * F, 0.25 * F, 0.0460 * F, 0.0460 * F, 0.050 * F, 0.0, 0.01},
      {-0.08 * F, -0.605 * F, 0.0, 0.0460 * F, 0.0230 * F, 0.050 * F, 0.0, 0.01},
      {0.0, -0.606 * F, 0.0, 0.0230 * F, 0.0230 * F, 0.020 * F, 0.0, 0.01},
      {0.06 * F, -0.605 * F, 0.0, 0.0230 * F, 0.0460 * F, 0.020 * F, 0.0, 0.01},
  };
}

inline double fov_half_extent(const VolumeSpec& vol) {
  double h = vol.extent(0);
  for (std::size_t a = 1; a < vol.dims(); ++a) h = std::min(h, vol.extent(a));
  return 0.5 * h;
}

template <typename T = double>
Image<T> shepp_logan_2d(const VolumeSpec& vol) {
  check(vol.dims() == 2, "2D head phantom needs a 2D volume");
  return rasterize<T>(head_phantom_ellipses(fov_half_extent(vol)), vol);
}

template <typename T = double>
Image<T> shepp_logan_3d(const VolumeSpec& vol) {
  check(vol.dims() == 3, "3D head phantom needs a 3D volume");
  return rasterize<T>(head_phantom_ellipsoids(fov_half_extent(vol)), vol);
}

// centered disk, handy as a projection test object
template <typename T = double>
Image<T> disk_phantom(const VolumeSpec& vol, double radius, double intensity) {
  check(radius > 0.0, "disk radius must be positive");
  return rasterize<T>({EllipseSpec{0.0, 0.0, radius, radius, 0.0, intensity}}, vol);
}

}  // namespace tomograd
