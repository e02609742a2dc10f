#pragma once

// Projection operators.
//
// Forward projectors are ray-driven: each detector bin casts a ray, marches
// it across the volume with a fixed step of half the smallest voxel pitch
// (midpoint rule over the clipped ray segment), and accumulates linearly
// interpolated samples times the step length.  Back projectors are
// voxel-driven: each voxel is mapped into every view's detector and gathers
// a linearly interpolated value; divergent geometries weight the gathered
// value by the inverse squared normalized depth.
//
// The two are intentionally *not* exact transposes of each other — the pair
// approximates the same continuous operator from opposite directions, which
// keeps both sides artifact-free at their own job.  Samples outside the
// volume or detector contribute zero.  Every output element is a pure
// function of the inputs, so results do not depend on the thread count.

#include <cmath>
#include <cstddef>
#include <vector>

#include "tomograd/core.hpp"
#include "tomograd/geometry.hpp"
#include "tomograd/image.hpp"

namespace tomograd {

namespace detail {

// zero-padded linear interpolation over one sinogram row
template <typename T>
inline double interp_row(const T* row, std::size_t n, double t) {
  const double f = std::floor(t);
  const long i0 = long(f);
  const double w1 = t - f;
  double acc = 0.0;
  if (i0 >= 0 && i0 < long(n)) acc += (1.0 - w1) * double(row[i0]);
  if (i0 + 1 >= 0 && i0 + 1 < long(n)) acc += w1 * double(row[i0 + 1]);
  return acc;
}

// zero-padded bilinear sample, index coordinates
template <typename T>
inline double interp2(const T* img, std::size_t nx, std::size_t ny, double px,
                      double py) {
  const double fx = std::floor(px), fy = std::floor(py);
  const long x0 = long(fx), y0 = long(fy);
  const double wx = px - fx, wy = py - fy;
  double acc = 0.0;
  const bool x0in = x0 >= 0 && x0 < long(nx);
  const bool x1in = x0 + 1 >= 0 && x0 + 1 < long(nx);
  if (y0 >= 0 && y0 < long(ny)) {
    const T* r = img + std::size_t(y0) * nx;
    if (x0in) acc += (1.0 - wx) * (1.0 - wy) * double(r[x0]);
    if (x1in) acc += wx * (1.0 - wy) * double(r[x0 + 1]);
  }
  if (y0 + 1 >= 0 && y0 + 1 < long(ny)) {
    const T* r = img + std::size_t(y0 + 1) * nx;
    if (x0in) acc += (1.0 - wx) * wy * double(r[x0]);
    if (x1in) acc += wx * wy * double(r[x0 + 1]);
  }
  return acc;
}

template <typename T>
inline double interp3(const T* img, std::size_t nx, std::size_t ny, std::size_t nz,
                      double px, double py, double pz) {
  const double fz = std::floor(pz);
  const long z0 = long(fz);
  const double wz = pz - fz;
  double acc = 0.0;
  if (z0 >= 0 && z0 < long(nz))
    acc += (1.0 - wz) * interp2(img + std::size_t(z0) * nx * ny, nx, ny, px, py);
  if (z0 + 1 >= 0 && z0 + 1 < long(nz))
    acc += wz * interp2(img + std::size_t(z0 + 1) * nx * ny, nx, ny, px, py);
  return acc;
}

// Clip ray O + t*D against the world-space box where interpolation can be
// nonzero (one pitch beyond the outermost element centers).  Returns false
// if the ray misses.
inline bool clip_ray(const VolumeSpec& vol, const double* o, const double* d,
                     double& t0, double& t1) {
  t0 = -1e300;
  t1 = 1e300;
  for (std::size_t a = 0; a < vol.dims(); ++a) {
    const double lo = vol.origin[a] - vol.spacing[a];
    const double hi = vol.origin[a] + double(vol.shape[a]) * vol.spacing[a];
    if (std::abs(d[a]) < 1e-12) {
      if (o[a] <= lo || o[a] >= hi) return false;
      continue;
    }
    double ta = (lo - o[a]) / d[a];
    double tb = (hi - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t1 > t0;
}

inline double march_step(const VolumeSpec& vol) {
  double m = vol.spacing[0];
  for (std::size_t a = 1; a < vol.dims(); ++a) m = std::min(m, vol.spacing[a]);
  return 0.5 * m;
}

template <typename T>
inline double integrate_ray_2d(const Image<T>& img, Vec2 o, Vec2 d) {
  const VolumeSpec& vol = img.spec;
  double t0, t1;
  const double ov[2] = {o.x, o.y};
  const double dv[2] = {d.x, d.y};
  if (!clip_ray(vol, ov, dv, t0, t1)) return 0.0;
  const double step = march_step(vol);
  const std::size_t n = std::size_t(std::ceil((t1 - t0) / step));
  const double dt = (t1 - t0) / double(n);
  const double inv_sx = 1.0 / vol.spacing[0], inv_sy = 1.0 / vol.spacing[1];
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + (double(k) + 0.5) * dt;
    const double px = (o.x + t * d.x - vol.origin[0]) * inv_sx;
    const double py = (o.y + t * d.y - vol.origin[1]) * inv_sy;
    acc += interp2(img.data.data(), vol.shape[0], vol.shape[1], px, py);
  }
  return acc * dt;
}

template <typename T>
inline double integrate_ray_3d(const Image<T>& img, Vec3 o, Vec3 d) {
  const VolumeSpec& vol = img.spec;
  double t0, t1;
  const double ov[3] = {o.x, o.y, o.z};
  const double dv[3] = {d.x, d.y, d.z};
  if (!clip_ray(vol, ov, dv, t0, t1)) return 0.0;
  const double step = march_step(vol);
  const std::size_t n = std::size_t(std::ceil((t1 - t0) / step));
  const double dt = (t1 - t0) / double(n);
  const double inv_s[3] = {1.0 / vol.spacing[0], 1.0 / vol.spacing[1],
                           1.0 / vol.spacing[2]};
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + (double(k) + 0.5) * dt;
    const double px = (o.x + t * d.x - vol.origin[0]) * inv_s[0];
    const double py = (o.y + t * d.y - vol.origin[1]) * inv_s[1];
    const double pz = (o.z + t * d.z - vol.origin[2]) * inv_s[2];
    acc += interp3(img.data.data(), vol.shape[0], vol.shape[1], vol.shape[2],
                   px, py, pz);
  }
  return acc * dt;
}

inline void check_volume_match(const VolumeSpec& a, const VolumeSpec& b) {
  check(a.shape == b.shape && a.spacing == b.spacing && a.origin == b.origin,
        "volume does not match the geometry's volume spec");
}

template <typename T>
inline void check_sino_match(const Sinogram<T>& s, std::size_t n_proj,
                             std::size_t n_bins) {
  check(!s.is_cone() && s.n_projections == n_proj &&
            s.detector1d.n_bins == n_bins,
        "sinogram shape does not match the geometry");
}

}  // namespace detail

// --- parallel beam ----------------------------------------------------------

template <typename T>
Sinogram<T> forward_project(const Image<T>& img, const ParallelGeometry& geo) {
  detail::check_volume_match(img.spec, geo.volume);
  auto sino = Sinogram<T>::planar(geo.n_projections, geo.detector);
  const std::size_t nb = geo.detector.n_bins;
  parallel_for(geo.n_projections * nb, [&](std::size_t idx) {
    const std::size_t i = idx / nb, j = idx % nb;
    const Vec2 r = geo.ray(i);
    const Vec2 ax = geo.detector_axis(i);
    const double s = geo.detector.origin + double(j) * geo.detector.spacing;
    sino.data[idx] = T(detail::integrate_ray_2d(img, s * ax, r));
  });
  return sino;
}

template <typename T>
Image<T> back_project(const Sinogram<T>& sino, const ParallelGeometry& geo) {
  detail::check_sino_match(sino, geo.n_projections, geo.detector.n_bins);
  Image<T> img(geo.volume);
  const std::size_t nx = geo.volume.shape[0], ny = geo.volume.shape[1];
  const std::size_t nb = geo.detector.n_bins;
  const double inv_ds = 1.0 / geo.detector.spacing;
  parallel_for(ny, [&](std::size_t iy) {
    const double y = geo.volume.origin[1] + double(iy) * geo.volume.spacing[1];
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double x = geo.volume.origin[0] + double(ix) * geo.volume.spacing[0];
      double acc = 0.0;
      for (std::size_t i = 0; i < geo.n_projections; ++i) {
        const Vec2 ax = geo.detector_axis(i);
        const double s = x * ax.x + y * ax.y;
        const double bin = (s - geo.detector.origin) * inv_ds;
        acc += detail::interp_row(sino.data.data() + i * nb, nb, bin);
      }
      img.data[iy * nx + ix] = T(acc);
    }
  });
  return img;
}

// --- fan beam ---------------------------------------------------------------

template <typename T>
Sinogram<T> forward_project(const Image<T>& img, const FanGeometry& geo) {
  detail::check_volume_match(img.spec, geo.volume);
  auto sino = Sinogram<T>::planar(geo.n_projections, geo.detector);
  const std::size_t nb = geo.detector.n_bins;
  parallel_for(geo.n_projections * nb, [&](std::size_t idx) {
    const std::size_t i = idx / nb, j = idx % nb;
    const Vec2 src = geo.source(i);
    const Vec2 r = geo.ray(i);
    const Vec2 ax = geo.detector_axis(i);
    const double u = geo.detector.origin + double(j) * geo.detector.spacing;
    // pixel center on the detector plane
    const Vec2 pix = src + geo.sdd * r + u * ax;
    Vec2 d = pix - src;
    d = (1.0 / norm(d)) * d;
    sino.data[idx] = T(detail::integrate_ray_2d(img, src, d));
  });
  return sino;
}

template <typename T>
Image<T> back_project(const Sinogram<T>& sino, const FanGeometry& geo) {
  detail::check_sino_match(sino, geo.n_projections, geo.detector.n_bins);
  Image<T> img(geo.volume);
  const std::size_t nx = geo.volume.shape[0], ny = geo.volume.shape[1];
  const std::size_t nb = geo.detector.n_bins;
  const double inv_ds = 1.0 / geo.detector.spacing;
  parallel_for(ny, [&](std::size_t iy) {
    const double y = geo.volume.origin[1] + double(iy) * geo.volume.spacing[1];
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double x = geo.volume.origin[0] + double(ix) * geo.volume.spacing[0];
      double acc = 0.0;
      for (std::size_t i = 0; i < geo.n_projections; ++i) {
        const Vec2 r = geo.ray(i);
        const Vec2 ax = geo.detector_axis(i);
        // vector from source to voxel; depth along the principal ray
        const double qx = x + geo.sid * r.x, qy = y + geo.sid * r.y;
        const double depth = qx * r.x + qy * r.y;
        if (depth <= 0.0) continue;  // behind the source
        const double u = geo.sdd * (qx * ax.x + qy * ax.y) / depth;
        const double bin = (u - geo.detector.origin) * inv_ds;
        const double U = depth / geo.sid;  // 1 at the iso-center
        acc += detail::interp_row(sino.data.data() + i * nb, nb, bin) / (U * U);
      }
      img.data[iy * nx + ix] = T(acc);
    }
  });
  return img;
}

// --- cone beam --------------------------------------------------------------

template <typename T>
Sinogram<T> forward_project(const Image<T>& img, const ConeGeometry& geo) {
  detail::check_volume_match(img.spec, geo.volume);
  auto sino = Sinogram<T>::cone_beam(geo.n_projections, geo.detector);
  const std::size_t nu = geo.detector.n_u, nv = geo.detector.n_v;
  const std::size_t per_view = nu * nv;
  parallel_for(geo.n_projections * per_view, [&](std::size_t idx) {
    const std::size_t i = idx / per_view;
    const std::size_t iv = (idx % per_view) / nu;
    const std::size_t iu = idx % nu;
    const Vec3 src = geo.sources[i];
    // world direction whose parameter equals the homogeneous depth
    Vec3 d = geo.inv_blocks[i].mul({double(iu), double(iv), 1.0});
    d = (1.0 / norm(d)) * d;
    sino.data[idx] = T(detail::integrate_ray_3d(img, src, d));
  });
  return sino;
}

template <typename T>
Image<T> back_project(const Sinogram<T>& sino, const ConeGeometry& geo) {
  check(sino.is_cone() && sino.n_projections == geo.n_projections &&
            sino.detector2d.n_u == geo.detector.n_u &&
            sino.detector2d.n_v == geo.detector.n_v,
        "sinogram shape does not match the geometry");
  Image<T> img(geo.volume);
  const std::size_t nx = geo.volume.shape[0], ny = geo.volume.shape[1],
                    nz = geo.volume.shape[2];
  const std::size_t nu = geo.detector.n_u, nv = geo.detector.n_v;
  parallel_for(nz * ny, [&](std::size_t slice_row) {
    const std::size_t iz = slice_row / ny, iy = slice_row % ny;
    const double z = geo.volume.origin[2] + double(iz) * geo.volume.spacing[2];
    const double y = geo.volume.origin[1] + double(iy) * geo.volume.spacing[1];
    T* out = img.data.data() + (iz * ny + iy) * nx;
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double x = geo.volume.origin[0] + double(ix) * geo.volume.spacing[0];
      double acc = 0.0;
      for (std::size_t i = 0; i < geo.n_projections; ++i) {
        const Vec3 h = geo.matrices[i].mul_point({x, y, z});
        if (h.z <= 0.0) continue;  // behind the source
        const double u = h.x / h.z, v = h.y / h.z;  // pixel coordinates
        const double w = h.z / geo.sid;             // 1 at the iso-center
        acc += detail::interp2(sino.data.data() + i * nu * nv, nu, nv, u, v) /
               (w * w);
      }
      out[ix] = T(acc);
    }
  });
  return img;
}

}  // namespace tomograd
