#pragma once

// Acquisition geometries.
//
// World frame is right-handed with the rotation axis along +z and the
// iso-center at the origin.  View i of an n-view scan over `angular_range`
// sits at angle theta_i = i * angular_range / n (end point excluded).
//
// Parallel beam: rays run along (cos t, sin t), the detector axis along
// (-sin t, cos t), and the detector line passes through the origin.
//
// Fan / cone beam: the source sits at -SID * (cos t, sin t[, 0]); the flat
// detector is centered on the principal ray at distance SDD from the source.
//
// Cone views are represented by 3x4 homogeneous matrices P = K [R | t]
// mapping world points to detector pixel coordinates, normalized so the
// iso-center's homogeneous depth equals SID.  The source is the null space
// of P.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "tomograd/core.hpp"
#include "tomograd/image.hpp"

namespace tomograd {

inline std::vector<double> view_angles(std::size_t n_projections,
                                       double angular_range) {
  check(n_projections >= 1, "need at least one projection");
  check(angular_range > 0.0 && angular_range <= 2.0 * std::numbers::pi + 1e-12,
        "angular range must lie in (0, 2*pi]");
  std::vector<double> a(n_projections);
  for (std::size_t i = 0; i < n_projections; ++i)
    a[i] = double(i) * angular_range / double(n_projections);
  return a;
}

// unit ray directions of a circular scan
inline std::vector<Vec2> circular_trajectory_2d(std::size_t n_projections,
                                                double angular_range) {
  std::vector<Vec2> rays;
  for (double t : view_angles(n_projections, angular_range))
    rays.push_back({std::cos(t), std::sin(t)});
  return rays;
}

struct ParallelGeometry {
  VolumeSpec volume;       // 2D
  Detector1D detector;
  std::size_t n_projections = 0;
  double angular_range = 0.0;     // radians
  std::vector<double> angles;     // per view, starting at 0
  std::vector<Vec2> rays;         // unit ray direction per view

  Vec2 ray(std::size_t i) const { return rays[i]; }
  // detector axis = ray rotated +90 degrees
  Vec2 detector_axis(std::size_t i) const { return {-rays[i].y, rays[i].x}; }

  void set_custom_rays(std::vector<Vec2> r) {
    check(r.size() == n_projections, "ray count must match projection count");
    angles.clear();
    for (auto v : r) {
      check(std::abs(norm(v) - 1.0) <= 1e-9, "trajectory rays must be unit length");
      angles.push_back(std::atan2(v.y, v.x));
    }
    rays = std::move(r);
  }
};

inline ParallelGeometry make_parallel(VolumeSpec volume, Detector1D detector,
                                      std::size_t n_projections,
                                      double angular_range) {
  volume.validate();
  check(volume.dims() == 2, "parallel beam geometry expects a 2D volume");
  ParallelGeometry g;
  g.volume = std::move(volume);
  g.detector = detector;
  g.n_projections = n_projections;
  g.angular_range = angular_range;
  g.angles = view_angles(n_projections, angular_range);
  g.rays = circular_trajectory_2d(n_projections, angular_range);
  return g;
}

struct FanGeometry {
  VolumeSpec volume;       // 2D
  Detector1D detector;
  std::size_t n_projections = 0;
  double angular_range = 0.0;
  double sid = 0.0;        // source to iso-center distance
  double sdd = 0.0;        // source to detector distance
  std::vector<double> angles;
  std::vector<Vec2> rays;  // unit principal-ray direction (source -> iso)

  Vec2 ray(std::size_t i) const { return rays[i]; }
  Vec2 detector_axis(std::size_t i) const { return {-rays[i].y, rays[i].x}; }
  Vec2 source(std::size_t i) const { return -sid * rays[i]; }

  // half opening angle subtended by the detector
  double fan_half_angle() const {
    return std::atan(0.5 * double(detector.n_bins) * detector.spacing / sdd);
  }
};

inline FanGeometry make_fan(VolumeSpec volume, Detector1D detector,
                            std::size_t n_projections, double angular_range,
                            double sid, double sdd) {
  volume.validate();
  check(volume.dims() == 2, "fan beam geometry expects a 2D volume");
  check(sid > 0.0 && sdd > sid, "fan beam requires 0 < SID < SDD");
  FanGeometry g;
  g.volume = std::move(volume);
  g.detector = detector;
  g.n_projections = n_projections;
  g.angular_range = angular_range;
  g.sid = sid;
  g.sdd = sdd;
  g.angles = view_angles(n_projections, angular_range);
  g.rays = circular_trajectory_2d(n_projections, angular_range);
  return g;
}

struct ConeGeometry {
  VolumeSpec volume;       // 3D
  Detector2D detector;
  std::size_t n_projections = 0;
  double angular_range = 0.0;
  double sid = 0.0;
  double sdd = 0.0;
  std::vector<double> angles;
  std::vector<Mat34> matrices;      // normalized: iso-center depth = SID
  std::vector<Vec3> sources;        // null space of each matrix
  std::vector<Mat33> inv_blocks;    // inverse of the left 3x3 block

  double fan_half_angle() const {
    return std::atan(0.5 * double(detector.n_u) * detector.spacing_u / sdd);
  }

  // Adopt (possibly externally supplied) projection matrices: rescale so the
  // iso-center depth equals SID, recover sources, cache inverse blocks.
  void set_matrices(std::vector<Mat34> mats) {
    check(mats.size() == n_projections, "matrix count must match projection count");
    matrices = std::move(mats);
    sources.clear();
    inv_blocks.clear();
    for (auto& P : matrices) {
      const double iso_depth = P.mul_point({0.0, 0.0, 0.0}).z;
      check(std::abs(iso_depth) > 1e-12,
            "projection matrix puts the iso-center at zero depth");
      const double s = sid / iso_depth;
      for (auto& v : P.m) v *= s;
      const Mat33 inv = P.left_block().inverse();  // throws if not rank 3
      inv_blocks.push_back(inv);
      const Vec3 c = P.last_column();
      sources.push_back(-1.0 * inv.mul(c));
    }
    // angles measured from the first view, used by redundancy weighting
    angles.assign(n_projections, 0.0);
    double prev = 0.0, accum = 0.0;
    for (std::size_t i = 0; i < n_projections; ++i) {
      const Vec3 s = sources[i];
      const double a = std::atan2(-s.y, -s.x);
      if (i == 0) {
        prev = a;
      } else {
        double d = a - prev;
        while (d < 0.0) d += 2.0 * std::numbers::pi;
        while (d >= 2.0 * std::numbers::pi) d -= 2.0 * std::numbers::pi;
        accum += d;
        prev = a;
      }
      angles[i] = accum;
    }
  }
};

// K [R | t] for one view of a circular cone-beam scan
inline Mat34 cone_projection_matrix(double theta, double sid, double sdd,
                                    const Detector2D& det) {
  const double fu = sdd / det.spacing_u;
  const double fv = sdd / det.spacing_v;
  const double cu = -det.origin_u / det.spacing_u;  // principal point, pixel units
  const double cv = -det.origin_v / det.spacing_v;
  const double ct = std::cos(theta), st = std::sin(theta);
  // camera rows: u axis, v axis (world z), principal ray; t = (0, 0, SID)
  Mat34 P;
  P.m = {-fu * st + cu * ct, fu * ct + cu * st, 0.0, cu * sid,
         cv * ct,            cv * st,           fv,  cv * sid,
         ct,                 st,                0.0, sid};
  return P;
}

inline std::vector<Mat34> projection_matrices_circular(
    std::size_t n_projections, double angular_range, double sid, double sdd,
    const Detector2D& det) {
  check(sid > 0.0 && sdd > sid, "cone beam requires 0 < SID < SDD");
  std::vector<Mat34> mats;
  for (double t : view_angles(n_projections, angular_range))
    mats.push_back(cone_projection_matrix(t, sid, sdd, det));
  return mats;
}

inline ConeGeometry make_cone(VolumeSpec volume, Detector2D detector,
                              std::size_t n_projections, double angular_range,
                              double sid, double sdd) {
  volume.validate();
  check(volume.dims() == 3, "cone beam geometry expects a 3D volume");
  check(sid > 0.0 && sdd > sid, "cone beam requires 0 < SID < SDD");
  ConeGeometry g;
  g.volume = std::move(volume);
  g.detector = detector;
  g.n_projections = n_projections;
  g.angular_range = angular_range;
  g.sid = sid;
  g.sdd = sdd;
  g.set_matrices(projection_matrices_circular(n_projections, angular_range,
                                              sid, sdd, detector));
  g.angles = view_angles(n_projections, angular_range);
  return g;
}

// cone geometry around externally supplied matrices (e.g. from a geometry file)
inline ConeGeometry make_cone_from_matrices(VolumeSpec volume, Detector2D detector,
                                            double angular_range, double sid,
                                            double sdd, std::vector<Mat34> mats) {
  volume.validate();
  check(volume.dims() == 3, "cone beam geometry expects a 3D volume");
  check(sid > 0.0 && sdd > sid, "cone beam requires 0 < SID < SDD");
  check(!mats.empty(), "need at least one projection matrix");
  ConeGeometry g;
  g.volume = std::move(volume);
  g.detector = detector;
  g.n_projections = mats.size();
  g.angular_range = angular_range;
  g.sid = sid;
  g.sdd = sdd;
  g.set_matrices(std::move(mats));
  return g;
}

}  // namespace tomograd
