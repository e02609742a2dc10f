#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tomograd/geometry.hpp"
#include "tomograd/image.hpp"
#include "tomograd/phantom.hpp"
#include "tomograd/projector.hpp"

using namespace tomograd;

namespace {

constexpr double kPi = 3.14159265358979323846;

Image<> random_image(const VolumeSpec& vol, std::uint64_t seed) {
  Image<> img(vol);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (auto& v : img.data) v = uni(rng);
  return img;
}

template <typename S>
void fill_random(S& sino, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (auto& v : sino.data) v = uni(rng);
}

}  // namespace

TEST_CASE("axis-aligned rays through a uniform box measure its width") {
  // 15x15 of ones at 1 mm pitch; the interpolated field is 1 inside the
  // element-center hull and ramps to 0 over one pitch, so every axis-aligned
  // line integral equals nx * dx exactly (midpoint rule is exact on ramps).
  auto vol = VolumeSpec::centered({15, 15}, {1.0, 1.0});
  Image<> ones(vol);
  for (auto& v : ones.data) v = 1.0;
  auto geo = make_parallel(vol, Detector1D::centered(15, 1.0), 1, kPi);
  auto sino = forward_project(ones, geo);
  for (std::size_t j = 0; j < 15; ++j)
    CHECK(sino.at(0, j) == Catch::Approx(15.0).margin(1e-9));
}

TEST_CASE("parallel projections of a centered disk match analytic chords") {
  auto vol = VolumeSpec::centered({256, 256}, {1.0, 1.0});
  const double R = 80.0;
  auto disk = disk_phantom<double>(vol, R, 1.0);
  auto geo = make_parallel(vol, Detector1D::centered(255, 1.0), 4, kPi);
  auto sino = forward_project(disk, geo);

  const double step = 0.5;  // half the voxel pitch
  for (std::size_t i = 0; i < geo.n_projections; ++i) {
    std::size_t n_checked = 0, n_good = 0;
    double mass = 0.0;
    for (std::size_t j = 0; j < 255; ++j) {
      const double s = geo.detector.origin + double(j) * geo.detector.spacing;
      mass += sino.at(i, j) * geo.detector.spacing;
      if (std::abs(s) > 0.9 * R) continue;
      const double chord = 2.0 * std::sqrt(R * R - s * s);
      ++n_checked;
      if (std::abs(sino.at(i, j) - chord) <= 2.0 * step) ++n_good;
    }
    // chord accuracy away from the grazing rim, plus total mass = disk area
    CHECK(n_good >= (n_checked * 9) / 10);
    CHECK(mass == Catch::Approx(kPi * R * R).epsilon(0.01));
  }
}

TEST_CASE("fan rays measure the same chords as parallel rays") {
  auto vol = VolumeSpec::centered({256, 256}, {1.0, 1.0});
  const double R = 80.0;
  auto disk = disk_phantom<double>(vol, R, 1.0);
  auto geo = make_fan(vol, Detector1D::centered(255, 1.0), 2, kPi, 400.0, 800.0);
  auto sino = forward_project(disk, geo);
  // central bin: the principal ray passes through the center, chord = 2R
  CHECK(sino.at(0, 127) == Catch::Approx(2.0 * R).margin(1.0));
  CHECK(sino.at(1, 127) == Catch::Approx(2.0 * R).margin(1.0));
  // off-center bin: ray from (-400,0) towards u=+40 passes the center at
  // distance 40 * sid / sqrt(sdd^2 + 40^2) = 19.975 mm
  const double d = 400.0 * 40.0 / std::sqrt(800.0 * 800.0 + 40.0 * 40.0);
  CHECK(sino.at(0, 167) ==
        Catch::Approx(2.0 * std::sqrt(R * R - d * d)).margin(1.0));
}

TEST_CASE("cone rays measure sphere chords, on and off axis") {
  auto vol = VolumeSpec::centered({64, 64, 64}, {1.0, 1.0, 1.0});
  const double R = 20.0;
  auto sphere = rasterize<double>(
      std::vector<EllipsoidSpec>{{0, 0, 0, R, R, R, 0.0, 1.0}}, vol);
  auto det = Detector2D::centered(63, 63, 2.0, 2.0);
  auto geo = make_cone(vol, det, 1, kPi, 200.0, 400.0);
  auto sino = forward_project(sphere, geo);
  // principal ray: chord = 2R
  CHECK(sino.at(0, 31, 31) == Catch::Approx(2.0 * R).margin(1.0));
  // 20 mm off-axis on the detector: line-to-center distance 9.9875 mm
  const double d = 9.98752338;
  const double chord = 2.0 * std::sqrt(R * R - d * d);
  CHECK(sino.at(0, 31, 41) == Catch::Approx(chord).margin(1.0));
  // corner ray misses
  CHECK(sino.at(0, 0, 0) == 0.0);
}

TEST_CASE("rays that miss the support integrate to exactly zero") {
  auto vol = VolumeSpec::centered({64, 64}, {1.0, 1.0});
  auto disk = disk_phantom<double>(vol, 10.0, 1.0);
  auto geo = make_parallel(vol, Detector1D::centered(63, 1.0), 8, kPi);
  auto sino = forward_project(disk, geo);
  for (std::size_t i = 0; i < geo.n_projections; ++i)
    for (std::size_t j = 0; j < 63; ++j) {
      const double s = geo.detector.origin + double(j) * geo.detector.spacing;
      if (std::abs(s) >= 12.0) CHECK(sino.at(i, j) == 0.0);
    }
}

TEST_CASE("forward projection is linear in the image") {
  auto vol = VolumeSpec::centered({16, 16}, {1.0, 1.0});
  auto geo = make_parallel(vol, Detector1D::centered(23, 1.0), 6, kPi);
  auto f = random_image(vol, 11);
  auto g = random_image(vol, 22);
  Image<> combo(vol);
  for (std::size_t k = 0; k < combo.data.size(); ++k)
    combo.data[k] = 2.7 * f.data[k] + g.data[k];
  auto sf = forward_project(f, geo);
  auto sg = forward_project(g, geo);
  auto sc = forward_project(combo, geo);
  for (std::size_t k = 0; k < sc.data.size(); ++k)
    CHECK(sc.data[k] ==
          Catch::Approx(2.7 * sf.data[k] + sg.data[k]).margin(1e-9));
}

TEST_CASE("parallel backprojection of a uniform sinogram counts the views") {
  auto vol = VolumeSpec::centered({9, 9}, {1.0, 1.0});
  auto geo = make_parallel(vol, Detector1D::centered(15, 1.0), 12, 2.0 * kPi);
  auto sino = Sinogram<>::planar(12, geo.detector);
  for (auto& v : sino.data) v = 1.0;
  auto img = back_project(sino, geo);
  CHECK(img.at(4, 4) == 12.0);  // center hits bin centers exactly
  for (double v : img.data) CHECK(v == Catch::Approx(12.0).margin(1e-12));
}

TEST_CASE("fan backprojection weights by inverse squared normalized depth") {
  // single view at angle 0: source (-64, 0), principal ray +x.  A uniform
  // sinogram backprojects to (sid / (x + sid))^2.
  auto vol = VolumeSpec::centered({5, 5}, {16.0, 16.0});
  auto geo = make_fan(vol, Detector1D::centered(31, 8.0), 1, kPi, 64.0, 128.0);
  auto sino = Sinogram<>::planar(1, geo.detector);
  for (auto& v : sino.data) v = 1.0;
  auto img = back_project(sino, geo);
  CHECK(img.at(0, 2) == Catch::Approx(4.0).margin(1e-12));        // x = -32
  CHECK(img.at(2, 2) == Catch::Approx(1.0).margin(1e-12));        // x = 0
  CHECK(img.at(4, 2) == Catch::Approx(4.0 / 9.0).margin(1e-12));  // x = +32
  CHECK(img.at(2, 3) == Catch::Approx(1.0).margin(1e-12));        // y = 16
}

TEST_CASE("fan backprojection skips voxels behind the source") {
  auto vol = VolumeSpec::centered({5, 5}, {48.0, 48.0});  // x reaches -96
  auto geo = make_fan(vol, Detector1D::centered(31, 8.0), 1, kPi, 64.0, 128.0);
  auto sino = Sinogram<>::planar(1, geo.detector);
  for (auto& v : sino.data) v = 1.0;
  auto img = back_project(sino, geo);
  CHECK(img.at(0, 2) == 0.0);                                // behind
  CHECK(img.at(1, 2) == Catch::Approx(16.0).margin(1e-12));  // depth sid/4
}

TEST_CASE("cone backprojection weights by inverse squared normalized depth") {
  auto vol = VolumeSpec::centered({5, 5, 5}, {16.0, 16.0, 16.0});
  auto det = Detector2D::centered(31, 31, 8.0, 8.0);
  auto geo = make_cone(vol, det, 1, kPi, 64.0, 128.0);
  auto sino = Sinogram<>::cone_beam(1, det);
  for (auto& v : sino.data) v = 1.0;
  auto img = back_project(sino, geo);
  CHECK(img.at(0, 2, 2) == Catch::Approx(4.0).margin(1e-12));
  CHECK(img.at(2, 2, 2) == Catch::Approx(1.0).margin(1e-12));
  CHECK(img.at(4, 2, 2) == Catch::Approx(4.0 / 9.0).margin(1e-12));
}

TEST_CASE("backprojection is linear in the sinogram") {
  auto vol = VolumeSpec::centered({12, 12}, {1.0, 1.0});
  auto geo = make_parallel(vol, Detector1D::centered(17, 1.0), 5, kPi);
  auto p = Sinogram<>::planar(5, geo.detector);
  auto q = Sinogram<>::planar(5, geo.detector);
  fill_random(p, 31);
  fill_random(q, 32);
  auto combo = Sinogram<>::planar(5, geo.detector);
  for (std::size_t k = 0; k < combo.data.size(); ++k)
    combo.data[k] = 1.5 * p.data[k] - q.data[k];
  auto bp = back_project(p, geo);
  auto bq = back_project(q, geo);
  auto bc = back_project(combo, geo);
  for (std::size_t k = 0; k < bc.data.size(); ++k)
    CHECK(bc.data[k] ==
          Catch::Approx(1.5 * bp.data[k] - bq.data[k]).margin(1e-9));
}

TEST_CASE("forward and back projection are approximate adjoints") {
  // the pair is deliberately unmatched (ray- vs voxel-driven), so the two
  // inner products agree only approximately
  auto vol = VolumeSpec::centered({32, 32}, {1.0, 1.0});
  auto geo = make_parallel(vol, Detector1D::centered(47, 1.0), 12, kPi);
  auto f = random_image(vol, 7);
  auto p = Sinogram<>::planar(12, geo.detector);
  fill_random(p, 8);
  auto Af = forward_project(f, geo);
  auto Bp = back_project(p, geo);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t k = 0; k < Af.data.size(); ++k) lhs += Af.data[k] * p.data[k];
  for (std::size_t k = 0; k < f.data.size(); ++k) rhs += f.data[k] * Bp.data[k];
  CHECK(lhs / rhs == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("projector outputs do not depend on the thread count") {
  auto vol = VolumeSpec::centered({32, 32}, {1.0, 1.0});
  auto geo = make_fan(vol, Detector1D::centered(47, 1.0), 24, 2.0 * kPi, 80.0,
                      160.0);
  auto f = random_image(vol, 99);
  auto p = Sinogram<>::planar(24, geo.detector);
  fill_random(p, 100);

  set_num_threads(1);
  auto s1 = forward_project(f, geo);
  auto b1 = back_project(p, geo);
  set_num_threads(5);
  auto s5 = forward_project(f, geo);
  auto b5 = back_project(p, geo);
  set_num_threads(1);

  CHECK(s1.data == s5.data);  // bitwise
  CHECK(b1.data == b5.data);
}

TEST_CASE("projectors reject mismatched shapes") {
  auto vol = VolumeSpec::centered({8, 8}, {1.0, 1.0});
  auto geo = make_parallel(vol, Detector1D::centered(11, 1.0), 3, kPi);
  Image<> wrong(VolumeSpec::centered({8, 8}, {2.0, 2.0}));
  CHECK_THROWS_WITH(forward_project(wrong, geo),
                    "volume does not match the geometry's volume spec");
  auto bad = Sinogram<>::planar(3, Detector1D::centered(12, 1.0));
  CHECK_THROWS_WITH(back_project(bad, geo),
                    "sinogram shape does not match the geometry");

  auto det = Detector2D::centered(8, 8, 1.0, 1.0);
  auto cone = make_cone(VolumeSpec::centered({4, 4, 4}, {1.0, 1.0, 1.0}), det,
                        3, kPi, 10.0, 20.0);
  auto planar_sino = Sinogram<>::planar(3, Detector1D::centered(8, 1.0));
  CHECK_THROWS_WITH(back_project(planar_sino, cone),
                    "sinogram shape does not match the geometry");
}
