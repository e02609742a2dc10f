#pragma once

// Command-line front end.  Every subcommand reads and writes the file formats
// from io.hpp, so full experiments are shell pipelines:
//
//   tomograd phantom     --geometry g.json --out phantom.json
//   tomograd project     --geometry g.json --image phantom.json --out sino.json
//   tomograd reconstruct fdk --geometry g.json --sino sino.json --out recon.json
//   tomograd export-pgm  --image recon.json --lo 0 --hi 0.05 --out recon.pgm
//
// Exit codes: 0 success, 1 bad usage, 2 data or processing error.

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "tomograd/io.hpp"
#include "tomograd/pipelines.hpp"

namespace tomograd::cli {

namespace detail {

inline const ParallelGeometry& expect_parallel(const AnyGeometry& geo,
                                               const std::string& who) {
  const auto* g = std::get_if<ParallelGeometry>(&geo);
  check(g != nullptr, who + " expects a parallel2d geometry");
  return *g;
}

inline const ConeGeometry& expect_cone(const AnyGeometry& geo,
                                       const std::string& who) {
  const auto* g = std::get_if<ConeGeometry>(&geo);
  check(g != nullptr, who + " expects a cone3d geometry");
  return *g;
}

// central slice unless an explicit index was given (-1 = centre)
inline Image<> slice_for_display(const Image<>& img, long long index) {
  if (img.dims() == 2) {
    check(index < 0, "--slice only applies to 3D images");
    return img;
  }
  const std::size_t nz = img.spec.shape[2];
  const std::size_t iz = index < 0 ? nz / 2 : std::size_t(index);
  check(iz < nz, "slice index out of range");
  return extract_slice(img, 2, iz);
}

inline std::vector<std::vector<double>> history_rows(
    const std::vector<double>& history) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < history.size(); ++i)
    rows.push_back({double(i), history[i]});
  return rows;
}

// central-row profile (central z slice first for volumes)
inline void write_central_profile(const std::string& path, const Image<>& img) {
  const Image<> sl = img.dims() == 3 ? extract_slice(img, 2, img.nz() / 2) : img;
  write_profile_csv(path, line_profile(sl, 0, sl.ny() / 2));
}

}  // namespace detail

// Runs one invocation; `args` excludes the program name.
inline int run(const std::vector<std::string>& args) {
  CLI::App app{"differentiable tomography toolkit"};
  app.require_subcommand(1);

  // --- phantom ------------------------------------------------------------
  auto* cmd_phantom = app.add_subcommand(
      "phantom", "rasterize a test object onto a volume grid");
  std::string ph_geo, ph_out, ph_name = "shepp-logan", ph_type = "shepp-logan-2d";
  std::size_t ph_size = 0;
  double ph_spacing = 1.0;
  cmd_phantom->add_option("--geometry", ph_geo,
                          "geometry JSON supplying the grid");
  cmd_phantom->add_option("--out", ph_out, "output image sidecar")->required();
  cmd_phantom->add_option("--name", ph_name,
                          "with --geometry: shepp-logan or disk (2D only)");
  cmd_phantom->add_option("--type", ph_type,
                          "with --size: shepp-logan-2d, shepp-logan-3d or disk")
      ->check(CLI::IsMember({"shepp-logan-2d", "shepp-logan-3d", "disk"}));
  cmd_phantom->add_option("--size", ph_size, "edge length of a centered grid");
  cmd_phantom->add_option("--spacing", ph_spacing, "grid spacing (with --size)");
  cmd_phantom->callback([&] {
    check(ph_geo.empty() != (ph_size == 0),
          "pass exactly one of --geometry or --size");
    if (!ph_geo.empty()) {
      const AnyGeometry geo = load_geometry(ph_geo);
      std::visit(
          [&](const auto& g) {
            if constexpr (std::is_same_v<std::decay_t<decltype(g)>, ConeGeometry>) {
              check(ph_name == "shepp-logan",
                    "3D geometries support the shepp-logan phantom only");
              write_image(ph_out, shepp_logan_3d<double>(g.volume));
            } else {
              write_image(ph_out, make_phantom_2d(ph_name, g.volume));
            }
          },
          geo);
      return;
    }
    if (ph_type == "shepp-logan-3d") {
      const auto vol = VolumeSpec::centered({ph_size, ph_size, ph_size},
                                            {ph_spacing, ph_spacing, ph_spacing});
      write_image(ph_out, shepp_logan_3d<double>(vol));
      return;
    }
    const auto vol =
        VolumeSpec::centered({ph_size, ph_size}, {ph_spacing, ph_spacing});
    write_image(ph_out, make_phantom_2d(
                            ph_type == "disk" ? "disk" : "shepp-logan", vol));
  });

  // --- trajectory -----------------------------------------------------------
  auto* cmd_traj = app.add_subcommand(
      "trajectory", "dump per-view angles, rays or projection matrices");
  std::string tr_geo, tr_out;
  cmd_traj->add_option("--geometry", tr_geo, "geometry JSON")->required();
  cmd_traj->add_option("--out", tr_out, "output JSON")->required();
  cmd_traj->callback([&] { write_trajectory(tr_out, load_geometry(tr_geo)); });

  // --- project ------------------------------------------------------------
  auto* cmd_project =
      app.add_subcommand("project", "forward project an image to a sinogram");
  std::string pr_geo, pr_img, pr_out;
  double pr_noise = 0.0;
  std::uint64_t pr_seed = 1337;
  cmd_project->add_option("--geometry", pr_geo, "geometry JSON")->required();
  cmd_project->add_option("--image", pr_img, "input image sidecar")->required();
  cmd_project->add_option("--out", pr_out, "output sinogram sidecar")->required();
  cmd_project->add_option("--noise-rel", pr_noise,
                          "gaussian noise std relative to the sinogram peak");
  cmd_project->add_option("--seed", pr_seed, "noise seed");
  cmd_project->callback([&] {
    const AnyGeometry geo = load_geometry(pr_geo);
    const Image<> img = read_image(pr_img);
    Sinogram<> sino =
        std::visit([&](const auto& g) { return forward_project(img, g); }, geo);
    if (pr_noise > 0.0) sino = add_gaussian_noise(sino, pr_noise, pr_seed);
    write_sinogram(pr_out, sino);
  });

  // --- reconstruct ----------------------------------------------------------
  auto* cmd_rec = app.add_subcommand("reconstruct", "sinogram to image");
  cmd_rec->require_subcommand(1);

  auto* cmd_fbp =
      cmd_rec->add_subcommand("fbp", "filtered backprojection (parallel beam)");
  std::string fbp_geo, fbp_sino, fbp_out, fbp_filter = "ramlak", fbp_filter_csv;
  cmd_fbp->add_option("--geometry", fbp_geo, "geometry JSON")->required();
  cmd_fbp->add_option("--sino", fbp_sino, "sinogram sidecar")->required();
  cmd_fbp->add_option("--out", fbp_out, "output image sidecar")->required();
  cmd_fbp->add_option("--filter", fbp_filter, "ramlak or ramp")
      ->check(CLI::IsMember({"ramlak", "ramp"}));
  cmd_fbp->add_option("--filter-csv", fbp_filter_csv,
                      "frequency weights CSV overriding --filter");
  cmd_fbp->callback([&] {
    const AnyGeometry geo = load_geometry(fbp_geo);
    const auto& g = detail::expect_parallel(geo, "fbp");
    const Sinogram<> sino = read_sinogram(fbp_sino, geo);
    if (!fbp_filter_csv.empty()) {
      std::vector<double> w = read_filter_csv(fbp_filter_csv);
      const Filter1D filt{g.detector.n_bins, w.size(), g.detector.spacing,
                          std::move(w)};
      write_image(fbp_out, fbp_reconstruct(sino, g, filt));
      return;
    }
    const FilterKind kind =
        fbp_filter == "ramp" ? FilterKind::ramp : FilterKind::ramlak;
    write_image(fbp_out, fbp_reconstruct(sino, g, kind));
  });

  auto* cmd_fdk = cmd_rec->add_subcommand(
      "fdk", "cone-beam filtered backprojection (short scans supported)");
  std::string fdk_cfg, fdk_geo, fdk_sino, fdk_out;
  bool fdk_no_parker = false;
  cmd_fdk->add_option("--config", fdk_cfg,
                      "experiment config JSON (self-contained run)");
  cmd_fdk->add_option("--geometry", fdk_geo, "geometry JSON");
  cmd_fdk->add_option("--sino", fdk_sino, "sinogram sidecar");
  cmd_fdk->add_option("--out", fdk_out, "output image sidecar");
  cmd_fdk->add_flag("--no-short-scan-weights", fdk_no_parker,
                    "skip redundancy weighting (full scans)");
  cmd_fdk->callback([&] {
    if (!fdk_cfg.empty()) {
      check(fdk_geo.empty() && fdk_sino.empty() && fdk_out.empty(),
            "--config runs are self-contained; drop --geometry/--sino/--out");
      const LoadedExperiment exp = load_experiment_config(fdk_cfg);
      const auto& g = detail::expect_cone(exp.geometry, "fdk");
      const FdkResult r = experiment_fdk_short_scan(g, exp.cfg, !fdk_no_parker);
      for (const auto& [role, path] : exp.outputs) {
        if (role == "image") write_image(path, r.reconstruction);
        else if (role == "phantom_image") write_image(path, r.phantom);
        else if (role == "sinogram") write_sinogram(path, r.sinogram);
        else if (role == "profile_csv")
          detail::write_central_profile(path, r.reconstruction);
        else if (role == "phantom_profile_csv")
          detail::write_central_profile(path, r.phantom);
        else throw Error("unknown output role '" + role + "'");
      }
      return;
    }
    check(!fdk_geo.empty() && !fdk_sino.empty() && !fdk_out.empty(),
          "need --config or all of --geometry, --sino, --out");
    const AnyGeometry geo = load_geometry(fdk_geo);
    const auto& g = detail::expect_cone(geo, "fdk");
    const Sinogram<> sino = read_sinogram(fdk_sino, geo);
    write_image(fdk_out, fdk_reconstruct(sino, g, !fdk_no_parker));
  });

  auto* cmd_iter = cmd_rec->add_subcommand(
      "iterative", "gradient-descent reconstruction with a TV prior");
  std::string it_cfg, it_geo, it_sino, it_out, it_loss_csv;
  ExperimentConfig it_opts;
  cmd_iter->add_option("--config", it_cfg,
                       "experiment config JSON (self-contained run)");
  cmd_iter->add_option("--geometry", it_geo, "geometry JSON");
  cmd_iter->add_option("--sino", it_sino, "sinogram sidecar");
  cmd_iter->add_option("--out", it_out, "output image sidecar");
  cmd_iter->add_option("--loss-csv", it_loss_csv, "objective history CSV");
  cmd_iter->add_option("--lambda", it_opts.tv_lambda, "TV weight");
  cmd_iter->add_option("--lr", it_opts.learning_rate, "gradient step size");
  cmd_iter->add_option("--iterations", it_opts.iterations, "descent steps");
  cmd_iter->callback([&] {
    if (!it_cfg.empty()) {
      check(it_geo.empty() && it_sino.empty() && it_out.empty(),
            "--config runs are self-contained; drop --geometry/--sino/--out");
      const LoadedExperiment exp = load_experiment_config(it_cfg);
      const auto& g = detail::expect_parallel(exp.geometry, "iterative");
      const TvResult r = experiment_iterative_tv(g, exp.cfg);
      for (const auto& [role, path] : exp.outputs) {
        if (role == "image") write_image(path, r.reconstruction);
        else if (role == "fbp_image") write_image(path, r.fbp_reference);
        else if (role == "phantom_image") write_image(path, r.phantom);
        else if (role == "sinogram") write_sinogram(path, r.noisy_sinogram);
        else if (role == "loss_csv")
          write_csv(path, {"iteration", "loss"},
                    detail::history_rows(r.loss_history));
        else if (role == "profile_csv")
          detail::write_central_profile(path, r.reconstruction);
        else if (role == "fbp_profile_csv")
          detail::write_central_profile(path, r.fbp_reference);
        else throw Error("unknown output role '" + role + "'");
      }
      return;
    }
    check(!it_geo.empty() && !it_sino.empty() && !it_out.empty(),
          "need --config or all of --geometry, --sino, --out");
    const AnyGeometry geo = load_geometry(it_geo);
    const auto& g = detail::expect_parallel(geo, "iterative");
    const Sinogram<> sino = read_sinogram(it_sino, geo);
    const auto [rec, history] = tv_reconstruct(sino, g, it_opts);
    write_image(it_out, rec);
    if (!it_loss_csv.empty())
      write_csv(it_loss_csv, {"iteration", "loss"},
                detail::history_rows(history));
  });

  // --- learn-filter -----------------------------------------------------------
  auto* cmd_learn = app.add_subcommand(
      "learn-filter",
      "train reconstruction-filter weights against a known phantom");
  std::string lf_cfg;
  cmd_learn->add_option("--config", lf_cfg, "experiment config JSON")->required();
  cmd_learn->callback([&] {
    const LoadedExperiment exp = load_experiment_config(lf_cfg);
    const auto& g = detail::expect_parallel(exp.geometry, "learn-filter");
    const FilterLearningResult r = experiment_learn_filter(g, exp.cfg);
    for (const auto& [role, path] : exp.outputs) {
      if (role == "filter_csv") write_filter_csv(path, r.learned_weights);
      else if (role == "ramp_csv") write_filter_csv(path, r.ramp_init.weights);
      else if (role == "ramlak_csv")
        write_filter_csv(path, r.ramlak_reference.weights);
      else if (role == "loss_csv")
        write_csv(path, {"iteration", "loss"},
                  detail::history_rows(r.loss_history));
      else if (role == "distance_csv")
        write_csv(path, {"iteration", "distance"},
                  detail::history_rows(r.distance_history));
      else if (role == "image") write_image(path, r.reconstruction);
      else if (role == "profile_csv")
        detail::write_central_profile(path, r.reconstruction);
      else throw Error("unknown output role '" + role + "'");
    }
  });

  // --- profile ---------------------------------------------------------------
  auto* cmd_profile =
      app.add_subcommand("profile", "extract a line profile as CSV");
  std::string pf_img, pf_out, pf_axis = "x";
  long long pf_index = -1, pf_slice = -1;
  cmd_profile->add_option("--image", pf_img, "image sidecar")->required();
  cmd_profile->add_option("--out", pf_out, "output CSV")->required();
  cmd_profile->add_option("--axis", pf_axis, "profile axis")
      ->check(CLI::IsMember({"x", "y"}));
  cmd_profile->add_option("--index", pf_index,
                          "row/column index (default: centre)");
  cmd_profile->add_option("--slice", pf_slice,
                          "z slice for 3D images (default: centre)");
  cmd_profile->callback([&] {
    const Image<> img = detail::slice_for_display(read_image(pf_img), pf_slice);
    const std::size_t axis = pf_axis == "x" ? 0 : 1;
    const std::size_t other_n = img.spec.shape[1 - axis];
    const std::size_t index =
        pf_index < 0 ? other_n / 2 : std::size_t(pf_index);
    write_profile_csv(pf_out, line_profile(img, axis, index));
  });

  // --- export-pgm -----------------------------------------------------------
  auto* cmd_pgm = app.add_subcommand(
      "export-pgm", "window a 2D image (or a z slice of a 3D one) to 8-bit PGM");
  std::string xp_img, xp_out;
  double xp_lo = 0.0, xp_hi = 0.0;
  bool xp_have_lo = false, xp_have_hi = false;
  long long xp_slice = -1;
  cmd_pgm->add_option("--image", xp_img, "image sidecar")->required();
  cmd_pgm->add_option("--out", xp_out, "output PGM")->required();
  cmd_pgm->add_option("--lo", xp_lo, "window low edge (default: data min)")
      ->each([&](const std::string&) { xp_have_lo = true; });
  cmd_pgm->add_option("--hi", xp_hi, "window high edge (default: data max)")
      ->each([&](const std::string&) { xp_have_hi = true; });
  cmd_pgm->add_option("--slice", xp_slice, "z slice for 3D images");
  cmd_pgm->callback([&] {
    const Image<> img = detail::slice_for_display(read_image(xp_img), xp_slice);
    double lo = xp_lo, hi = xp_hi;
    if (!xp_have_lo || !xp_have_hi) {
      double mn = img.data.empty() ? 0.0 : img.data[0], mx = mn;
      for (double v : img.data) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      if (!xp_have_lo) lo = mn;
      if (!xp_have_hi) hi = mx;
    }
    export_pgm(xp_out, img, lo, hi);
  });

  try {
    std::vector<const char*> argv{"tomograd"};
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage error
    return code == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

}  // namespace tomograd::cli
