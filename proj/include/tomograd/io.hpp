#pragma once

// File formats.
//
// Arrays travel as a JSON sidecar plus a raw little-endian float32 payload:
//   {"shape": [..], "spacing": [..], "origin": [..],
//    "dtype": "f32le", "data": "<name>.raw"}
// Shape lists the fastest axis first (x, y[, z]); the payload is written in
// memory order.  The data filename is resolved relative to the sidecar.
//
// Geometry files describe a scan:
//   {"type": "parallel2d|fan2d|cone3d", "volume_shape": [..],
//    "volume_spacing": [..], "detector_shape": [..], "detector_spacing": [..],
//    "n_projections": n, "angular_range_deg": d, "sid": s, "sdd": s,
//    "projection_matrices": [[12 row-major numbers], ..]}
// sid/sdd apply to divergent beams; explicit matrices are optional and
// cone-beam only (normalized on load so the iso-center depth equals SID).
//
// CSV columns are written with round-trip precision.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tomograd/core.hpp"
#include "tomograd/geometry.hpp"
#include "tomograd/image.hpp"
#include "tomograd/pipelines.hpp"

static_assert(std::endian::native == std::endian::little,
              "raw payloads are little-endian; big-endian hosts are unsupported");

namespace tomograd {

using AnyGeometry = std::variant<ParallelGeometry, FanGeometry, ConeGeometry>;

struct RawArray {
  std::vector<std::size_t> shape;
  std::vector<double> spacing;
  std::vector<double> origin;
  std::vector<double> data;
};

namespace io_detail {

inline std::filesystem::path raw_path_for(const std::filesystem::path& sidecar) {
  std::filesystem::path p = sidecar;
  p.replace_extension(".raw");
  return p;
}

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  check(in.good(), "cannot open " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  check(!j.is_discarded(), "malformed JSON in " + path.string());
  return j;
}

// writers create missing output directories so configs can route artifacts
// into per-experiment folders
inline void ensure_parent(const std::filesystem::path& path) {
  const std::filesystem::path dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

}  // namespace io_detail

inline void write_raw(const std::filesystem::path& sidecar, const RawArray& arr) {
  check(arr.shape.size() == arr.spacing.size() &&
            arr.shape.size() == arr.origin.size(),
        "shape, spacing and origin must have the same rank");
  const std::filesystem::path raw = io_detail::raw_path_for(sidecar);
  io_detail::ensure_parent(sidecar);

  std::vector<float> payload(arr.data.size());
  for (std::size_t i = 0; i < arr.data.size(); ++i)
    payload[i] = float(arr.data[i]);

  std::ofstream rf(raw, std::ios::binary);
  check(rf.good(), "cannot write " + raw.string());
  rf.write(reinterpret_cast<const char*>(payload.data()),
           std::streamsize(payload.size() * sizeof(float)));
  check(rf.good(), "failed writing " + raw.string());

  nlohmann::json j;
  j["shape"] = arr.shape;
  j["spacing"] = arr.spacing;
  j["origin"] = arr.origin;
  j["dtype"] = "f32le";
  j["data"] = raw.filename().string();
  std::ofstream jf(sidecar);
  check(jf.good(), "cannot write " + sidecar.string());
  jf << j.dump(2) << "\n";
}

inline RawArray read_raw(const std::filesystem::path& sidecar) {
  const nlohmann::json j = io_detail::parse_json_file(sidecar);
  check(j.contains("shape") && j.contains("dtype") && j.contains("data"),
        "sidecar misses required keys in " + sidecar.string());
  check(j["dtype"].get<std::string>() == "f32le",
        "unsupported dtype in " + sidecar.string());

  RawArray arr;
  arr.shape = j["shape"].get<std::vector<std::size_t>>();
  const std::size_t rank = arr.shape.size();
  arr.spacing = j.value("spacing", std::vector<double>(rank, 1.0));
  arr.origin = j.value("origin", std::vector<double>(rank, 0.0));
  check(arr.spacing.size() == rank && arr.origin.size() == rank,
        "sidecar rank mismatch in " + sidecar.string());

  std::size_t count = 1;
  for (auto n : arr.shape) count *= n;

  const std::filesystem::path raw =
      sidecar.parent_path() / j["data"].get<std::string>();
  std::ifstream rf(raw, std::ios::binary | std::ios::ate);
  check(rf.good(), "cannot open " + raw.string());
  const std::size_t bytes = std::size_t(rf.tellg());
  check(bytes == count * sizeof(float),
        "payload size does not match the header shape for " + raw.string());
  rf.seekg(0);
  std::vector<float> payload(count);
  rf.read(reinterpret_cast<char*>(payload.data()), std::streamsize(bytes));
  check(rf.good(), "failed reading " + raw.string());

  arr.data.assign(payload.begin(), payload.end());
  return arr;
}

template <typename T>
void write_image(const std::filesystem::path& sidecar, const Image<T>& img) {
  RawArray arr{img.spec.shape, img.spec.spacing, img.spec.origin, {}};
  arr.data.assign(img.data.begin(), img.data.end());
  write_raw(sidecar, arr);
}

inline Image<> read_image(const std::filesystem::path& sidecar) {
  const RawArray arr = read_raw(sidecar);
  check(arr.shape.size() == 2 || arr.shape.size() == 3,
        "expected a 2D or 3D image in " + sidecar.string());
  VolumeSpec spec{arr.shape, arr.spacing, arr.origin};
  spec.validate();
  Image<> img(spec);
  img.data = arr.data;
  return img;
}

template <typename T>
void write_sinogram(const std::filesystem::path& sidecar, const Sinogram<T>& s) {
  RawArray arr;
  arr.shape = s.shape();
  if (s.is_cone()) {
    arr.spacing = {s.detector2d.spacing_u, s.detector2d.spacing_v, 1.0};
    arr.origin = {s.detector2d.origin_u, s.detector2d.origin_v, 0.0};
  } else {
    arr.spacing = {s.detector1d.spacing, 1.0};
    arr.origin = {s.detector1d.origin, 0.0};
  }
  arr.data.assign(s.data.begin(), s.data.end());
  write_raw(sidecar, arr);
}

// Read projection data and bind it to a known geometry.
inline Sinogram<> read_sinogram(const std::filesystem::path& sidecar,
                                const AnyGeometry& geo) {
  const RawArray arr = read_raw(sidecar);
  return std::visit(
      [&](const auto& g) -> Sinogram<> {
        using G = std::decay_t<decltype(g)>;
        Sinogram<> s;
        if constexpr (std::is_same_v<G, ConeGeometry>)
          s = Sinogram<>::cone_beam(g.n_projections, g.detector);
        else
          s = Sinogram<>::planar(g.n_projections, g.detector);
        check(arr.shape == s.shape(),
              "projection data in " + sidecar.string() +
                  " does not match the geometry");
        s.data = arr.data;
        return s;
      },
      geo);
}

// --- grayscale export ---------------------------------------------------------

// Binary PGM with the window [lo, hi) mapped to 0..255 (floor rule: the
// window midpoint lands on gray 127).  Rows are written top-down in
// decreasing y so +y points up in the rendered image.
template <typename T>
void export_pgm(const std::filesystem::path& path, const Image<T>& img,
                double lo, double hi) {
  check(img.dims() == 2, "PGM export expects a 2D image");
  check(lo < hi, "window must satisfy lo < hi");
  const std::size_t nx = img.nx(), ny = img.ny();
  io_detail::ensure_parent(path);
  std::ofstream f(path, std::ios::binary);
  check(f.good(), "cannot write " + path.string());
  f << "P5\n" << nx << " " << ny << "\n255\n";
  const double scale = 255.0 / (hi - lo);
  std::vector<unsigned char> row(nx);
  for (std::size_t r = 0; r < ny; ++r) {
    const std::size_t iy = ny - 1 - r;
    for (std::size_t ix = 0; ix < nx; ++ix) {
      double v = std::floor((double(img.at(ix, iy)) - lo) * scale);
      if (v < 0.0) v = 0.0;
      if (v > 255.0) v = 255.0;
      row[ix] = static_cast<unsigned char>(v);
    }
    f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(nx));
  }
  check(f.good(), "failed writing " + path.string());
}

// --- slices and line profiles ---------------------------------------------

// 2D slice of a 3D image perpendicular to `axis` at index `index`
template <typename T>
Image<T> extract_slice(const Image<T>& img, std::size_t axis, std::size_t index) {
  check(img.dims() == 3, "slice extraction expects a 3D image");
  check(axis < 3, "axis out of range");
  check(index < img.spec.shape[axis], "slice index out of range");
  const std::size_t a1 = (axis == 0) ? 1 : 0;
  const std::size_t a2 = (axis == 2) ? 1 : 2;
  VolumeSpec spec;
  spec.shape = {img.spec.shape[a1], img.spec.shape[a2]};
  spec.spacing = {img.spec.spacing[a1], img.spec.spacing[a2]};
  spec.origin = {img.spec.origin[a1], img.spec.origin[a2]};
  Image<T> out(spec);
  std::size_t idx3[3];
  idx3[axis] = index;
  for (std::size_t j = 0; j < spec.shape[1]; ++j) {
    idx3[a2] = j;
    for (std::size_t i = 0; i < spec.shape[0]; ++i) {
      idx3[a1] = i;
      out.at(i, j) = img.at(idx3[0], idx3[1], idx3[2]);
    }
  }
  return out;
}

struct ProfilePoint {
  double position = 0.0;  // world coordinate along the profile axis
  double value = 0.0;
};

// Values along `axis` of a 2D image with the other axis fixed at `index`.
template <typename T>
std::vector<ProfilePoint> line_profile(const Image<T>& img, std::size_t axis,
                                       std::size_t index) {
  check(img.dims() == 2, "line profiles run over 2D images (slice 3D first)");
  check(axis < 2, "axis out of range");
  const std::size_t other = 1 - axis;
  check(index < img.spec.shape[other], "profile index out of range");
  std::vector<ProfilePoint> pts(img.spec.shape[axis]);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t ix = (axis == 0) ? i : index;
    const std::size_t iy = (axis == 0) ? index : i;
    pts[i] = {img.coord(axis, i), double(img.at(ix, iy))};
  }
  return pts;
}

// --- CSV -----------------------------------------------------------------

inline std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

inline void write_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  io_detail::ensure_parent(path);
  std::ofstream f(path);
  check(f.good(), "cannot write " + path.string());
  for (std::size_t c = 0; c < header.size(); ++c)
    f << header[c] << (c + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      f << format_double(row[c]) << (c + 1 < row.size() ? "," : "\n");
  }
  check(f.good(), "failed writing " + path.string());
}

struct CsvContent {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvContent read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  check(f.good(), "cannot open " + path.string());
  CsvContent csv;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      csv.header = cells;
      first = false;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(std::stod(c));
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

inline void write_profile_csv(const std::filesystem::path& path,
                              const std::vector<ProfilePoint>& pts) {
  std::vector<std::vector<double>> rows;
  for (const auto& p : pts) rows.push_back({p.position, p.value});
  write_csv(path, {"position_mm", "value"}, rows);
}

inline void write_filter_csv(const std::filesystem::path& path,
                             const std::vector<double>& weights) {
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < weights.size(); ++k)
    rows.push_back({double(k), weights[k]});
  write_csv(path, {"bin_index", "weight"}, rows);
}

inline std::vector<double> read_filter_csv(const std::filesystem::path& path) {
  const CsvContent csv = read_csv(path);
  std::vector<double> w;
  for (const auto& row : csv.rows) {
    check(row.size() == 2, "filter CSV rows must be (bin_index, weight)");
    w.push_back(row[1]);
  }
  return w;
}

// --- geometry files ---------------------------------------------------------

inline AnyGeometry load_geometry_json(const nlohmann::json& j,
                                      const std::string& origin_hint) {
  for (const char* key :
       {"type", "volume_shape", "volume_spacing", "detector_shape",
        "detector_spacing", "n_projections", "angular_range_deg"})
    check(j.contains(key),
          std::string("geometry misses key '") + key + "' in " + origin_hint);

  const std::string type = j["type"].get<std::string>();
  const auto vshape = j["volume_shape"].get<std::vector<std::size_t>>();
  const auto vspacing = j["volume_spacing"].get<std::vector<double>>();
  const auto dshape = j["detector_shape"].get<std::vector<std::size_t>>();
  const auto dspacing = j["detector_spacing"].get<std::vector<double>>();
  const auto n_proj = j["n_projections"].get<std::size_t>();
  const double range = j["angular_range_deg"].get<double>() * std::numbers::pi / 180.0;
  check(vshape.size() == vspacing.size(), "volume shape/spacing rank mismatch");
  check(dshape.size() == dspacing.size(), "detector shape/spacing rank mismatch");

  if (type == "parallel2d") {
    check(vshape.size() == 2 && dshape.size() == 1,
          "parallel2d expects a 2D volume and 1D detector");
    return make_parallel(VolumeSpec::centered(vshape, vspacing),
                         Detector1D::centered(dshape[0], dspacing[0]), n_proj,
                         range);
  }
  if (type == "fan2d") {
    check(vshape.size() == 2 && dshape.size() == 1,
          "fan2d expects a 2D volume and 1D detector");
    check(j.contains("sid") && j.contains("sdd"), "fan2d needs sid and sdd");
    return make_fan(VolumeSpec::centered(vshape, vspacing),
                    Detector1D::centered(dshape[0], dspacing[0]), n_proj, range,
                    j["sid"].get<double>(), j["sdd"].get<double>());
  }
  if (type == "cone3d") {
    check(vshape.size() == 3 && dshape.size() == 2,
          "cone3d expects a 3D volume and 2D detector");
    check(j.contains("sid") && j.contains("sdd"), "cone3d needs sid and sdd");
    const auto vol = VolumeSpec::centered(vshape, vspacing);
    const auto det =
        Detector2D::centered(dshape[0], dshape[1], dspacing[0], dspacing[1]);
    const double sid = j["sid"].get<double>(), sdd = j["sdd"].get<double>();
    if (j.contains("projection_matrices")) {
      std::vector<Mat34> mats;
      for (const auto& jm : j["projection_matrices"]) {
        const auto vals = jm.get<std::vector<double>>();
        check(vals.size() == 12, "projection matrices need 12 row-major entries");
        Mat34 P;
        std::copy(vals.begin(), vals.end(), P.m.begin());
        mats.push_back(P);
      }
      check(mats.size() == n_proj,
            "projection matrix count must equal n_projections");
      return make_cone_from_matrices(vol, det, range, sid, sdd, std::move(mats));
    }
    return make_cone(vol, det, n_proj, range, sid, sdd);
  }
  throw Error("unknown geometry type '" + type + "' in " + origin_hint);
}

inline AnyGeometry load_geometry(const std::filesystem::path& path) {
  return load_geometry_json(io_detail::parse_json_file(path), path.string());
}

// per-view trajectory data (inspection / external tooling)
inline void write_trajectory(const std::filesystem::path& path,
                             const AnyGeometry& geo) {
  nlohmann::json j;
  std::visit(
      [&](const auto& g) {
        using G = std::decay_t<decltype(g)>;
        j["angles_rad"] = g.angles;
        if constexpr (std::is_same_v<G, ConeGeometry>) {
          j["type"] = "cone3d";
          auto& mats = j["projection_matrices"];
          mats = nlohmann::json::array();
          for (const auto& P : g.matrices)
            mats.push_back(std::vector<double>(P.m.begin(), P.m.end()));
        } else {
          j["type"] = std::is_same_v<G, FanGeometry> ? "fan2d" : "parallel2d";
          auto& rays = j["rays"];
          rays = nlohmann::json::array();
          for (const auto& r : g.rays) rays.push_back({r.x, r.y});
        }
      },
      geo);
  io_detail::ensure_parent(path);
  std::ofstream f(path);
  check(f.good(), "cannot write " + path.string());
  f << j.dump(2) << "\n";
}

// --- experiment configuration -------------------------------------------

struct LoadedExperiment {
  AnyGeometry geometry;
  ExperimentConfig cfg;
  std::map<std::string, std::string> outputs;  // role -> path
};

// {"geometry": "file.json"|{inline}, "phantom": "...",
//  "noise_relative_std": x, "learning_rate": x, "iterations": n,
//  "tv_lambda": x, "seed": n, "filter_window": n,
//  "outputs": {"image": "...", ...}}
inline LoadedExperiment load_experiment_config(const std::filesystem::path& path) {
  const nlohmann::json j = io_detail::parse_json_file(path);
  check(j.contains("geometry"), "experiment config needs a geometry");

  LoadedExperiment exp;
  if (j["geometry"].is_string()) {
    std::filesystem::path gp = j["geometry"].get<std::string>();
    if (gp.is_relative()) gp = path.parent_path() / gp;
    exp.geometry = load_geometry(gp);
  } else {
    exp.geometry = load_geometry_json(j["geometry"], path.string());
  }

  exp.cfg.phantom = j.value("phantom", exp.cfg.phantom);
  exp.cfg.noise_relative_std =
      j.value("noise_relative_std", exp.cfg.noise_relative_std);
  exp.cfg.learning_rate = j.value("learning_rate", exp.cfg.learning_rate);
  exp.cfg.iterations = j.value("iterations", exp.cfg.iterations);
  exp.cfg.tv_lambda = j.value("tv_lambda", exp.cfg.tv_lambda);
  exp.cfg.seed = j.value("seed", exp.cfg.seed);
  exp.cfg.filter_window = j.value("filter_window", exp.cfg.filter_window);

  if (j.contains("outputs"))
    for (const auto& [key, val] : j["outputs"].items()) {
      std::filesystem::path op = val.get<std::string>();
      if (op.is_relative()) op = path.parent_path() / op;
      exp.outputs[key] = op.string();
    }
  return exp;
}

}  // namespace tomograd
