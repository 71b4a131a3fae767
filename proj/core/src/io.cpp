#include "licam/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace licam {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) {
    throw IoError("cannot open for reading: " + path.string());
  }
  return in;
}

json load_json(const std::filesystem::path& path) {
  auto in = open_in(path, false);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void save_json(const std::filesystem::path& path, const json& j) {
  auto out = open_out(path, false);
  out << j.dump(2) << '\n';
}

json vec_to_json(const Eigen::Vector3d& v) { return json{v.x(), v.y(), v.z()}; }
json vec_to_json(const Eigen::Vector2d& v) { return json{v.x(), v.y()}; }

Eigen::Vector3d vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw IoError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Eigen::Vector2d vec2_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw IoError("expected a 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

// -- PLY ----------------------------------------------------------------------

namespace {

enum class PlyType { kChar, kUChar, kShort, kUShort, kInt, kUInt, kFloat, kDouble };

size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::kChar:
    case PlyType::kUChar:
      return 1;
    case PlyType::kShort:
    case PlyType::kUShort:
      return 2;
    case PlyType::kInt:
    case PlyType::kUInt:
    case PlyType::kFloat:
      return 4;
    case PlyType::kDouble:
      return 8;
  }
  return 0;
}

PlyType ply_type_from_string(const std::string& s) {
  if (s == "char" || s == "int8") return PlyType::kChar;
  if (s == "uchar" || s == "uint8") return PlyType::kUChar;
  if (s == "short" || s == "int16") return PlyType::kShort;
  if (s == "ushort" || s == "uint16") return PlyType::kUShort;
  if (s == "int" || s == "int32") return PlyType::kInt;
  if (s == "uint" || s == "uint32") return PlyType::kUInt;
  if (s == "float" || s == "float32") return PlyType::kFloat;
  if (s == "double" || s == "float64") return PlyType::kDouble;
  throw IoError("unsupported PLY property type: " + s);
}

double read_binary_scalar(std::istream& in, PlyType t) {
  char buf[8];
  in.read(buf, ply_type_size(t));
  switch (t) {
    case PlyType::kChar: {
      std::int8_t v;
      std::memcpy(&v, buf, 1);
      return v;
    }
    case PlyType::kUChar: {
      std::uint8_t v;
      std::memcpy(&v, buf, 1);
      return v;
    }
    case PlyType::kShort: {
      std::int16_t v;
      std::memcpy(&v, buf, 2);
      return v;
    }
    case PlyType::kUShort: {
      std::uint16_t v;
      std::memcpy(&v, buf, 2);
      return v;
    }
    case PlyType::kInt: {
      std::int32_t v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case PlyType::kUInt: {
      std::uint32_t v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case PlyType::kFloat: {
      float v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case PlyType::kDouble: {
      double v;
      std::memcpy(&v, buf, 8);
      return v;
    }
  }
  return 0.0;
}

}  // namespace

void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               const PlyWriteOptions& options) {
  auto out = open_out(path, options.binary);
  const char* scalar = options.double_precision ? "double" : "float";

  out << "ply\n";
  out << (options.binary ? "format binary_little_endian 1.0\n"
                         : "format ascii 1.0\n");
  out << "element vertex " << cloud.points.size() << "\n";
  for (const char* p : {"x", "y", "z"}) {
    out << "property " << scalar << " " << p << "\n";
  }
  if (cloud.has_normals()) {
    for (const char* p : {"nx", "ny", "nz"}) {
      out << "property " << scalar << " " << p << "\n";
    }
  }
  if (cloud.has_curvatures()) {
    out << "property " << scalar << " curvature\n";
  }
  out << "end_header\n";

  auto emit = [&](double value) {
    if (options.binary) {
      if (options.double_precision) {
        out.write(reinterpret_cast<const char*>(&value), 8);
      } else {
        const float f = static_cast<float>(value);
        out.write(reinterpret_cast<const char*>(&f), 4);
      }
    } else {
      out << value;
    }
  };

  std::ostringstream ascii_line;
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    std::vector<double> row{cloud.points[i].x(), cloud.points[i].y(),
                            cloud.points[i].z()};
    if (cloud.has_normals()) {
      row.insert(row.end(), {cloud.normals[i].x(), cloud.normals[i].y(),
                             cloud.normals[i].z()});
    }
    if (cloud.has_curvatures()) {
      row.push_back(cloud.curvatures[i]);
    }
    if (options.binary) {
      for (double v : row) emit(v);
    } else {
      out.precision(17);
      for (size_t c = 0; c < row.size(); ++c) {
        if (c) out << ' ';
        out << row[c];
      }
      out << '\n';
    }
  }
  if (!out) throw IoError("failed while writing " + path.string());
}

PointCloud read_ply(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") {
    throw IoError(path.string() + " is not a PLY file");
  }

  bool binary = false;
  size_t vertex_count = 0;
  struct Property {
    std::string name;
    PlyType type;
  };
  std::vector<Property> properties;
  bool in_vertex_element = false;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    if (token == "comment") continue;
    if (token == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian") {
        binary = true;
      } else if (fmt == "ascii") {
        binary = false;
      } else {
        throw IoError("unsupported PLY format: " + fmt);
      }
    } else if (token == "element") {
      std::string name;
      size_t count;
      ls >> name >> count;
      if (name == "vertex") {
        in_vertex_element = true;
        vertex_count = count;
      } else {
        in_vertex_element = false;
        if (count > 0 && properties.empty()) {
          throw IoError("PLY vertex element must come first");
        }
        break;  // only the vertex element is read
      }
    } else if (token == "property") {
      if (!in_vertex_element) continue;
      std::string type_str, name;
      ls >> type_str >> name;
      if (type_str == "list") {
        throw IoError("list properties on vertices are not supported");
      }
      properties.push_back({name, ply_type_from_string(type_str)});
    } else if (token == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) {
    // We broke out at a non-vertex element; skip forward to end_header.
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line == "end_header") {
        header_done = true;
        break;
      }
    }
  }
  if (!header_done) throw IoError("PLY header without end_header");

  int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, icurv = -1;
  for (size_t p = 0; p < properties.size(); ++p) {
    const std::string& n = properties[p].name;
    if (n == "x") ix = static_cast<int>(p);
    if (n == "y") iy = static_cast<int>(p);
    if (n == "z") iz = static_cast<int>(p);
    if (n == "nx") inx = static_cast<int>(p);
    if (n == "ny") iny = static_cast<int>(p);
    if (n == "nz") inz = static_cast<int>(p);
    if (n == "curvature") icurv = static_cast<int>(p);
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    throw IoError("PLY vertex element must have x, y, z");
  }
  const bool with_normals = inx >= 0 && iny >= 0 && inz >= 0;

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  if (with_normals) cloud.normals.reserve(vertex_count);
  if (icurv >= 0) cloud.curvatures.reserve(vertex_count);

  std::vector<double> row(properties.size());
  for (size_t v = 0; v < vertex_count; ++v) {
    if (binary) {
      for (size_t p = 0; p < properties.size(); ++p) {
        row[p] = read_binary_scalar(in, properties[p].type);
      }
    } else {
      for (size_t p = 0; p < properties.size(); ++p) {
        if (!(in >> row[p])) throw IoError("truncated PLY data");
      }
    }
    if (!in) throw IoError("truncated PLY data");
    cloud.points.emplace_back(row[ix], row[iy], row[iz]);
    if (with_normals) {
      cloud.normals.emplace_back(row[inx], row[iny], row[inz]);
    }
    if (icurv >= 0) cloud.curvatures.push_back(row[icurv]);
  }
  return cloud;
}

// -- depth maps ---------------------------------------------------------------

void write_depth_map(const std::filesystem::path& path, const DepthMap& map) {
  auto out = open_out(path, true);
  out.write("DMAP", 4);
  const std::uint32_t w = map.width, h = map.height;
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  out.write(reinterpret_cast<const char*>(map.depth.data()),
            static_cast<std::streamsize>(map.depth.size() * sizeof(float)));
  if (!out) throw IoError("failed while writing " + path.string());
}

DepthMap read_depth_map(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "DMAP", 4) != 0) {
    throw IoError(path.string() + " is not a DMAP file");
  }
  std::uint32_t w = 0, h = 0;
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  DepthMap map(static_cast<int>(w), static_cast<int>(h));
  in.read(reinterpret_cast<char*>(map.depth.data()),
          static_cast<std::streamsize>(map.depth.size() * sizeof(float)));
  if (!in) throw IoError("truncated DMAP file: " + path.string());
  return map;
}

// -- JSON ---------------------------------------------------------------------

json pose_to_json(const Pose& pose) {
  return json{{"rotation",
               {pose.rotation.w(), pose.rotation.x(), pose.rotation.y(),
                pose.rotation.z()}},
              {"translation", vec_to_json(pose.translation)}};
}

Pose pose_from_json(const json& j) {
  const auto& q = j.at("rotation");
  if (!q.is_array() || q.size() != 4) {
    throw IoError("pose rotation must be [w, x, y, z]");
  }
  return Pose(Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(),
                                 q[2].get<double>(), q[3].get<double>()),
              vec3_from_json(j.at("translation")));
}

void write_feature_sets(const std::filesystem::path& path,
                        const std::vector<FeatureSet>& stations) {
  json out;
  out["descriptor_length"] =
      stations.empty() || stations.front().empty()
          ? 0
          : stations.front().front().descriptor.size();
  json js = json::array();
  for (const auto& set : stations) {
    json sj = json::array();
    for (const auto& f : set) {
      json fj;
      fj["pixel"] = vec_to_json(f.pixel);
      fj["depth"] = f.depth;
      fj["descriptor"] =
          std::vector<double>(f.descriptor.data(),
                              f.descriptor.data() + f.descriptor.size());
      sj.push_back(std::move(fj));
    }
    js.push_back(std::move(sj));
  }
  out["stations"] = std::move(js);
  save_json(path, out);
}

std::vector<FeatureSet> read_feature_sets(const std::filesystem::path& path) {
  const json j = load_json(path);
  std::vector<FeatureSet> stations;
  for (const auto& sj : j.at("stations")) {
    FeatureSet set;
    for (const auto& fj : sj) {
      Feature f;
      f.station = static_cast<int>(stations.size());
      f.pixel = vec2_from_json(fj.at("pixel"));
      f.depth = fj.at("depth").get<double>();
      const auto& desc = fj.at("descriptor");
      f.descriptor.resize(desc.size());
      for (size_t d = 0; d < desc.size(); ++d) {
        f.descriptor[d] = desc[d].get<double>();
      }
      if (f.depth <= 0.0) continue;  // only key points with depth are kept
      set.push_back(std::move(f));
    }
    stations.push_back(std::move(set));
  }
  return stations;
}

void write_poses(const std::filesystem::path& path,
                 const std::vector<Pose>& poses) {
  json out;
  json arr = json::array();
  for (const auto& pose : poses) arr.push_back(pose_to_json(pose));
  out["poses"] = std::move(arr);
  save_json(path, out);
}

std::vector<Pose> read_poses(const std::filesystem::path& path) {
  const json j = load_json(path);
  std::vector<Pose> poses;
  for (const auto& pj : j.at("poses")) poses.push_back(pose_from_json(pj));
  return poses;
}

void write_pose(const std::filesystem::path& path, const Pose& pose) {
  save_json(path, pose_to_json(pose));
}

Pose read_pose(const std::filesystem::path& path) {
  return pose_from_json(load_json(path));
}

void write_landmarks(const std::filesystem::path& path,
                     const std::vector<Landmark>& landmarks) {
  json arr = json::array();
  for (const auto& l : landmarks) {
    arr.push_back(json{{"id", l.id}, {"position", vec_to_json(l.position)}});
  }
  save_json(path, json{{"landmarks", std::move(arr)}});
}

std::vector<Landmark> read_landmarks(const std::filesystem::path& path) {
  const json j = load_json(path);
  std::vector<Landmark> out;
  for (const auto& lj : j.at("landmarks")) {
    out.push_back(Landmark{lj.at("id").get<int>(),
                           vec3_from_json(lj.at("position"))});
  }
  return out;
}

void write_rough_transforms(const std::filesystem::path& path,
                            const std::vector<RoughTransform>& transforms) {
  json arr = json::array();
  for (const auto& t : transforms) {
    json tj = pose_to_json(t.transform);
    tj["target"] = t.target;
    tj["source"] = t.source;
    arr.push_back(std::move(tj));
  }
  save_json(path, json{{"pairs", std::move(arr)}});
}

std::vector<RoughTransform> read_rough_transforms(
    const std::filesystem::path& path) {
  const json j = load_json(path);
  std::vector<RoughTransform> out;
  for (const auto& tj : j.at("pairs")) {
    out.push_back(RoughTransform{tj.at("target").get<int>(),
                                 tj.at("source").get<int>(),
                                 pose_from_json(tj)});
  }
  return out;
}

void write_camera_observations(const std::filesystem::path& path,
                               const std::vector<CameraObservation>& obs) {
  json arr = json::array();
  for (const auto& o : obs) {
    arr.push_back(json{{"camera", o.camera},
                       {"landmark", o.landmark},
                       {"pixel", vec_to_json(o.pixel)},
                       {"depth", o.depth},
                       {"weight", o.weight}});
  }
  save_json(path, json{{"observations", std::move(arr)}});
}

std::vector<CameraObservation> read_camera_observations(
    const std::filesystem::path& path) {
  const json j = load_json(path);
  std::vector<CameraObservation> out;
  for (const auto& oj : j.at("observations")) {
    out.push_back(CameraObservation{
        oj.at("camera").get<int>(), oj.at("landmark").get<int>(),
        vec2_from_json(oj.at("pixel")), oj.at("depth").get<double>(),
        oj.at("weight").get<double>()});
  }
  return out;
}

void write_lidar_observations(const std::filesystem::path& path,
                              const std::vector<LidarObservation>& obs) {
  json arr = json::array();
  for (const auto& o : obs) {
    arr.push_back(json{{"target", o.target},
                       {"source", o.source},
                       {"point", vec_to_json(o.point)},
                       {"neighbor", vec_to_json(o.neighbor)},
                       {"normal", vec_to_json(o.normal)},
                       {"weight", o.weight}});
  }
  save_json(path, json{{"observations", std::move(arr)}});
}

std::vector<LidarObservation> read_lidar_observations(
    const std::filesystem::path& path) {
  const json j = load_json(path);
  std::vector<LidarObservation> out;
  for (const auto& oj : j.at("observations")) {
    out.push_back(LidarObservation{
        oj.at("target").get<int>(), oj.at("source").get<int>(),
        vec3_from_json(oj.at("point")), vec3_from_json(oj.at("neighbor")),
        vec3_from_json(oj.at("normal")), oj.at("weight").get<double>()});
  }
  return out;
}

void write_solve_report(const std::filesystem::path& path,
                        const SolveReport& report) {
  save_json(path, json{{"final_cost", report.final_cost},
                       {"iterations", report.iterations},
                       {"camera_outliers", report.camera_outliers},
                       {"lidar_outliers", report.lidar_outliers},
                       {"reassociation_rounds", report.reassociation_rounds},
                       {"status", to_string(report.status)},
                       {"singular_blocks", report.singular_blocks}});
}

namespace {

json nested_int_lists(const std::vector<std::vector<int>>& v) {
  json arr = json::array();
  for (const auto& inner : v) arr.push_back(inner);
  return arr;
}

std::vector<std::vector<int>> nested_int_lists_from(const json& j) {
  std::vector<std::vector<int>> out;
  for (const auto& inner : j) {
    out.push_back(inner.get<std::vector<int>>());
  }
  return out;
}

}  // namespace

void write_ground_truth(const std::filesystem::path& path,
                        const GroundTruth& truth) {
  json out;
  json poses = json::array();
  for (const auto& pose : truth.poses) poses.push_back(pose_to_json(pose));
  out["poses"] = std::move(poses);
  out["extrinsic"] = pose_to_json(truth.extrinsic);
  json lms = json::array();
  for (const auto& l : truth.landmarks) {
    lms.push_back(json{{"id", l.id}, {"position", vec_to_json(l.position)}});
  }
  out["landmarks"] = std::move(lms);
  out["feature_landmark"] = nested_int_lists(truth.feature_landmark);
  out["feature_outliers"] = nested_int_lists(truth.feature_outliers);
  out["cloud_outliers"] = nested_int_lists(truth.cloud_outliers);
  out["depth_holes"] = nested_int_lists(truth.depth_holes);
  out["depth_outliers"] = nested_int_lists(truth.depth_outliers);
  save_json(path, out);
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  const json j = load_json(path);
  GroundTruth truth;
  for (const auto& pj : j.at("poses")) {
    truth.poses.push_back(pose_from_json(pj));
  }
  truth.extrinsic = pose_from_json(j.at("extrinsic"));
  for (const auto& lj : j.at("landmarks")) {
    truth.landmarks.push_back(Landmark{lj.at("id").get<int>(),
                                       vec3_from_json(lj.at("position"))});
  }
  truth.feature_landmark = nested_int_lists_from(j.at("feature_landmark"));
  truth.feature_outliers = nested_int_lists_from(j.at("feature_outliers"));
  truth.cloud_outliers = nested_int_lists_from(j.at("cloud_outliers"));
  truth.depth_holes = nested_int_lists_from(j.at("depth_holes"));
  truth.depth_outliers = nested_int_lists_from(j.at("depth_outliers"));
  return truth;
}

void write_distance_report(const std::filesystem::path& path,
                           const DistanceReport& report) {
  save_json(path, json{{"mean", report.mean},
                       {"median", report.median},
                       {"sample_count", report.sample_count},
                       {"excluded", report.excluded},
                       {"density_per_cm2", report.density_per_cm2}});
}

// -- CSV ----------------------------------------------------------------------

void write_sweep_csv(const std::filesystem::path& path,
                     const SweepResult& sweep) {
  auto out = open_out(path, false);
  out.precision(17);
  out << "dimension,offset,cost\n";
  for (size_t s = 0; s < sweep.offsets.size(); ++s) {
    out << to_string(sweep.dimension) << ',' << sweep.offsets[s] << ','
        << sweep.costs[s] << '\n';
  }
}

void write_flatness_json(const std::filesystem::path& path,
                         const std::vector<FlatnessEntry>& entries,
                         double rel_tol) {
  json arr = json::array();
  for (const auto& e : entries) {
    arr.push_back(json{{"name", to_string(e.dimension)},
                       {"flat", e.flat},
                       {"relative_variation", e.relative_variation}});
  }
  save_json(path, json{{"rel_tol", rel_tol}, {"dimensions", std::move(arr)}});
}

void write_histogram_csv(const std::filesystem::path& path,
                         const DistanceReport& report) {
  auto out = open_out(path, false);
  out.precision(17);
  out << "bin_low,bin_high,count\n";
  for (size_t b = 0; b < report.counts.size(); ++b) {
    out << report.bin_edges[b] << ',' << report.bin_edges[b + 1] << ','
        << report.counts[b] << '\n';
  }
}

}  // namespace licam
