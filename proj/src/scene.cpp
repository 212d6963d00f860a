#include "lidarplace/scene.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lidarplace/errors.hpp"
#include "lidarplace/format.hpp"

namespace lidarplace {

using nlohmann::json;

ValidationError::ValidationError(std::vector<std::string> issues)
    : Error([&] {
        std::string msg = "validation failed:";
        for (const auto& issue : issues) msg += "\n  - " + issue;
        return msg;
      }()),
      issues_(std::move(issues)) {}

const SensorSpec* Scene::find_sensor(std::string_view type_id) const {
  for (const auto& spec : catalog) {
    if (spec.type_id == type_id) return &spec;
  }
  return nullptr;
}

const RoadSegment* Scene::find_segment(std::string_view id) const {
  for (const auto& seg : road_segments) {
    if (seg.id == id) return &seg;
  }
  return nullptr;
}

namespace {

// Typed access to a JSON node that remembers where it is in the document.
class Field {
 public:
  Field(const json& node, std::string path, std::string_view source)
      : node_(node), path_(std::move(path)), source_(source) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(std::string(source_) + ": field '" + path_ + "': " + what);
  }

  const std::string& path() const { return path_; }

  bool has(const char* key) const { return node_.contains(key); }

  Field at(const char* key) const {
    if (!node_.is_object()) fail("expected an object");
    auto it = node_.find(key);
    if (it == node_.end()) {
      throw ParseError(std::string(source_) + ": field '" + path_ +
                       "': missing required key '" + key + "'");
    }
    return Field(*it, path_ + "." + key, source_);
  }

  std::vector<Field> items() const {
    if (!node_.is_array()) fail("expected an array");
    std::vector<Field> out;
    out.reserve(node_.size());
    for (std::size_t i = 0; i < node_.size(); ++i) {
      out.emplace_back(node_[i], path_ + "[" + std::to_string(i) + "]",
                       source_);
    }
    return out;
  }

  double number() const {
    if (!node_.is_number()) fail("expected a number");
    return node_.get<double>();
  }

  int integer() const {
    if (!node_.is_number_integer()) fail("expected an integer");
    return node_.get<int>();
  }

  std::string string() const {
    if (!node_.is_string()) fail("expected a string");
    return node_.get<std::string>();
  }

  Point2 point() const {
    if (!node_.is_array() || node_.size() != 2 || !node_[0].is_number() ||
        !node_[1].is_number()) {
      fail("expected an [x, y] pair of numbers");
    }
    return {node_[0].get<double>(), node_[1].get<double>()};
  }

  std::vector<Point2> points() const {
    std::vector<Point2> out;
    for (const Field& f : items()) out.push_back(f.point());
    return out;
  }

  void reject_unknown_keys(std::initializer_list<std::string_view> known) const {
    if (!node_.is_object()) fail("expected an object");
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const std::string& key = it.key();
      if (!key.empty() && key.front() == '_') continue;  // annotations
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        fail("unknown key '" + key + "'");
      }
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::string_view source_;
};

std::optional<double> optional_number(const Field& f, const char* key) {
  if (!f.has(key)) return std::nullopt;
  return f.at(key).number();
}

RoadSegment read_segment(const Field& f) {
  f.reject_unknown_keys({"id", "polygon", "priority_weight"});
  RoadSegment seg;
  seg.id = f.at("id").string();
  seg.polygon = f.at("polygon").points();
  if (f.has("priority_weight")) {
    seg.priority_weight = f.at("priority_weight").number();
  }
  return seg;
}

Obstacle read_obstacle(const Field& f) {
  f.reject_unknown_keys({"id", "footprint", "height"});
  Obstacle obs;
  obs.id = f.at("id").string();
  obs.footprint = f.at("footprint").points();
  obs.height = f.at("height").number();
  return obs;
}

MountZone read_zone(const Field& f) {
  f.reject_unknown_keys(
      {"id", "polygon", "polyline", "allowed_heights", "install_surcharge"});
  MountZone zone;
  zone.id = f.at("id").string();
  const bool has_polygon = f.has("polygon");
  const bool has_polyline = f.has("polyline");
  if (has_polygon == has_polyline) {
    f.fail("exactly one of 'polygon' or 'polyline' is required");
  }
  if (has_polygon) {
    zone.shape = ZoneShape::kPolygon;
    zone.geometry = f.at("polygon").points();
  } else {
    zone.shape = ZoneShape::kPolyline;
    zone.geometry = f.at("polyline").points();
  }
  for (const Field& h : f.at("allowed_heights").items()) {
    zone.allowed_heights.push_back(h.number());
  }
  if (f.has("install_surcharge")) {
    zone.install_surcharge = f.at("install_surcharge").number();
  }
  return zone;
}

SensorSpec read_sensor(const Field& f) {
  f.reject_unknown_keys({"type_id", "channels", "vertical_fov_min",
                         "vertical_fov_max", "horizontal_fov", "range",
                         "azimuth_step", "unit_cost", "capture_frequency_hz",
                         "accuracy_m", "points_per_second"});
  SensorSpec spec;
  spec.type_id = f.at("type_id").string();
  spec.channels = f.at("channels").integer();
  spec.vertical_fov_min = f.at("vertical_fov_min").number();
  spec.vertical_fov_max = f.at("vertical_fov_max").number();
  if (f.has("horizontal_fov")) {
    spec.horizontal_fov = f.at("horizontal_fov").number();
  }
  spec.range = f.at("range").number();
  if (f.has("azimuth_step")) spec.azimuth_step = f.at("azimuth_step").number();
  spec.unit_cost = f.at("unit_cost").number();
  spec.capture_frequency_hz = optional_number(f, "capture_frequency_hz");
  spec.accuracy_m = optional_number(f, "accuracy_m");
  spec.points_per_second = optional_number(f, "points_per_second");
  return spec;
}

std::string line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

void check_polygon(const std::string& what, const Polygon& polygon,
                   std::vector<std::string>& issues) {
  if (polygon.size() < 3) {
    issues.push_back(what + ": polygon needs at least 3 vertices, has " +
                     std::to_string(polygon.size()));
    return;
  }
  if (!is_simple_polygon(polygon)) {
    issues.push_back(what + ": polygon is not simple (self-intersecting)");
  }
  if (std::abs(signed_area(polygon)) <= 0.0) {
    issues.push_back(what + ": polygon has zero area");
  }
}

void check_id(const std::string& what, const std::string& id,
              std::vector<std::string>& issues) {
  if (id.empty()) issues.push_back(what + ": id must not be empty");
  if (id.find_first_of(",\"\r\n") != std::string::npos) {
    issues.push_back(what + ": id must not contain commas, quotes or newlines");
  }
}

json points_json(const std::vector<Point2>& points) {
  json arr = json::array();
  for (const Point2& p : points) arr.push_back({p.x, p.y});
  return arr;
}

}  // namespace

std::vector<std::string> validate_scene(const Scene& scene) {
  std::vector<std::string> issues;
  if (scene.road_segments.empty()) issues.emplace_back("no road segments");
  if (scene.mount_zones.empty()) issues.emplace_back("no mount zones");
  if (scene.catalog.empty()) issues.emplace_back("empty sensor catalog");

  std::set<std::string> seen;
  for (const auto& seg : scene.road_segments) {
    const std::string what = "road segment '" + seg.id + "'";
    check_id(what, seg.id, issues);
    if (!seen.insert(seg.id).second) issues.push_back(what + ": duplicate id");
    check_polygon(what, seg.polygon, issues);
    if (!(seg.priority_weight >= 0.0)) {
      issues.push_back(what + ": priority_weight " +
                       format_double(seg.priority_weight) + " must be >= 0");
    }
  }
  for (const auto& obs : scene.obstacles) {
    const std::string what = "obstacle '" + obs.id + "'";
    check_polygon(what, obs.footprint, issues);
    if (obs.footprint.size() >= 3 && !is_convex_polygon(obs.footprint)) {
      issues.push_back(what + ": footprint is not convex");
    }
    if (!(obs.height > 0.0)) {
      issues.push_back(what + ": height " + format_double(obs.height) +
                       " must be > 0");
    }
  }
  for (const auto& zone : scene.mount_zones) {
    const std::string what = "mount zone '" + zone.id + "'";
    check_id(what, zone.id, issues);
    if (zone.shape == ZoneShape::kPolygon) {
      check_polygon(what, zone.geometry, issues);
    } else if (zone.geometry.size() < 2) {
      issues.push_back(what + ": polyline needs at least 2 points");
    }
    if (zone.allowed_heights.empty()) {
      issues.push_back(what + ": allowed_heights is empty");
    }
    for (double h : zone.allowed_heights) {
      if (!(h > 0.0)) {
        issues.push_back(what + ": allowed height " + std::to_string(h) +
                         " must be > 0");
      }
    }
    if (!(zone.install_surcharge >= 0.0)) {
      issues.push_back(what + ": install_surcharge must be >= 0");
    }
  }
  seen.clear();
  for (const auto& spec : scene.catalog) {
    const std::string what = "sensor '" + spec.type_id + "'";
    check_id(what, spec.type_id, issues);
    if (!seen.insert(spec.type_id).second) {
      issues.push_back(what + ": duplicate type_id");
    }
    if (!(spec.vertical_fov_min < spec.vertical_fov_max) &&
        !(spec.channels == 1 && spec.vertical_fov_min == spec.vertical_fov_max)) {
      issues.push_back(what + ": vertical_fov_min must be < vertical_fov_max");
    }
    if (spec.vertical_fov_min < -90.0 || spec.vertical_fov_max > 90.0) {
      issues.push_back(what + ": vertical FOV must lie within [-90, 90]");
    }
    if (!(spec.horizontal_fov > 0.0 && spec.horizontal_fov <= 360.0)) {
      issues.push_back(what + ": horizontal_fov must be in (0, 360]");
    }
    if (!(spec.range > 0.0)) issues.push_back(what + ": range must be > 0");
    if (spec.channels < 1) issues.push_back(what + ": channels must be >= 1");
    if (!(spec.azimuth_step > 0.0)) {
      issues.push_back(what + ": azimuth_step must be > 0");
    }
    if (!(spec.unit_cost > 0.0)) {
      issues.push_back(what + ": unit_cost must be > 0");
    }
  }
  return issues;
}

Scene parse_scene(std::string_view json_text, std::string_view source_name) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(source_name) + ": " +
                     line_column(json_text, e.byte == 0 ? 0 : e.byte - 1) +
                     ": " + e.what());
  }
  const Field root(doc, "$", source_name);
  root.reject_unknown_keys(
      {"road_segments", "obstacles", "mount_zones", "catalog", "ground_elevation"});

  Scene scene;
  for (const Field& f : root.at("road_segments").items()) {
    scene.road_segments.push_back(read_segment(f));
  }
  if (root.has("obstacles")) {
    for (const Field& f : root.at("obstacles").items()) {
      scene.obstacles.push_back(read_obstacle(f));
    }
  }
  for (const Field& f : root.at("mount_zones").items()) {
    scene.mount_zones.push_back(read_zone(f));
  }
  for (const Field& f : root.at("catalog").items()) {
    scene.catalog.push_back(read_sensor(f));
  }
  if (root.has("ground_elevation")) {
    scene.ground_elevation = root.at("ground_elevation").number();
  }

  auto issues = validate_scene(scene);
  if (!issues.empty()) {
    for (auto& issue : issues) issue = std::string(source_name) + ": " + issue;
    throw ValidationError(std::move(issues));
  }
  return scene;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read scene file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scene(buffer.str(), path.string());
}

std::string scene_to_json(const Scene& scene) {
  json doc;
  doc["ground_elevation"] = scene.ground_elevation;
  doc["road_segments"] = json::array();
  for (const auto& seg : scene.road_segments) {
    doc["road_segments"].push_back({{"id", seg.id},
                                    {"polygon", points_json(seg.polygon)},
                                    {"priority_weight", seg.priority_weight}});
  }
  doc["obstacles"] = json::array();
  for (const auto& obs : scene.obstacles) {
    doc["obstacles"].push_back({{"id", obs.id},
                                {"footprint", points_json(obs.footprint)},
                                {"height", obs.height}});
  }
  doc["mount_zones"] = json::array();
  for (const auto& zone : scene.mount_zones) {
    json z = {{"id", zone.id},
              {"allowed_heights", zone.allowed_heights},
              {"install_surcharge", zone.install_surcharge}};
    z[zone.shape == ZoneShape::kPolygon ? "polygon" : "polyline"] =
        points_json(zone.geometry);
    doc["mount_zones"].push_back(std::move(z));
  }
  doc["catalog"] = json::array();
  for (const auto& spec : scene.catalog) {
    json s = {{"type_id", spec.type_id},
              {"channels", spec.channels},
              {"vertical_fov_min", spec.vertical_fov_min},
              {"vertical_fov_max", spec.vertical_fov_max},
              {"horizontal_fov", spec.horizontal_fov},
              {"range", spec.range},
              {"azimuth_step", spec.azimuth_step},
              {"unit_cost", spec.unit_cost}};
    if (spec.capture_frequency_hz) {
      s["capture_frequency_hz"] = *spec.capture_frequency_hz;
    }
    if (spec.accuracy_m) s["accuracy_m"] = *spec.accuracy_m;
    if (spec.points_per_second) s["points_per_second"] = *spec.points_per_second;
    doc["catalog"].push_back(std::move(s));
  }
  return doc.dump(2) + "\n";
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write scene file '" + path.string() + "'");
  out << scene_to_json(scene);
}

Box2 scene_bounds(const Scene& scene) {
  std::vector<Point2> vertices;
  for (const auto& seg : scene.road_segments) {
    vertices.insert(vertices.end(), seg.polygon.begin(), seg.polygon.end());
  }
  return bounding_box(vertices);
}

}  // namespace lidarplace
