#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lidarplace/geometry.hpp"

namespace lidarplace {

struct RoadSegment {
  std::string id;
  Polygon polygon;
  double priority_weight = 1.0;

  friend bool operator==(const RoadSegment&, const RoadSegment&) = default;
};

// Extruded convex prism standing on the ground plane.
struct Obstacle {
  std::string id;
  Polygon footprint;
  double height = 0.0;

  friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

enum class ZoneShape { kPolygon, kPolyline };

// Sidewalk or pole area where sensors may be installed.
struct MountZone {
  std::string id;
  ZoneShape shape = ZoneShape::kPolygon;
  std::vector<Point2> geometry;
  std::vector<double> allowed_heights;
  // Added to the unit cost of every sensor installed in this zone.
  double install_surcharge = 0.0;

  friend bool operator==(const MountZone&, const MountZone&) = default;
};

inline constexpr double kDefaultAzimuthStep = 0.4;

struct SensorSpec {
  std::string type_id;
  int channels = 1;
  double vertical_fov_min = 0.0;  // degrees
  double vertical_fov_max = 0.0;  // degrees
  double horizontal_fov = 360.0;  // degrees
  double range = 0.0;             // meters
  double azimuth_step = kDefaultAzimuthStep;
  double unit_cost = 0.0;
  // Datasheet values carried through for reporting; the static visibility
  // model does not use them.
  std::optional<double> capture_frequency_hz;
  std::optional<double> accuracy_m;
  std::optional<double> points_per_second;

  friend bool operator==(const SensorSpec&, const SensorSpec&) = default;
};

struct Scene {
  std::vector<RoadSegment> road_segments;
  std::vector<Obstacle> obstacles;
  std::vector<MountZone> mount_zones;
  std::vector<SensorSpec> catalog;
  double ground_elevation = 0.0;

  const SensorSpec* find_sensor(std::string_view type_id) const;
  const RoadSegment* find_segment(std::string_view id) const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

// Every invariant violation, in a stable order. Empty when the scene is valid.
std::vector<std::string> validate_scene(const Scene& scene);

// Throws ParseError on malformed JSON (with line and column) or wrong field
// types (with the field path), ValidationError listing all violations.
Scene parse_scene(std::string_view json_text, std::string_view source_name);
Scene load_scene(const std::filesystem::path& path);

std::string scene_to_json(const Scene& scene);
void save_scene(const Scene& scene, const std::filesystem::path& path);

// Tight bound over all road-segment vertices.
Box2 scene_bounds(const Scene& scene);

}  // namespace lidarplace
