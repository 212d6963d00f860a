#include "lidarplace/discretization.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/box.hpp>
#include <boost/geometry/geometries/point.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "lidarplace/errors.hpp"
#include "lidarplace/format.hpp"
#include "lidarplace/parallel.hpp"

namespace lidarplace {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

using BgPoint = bg::model::point<double, 2, bg::cs::cartesian>;
using BgBox = bg::model::box<BgPoint>;
using TreeValue = std::pair<BgBox, std::size_t>;

struct PolygonIndex::Tree {
  bgi::rtree<TreeValue, bgi::quadratic<16>> rtree;
};

PolygonIndex::PolygonIndex(std::vector<Polygon> polygons)
    : polygons_(std::move(polygons)), tree_(std::make_unique<Tree>()) {
  std::vector<TreeValue> values;
  values.reserve(polygons_.size());
  for (std::size_t i = 0; i < polygons_.size(); ++i) {
    const Box2 b = bounding_box(polygons_[i]);
    // Inflate so boundary-tolerance hits are not lost by the box filter.
    values.emplace_back(
        BgBox(BgPoint(b.min.x - kBoundaryTolerance, b.min.y - kBoundaryTolerance),
              BgPoint(b.max.x + kBoundaryTolerance, b.max.y + kBoundaryTolerance)),
        i);
  }
  tree_->rtree = decltype(tree_->rtree)(values.begin(), values.end());
}

PolygonIndex::~PolygonIndex() = default;
PolygonIndex::PolygonIndex(PolygonIndex&&) noexcept = default;
PolygonIndex& PolygonIndex::operator=(PolygonIndex&&) noexcept = default;

std::optional<std::size_t> PolygonIndex::find(Point2 p) const {
  std::vector<TreeValue> hits;
  tree_->rtree.query(bgi::intersects(BgPoint(p.x, p.y)),
                     std::back_inserter(hits));
  std::optional<std::size_t> best;
  for (const auto& [box, index] : hits) {
    if (best && index >= *best) continue;
    if (point_in_polygon(p, polygons_[index])) best = index;
  }
  return best;
}

PolygonIndex make_roi_index(const Scene& scene) {
  std::vector<Polygon> polygons;
  polygons.reserve(scene.road_segments.size());
  for (const auto& seg : scene.road_segments) polygons.push_back(seg.polygon);
  return PolygonIndex(std::move(polygons));
}

std::optional<std::string> point_in_roi(const Scene& scene,
                                        const PolygonIndex& roi, Point2 p) {
  auto index = roi.find(p);
  if (!index) return std::nullopt;
  return scene.road_segments[*index].id;
}

double TargetGrid::total_weight() const {
  double total = 0.0;
  for (double w : weights) total += w;
  return total;
}

std::vector<double> CandidateSet::costs() const {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(c.cost);
  return out;
}

std::vector<double> lattice_axis(double lo, double hi, double spacing,
                                 bool strict) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw PreconditionError("spacing must be a positive finite number");
  }
  const double steps = (hi - lo) / spacing;
  if (steps > 1e7) {
    throw PreconditionError("spacing " + format_double(spacing) +
                            " is too fine for an extent of " +
                            format_double(hi - lo) + " m");
  }
  std::vector<double> out;
  for (long k = strict ? 1 : 0;; ++k) {
    const double v = lo + static_cast<double>(k) * spacing;
    if (strict ? !(v < hi - kBoundaryTolerance)
               : !(v <= hi + kBoundaryTolerance)) {
      break;
    }
    out.push_back(v);
  }
  return out;
}

TargetGrid discretize_roi(const Scene& scene, double spacing, unsigned jobs) {
  const Box2 box = scene_bounds(scene);
  const auto xs = lattice_axis(box.min.x, box.max.x, spacing, true);
  const auto ys = lattice_axis(box.min.y, box.max.y, spacing, true);
  const PolygonIndex roi = make_roi_index(scene);

  std::vector<std::vector<std::pair<Point2, std::size_t>>> rows(ys.size());
  parallel_for(ys.size(), jobs, [&](std::size_t r) {
    for (double x : xs) {
      const Point2 p{x, ys[r]};
      if (auto seg = roi.find(p)) rows[r].emplace_back(p, *seg);
    }
  });

  TargetGrid grid;
  grid.spacing = spacing;
  for (const auto& row : rows) {
    for (const auto& [p, seg] : row) {
      grid.points.push_back(p);
      grid.weights.push_back(scene.road_segments[seg].priority_weight);
      grid.segment_of.push_back(scene.road_segments[seg].id);
    }
  }
  if (grid.points.empty()) {
    throw EmptyGridError("no lattice point at spacing " +
                         format_double(spacing) +
                         " m falls inside any road segment");
  }
  return grid;
}

namespace {

bool zone_contains(const MountZone& zone, Point2 p, double spacing) {
  if (zone.shape == ZoneShape::kPolygon) {
    return point_in_polygon(p, zone.geometry);
  }
  return point_polyline_distance(p, zone.geometry) <=
         0.5 * spacing + kBoundaryTolerance;
}

}  // namespace

CandidateSet enumerate_candidates(const Scene& scene, double spacing,
                                  std::span<const std::string> types) {
  if (!(spacing > 0.0)) {
    throw PreconditionError("candidate spacing must be > 0");
  }
  if (types.empty()) {
    throw PreconditionError("at least one sensor type must be requested");
  }
  std::vector<const SensorSpec*> specs;
  for (const auto& t : types) {
    const SensorSpec* spec = scene.find_sensor(t);
    if (!spec) throw PreconditionError("unknown sensor type '" + t + "'");
    specs.push_back(spec);
  }

  std::vector<Point2> all;
  for (const auto& zone : scene.mount_zones) {
    all.insert(all.end(), zone.geometry.begin(), zone.geometry.end());
  }
  Box2 box = bounding_box(all);
  // Polyline membership reaches half a spacing beyond the drawn line; widen
  // by a whole step so the lattice stays anchored on the zones' corner.
  bool has_polyline = false;
  for (const auto& zone : scene.mount_zones) {
    has_polyline |= zone.shape == ZoneShape::kPolyline;
  }
  if (has_polyline) {
    box.min.x -= spacing;
    box.min.y -= spacing;
    box.max.x += spacing;
    box.max.y += spacing;
  }
  const auto xs = lattice_axis(box.min.x, box.max.x, spacing, false);
  const auto ys = lattice_axis(box.min.y, box.max.y, spacing, false);

  CandidateSet set;
  for (double y : ys) {
    for (double x : xs) {
      const Point2 p{x, y};
      for (const auto& zone : scene.mount_zones) {
        if (!zone_contains(zone, p, spacing)) continue;
        for (double h : zone.allowed_heights) {
          for (const SensorSpec* spec : specs) {
            set.candidates.push_back(
                {p, h, *spec, spec->unit_cost + zone.install_surcharge,
                 zone.id});
          }
        }
        break;
      }
    }
  }
  if (set.candidates.empty()) {
    throw EmptyGridError("no lattice point at spacing " +
                         format_double(spacing) +
                         " m falls inside any mount zone");
  }
  return set;
}

namespace {

constexpr std::string_view kTargetsHeader = "idx,x,y,weight,segment";
constexpr std::string_view kCandidatesHeader = "idx,x,y,height,type,cost,zone";

std::vector<std::string> read_row(std::istream& in, std::size_t line,
                                  std::size_t columns) {
  std::string text;
  std::getline(in, text);
  auto cells = split(text, ',');
  if (cells.size() != columns) {
    throw FormatError("line " + std::to_string(line) + ": expected " +
                      std::to_string(columns) + " columns, found " +
                      std::to_string(cells.size()));
  }
  return cells;
}

void expect_header(std::istream& in, std::string_view header) {
  std::string text;
  if (!std::getline(in, text) || text != header) {
    throw FormatError("unexpected CSV header '" + text + "', expected '" +
                      std::string(header) + "'");
  }
}

void expect_index(const std::string& cell, std::size_t expected,
                  std::size_t line) {
  if (cell != std::to_string(expected)) {
    throw FormatError("line " + std::to_string(line) + ": expected idx " +
                      std::to_string(expected) + ", found '" + cell + "'");
  }
}

}  // namespace

void write_targets_csv(const TargetGrid& grid, std::ostream& out) {
  out << kTargetsHeader << '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << i << ',' << format_double(grid.points[i].x) << ','
        << format_double(grid.points[i].y) << ','
        << format_double(grid.weights[i]) << ',' << grid.segment_of[i] << '\n';
  }
}

void write_candidates_csv(const CandidateSet& set, std::ostream& out) {
  out << kCandidatesHeader << '\n';
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Candidate& c = set.candidates[i];
    out << i << ',' << format_double(c.position.x) << ','
        << format_double(c.position.y) << ',' << format_double(c.height) << ','
        << c.sensor.type_id << ',' << format_double(c.cost) << ',' << c.zone_id
        << '\n';
  }
}

TargetGrid read_targets_csv(std::istream& in, double spacing) {
  expect_header(in, kTargetsHeader);
  TargetGrid grid;
  grid.spacing = spacing;
  for (std::size_t line = 2; in.peek() != std::char_traits<char>::eof();
       ++line) {
    auto cells = read_row(in, line, 5);
    expect_index(cells[0], grid.size(), line);
    grid.points.push_back({parse_double(cells[1]), parse_double(cells[2])});
    grid.weights.push_back(parse_double(cells[3]));
    grid.segment_of.push_back(cells[4]);
  }
  return grid;
}

CandidateSet read_candidates_csv(std::istream& in, const Scene& scene) {
  expect_header(in, kCandidatesHeader);
  CandidateSet set;
  for (std::size_t line = 2; in.peek() != std::char_traits<char>::eof();
       ++line) {
    auto cells = read_row(in, line, 7);
    expect_index(cells[0], set.size(), line);
    const SensorSpec* spec = scene.find_sensor(cells[4]);
    if (!spec) {
      throw FormatError("line " + std::to_string(line) +
                        ": sensor type '" + cells[4] +
                        "' is not in the scene catalog");
    }
    set.candidates.push_back({{parse_double(cells[1]), parse_double(cells[2])},
                              parse_double(cells[3]),
                              *spec,
                              parse_double(cells[5]),
                              cells[6]});
  }
  return set;
}

}  // namespace lidarplace
