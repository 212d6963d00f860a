#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidarplace/geometry.hpp"
#include "lidarplace/scene.hpp"

namespace lidarplace {

// Target points inside the region of interest, row-major by y then x.
struct TargetGrid {
  double spacing = 0.0;
  std::vector<Point2> points;
  std::vector<double> weights;
  std::vector<std::string> segment_of;

  std::size_t size() const { return points.size(); }
  double total_weight() const;

  friend bool operator==(const TargetGrid&, const TargetGrid&) = default;
};

struct Candidate {
  Point2 position;
  double height = 0.0;  // above ground
  SensorSpec sensor;
  double cost = 0.0;
  std::string zone_id;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct CandidateSet {
  std::vector<Candidate> candidates;

  std::size_t size() const { return candidates.size(); }
  std::vector<double> costs() const;

  friend bool operator==(const CandidateSet&, const CandidateSet&) = default;
};

// R-tree over polygon bounding boxes with an exact closed point-in-polygon
// test on the hits. Lookups return the lowest polygon index that contains
// the point.
class PolygonIndex {
 public:
  explicit PolygonIndex(std::vector<Polygon> polygons);
  ~PolygonIndex();
  PolygonIndex(PolygonIndex&&) noexcept;
  PolygonIndex& operator=(PolygonIndex&&) noexcept;

  std::optional<std::size_t> find(Point2 p) const;
  std::size_t size() const { return polygons_.size(); }

 private:
  struct Tree;
  std::vector<Polygon> polygons_;
  std::unique_ptr<Tree> tree_;
};

PolygonIndex make_roi_index(const Scene& scene);

// Id of the first road segment (file order) containing p.
std::optional<std::string> point_in_roi(const Scene& scene,
                                        const PolygonIndex& roi, Point2 p);

// Coordinates lo + k * spacing. With `strict`, only values strictly between
// lo and hi; otherwise the closed interval.
std::vector<double> lattice_axis(double lo, double hi, double spacing,
                                 bool strict);

TargetGrid discretize_roi(const Scene& scene, double spacing,
                          unsigned jobs = 1);

// Lattice points are anchored at the lower corner of the mount zones' joint
// bounding box and include its boundary. A point belongs to a polyline zone
// when it lies within spacing / 2 of the polyline.
CandidateSet enumerate_candidates(const Scene& scene, double spacing,
                                  std::span<const std::string> types);

void write_targets_csv(const TargetGrid& grid, std::ostream& out);
void write_candidates_csv(const CandidateSet& set, std::ostream& out);
TargetGrid read_targets_csv(std::istream& in, double spacing);
CandidateSet read_candidates_csv(std::istream& in, const Scene& scene);

}  // namespace lidarplace
