#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "lidarplace/discretization.hpp"
#include "lidarplace/geometry.hpp"
#include "lidarplace/scene.hpp"

namespace lidarplace {

inline constexpr double kRayEpsilon = 1e-9;

struct PointSample {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;  // synthetic: 1 - hit_distance / range
  bool on_ground = false;  // false for returns from obstacle faces

  friend bool operator==(const PointSample&, const PointSample&) = default;
};

struct PointCloud {
  std::size_t sensor_index = 0;
  std::vector<PointSample> samples;
};

// Channel elevations in degrees, ascending. Uniform over the closed vertical
// FOV; a single channel sits at the midpoint.
std::vector<double> channel_elevations(const SensorSpec& spec);

// Azimuths in degrees. A full 360 degree sweep uses k * step for
// k < floor(360 / step). A sector of width w is centered on +x and uses
// -w/2 + k * step for k < max(1, floor(w / step)).
std::vector<double> beam_azimuths(const SensorSpec& spec);

// Unit directions, channel-major (elevation ascending, then azimuth).
std::vector<Vec3> generate_beams(const SensorSpec& spec);

// Static occluders prepared for repeated ray queries: the ground plane plus
// extruded convex prisms.
class Occluders {
 public:
  Occluders(double ground_elevation, std::span<const Obstacle> obstacles);
  explicit Occluders(const Scene& scene);

  // Appends prisms after the existing ones (later in tie-break order).
  void add(std::span<const Obstacle> obstacles);

  double ground_elevation() const { return ground_; }

  // Nearest hit at path length t in (kRayEpsilon, max_range]. Obstacles are
  // tested in insertion order and win exact ties with each other and with
  // the ground.
  std::optional<PointSample> cast(const Vec3& origin, const Vec3& direction,
                                  double max_range) const;

 private:
  struct Prism {
    std::vector<Point2> footprint;
    double z_top = 0.0;
    Vec3 box_min;
    Vec3 box_max;
  };
  double ground_ = 0.0;
  std::vector<Prism> prisms_;
};

std::optional<PointSample> cast_ray(const Vec3& origin, const Vec3& direction,
                                    const Scene& scene, double max_range);

Vec3 sensor_origin(const Candidate& candidate, double ground_elevation);

PointCloud simulate_sensor(const Candidate& candidate, const Occluders& world,
                           std::size_t sensor_index = 0);
PointCloud simulate_sensor(const Candidate& candidate, const Scene& scene,
                           std::size_t sensor_index = 0);

// Binary N_S x N_T matrix, one bit-packed row per candidate.
class VisibilityGrid {
 public:
  VisibilityGrid() = default;
  VisibilityGrid(std::size_t rows, std::size_t cols, double delta);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double delta() const { return delta_; }
  std::size_t words_per_row() const { return words_; }

  bool get(std::size_t row, std::size_t col) const {
    return (bits_[row * words_ + col / 64] >> (col % 64)) & 1u;
  }
  void set(std::size_t row, std::size_t col, bool value = true);

  std::span<const std::uint64_t> row(std::size_t r) const {
    return {bits_.data() + r * words_, words_};
  }
  std::span<std::uint64_t> row(std::size_t r) {
    return {bits_.data() + r * words_, words_};
  }

  std::size_t count_row(std::size_t r) const;
  std::size_t count() const;

  friend bool operator==(const VisibilityGrid&, const VisibilityGrid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t words_ = 0;
  double delta_ = 0.0;
  std::vector<std::uint64_t> bits_;
};

// Planar distance used by the visibility criterion. Targets are ground
// points, so only the sample's x and y take part.
inline double sample_target_distance(const PointSample& s, Point2 target) {
  return planar_distance({s.x, s.y}, target);
}

// Bucket index over target points answering "targets within delta".
class TargetLocator {
 public:
  TargetLocator(std::span<const Point2> targets, double delta);

  // Calls fn(target_index) for every target with distance < delta.
  template <typename Fn>
  void for_each_near(const PointSample& s, Fn&& fn) const;

 private:
  std::span<const Point2> targets_;
  double delta_ = 0.0;
  Box2 box_;
  double cell_ = 1.0;
  std::size_t nx_ = 1;
  std::size_t ny_ = 1;
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> order_;
};

// Only ground returns mark targets: a return from an obstacle face means the
// beam was stopped before reaching the road surface.
struct SampleFilter {
  double delta = 0.0;
  std::optional<double> intensity_min;

  bool accepts(const PointSample& s) const {
    return s.on_ground && (!intensity_min || s.intensity >= *intensity_min);
  }
};

// Marks every target seen by the cloud into `row` (cols bits, pre-zeroed).
void mark_visible(const PointCloud& cloud, const TargetLocator& locator,
                  const SampleFilter& filter, std::span<std::uint64_t> row);

// Number of accepted samples within delta of each target.
std::vector<std::uint32_t> sample_counts(const PointCloud& cloud,
                                         const TargetGrid& targets,
                                         const SampleFilter& filter);

VisibilityGrid build_visibility_grid(const CandidateSet& candidates,
                                     const TargetGrid& targets,
                                     const Scene& scene, double delta,
                                     std::optional<double> intensity_min = {},
                                     unsigned jobs = 1);

// Same, against an explicit occluder set (e.g. the scene plus vehicles).
VisibilityGrid build_visibility_grid(const CandidateSet& candidates,
                                     const TargetGrid& targets,
                                     const Occluders& world, double delta,
                                     std::optional<double> intensity_min = {},
                                     unsigned jobs = 1);

// Binary grid file: "VGRD", u32 rows, u32 cols, f64 delta (little-endian),
// then each row as ceil(cols / 8) bytes, target j at bit j % 8 of byte j / 8.
void write_grid(const VisibilityGrid& grid, std::ostream& out);
VisibilityGrid read_grid(std::istream& in);

void write_grid_csv(const VisibilityGrid& grid, std::ostream& out);
void write_point_cloud_csv(const PointCloud& cloud, std::ostream& out);

// ---------------------------------------------------------------------------

template <typename Fn>
void TargetLocator::for_each_near(const PointSample& s, Fn&& fn) const {
  if (targets_.empty()) return;
  const double reach = delta_;
  const double lo_x = (s.x - reach - box_.min.x) / cell_;
  const double hi_x = (s.x + reach - box_.min.x) / cell_;
  const double lo_y = (s.y - reach - box_.min.y) / cell_;
  const double hi_y = (s.y + reach - box_.min.y) / cell_;
  if (hi_x < 0.0 || hi_y < 0.0 || lo_x >= static_cast<double>(nx_) ||
      lo_y >= static_cast<double>(ny_)) {
    return;
  }
  const auto clamp_index = [](double v, std::size_t n) {
    if (v <= 0.0) return std::size_t{0};
    if (v >= static_cast<double>(n - 1)) return n - 1;
    return static_cast<std::size_t>(v);
  };
  const std::size_t x0 = clamp_index(lo_x, nx_), x1 = clamp_index(hi_x, nx_);
  const std::size_t y0 = clamp_index(lo_y, ny_), y1 = clamp_index(hi_y, ny_);
  for (std::size_t cy = y0; cy <= y1; ++cy) {
    for (std::size_t cx = x0; cx <= x1; ++cx) {
      const std::size_t cell = cy * nx_ + cx;
      for (std::uint32_t k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
        const std::uint32_t t = order_[k];
        if (sample_target_distance(s, targets_[t]) < delta_) fn(t);
      }
    }
  }
}

}  // namespace lidarplace
