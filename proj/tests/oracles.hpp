#pragma once

// Reference implementations used as test oracles. They are deliberately
// simple and share no code with the library beyond plain data types.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lidarplace/cli.hpp"

namespace oracle {

using lidarplace::Point2;
using lidarplace::Vec3;

inline constexpr double kPi = 3.14159265358979323846;

inline bool on_segment(Point2 p, Point2 a, Point2 b, double tol) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double u = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  u = std::fmax(0.0, std::fmin(1.0, u));
  const double qx = a.x + u * dx - p.x, qy = a.y + u * dy - p.y;
  return std::sqrt(qx * qx + qy * qy) <= tol;
}

// Winding-number test, closed (boundary within tol counts as inside).
inline bool inside(Point2 p, const std::vector<Point2>& poly, double tol = 1e-9) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (on_segment(p, poly[i], poly[(i + 1) % n], tol)) return true;
  }
  int winding = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = poly[i], b = poly[(i + 1) % n];
    const double cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
    if (a.y <= p.y) {
      if (b.y > p.y && cross > 0) ++winding;
    } else {
      if (b.y <= p.y && cross < 0) --winding;
    }
  }
  return winding != 0;
}

// Linear scan over road segments in file order.
inline std::optional<std::string> roi_linear(const lidarplace::Scene& scene,
                                             Point2 p) {
  for (const auto& seg : scene.road_segments) {
    if (inside(p, seg.polygon)) return seg.id;
  }
  return std::nullopt;
}

struct Hit {
  double t = 0.0;
  bool ground = false;
  Vec3 point;
};

// Scalar ray caster: each prism as a set of planar faces (vertical quads and
// a top cap), each face intersected as a plane and then bounds-checked.
// Obstacles win ties against the ground; earlier obstacles win ties.
inline std::optional<Hit> cast(const Vec3& o, const Vec3& d, double ground,
                               const std::vector<lidarplace::Obstacle>& obstacles,
                               double range) {
  const double eps = 1e-9;
  std::optional<Hit> best;
  auto consider = [&](double t, bool is_ground) {
    if (!(t > eps) || t > range) return;
    if (!best || t < best->t) {
      best = Hit{t, is_ground, {o.x + t * d.x, o.y + t * d.y, o.z + t * d.z}};
    }
  };
  for (const auto& obs : obstacles) {
    const double top = ground + obs.height;
    const std::size_t n = obs.footprint.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 a = obs.footprint[i], b = obs.footprint[(i + 1) % n];
      // Face plane normal (horizontal).
      const double nx = b.y - a.y, ny = -(b.x - a.x);
      const double denom = nx * d.x + ny * d.y;
      if (std::fabs(denom) < 1e-15) continue;
      const double t = (nx * (a.x - o.x) + ny * (a.y - o.y)) / denom;
      const double x = o.x + t * d.x, y = o.y + t * d.y, z = o.z + t * d.z;
      if (!on_segment({x, y}, a, b, 1e-7)) continue;
      if (z < ground - eps || z > top + eps) continue;
      consider(t, false);
    }
    if (d.z != 0.0) {
      const double t = (top - o.z) / d.z;
      if (inside({o.x + t * d.x, o.y + t * d.y}, obs.footprint)) consider(t, false);
    }
  }
  if (d.z < 0.0) {
    const double t = (ground - o.z) / d.z;
    if (t > eps && t <= range && (!best || t < best->t)) {
      best = Hit{t, true, {o.x + t * d.x, o.y + t * d.y, ground}};
    }
  }
  return best;
}

// Beam directions from first principles, channel-major.
inline std::vector<Vec3> beams(const lidarplace::SensorSpec& s) {
  std::vector<double> el;
  if (s.channels == 1) {
    el.push_back((s.vertical_fov_min + s.vertical_fov_max) / 2);
  } else {
    for (int k = 0; k < s.channels; ++k) {
      el.push_back(s.vertical_fov_min +
                   (s.vertical_fov_max - s.vertical_fov_min) * k / (s.channels - 1));
    }
  }
  std::vector<double> az;
  const bool full = s.horizontal_fov >= 360.0;
  const double start = full ? 0.0 : -s.horizontal_fov / 2;
  // One beam per whole step that fits in the field of view.
  for (int k = 0; (k + 1) * s.azimuth_step <= s.horizontal_fov + 1e-9; ++k) {
    az.push_back(start + k * s.azimuth_step);
  }
  if (az.empty()) az.push_back(start);
  std::vector<Vec3> out;
  for (double e : el) {
    for (double a : az) {
      const double er = e * kPi / 180, ar = a * kPi / 180;
      out.push_back({std::cos(er) * std::cos(ar), std::cos(er) * std::sin(ar),
                     std::sin(er)});
    }
  }
  return out;
}

// Visibility from a list of samples by the double loop of the definition.
inline std::vector<std::vector<bool>> visibility(
    const std::vector<std::vector<lidarplace::PointSample>>& clouds,
    const std::vector<Point2>& targets, double delta,
    std::optional<double> intensity_min = {}) {
  std::vector<std::vector<bool>> v(clouds.size(),
                                   std::vector<bool>(targets.size(), false));
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    for (const auto& s : clouds[i]) {
      if (!s.on_ground) continue;
      if (intensity_min && s.intensity < *intensity_min) continue;
      for (std::size_t j = 0; j < targets.size(); ++j) {
        const double dx = s.x - targets[j].x, dy = s.y - targets[j].y;
        if (std::sqrt(dx * dx + dy * dy) < delta) v[i][j] = true;
      }
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Coverage instances with at most 64 targets, rows as bit masks.

struct Instance {
  std::vector<std::uint64_t> rows;
  std::size_t targets = 0;
  std::vector<double> weights;
  std::vector<double> costs;
  lidarplace::Constraint constraint;
};

inline lidarplace::DeploymentProblem to_problem(const Instance& in) {
  lidarplace::DeploymentProblem p;
  p.grid = lidarplace::VisibilityGrid(in.rows.size(), in.targets, 1.0);
  for (std::size_t i = 0; i < in.rows.size(); ++i) {
    for (std::size_t j = 0; j < in.targets; ++j) {
      if ((in.rows[i] >> j) & 1u) p.grid.set(i, j);
    }
  }
  p.weights = in.weights;
  p.costs = in.costs;
  p.constraint = in.constraint;
  return p;
}

inline double mask_weight(std::uint64_t mask, const std::vector<double>& w) {
  double total = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if ((mask >> j) & 1u) total += w[j];
  }
  return total;
}

inline bool feasible(const Instance& in, std::uint32_t subset) {
  if (const auto* c = std::get_if<lidarplace::Cardinality>(&in.constraint)) {
    return static_cast<std::size_t>(std::popcount(subset)) <= c->count;
  }
  double cost = 0.0;
  for (std::size_t i = 0; i < in.rows.size(); ++i) {
    if ((subset >> i) & 1u) cost += in.costs[i];
  }
  return lidarplace::fits_budget(cost, std::get<lidarplace::Budget>(in.constraint).amount);
}

// Best objective over all 2^N_S subsets.
inline double exhaustive_best(const Instance& in) {
  const std::size_t n = in.rows.size();
  std::vector<std::uint64_t> cover(std::size_t{1} << n, 0);
  double best = 0.0;
  for (std::uint32_t s = 1; s < (1u << n); ++s) {
    const int low = std::countr_zero(s);
    cover[s] = cover[s & (s - 1)] | in.rows[low];
    if (!feasible(in, s)) continue;
    best = std::fmax(best, mask_weight(cover[s], in.weights));
  }
  return best;
}

struct InstanceOptions {
  std::size_t max_candidates = 15;
  std::size_t max_targets = 60;
  bool budget = false;
  bool unit_weights = false;
  bool unit_costs = false;
};

inline Instance random_instance(std::mt19937_64& rng, const InstanceOptions& opt) {
  Instance in;
  std::uniform_int_distribution<std::size_t> ns(1, opt.max_candidates);
  std::uniform_int_distribution<std::size_t> nt(1, opt.max_targets);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = ns(rng);
  in.targets = nt(rng);
  const double density = 0.05 + 0.4 * unit(rng);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t row = 0;
    for (std::size_t j = 0; j < in.targets; ++j) {
      if (unit(rng) < density) row |= std::uint64_t{1} << j;
    }
    in.rows.push_back(row);
  }
  // Half the instances use small integer weights (many exact ties), the
  // other half arbitrary reals.
  const bool integral = unit(rng) < 0.5;
  for (std::size_t j = 0; j < in.targets; ++j) {
    if (opt.unit_weights) {
      in.weights.push_back(1.0);
    } else if (integral) {
      in.weights.push_back(std::floor(unit(rng) * 6.0));
    } else {
      in.weights.push_back(unit(rng) * 10.0);
    }
  }
  double total_cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = opt.unit_costs ? 1.0
                     : integral     ? 1.0 + std::floor(unit(rng) * 9.0)
                                    : 0.5 + unit(rng) * 9.5;
    in.costs.push_back(c);
    total_cost += c;
  }
  if (opt.budget) {
    in.constraint = lidarplace::Budget{total_cost * unit(rng) * 0.6};
  } else {
    in.constraint = lidarplace::Cardinality{
        std::uniform_int_distribution<std::size_t>(0, std::min<std::size_t>(n, 6))(rng)};
  }
  return in;
}

// ---------------------------------------------------------------------------
// Small scenes.

inline lidarplace::SensorSpec spec(const std::string& id, int channels,
                                   double fov_min, double fov_max,
                                   double range, double step, double cost) {
  lidarplace::SensorSpec s;
  s.type_id = id;
  s.channels = channels;
  s.vertical_fov_min = fov_min;
  s.vertical_fov_max = fov_max;
  s.range = range;
  s.azimuth_step = step;
  s.unit_cost = cost;
  return s;
}

inline std::vector<lidarplace::SensorSpec> reference_catalog() {
  return {spec("Type-1", 16, -15, 15, 100, 0.4, 6000),
          spec("Type-2", 32, -25, 15, 200, 0.4, 15000),
          spec("Type-3", 128, -25, 15, 300, 0.4, 80000)};
}

inline std::vector<Point2> rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

// One square road [0, side]^2 and a mount zone strip along its south edge.
inline lidarplace::Scene square_scene(double side) {
  lidarplace::Scene s;
  s.road_segments.push_back({"road", rect(0, 0, side, side), 1.0});
  lidarplace::MountZone z;
  z.id = "curb";
  z.geometry = rect(0, -2, side, -1);
  z.allowed_heights = {3.5, 8.0};
  s.mount_zones.push_back(z);
  s.catalog = reference_catalog();
  return s;
}

// Random star-shaped (hence simple) polygon around a center.
inline std::vector<Point2> star_polygon(std::mt19937_64& rng, Point2 c,
                                        double r_min, double r_max,
                                        std::size_t vertices) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> angles;
  for (std::size_t k = 0; k < vertices; ++k) {
    angles.push_back(2 * kPi * (k + 0.1 + 0.8 * unit(rng)) / vertices);
  }
  std::vector<Point2> out;
  for (double a : angles) {
    const double r = r_min + (r_max - r_min) * unit(rng);
    out.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
  }
  return out;
}

// Micro-scenes: road [0, 20]^2 with 36 targets, up to 5 candidates and 3 box
// obstacles.
struct MicroScene {
  lidarplace::Scene scene;
  lidarplace::TargetGrid targets;
  lidarplace::CandidateSet candidates;
};

inline MicroScene micro_scene(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MicroScene m;
  m.scene = square_scene(20.0);
  const int obstacles = static_cast<int>(rng() % 4);
  for (int k = 0; k < obstacles; ++k) {
    const double x = 2 + 14 * unit(rng);
    const double y = 2 + 14 * unit(rng);
    const double w = 0.5 + 3 * unit(rng);
    const double h = 0.5 + 3 * unit(rng);
    const double height = 0.5 + 4 * unit(rng);
    m.scene.obstacles.push_back({"ob" + std::to_string(k), rect(x, y, x + w, y + h), height});
  }
  m.targets = lidarplace::discretize_roi(m.scene, 20.0 / 7.0);
  const int n = 1 + static_cast<int>(rng() % 5);
  for (int k = 0; k < n; ++k) {
    const int channels = 4 + static_cast<int>(rng() % 12);
    const double fov_min = -40 + 20 * unit(rng);
    const double fov_max = 5 + 10 * unit(rng);
    const double range = 15 + 40 * unit(rng);
    const double step = 2 + 4 * unit(rng);
    lidarplace::Candidate c;
    const double px = -3 + 26 * unit(rng);
    const double py = -3 + 26 * unit(rng);
    c.position = {px, py};
    c.height = 2 + 6 * unit(rng);
    c.sensor = spec("S" + std::to_string(k), channels, fov_min, fov_max, range, step, 1.0);
    c.cost = 1.0;
    c.zone_id = "curb";
    m.candidates.candidates.push_back(c);
  }
  return m;
}

inline std::vector<std::vector<lidarplace::PointSample>> clouds_of(
    const MicroScene& m, const lidarplace::Occluders& world) {
  std::vector<std::vector<lidarplace::PointSample>> out;
  for (const auto& c : m.candidates.candidates) {
    out.push_back(lidarplace::simulate_sensor(c, world).samples);
  }
  return out;
}

inline std::string data_path(const std::string& name) {
  return std::string(LIDARPLACE_DATA_DIR) + "/" + name;
}

}  // namespace oracle
