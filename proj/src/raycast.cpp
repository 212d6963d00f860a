#include "lidarplace/raycast.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

#include "lidarplace/errors.hpp"
#include "lidarplace/format.hpp"
#include "lidarplace/parallel.hpp"

namespace lidarplace {

std::vector<double> channel_elevations(const SensorSpec& spec) {
  std::vector<double> out;
  if (spec.channels <= 1) {
    out.push_back(0.5 * (spec.vertical_fov_min + spec.vertical_fov_max));
    return out;
  }
  const double span = spec.vertical_fov_max - spec.vertical_fov_min;
  const int last = spec.channels - 1;
  for (int k = 0; k < spec.channels; ++k) {
    out.push_back(k == last ? spec.vertical_fov_max
                            : spec.vertical_fov_min + span * k / last);
  }
  return out;
}

std::vector<double> beam_azimuths(const SensorSpec& spec) {
  const auto steps = static_cast<long>(
      std::floor(spec.horizontal_fov / spec.azimuth_step + 1e-9));
  std::vector<double> out;
  if (spec.horizontal_fov >= 360.0 - 1e-9) {
    for (long k = 0; k < steps; ++k) out.push_back(k * spec.azimuth_step);
  } else {
    const double start = -0.5 * spec.horizontal_fov;
    for (long k = 0; k < std::max(1L, steps); ++k) {
      out.push_back(start + k * spec.azimuth_step);
    }
  }
  return out;
}

std::vector<Vec3> generate_beams(const SensorSpec& spec) {
  const auto elevations = channel_elevations(spec);
  const auto azimuths = beam_azimuths(spec);
  std::vector<double> cos_az, sin_az;
  for (double az : azimuths) {
    cos_az.push_back(std::cos(degrees_to_radians(az)));
    sin_az.push_back(std::sin(degrees_to_radians(az)));
  }
  std::vector<Vec3> beams;
  beams.reserve(elevations.size() * azimuths.size());
  for (double el : elevations) {
    const double ce = std::cos(degrees_to_radians(el));
    const double se = std::sin(degrees_to_radians(el));
    for (std::size_t a = 0; a < azimuths.size(); ++a) {
      beams.push_back({ce * cos_az[a], ce * sin_az[a], se});
    }
  }
  return beams;
}

Occluders::Occluders(double ground_elevation,
                     std::span<const Obstacle> obstacles)
    : ground_(ground_elevation) {
  add(obstacles);
}

Occluders::Occluders(const Scene& scene)
    : Occluders(scene.ground_elevation, scene.obstacles) {}

void Occluders::add(std::span<const Obstacle> obstacles) {
  for (const Obstacle& obs : obstacles) {
    Prism p;
    p.footprint = obs.footprint;
    p.z_top = ground_ + obs.height;
    const Box2 b = bounding_box(obs.footprint);
    p.box_min = {b.min.x, b.min.y, ground_};
    p.box_max = {b.max.x, b.max.y, p.z_top};
    prisms_.push_back(std::move(p));
  }
}

namespace {

// Entry parameter of the ray into the box, or +inf when it misses.
double slab_entry(const Vec3& o, const Vec3& d, const Vec3& lo, const Vec3& hi,
                  double t_max) {
  double t0 = 0.0;
  double t1 = t_max;
  const double os[3] = {o.x, o.y, o.z};
  const double ds[3] = {d.x, d.y, d.z};
  const double los[3] = {lo.x - kRayEpsilon, lo.y - kRayEpsilon,
                         lo.z - kRayEpsilon};
  const double his[3] = {hi.x + kRayEpsilon, hi.y + kRayEpsilon,
                         hi.z + kRayEpsilon};
  for (int axis = 0; axis < 3; ++axis) {
    if (ds[axis] == 0.0) {
      if (os[axis] < los[axis] || os[axis] > his[axis]) {
        return std::numeric_limits<double>::infinity();
      }
      continue;
    }
    double a = (los[axis] - os[axis]) / ds[axis];
    double b = (his[axis] - os[axis]) / ds[axis];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0;
}

}  // namespace

std::optional<PointSample> Occluders::cast(const Vec3& o, const Vec3& d,
                                           double max_range) const {
  double best = std::numeric_limits<double>::infinity();
  bool ground_hit = false;
  const double limit = max_range;

  for (const Prism& prism : prisms_) {
    const double bound = std::min(limit, best);
    if (slab_entry(o, d, prism.box_min, prism.box_max, bound) > bound) continue;

    const std::size_t n = prism.footprint.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 a = prism.footprint[i];
      const Point2 b = prism.footprint[(i + 1) % n];
      const double ex = b.x - a.x;
      const double ey = b.y - a.y;
      const double denom = d.x * ey - d.y * ex;
      if (std::abs(denom) < 1e-15) continue;  // parallel to the face
      const double ax = a.x - o.x;
      const double ay = a.y - o.y;
      const double t = (ax * ey - ay * ex) / denom;
      const double u = (ax * d.y - ay * d.x) / denom;
      if (t <= kRayEpsilon || t >= best || t > limit) continue;
      if (u < -kRayEpsilon || u > 1.0 + kRayEpsilon) continue;
      const double z = o.z + t * d.z;
      if (z < ground_ - kRayEpsilon || z > prism.z_top + kRayEpsilon) continue;
      best = t;
    }
    if (d.z != 0.0) {
      const double t = (prism.z_top - o.z) / d.z;
      if (t > kRayEpsilon && t < best && t <= limit &&
          point_in_polygon({o.x + t * d.x, o.y + t * d.y}, prism.footprint)) {
        best = t;
      }
    }
  }
  if (d.z < 0.0) {
    const double t = (ground_ - o.z) / d.z;
    if (t > kRayEpsilon && t < best && t <= limit) {
      best = t;
      ground_hit = true;
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  PointSample s{o.x + best * d.x, o.y + best * d.y, o.z + best * d.z,
                1.0 - best / max_range, ground_hit};
  s.z = ground_hit ? ground_ : std::max(s.z, ground_);
  s.intensity = std::clamp(s.intensity, 0.0, 1.0);
  return s;
}

std::optional<PointSample> cast_ray(const Vec3& origin, const Vec3& direction,
                                    const Scene& scene, double max_range) {
  return Occluders(scene).cast(origin, direction, max_range);
}

Vec3 sensor_origin(const Candidate& candidate, double ground_elevation) {
  return {candidate.position.x, candidate.position.y,
          ground_elevation + candidate.height};
}

PointCloud simulate_sensor(const Candidate& candidate, const Occluders& world,
                           std::size_t sensor_index) {
  PointCloud cloud;
  cloud.sensor_index = sensor_index;
  const Vec3 origin = sensor_origin(candidate, world.ground_elevation());
  for (const Vec3& beam : generate_beams(candidate.sensor)) {
    if (auto hit = world.cast(origin, beam, candidate.sensor.range)) {
      cloud.samples.push_back(*hit);
    }
  }
  return cloud;
}

PointCloud simulate_sensor(const Candidate& candidate, const Scene& scene,
                           std::size_t sensor_index) {
  return simulate_sensor(candidate, Occluders(scene), sensor_index);
}

VisibilityGrid::VisibilityGrid(std::size_t rows, std::size_t cols,
                               double delta)
    : rows_(rows),
      cols_(cols),
      words_((cols + 63) / 64),
      delta_(delta),
      bits_(rows * ((cols + 63) / 64), 0) {}

void VisibilityGrid::set(std::size_t row, std::size_t col, bool value) {
  std::uint64_t& word = bits_[row * words_ + col / 64];
  const std::uint64_t mask = std::uint64_t{1} << (col % 64);
  word = value ? (word | mask) : (word & ~mask);
}

std::size_t VisibilityGrid::count_row(std::size_t r) const {
  std::size_t total = 0;
  for (std::uint64_t w : row(r)) total += std::popcount(w);
  return total;
}

std::size_t VisibilityGrid::count() const {
  std::size_t total = 0;
  for (std::uint64_t w : bits_) total += std::popcount(w);
  return total;
}

TargetLocator::TargetLocator(std::span<const Point2> targets, double delta)
    : targets_(targets), delta_(delta) {
  if (targets.empty()) return;
  box_ = bounding_box(targets);
  const double extent = std::max({box_.width(), box_.height(), 1e-9});
  cell_ = std::isfinite(delta) ? std::max(delta, extent / 512.0) : extent + 1.0;
  nx_ = static_cast<std::size_t>(box_.width() / cell_) + 1;
  ny_ = static_cast<std::size_t>(box_.height() / cell_) + 1;

  std::vector<std::size_t> cell_of(targets.size());
  cell_start_.assign(nx_ * ny_ + 1, 0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto cx = std::min(
        nx_ - 1, static_cast<std::size_t>((targets[i].x - box_.min.x) / cell_));
    const auto cy = std::min(
        ny_ - 1, static_cast<std::size_t>((targets[i].y - box_.min.y) / cell_));
    cell_of[i] = cy * nx_ + cx;
    ++cell_start_[cell_of[i] + 1];
  }
  for (std::size_t c = 0; c < nx_ * ny_; ++c) cell_start_[c + 1] += cell_start_[c];
  order_.resize(targets.size());
  std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    order_[fill[cell_of[i]]++] = static_cast<std::uint32_t>(i);
  }
}

void mark_visible(const PointCloud& cloud, const TargetLocator& locator,
                  const SampleFilter& filter, std::span<std::uint64_t> row) {
  for (const PointSample& s : cloud.samples) {
    if (!filter.accepts(s)) continue;
    locator.for_each_near(s, [&](std::uint32_t t) {
      row[t / 64] |= std::uint64_t{1} << (t % 64);
    });
  }
}

std::vector<std::uint32_t> sample_counts(const PointCloud& cloud,
                                         const TargetGrid& targets,
                                         const SampleFilter& filter) {
  std::vector<std::uint32_t> counts(targets.size(), 0);
  const TargetLocator locator(targets.points, filter.delta);
  for (const PointSample& s : cloud.samples) {
    if (!filter.accepts(s)) continue;
    locator.for_each_near(s, [&](std::uint32_t t) { ++counts[t]; });
  }
  return counts;
}

VisibilityGrid build_visibility_grid(const CandidateSet& candidates,
                                     const TargetGrid& targets,
                                     const Occluders& world, double delta,
                                     std::optional<double> intensity_min,
                                     unsigned jobs) {
  if (!(delta > 0.0)) throw PreconditionError("delta must be > 0");
  if (targets.weights.size() != targets.points.size() ||
      targets.segment_of.size() != targets.points.size()) {
    throw DimensionMismatchError(
        "target grid has " + std::to_string(targets.points.size()) +
        " points but " + std::to_string(targets.weights.size()) +
        " weights and " + std::to_string(targets.segment_of.size()) +
        " segment labels");
  }
  VisibilityGrid grid(candidates.size(), targets.size(), delta);
  const TargetLocator locator(targets.points, delta);
  const SampleFilter filter{delta, intensity_min};
  parallel_for(candidates.size(), jobs, [&](std::size_t i) {
    const PointCloud cloud = simulate_sensor(candidates.candidates[i], world, i);
    mark_visible(cloud, locator, filter, grid.row(i));
  });
  return grid;
}

VisibilityGrid build_visibility_grid(const CandidateSet& candidates,
                                     const TargetGrid& targets,
                                     const Scene& scene, double delta,
                                     std::optional<double> intensity_min,
                                     unsigned jobs) {
  return build_visibility_grid(candidates, targets, Occluders(scene), delta,
                               intensity_min, jobs);
}

namespace {

constexpr char kGridMagic[4] = {'V', 'G', 'R', 'D'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

bool get_bytes(std::istream& in, unsigned char* buf, std::size_t n) {
  in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

std::string printable(const unsigned char* bytes, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char c = bytes[i];
    if (c >= 0x20 && c < 0x7f) {
      out += static_cast<char>(c);
    } else {
      static const char* hex = "0123456789abcdef";
      out += "\\x";
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

}  // namespace

void write_grid(const VisibilityGrid& grid, std::ostream& out) {
  out.write(kGridMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(grid.rows()));
  put_u32(out, static_cast<std::uint32_t>(grid.cols()));
  put_f64(out, grid.delta());
  const std::size_t row_bytes = (grid.cols() + 7) / 8;
  std::vector<unsigned char> buf(row_bytes);
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    const auto words = grid.row(r);
    for (std::size_t b = 0; b < row_bytes; ++b) {
      buf[b] = static_cast<unsigned char>(words[b / 8] >> (8 * (b % 8)));
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(row_bytes));
  }
}

VisibilityGrid read_grid(std::istream& in) {
  unsigned char header[20];
  if (!get_bytes(in, header, 4)) {
    throw FormatError("grid file too short for the 'VGRD' magic bytes");
  }
  if (std::memcmp(header, kGridMagic, 4) != 0) {
    throw FormatError("bad grid magic bytes '" + printable(header, 4) +
                      "', expected 'VGRD'");
  }
  if (!get_bytes(in, header + 4, 16)) {
    throw FormatError("grid header truncated after 'VGRD' magic bytes");
  }
  auto u32 = [&](int at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{header[at + i]} << (8 * i);
    return v;
  };
  std::uint64_t delta_bits = 0;
  for (int i = 0; i < 8; ++i) delta_bits |= std::uint64_t{header[12 + i]} << (8 * i);
  const double delta = std::bit_cast<double>(delta_bits);
  if (!(delta > 0.0)) {
    throw FormatError("grid header has non-positive delta " +
                      format_double(delta));
  }
  // Reject a truncated body before allocating, so a corrupt header cannot
  // request an enormous grid.
  const std::uint64_t body = std::uint64_t{u32(4)} * ((u32(8) + 7) / 8);
  const auto here = in.tellg();
  if (here != std::istream::pos_type(-1)) {
    in.seekg(0, std::ios::end);
    const auto end = in.tellg();
    in.seekg(here);
    if (end != std::istream::pos_type(-1) &&
        static_cast<std::uint64_t>(end - here) < body) {
      throw FormatError("grid body truncated: header declares " +
                        std::to_string(u32(4)) + " x " + std::to_string(u32(8)) +
                        " bits but only " + std::to_string(end - here) +
                        " bytes follow");
    }
  }
  VisibilityGrid grid(u32(4), u32(8), delta);
  const std::size_t row_bytes = (grid.cols() + 7) / 8;
  std::vector<unsigned char> buf(row_bytes);
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    if (!get_bytes(in, buf.data(), row_bytes)) {
      throw FormatError("grid body truncated at row " + std::to_string(r) +
                        " of " + std::to_string(grid.rows()));
    }
    auto words = grid.row(r);
    for (std::size_t b = 0; b < row_bytes; ++b) {
      words[b / 8] |= std::uint64_t{buf[b]} << (8 * (b % 8));
    }
    if (grid.cols() % 64 != 0 && grid.words_per_row() > 0) {
      const std::uint64_t valid = (std::uint64_t{1} << (grid.cols() % 64)) - 1;
      if (words.back() & ~valid) {
        throw FormatError("grid row " + std::to_string(r) +
                          " has bits set in the padding");
      }
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after grid body");
  }
  return grid;
}

void write_grid_csv(const VisibilityGrid& grid, std::ostream& out) {
  out << "candidate,target\n";
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      if (grid.get(r, c)) out << r << ',' << c << '\n';
    }
  }
}

void write_point_cloud_csv(const PointCloud& cloud, std::ostream& out) {
  out << "x,y,z,intensity\n";
  for (const PointSample& s : cloud.samples) {
    out << format_double(s.x) << ',' << format_double(s.y) << ','
        << format_double(s.z) << ',' << format_double(s.intensity) << '\n';
  }
}

}  // namespace lidarplace
