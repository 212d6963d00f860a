#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "lidarplace/errors.hpp"
#include "lidarplace/raycast.hpp"
#include "oracles.hpp"

using namespace lidarplace;

namespace {

bool grid_equals(const VisibilityGrid& g, const std::vector<std::vector<bool>>& v) {
  if (g.rows() != v.size()) return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (g.cols() != v[i].size()) return false;
    for (std::size_t j = 0; j < v[i].size(); ++j) {
      if (g.get(i, j) != v[i][j]) return false;
    }
  }
  return true;
}

bool subset(const VisibilityGrid& a, const VisibilityGrid& b) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (a.get(i, j) && !b.get(i, j)) return false;
    }
  }
  return true;
}

Candidate candidate_at(Point2 p, double height, const SensorSpec& spec) {
  return {p, height, spec, spec.unit_cost, "zone"};
}

Scene open_scene() {
  Scene s = oracle::square_scene(200.0);
  return s;
}

}  // namespace

TEST_CASE("beam enumeration examples") {
  const SensorSpec two = oracle::spec("t", 2, -15, 15, 100, 90, 1);
  const auto beams = generate_beams(two);
  REQUIRE(beams.size() == 8);
  const double el[2] = {-15, 15};
  const double az[4] = {0, 90, 180, 270};
  for (int e = 0; e < 2; ++e) {
    for (int a = 0; a < 4; ++a) {
      const Vec3 d = beams[e * 4 + a];
      const double er = el[e] * oracle::kPi / 180, ar = az[a] * oracle::kPi / 180;
      CHECK(d.x == doctest::Approx(std::cos(er) * std::cos(ar)));
      CHECK(d.y == doctest::Approx(std::cos(er) * std::sin(ar)));
      CHECK(d.z == doctest::Approx(std::sin(er)));
    }
  }

  const SensorSpec flat = oracle::spec("f", 1, 0, 0, 100, 10, 1);
  for (const Vec3& d : generate_beams(flat)) {
    CHECK(d.z == 0.0);
    CHECK(std::hypot(d.x, d.y) == doctest::Approx(1.0));
  }
  CHECK(generate_beams(flat).size() == 36);
}

TEST_CASE("catalog beam counts match an independent enumeration") {
  const auto specs = oracle::reference_catalog();
  CHECK(generate_beams(specs[0]).size() == 16 * 900);
  for (const auto& spec : specs) {
    const auto mine = generate_beams(spec);
    const auto ref = oracle::beams(spec);
    REQUIRE(mine.size() == ref.size());
    for (std::size_t k = 0; k < mine.size(); ++k) {
      CHECK(std::abs(mine[k].x - ref[k].x) < 1e-12);
      CHECK(std::abs(mine[k].y - ref[k].y) < 1e-12);
      CHECK(std::abs(mine[k].z - ref[k].z) < 1e-12);
    }
  }
  const auto el = channel_elevations(specs[2]);
  CHECK(el.front() == -25.0);
  CHECK(el.back() == 15.0);
}

TEST_CASE("sector azimuths are centered on +x") {
  SensorSpec s = oracle::spec("s", 1, -5, -5, 10, 30, 1);
  s.horizontal_fov = 120;
  const auto az = beam_azimuths(s);
  REQUIRE(az.size() == 4);
  CHECK(az.front() == -60.0);
  CHECK(az.back() == 30.0);
  s.horizontal_fov = 100;  // floor(100 / 30) = 3
  CHECK(beam_azimuths(s).size() == 3);
  s.horizontal_fov = 10;  // narrower than one step: a single beam
  CHECK(beam_azimuths(s).size() == 1);
  const auto ref = oracle::beams(s);
  CHECK(ref.size() == 1);
}

TEST_CASE("downward beam hits the ground at h / tan(elevation)") {
  const Scene s = open_scene();
  const double el = -15 * oracle::kPi / 180;
  const Vec3 d{std::cos(el), 0, std::sin(el)};
  const auto hit = cast_ray({0, 0, 5}, d, s, 100);
  REQUIRE(hit.has_value());
  CHECK(hit->x == doctest::Approx(18.660254037844386).epsilon(1e-12));
  CHECK(hit->y == doctest::Approx(0.0));
  CHECK(hit->z == 0.0);
  CHECK(hit->on_ground);
  const double t = 5 / std::sin(15 * oracle::kPi / 180);
  CHECK(hit->intensity == doctest::Approx(1 - t / 100).epsilon(1e-12));

  CHECK_FALSE(cast_ray({0, 0, 5}, {1, 0, 0}, s, 1000).has_value());
  CHECK_FALSE(cast_ray({0, 0, 5}, d, s, 19.0).has_value());  // path length 19.3
}

TEST_CASE("a wall in front of the ground hit stops the beam") {
  Scene s = open_scene();
  s.obstacles.push_back({"wall", oracle::rect(1, -5, 1.1, 5), 1.0});
  // Without the wall this beam lands at x = 3.
  const double len = std::hypot(3.0, 1.2);
  const Vec3 d{3 / len, 0, -1.2 / len};
  const auto hit = cast_ray({0, 0, 1.2}, d, s, 100);
  REQUIRE(hit.has_value());
  CHECK_FALSE(hit->on_ground);
  // Ray/plane x = 1: t = (1 - 0) / d.x.
  const double t = 1 / d.x;
  CHECK(hit->x == doctest::Approx(1.0));
  CHECK(hit->z == doctest::Approx(1.2 - 0.4));
  CHECK(t < len);
  CHECK(hit->intensity == doctest::Approx(1 - t / 100));
}

TEST_CASE("obstacles win exact ties with the ground") {
  Scene s = open_scene();
  s.obstacles.push_back({"step", oracle::rect(1, -1, 2, 1), 0.5});
  const Vec3 d{1 / std::sqrt(2.0), 0, -1 / std::sqrt(2.0)};
  const auto hit = cast_ray({0, 0, 1}, d, s, 100);
  REQUIRE(hit.has_value());
  CHECK_FALSE(hit->on_ground);
}

TEST_CASE("top faces are hit from above") {
  Scene s = open_scene();
  s.obstacles.push_back({"block", oracle::rect(-1, -1, 1, 1), 2.0});
  const auto hit = cast_ray({0, 0, 10}, {0, 0, -1}, s, 100);
  REQUIRE(hit.has_value());
  CHECK(hit->z == doctest::Approx(2.0));
  CHECK_FALSE(hit->on_ground);
}

TEST_CASE("open flat scene: downward channels give full rings, upward none") {
  const Scene s = open_scene();
  SensorSpec spec = oracle::reference_catalog()[0];
  spec.range = 1000;  // every downward channel reaches the ground
  const PointCloud cloud = simulate_sensor(candidate_at({100, 100}, 5, spec), s);
  CHECK(cloud.samples.size() == 8 * 900);
  for (const auto& p : cloud.samples) {
    CHECK(p.on_ground);
    CHECK(p.z == 0.0);
  }

  // At the catalog range of 100 m the -1 degree ring (286 m out) is lost.
  const PointCloud limited = simulate_sensor(candidate_at({100, 100}, 5, oracle::reference_catalog()[0]), s);
  CHECK(limited.samples.size() == 7 * 900);
}

TEST_CASE("a sensor boxed in by a tall enclosure sees no ground") {
  Scene s = open_scene();
  s.obstacles.push_back({"box", oracle::rect(97, 97, 103, 103), 30});
  const SensorSpec spec = oracle::reference_catalog()[1];
  const PointCloud cloud = simulate_sensor(candidate_at({100, 100}, 5, spec), s);
  CHECK(cloud.samples.size() == generate_beams(spec).size());
  for (const auto& p : cloud.samples) CHECK_FALSE(p.on_ground);
}

TEST_CASE("demo scene: Type-3 at 8 m equals an independent scalar caster") {
  const Scene s = load_scene(oracle::data_path("town05_intersection.scene.json"));
  SensorSpec spec = *s.find_sensor("Type-3");
  spec.azimuth_step = 2.0;  // low beam count for the scalar reference
  for (Point2 where : {Point2{12, 12}, Point2{-14, -12}}) {
    const Candidate c = candidate_at(where, 8.0, spec);
    const PointCloud cloud = simulate_sensor(c, s);
    std::size_t expected = 0;
    std::size_t k = 0;
    for (const Vec3& d : oracle::beams(spec)) {
      const auto ref = oracle::cast({where.x, where.y, 8.0}, d, 0.0, s.obstacles, spec.range);
      if (!ref) continue;
      ++expected;
      REQUIRE(k < cloud.samples.size());
      const PointSample& got = cloud.samples[k++];
      CHECK(got.on_ground == ref->ground);
      CHECK(std::abs(got.x - ref->point.x) < 1e-6);
      CHECK(std::abs(got.y - ref->point.y) < 1e-6);
      CHECK(std::abs(got.z - ref->point.z) < 1e-6);
    }
    CHECK(cloud.samples.size() == expected);
  }
}

TEST_CASE("point cloud invariants") {
  const Scene s = load_scene(oracle::data_path("town05_intersection.scene.json"));
  for (const auto& spec : s.catalog) {
    const Candidate c = candidate_at({12, 12}, 5.4, spec);
    const PointCloud cloud = simulate_sensor(c, s, 3);
    CHECK(cloud.sensor_index == 3);
    const auto limit = static_cast<std::size_t>(spec.channels) *
                       static_cast<std::size_t>(std::ceil(spec.horizontal_fov / spec.azimuth_step));
    CHECK(cloud.samples.size() <= limit);
    for (const auto& p : cloud.samples) {
      CHECK(p.z >= s.ground_elevation - 1e-9);
      CHECK(p.intensity >= 0.0);
      CHECK(p.intensity <= 1.0);
      const double r = std::sqrt((p.x - 12) * (p.x - 12) + (p.y - 12) * (p.y - 12) +
                                 (p.z - 5.4) * (p.z - 5.4));
      CHECK(r <= spec.range + 1e-9);
    }
  }
}

TEST_CASE("visibility grid equals the quadratic oracle on micro-scenes") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const oracle::MicroScene m = oracle::micro_scene(rng);
    const double delta = 0.3 + 2.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    const VisibilityGrid grid =
        build_visibility_grid(m.candidates, m.targets, m.scene, delta);
    CHECK(grid.delta() == delta);
    const auto v = oracle::visibility(oracle::clouds_of(m, Occluders(m.scene)), m.targets.points, delta);
    CHECK(grid_equals(grid, v));

    const VisibilityGrid filtered =
        build_visibility_grid(m.candidates, m.targets, m.scene, delta, 0.5);
    const auto vf = oracle::visibility(oracle::clouds_of(m, Occluders(m.scene)),
                                       m.targets.points, delta, 0.5);
    CHECK(grid_equals(filtered, vf));
    CHECK(subset(filtered, grid));
  }
}

TEST_CASE("3 candidates x 20 targets: grid from an independent caster") {
  Scene s = oracle::square_scene(20.0);
  s.obstacles.push_back({"kiosk", oracle::rect(8, 8, 11, 10), 2.5});
  TargetGrid targets;
  for (int k = 0; k < 20; ++k) {
    targets.points.push_back({1.3 + (k % 5) * 4.1, 1.7 + (k / 5) * 4.3});
    targets.weights.push_back(1.0);
    targets.segment_of.push_back("road");
  }
  CandidateSet set;
  const SensorSpec spec = oracle::spec("S", 12, -30, 10, 40, 3.0, 1);
  set.candidates = {candidate_at({-1.3, -1.1}, 4.2, spec),
                    candidate_at({21.4, 9.7}, 3.1, spec),
                    candidate_at({9.9, 21.8}, 6.3, spec)};
  const double delta = 1.1;
  const VisibilityGrid grid = build_visibility_grid(set, targets, s, delta);

  std::vector<std::vector<PointSample>> clouds;
  for (const auto& c : set.candidates) {
    std::vector<PointSample> cloud;
    const Vec3 o{c.position.x, c.position.y, c.height};
    for (const Vec3& d : oracle::beams(spec)) {
      if (auto h = oracle::cast(o, d, 0.0, s.obstacles, spec.range)) {
        cloud.push_back({h->point.x, h->point.y, h->point.z, 1 - h->t / spec.range, h->ground});
      }
    }
    clouds.push_back(cloud);
  }
  CHECK(grid_equals(grid, oracle::visibility(clouds, targets.points, delta)));
  CHECK(grid.count() > 0);
  CHECK(grid.count() < 60);
}

TEST_CASE("empty cloud gives a zero row, infinite delta a full row") {
  const Scene s = oracle::square_scene(20.0);
  const TargetGrid targets = discretize_roi(s, 2.0);
  CandidateSet set;
  set.candidates = {candidate_at({5, 5}, 5, oracle::spec("up", 4, 5, 20, 50, 5, 1)),
                    candidate_at({5, 5}, 5, oracle::spec("down", 4, -30, -10, 50, 5, 1))};
  const VisibilityGrid finite = build_visibility_grid(set, targets, s, 1.0);
  CHECK(finite.count_row(0) == 0);
  const VisibilityGrid inf =
      build_visibility_grid(set, targets, s, std::numeric_limits<double>::infinity());
  CHECK(inf.count_row(0) == 0);
  CHECK(inf.count_row(1) == targets.size());
}

TEST_CASE("monotone in delta and range, obstacles only remove bits") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0, 1);
  int violations = 0;
  for (int trial = 0; trial < 30; ++trial) {
    oracle::MicroScene m = oracle::micro_scene(rng);
    const double d1 = 0.2 + unit(rng), d2 = d1 + unit(rng);
    const auto g1 = build_visibility_grid(m.candidates, m.targets, m.scene, d1);
    const auto g2 = build_visibility_grid(m.candidates, m.targets, m.scene, d2);
    violations += !subset(g1, g2);

    CandidateSet longer = m.candidates;
    for (auto& c : longer.candidates) c.sensor.range *= 1.5;
    violations += !subset(g1, build_visibility_grid(longer, m.targets, m.scene, d1));

    Scene more = m.scene;
    const double x = 20 * unit(rng), y = 20 * unit(rng);
    more.obstacles.push_back({"extra", oracle::rect(x, y, x + 2, y + 1), 1 + 3 * unit(rng)});
    violations += !subset(build_visibility_grid(m.candidates, m.targets, more, d1), g1);
  }
  CHECK(violations == 0);
}

TEST_CASE("grid is independent of the worker count") {
  const Scene s = load_scene(oracle::data_path("town05_intersection.scene.json"));
  const TargetGrid targets = discretize_roi(s, 2.0);
  const std::vector<std::string> types{"Type-2"};
  const CandidateSet set = enumerate_candidates(s, 2.0, types);
  const VisibilityGrid one = build_visibility_grid(set, targets, s, 1.0, {}, 1);
  CHECK(build_visibility_grid(set, targets, s, 1.0, {}, 4) == one);
  CHECK(build_visibility_grid(set, targets, s, 1.0, {}, 3) == one);
}

TEST_CASE("dimension and precondition errors") {
  const Scene s = oracle::square_scene(10.0);
  TargetGrid targets = discretize_roi(s, 2.0);
  const std::vector<std::string> types{"Type-1"};
  const CandidateSet set = enumerate_candidates(s, 2.0, types);
  CHECK_THROWS_AS(build_visibility_grid(set, targets, s, 0.0), PreconditionError);
  targets.weights.pop_back();
  CHECK_THROWS_AS(build_visibility_grid(set, targets, s, 1.0), DimensionMismatchError);
}

TEST_CASE("sample counts agree with the double loop") {
  std::mt19937_64 rng(5);
  const oracle::MicroScene m = oracle::micro_scene(rng);
  const SampleFilter filter{1.5, std::nullopt};
  for (const auto& c : m.candidates.candidates) {
    const PointCloud cloud = simulate_sensor(c, m.scene);
    const auto counts = sample_counts(cloud, m.targets, filter);
    for (std::size_t j = 0; j < m.targets.size(); ++j) {
      std::uint32_t expected = 0;
      for (const auto& p : cloud.samples) {
        if (p.on_ground && planar_distance({p.x, p.y}, m.targets.points[j]) < 1.5) ++expected;
      }
      CHECK(counts[j] == expected);
    }
  }
}

TEST_CASE("grid file round trip") {
  std::mt19937_64 rng(9);
  for (std::size_t cols : {0u, 1u, 7u, 8u, 9u, 63u, 64u, 65u, 130u}) {
    VisibilityGrid g(5, cols, 0.75);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        if (rng() % 3 == 0) g.set(i, j);
      }
    }
    std::stringstream buf;
    write_grid(g, buf);
    CHECK(buf.str().size() == 20 + 5 * ((cols + 7) / 8));
    CHECK(read_grid(buf) == g);
  }

  // Byte layout: target j at bit j % 8 of byte j / 8.
  VisibilityGrid g(1, 10, 1.0);
  g.set(0, 0);
  g.set(0, 9);
  std::stringstream buf;
  write_grid(g, buf);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "VGRD");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[8]) == 10);
  CHECK(static_cast<unsigned char>(bytes[20]) == 0x01);
  CHECK(static_cast<unsigned char>(bytes[21]) == 0x02);
}

TEST_CASE("corrupt grid files") {
  VisibilityGrid g(2, 10, 1.0);
  g.set(1, 3);
  std::stringstream buf;
  write_grid(g, buf);
  const std::string good = buf.str();

  auto read = [](const std::string& bytes) {
    std::stringstream in(bytes);
    return read_grid(in);
  };
  std::string bad = good;
  bad[3] = 'X';
  try {
    read(bad);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    const std::string what = e.what();
    CHECK(what.find("magic bytes 'VGRX'") != std::string::npos);
  }
  CHECK_THROWS_AS(read(good.substr(0, 2)), FormatError);
  CHECK_THROWS_AS(read(good.substr(0, 12)), FormatError);
  CHECK_THROWS_AS(read(good.substr(0, good.size() - 1)), FormatError);
  CHECK_THROWS_AS(read(good + "x"), FormatError);

  std::string padding = good;
  padding[21] = static_cast<char>(0x80);  // bit 15 of row 0, beyond 10 columns
  CHECK_THROWS_AS(read(padding), FormatError);

  std::string huge = good;
  huge[4] = huge[5] = huge[6] = huge[7] = static_cast<char>(0xff);
  CHECK_THROWS_AS(read(huge), FormatError);

  std::string zero_delta = good;
  for (int i = 12; i < 20; ++i) zero_delta[i] = 0;
  CHECK_THROWS_AS(read(zero_delta), FormatError);
}

TEST_CASE("CSV dumps") {
  VisibilityGrid g(2, 3, 1.0);
  g.set(0, 2);
  g.set(1, 0);
  std::ostringstream out;
  write_grid_csv(g, out);
  CHECK(out.str() == "candidate,target\n0,2\n1,0\n");

  PointCloud cloud;
  cloud.samples = {{1.5, -2, 0, 0.25, true}};
  std::ostringstream pc;
  write_point_cloud_csv(cloud, pc);
  CHECK(pc.str() == "x,y,z,intensity\n1.5,-2,0,0.25\n");
}
