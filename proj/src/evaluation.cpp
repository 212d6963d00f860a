#include "lidarplace/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "lidarplace/errors.hpp"
#include "lidarplace/format.hpp"
#include "lidarplace/parallel.hpp"

namespace lidarplace {

std::vector<double> GainCurve::budgets() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.budget);
  return out;
}

std::vector<double> GainCurve::objectives() const {
  std::vector<double> out;
  for (const auto& p : points) {
    out.push_back(p.solution ? p.solution->objective : std::nan(""));
  }
  return out;
}

GainCurve gain_curve(const DeploymentProblem& base,
                     std::span<const double> budgets,
                     std::size_t exact_limit) {
  for (std::size_t i = 1; i < budgets.size(); ++i) {
    if (!(budgets[i] > budgets[i - 1])) {
      throw PreconditionError("gain curve budgets must be strictly increasing");
    }
  }
  const bool count_mode = std::holds_alternative<Cardinality>(base.constraint);
  GainCurve curve;
  DeploymentProblem problem = base;
  double previous = 0.0;
  for (double b : budgets) {
    GainPoint point;
    point.budget = b;
    try {
      if (count_mode) {
        if (!(b >= 0.0) || b != std::floor(b)) {
          throw PreconditionError("sensor-count budget " + format_double(b) +
                                  " is not a non-negative integer");
        }
        problem.constraint = Cardinality{static_cast<std::size_t>(b)};
      } else {
        problem.constraint = Budget{b};
      }
      point.solution = solve_auto(problem, exact_limit);
      point.coverage = coverage_fraction(*point.solution, problem.weights);
      point.marginal = point.solution->objective - previous;
      previous = point.solution->objective;
    } catch (const Error& e) {
      point.solution.reset();
      point.error = e.what();
    }
    curve.points.push_back(std::move(point));
  }
  return curve;
}

void write_gain_curve_csv(const GainCurve& curve, std::ostream& out) {
  out << "budget,objective,coverage,method\n";
  for (const auto& p : curve.points) {
    out << format_double(p.budget) << ',';
    if (p.solution) {
      out << format_double(p.solution->objective) << ','
          << format_double(p.coverage) << ',' << to_string(p.solution->method);
    } else {
      out << ",,failed";
    }
    out << '\n';
  }
}

namespace {

double covered_fraction(const Solution& s, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(s.covered.size()) / total;
}

double priority_fraction(const Solution& s, std::span<const double> weights,
                         std::size_t priority_total) {
  if (priority_total == 0) return 0.0;
  std::size_t hit = 0;
  for (std::size_t j : s.covered) hit += weights[j] > 1.0;
  return static_cast<double>(hit) / static_cast<double>(priority_total);
}

}  // namespace

WeightedComparison compare_weighted(const VisibilityGrid& grid,
                                    std::span<const double> weights,
                                    std::span<const double> costs,
                                    const Constraint& constraint,
                                    std::size_t exact_limit) {
  WeightedComparison out;
  for (double w : weights) out.priority_targets += w > 1.0;
  if (out.priority_targets == 0) {
    throw PreconditionError(
        "weighted comparison needs at least one target with weight > 1");
  }
  DeploymentProblem weighted{grid, {weights.begin(), weights.end()},
                             {costs.begin(), costs.end()}, constraint};
  DeploymentProblem vanilla = weighted;
  std::fill(vanilla.weights.begin(), vanilla.weights.end(), 1.0);

  out.vanilla = solve_auto(vanilla, exact_limit);
  out.weighted = solve_auto(weighted, exact_limit);
  out.vanilla_coverage = covered_fraction(out.vanilla, grid.cols());
  out.weighted_coverage = covered_fraction(out.weighted, grid.cols());
  out.vanilla_priority_coverage =
      priority_fraction(out.vanilla, weights, out.priority_targets);
  out.weighted_priority_coverage =
      priority_fraction(out.weighted, weights, out.priority_targets);
  out.vanilla_weighted_objective =
      evaluate_selection(weighted, out.vanilla.selected, out.vanilla.method)
          .objective;
  out.weighted_objective = out.weighted.objective;
  return out;
}

DensityReport point_density(const Solution& solution,
                            const CandidateSet& candidates, const Scene& scene,
                            const TargetGrid& targets,
                            const SampleFilter& filter) {
  const Occluders world(scene);
  std::vector<std::uint32_t> total(targets.size(), 0);
  for (std::size_t i : solution.selected) {
    const auto counts = sample_counts(
        simulate_sensor(candidates.candidates.at(i), world, i), targets, filter);
    for (std::size_t j = 0; j < counts.size(); ++j) total[j] += counts[j];
  }
  std::vector<std::uint32_t> covered;
  for (std::uint32_t c : total) {
    if (c > 0) covered.push_back(c);
  }
  DensityReport report;
  report.covered_targets = covered.size();
  if (covered.empty()) return report;
  std::sort(covered.begin(), covered.end());
  report.min_points = covered.front();
  report.median_points = covered[covered.size() / 2];
  report.mean_points =
      std::accumulate(covered.begin(), covered.end(), 0.0) / covered.size();
  return report;
}

void VehicleModel::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(length) || !positive(width) || !positive(height)) {
    throw PreconditionError("invalid vehicle dims: length, width and height "
                            "must be positive finite meters");
  }
  if (!(mean_count >= 0.0) || mean_count > 500.0) {
    throw PreconditionError("vehicle count must be in [0, 500]");
  }
  if (count_kind == CountKind::kFixed && mean_count != std::floor(mean_count)) {
    throw PreconditionError("fixed vehicle count must be an integer");
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Uniform in [0, 1) from the top 53 bits; identical on every platform.
double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

std::size_t draw_count(const VehicleModel& model, double u) {
  if (model.count_kind == VehicleModel::CountKind::kFixed) {
    return static_cast<std::size_t>(model.mean_count);
  }
  // Inverse CDF: monotone in the mean for a fixed u.
  const double lambda = model.mean_count;
  std::size_t k = 0;
  double p = std::exp(-lambda);
  double cdf = p;
  while (u > cdf && k < 10000) {
    ++k;
    p *= lambda / static_cast<double>(k);
    cdf += p;
    if (p == 0.0 && static_cast<double>(k) > lambda) break;
  }
  return k;
}

}  // namespace

std::vector<Obstacle> sample_vehicles(const Scene& scene,
                                      const VehicleModel& vehicles,
                                      std::uint64_t seed, std::size_t trial) {
  vehicles.validate();
  const std::uint64_t stream = splitmix64(seed ^ splitmix64(trial + 1));
  std::mt19937_64 count_gen(splitmix64(stream ^ 0xC0FFEEull));
  std::mt19937_64 place_gen(stream);
  const std::size_t count = draw_count(vehicles, unit_uniform(count_gen));

  const Box2 box = scene_bounds(scene);
  const PolygonIndex roi = make_roi_index(scene);
  std::vector<Obstacle> out;
  for (std::size_t v = 0; v < count; ++v) {
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      const Point2 c{box.min.x + unit_uniform(place_gen) * box.width(),
                     box.min.y + unit_uniform(place_gen) * box.height()};
      const bool coin = unit_uniform(place_gen) < 0.5;
      const auto seg = roi.find(c);
      if (!seg) continue;
      const Box2 seg_box = bounding_box(scene.road_segments[*seg].polygon);
      bool along_x = seg_box.width() > seg_box.height();
      if (seg_box.width() == seg_box.height()) along_x = coin;
      const double hx = 0.5 * (along_x ? vehicles.length : vehicles.width);
      const double hy = 0.5 * (along_x ? vehicles.width : vehicles.length);
      const Polygon footprint{{c.x - hx, c.y - hy},
                              {c.x + hx, c.y - hy},
                              {c.x + hx, c.y + hy},
                              {c.x - hx, c.y + hy}};
      const bool inside = std::all_of(
          footprint.begin(), footprint.end(),
          [&](const Point2& p) { return roi.find(p).has_value(); });
      if (!inside) continue;
      out.push_back({"vehicle_" + std::to_string(v), footprint, vehicles.height});
      placed = true;
    }
    if (!placed) {
      throw PreconditionError("could not place a " +
                              format_double(vehicles.length) + " x " +
                              format_double(vehicles.width) +
                              " m vehicle inside the road segments");
    }
  }
  return out;
}

namespace {

double coverage_with(const Solution& solution, const CandidateSet& candidates,
                     const Occluders& world, const TargetGrid& targets,
                     const TargetLocator& locator, const SampleFilter& filter,
                     double total_weight) {
  std::vector<std::uint64_t> row((targets.size() + 63) / 64, 0);
  for (std::size_t i : solution.selected) {
    mark_visible(simulate_sensor(candidates.candidates.at(i), world, i),
                 locator, filter, row);
  }
  double covered = 0.0;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if ((row[j / 64] >> (j % 64)) & 1u) covered += targets.weights[j];
  }
  return covered / total_weight;
}

}  // namespace

OcclusionReport occlusion_monte_carlo(const Solution& solution,
                                      const CandidateSet& candidates,
                                      const Scene& scene,
                                      const TargetGrid& targets,
                                      const SampleFilter& filter,
                                      const VehicleModel& vehicles,
                                      std::size_t trials, std::uint64_t seed,
                                      unsigned jobs) {
  if (trials < 1) throw PreconditionError("at least one trial is required");
  vehicles.validate();
  const double total_weight = targets.total_weight();
  if (!(total_weight > 0.0)) {
    throw UndefinedFractionError("all target weights are zero");
  }
  const TargetLocator locator(targets.points, filter.delta);

  OcclusionReport report;
  report.trials = trials;
  report.seed = seed;
  report.static_coverage = coverage_with(solution, candidates, Occluders(scene),
                                         targets, locator, filter, total_weight);

  report.trial_coverage.assign(trials, 0.0);
  std::vector<std::size_t> vehicle_counts(trials, 0);
  parallel_for(trials, jobs, [&](std::size_t t) {
    const auto cars = sample_vehicles(scene, vehicles, seed, t);
    vehicle_counts[t] = cars.size();
    Occluders world(scene);
    world.add(cars);
    report.trial_coverage[t] = coverage_with(solution, candidates, world,
                                             targets, locator, filter,
                                             total_weight);
  });

  double sum = 0.0;
  double cars = 0.0;
  report.min_coverage = report.trial_coverage.front();
  for (std::size_t t = 0; t < trials; ++t) {
    sum += report.trial_coverage[t];
    cars += static_cast<double>(vehicle_counts[t]);
    report.min_coverage = std::min(report.min_coverage, report.trial_coverage[t]);
  }
  report.mean_coverage = sum / static_cast<double>(trials);
  report.mean_vehicles = cars / static_cast<double>(trials);
  // Averaging identical values can round above the common value.
  report.mean_coverage = std::clamp(report.mean_coverage, report.min_coverage,
                                    std::max(report.min_coverage,
                                             *std::max_element(
                                                 report.trial_coverage.begin(),
                                                 report.trial_coverage.end())));
  return report;
}

namespace {

struct SvgFrame {
  Box2 world;
  double scale = 1.0;

  double x(double wx) const { return (wx - world.min.x) * scale; }
  double y(double wy) const { return (world.max.y - wy) * scale; }
  std::string px(double v) const { return format_fixed(v, 2); }
  std::string point(Point2 p) const { return px(x(p.x)) + "," + px(y(p.y)); }
  std::string points(const std::vector<Point2>& pts) const {
    std::string out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) out += ' ';
      out += point(pts[i]);
    }
    return out;
  }
};

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_coverage_svg(const Scene& scene, const TargetGrid& targets,
                                const VisibilityGrid& grid,
                                const CandidateSet& candidates,
                                const Solution& solution) {
  if (grid.cols() != targets.size() || grid.rows() != candidates.size()) {
    throw DimensionMismatchError("grid is " + std::to_string(grid.rows()) +
                                 " x " + std::to_string(grid.cols()) +
                                 " but there are " +
                                 std::to_string(candidates.size()) +
                                 " candidates and " +
                                 std::to_string(targets.size()) + " targets");
  }
  std::vector<bool> covered(targets.size(), false);
  for (std::size_t i : solution.selected) {
    if (i >= grid.rows()) {
      throw DimensionMismatchError("selected candidate " + std::to_string(i) +
                                   " is out of range");
    }
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      if (grid.get(i, j)) covered[j] = true;
    }
  }

  std::vector<Point2> extent;
  for (const auto& s : scene.road_segments) {
    extent.insert(extent.end(), s.polygon.begin(), s.polygon.end());
  }
  for (const auto& o : scene.obstacles) {
    extent.insert(extent.end(), o.footprint.begin(), o.footprint.end());
  }
  for (const auto& z : scene.mount_zones) {
    extent.insert(extent.end(), z.geometry.begin(), z.geometry.end());
  }
  SvgFrame f;
  f.world = bounding_box(extent);
  const double margin = 5.0;
  f.world.min.x -= margin;
  f.world.min.y -= margin;
  f.world.max.x += margin;
  f.world.max.y += margin;
  f.scale = std::min(10.0, 2000.0 / std::max(f.world.width(), f.world.height()));
  const double legend = 40.0;
  const double width = f.world.width() * f.scale;
  const double height = f.world.height() * f.scale;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.px(width)
      << "\" height=\"" << f.px(height + legend) << "\" viewBox=\"0 0 "
      << f.px(width) << ' ' << f.px(height + legend) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << f.px(width) << "\" height=\""
      << f.px(height + legend) << "\" fill=\"#ffffff\"/>\n";

  svg << "<g id=\"roads\" fill=\"#dde6f0\" stroke=\"#6b7f99\" stroke-width=\"1\">\n";
  for (const auto& s : scene.road_segments) {
    svg << "<polygon data-id=\"" << xml_escape(s.id) << "\" points=\""
        << f.points(s.polygon) << "\"/>\n";
  }
  svg << "</g>\n<g id=\"mount-zones\" fill=\"#e3d4f2\" stroke=\"#8a5cb8\" "
         "stroke-width=\"1\">\n";
  for (const auto& z : scene.mount_zones) {
    if (z.shape == ZoneShape::kPolygon) {
      svg << "<polygon data-id=\"" << xml_escape(z.id) << "\" points=\""
          << f.points(z.geometry) << "\"/>\n";
    } else {
      svg << "<polyline data-id=\"" << xml_escape(z.id) << "\" fill=\"none\" "
          << "stroke-width=\"4\" points=\"" << f.points(z.geometry) << "\"/>\n";
    }
  }
  svg << "</g>\n<g id=\"obstacles\" fill=\"#7a7a7a\" fill-opacity=\"0.8\" "
         "stroke=\"#444444\">\n";
  for (const auto& o : scene.obstacles) {
    svg << "<polygon data-id=\"" << xml_escape(o.id) << "\" points=\""
        << f.points(o.footprint) << "\"/>\n";
  }
  svg << "</g>\n";

  const double cell = targets.spacing * f.scale;
  svg << "<g id=\"cells\" fill=\"none\" stroke=\"#c8c8c8\" stroke-width=\"0.5\">\n";
  for (const Point2& p : targets.points) {
    svg << "<rect x=\"" << f.px(f.x(p.x) - 0.5 * cell) << "\" y=\""
        << f.px(f.y(p.y) - 0.5 * cell) << "\" width=\"" << f.px(cell)
        << "\" height=\"" << f.px(cell) << "\"/>\n";
  }
  const double r = std::max(1.0, 0.25 * cell);
  svg << "</g>\n<g id=\"targets\">\n";
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const Point2& p = targets.points[j];
    svg << "<circle cx=\"" << f.px(f.x(p.x)) << "\" cy=\"" << f.px(f.y(p.y))
        << "\" r=\"" << f.px(r) << "\" "
        << (covered[j] ? "class=\"covered\" fill=\"#d62728\" stroke=\"none\""
                       : "class=\"uncovered\" fill=\"none\" stroke=\"#8c8c8c\"")
        << "/>\n";
  }
  svg << "</g>\n<g id=\"sensors\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t i : solution.selected) {
    const Candidate& c = candidates.candidates[i];
    const double cx = f.x(c.position.x);
    const double cy = f.y(c.position.y);
    svg << "<circle cx=\"" << f.px(cx) << "\" cy=\"" << f.px(cy)
        << "\" r=\"7.00\" fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"3\"/>\n"
        << "<text x=\"" << f.px(cx + 9.0) << "\" y=\"" << f.px(cy - 9.0)
        << "\" fill=\"#1d6b1d\">" << xml_escape(c.sensor.type_id) << " @ "
        << format_fixed(c.height, 1) << " m</text>\n";
  }
  std::size_t n_covered = 0;
  for (bool b : covered) n_covered += b;
  svg << "</g>\n<text x=\"8\" y=\"" << f.px(height + 26.0)
      << "\" font-family=\"sans-serif\" font-size=\"14\" fill=\"#222222\">"
      << n_covered << " / " << targets.size() << " targets visible ("
      << format_fixed(targets.size() ? 100.0 * n_covered / targets.size() : 0.0, 1)
      << "%), " << solution.selected.size() << " sensors, "
      << to_string(solution.method) << "</text>\n</svg>\n";
  return svg.str();
}

void render_coverage_map(const Scene& scene, const TargetGrid& targets,
                         const VisibilityGrid& grid,
                         const CandidateSet& candidates,
                         const Solution& solution,
                         const std::filesystem::path& path) {
  const std::string svg =
      render_coverage_svg(scene, targets, grid, candidates, solution);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << svg;
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

}  // namespace lidarplace
