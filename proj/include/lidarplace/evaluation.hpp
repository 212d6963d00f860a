#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidarplace/discretization.hpp"
#include "lidarplace/raycast.hpp"
#include "lidarplace/scene.hpp"
#include "lidarplace/solver.hpp"

namespace lidarplace {

struct GainPoint {
  double budget = 0.0;
  std::optional<Solution> solution;  // empty when the solve failed
  std::string error;
  double coverage = 0.0;  // weighted fraction
  double marginal = 0.0;  // objective change from the previous point
};

struct GainCurve {
  std::vector<GainPoint> points;

  std::vector<double> budgets() const;
  std::vector<double> objectives() const;
};

// Re-solves `base` at each budget, interpreted in the base constraint's unit
// (sensor count or currency). Exact within `exact_limit`, greedy otherwise.
// A failing point is recorded and the curve continues.
GainCurve gain_curve(const DeploymentProblem& base,
                     std::span<const double> budgets,
                     std::size_t exact_limit = kDefaultExactLimit);

void write_gain_curve_csv(const GainCurve& curve, std::ostream& out);

// Unweighted vs weighted formulation on the same grid. Priority targets are
// those with weight > 1.
struct WeightedComparison {
  Solution vanilla;
  Solution weighted;
  std::size_t priority_targets = 0;
  double vanilla_coverage = 0.0;            // fraction of all targets
  double weighted_coverage = 0.0;
  double vanilla_priority_coverage = 0.0;   // fraction of priority targets
  double weighted_priority_coverage = 0.0;
  double vanilla_weighted_objective = 0.0;  // vanilla selection, given weights
  double weighted_objective = 0.0;
};

WeightedComparison compare_weighted(const VisibilityGrid& grid,
                                    std::span<const double> weights,
                                    std::span<const double> costs,
                                    const Constraint& constraint,
                                    std::size_t exact_limit = kDefaultExactLimit);

// Geometric stand-in for detection quality: samples landing near each
// covered target, merged over the selected sensors.
struct DensityReport {
  std::size_t covered_targets = 0;
  double mean_points = 0.0;
  std::uint32_t min_points = 0;
  std::uint32_t median_points = 0;
};

DensityReport point_density(const Solution& solution,
                            const CandidateSet& candidates, const Scene& scene,
                            const TargetGrid& targets, const SampleFilter& filter);

struct VehicleModel {
  double length = 4.5;  // typical sedan, meters
  double width = 2.0;
  double height = 1.6;
  enum class CountKind { kFixed, kPoisson };
  CountKind count_kind = CountKind::kFixed;
  double mean_count = 0.0;

  void validate() const;
};

struct OcclusionReport {
  std::size_t trials = 0;
  double mean_coverage = 0.0;
  double min_coverage = 0.0;
  double static_coverage = 0.0;
  std::uint64_t seed = 0;
  double mean_vehicles = 0.0;
  std::vector<double> trial_coverage;
};

// Vehicle boxes that lie fully inside the road are dropped as temporary
// prisms; visibility of the selected sensors is rebuilt per trial. Trial t
// draws from its own stream derived from (seed, t), so results do not depend
// on `jobs`. Vehicle k of a trial is the same for every vehicle count, which
// makes coverage non-increasing in the count for a fixed seed.
OcclusionReport occlusion_monte_carlo(const Solution& solution,
                                      const CandidateSet& candidates,
                                      const Scene& scene,
                                      const TargetGrid& targets,
                                      const SampleFilter& filter,
                                      const VehicleModel& vehicles,
                                      std::size_t trials, std::uint64_t seed,
                                      unsigned jobs = 1);

// Vehicle footprints for one trial, exposed for testing.
std::vector<Obstacle> sample_vehicles(const Scene& scene,
                                      const VehicleModel& vehicles,
                                      std::uint64_t seed, std::size_t trial);

std::string render_coverage_svg(const Scene& scene, const TargetGrid& targets,
                                const VisibilityGrid& grid,
                                const CandidateSet& candidates,
                                const Solution& solution);

// Throws IoError when the file cannot be written.
void render_coverage_map(const Scene& scene, const TargetGrid& targets,
                         const VisibilityGrid& grid,
                         const CandidateSet& candidates,
                         const Solution& solution,
                         const std::filesystem::path& path);

}  // namespace lidarplace
