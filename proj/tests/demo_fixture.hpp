#pragma once

#include <string>
#include <vector>

#include "lidarplace/discretization.hpp"
#include "lidarplace/raycast.hpp"
#include "lidarplace/scene.hpp"
#include "lidarplace/solver.hpp"
#include "oracles.hpp"

namespace demo {

// Bundled intersection at 2 m spacing, delta 1 m, one sensor type.
struct Fixture {
  lidarplace::Scene scene;
  lidarplace::TargetGrid targets;
  lidarplace::CandidateSet candidates;
  lidarplace::VisibilityGrid grid;

  lidarplace::DeploymentProblem problem(lidarplace::Constraint c,
                                        const std::vector<double>& weights) const {
    std::vector<double> costs;
    for (const auto& cand : candidates.candidates) costs.push_back(cand.cost);
    return {grid, weights, costs, c};
  }
  lidarplace::DeploymentProblem problem(lidarplace::Constraint c) const {
    return problem(c, std::vector<double>(targets.size(), 1.0));
  }
  std::vector<double> central_weights(double w) const {
    std::vector<double> out;
    for (const auto& seg : targets.segment_of) out.push_back(seg == "center" ? w : 1.0);
    return out;
  }
};

inline Fixture load(const std::string& type) {
  Fixture f;
  f.scene = lidarplace::load_scene(oracle::data_path("town05_intersection.scene.json"));
  f.targets = lidarplace::discretize_roi(f.scene, 2.0);
  f.candidates = lidarplace::enumerate_candidates(f.scene, 2.0, std::vector<std::string>{type});
  f.grid = lidarplace::build_visibility_grid(f.candidates, f.targets, f.scene, 1.0);
  return f;
}

}  // namespace demo
