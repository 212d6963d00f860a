#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lidarplace/raycast.hpp"

namespace lidarplace {

// Total cost of the selection may not exceed `amount`.
struct Budget {
  double amount = 0.0;
};

// At most `count` sensors.
struct Cardinality {
  std::size_t count = 0;
};

using Constraint = std::variant<Budget, Cardinality>;

std::string describe(const Constraint& constraint);

// Maximize the weight of targets seen by at least one selected candidate.
// Unit weights give the unweighted formulation.
struct DeploymentProblem {
  VisibilityGrid grid;
  std::vector<double> weights;  // one per target
  std::vector<double> costs;    // one per candidate
  Constraint constraint = Cardinality{};

  // Throws DimensionMismatchError or PreconditionError.
  void validate() const;
  double total_weight() const;
};

enum class Method { kExact, kGreedy };

std::string_view to_string(Method method);

struct Solution {
  std::vector<std::size_t> selected;  // ascending candidate indices
  std::vector<std::size_t> covered;   // ascending target indices
  double objective = 0.0;
  double total_cost = 0.0;
  Method method = Method::kExact;
  // Upper bound on the optimum; equals objective for exact solutions.
  double optimality_bound = 0.0;
};

// Budget comparison shared by every solver and the verifier, with a relative
// tolerance of 1e-12 to absorb summation-order rounding.
bool fits_budget(double total_cost, double budget);

// Covered targets, cost and objective of an arbitrary selection, summed in
// ascending index order.
Solution evaluate_selection(const DeploymentProblem& problem,
                            std::vector<std::size_t> selected, Method method);

inline constexpr std::size_t kDefaultExactLimit = 25;

// Branch and bound. Among optimal selections returns the one with the lowest
// total cost, then fewest sensors, then lexicographically smallest indices.
// Throws InstanceTooLargeError above `max_candidates` rows.
Solution solve_exact(const DeploymentProblem& problem,
                     std::size_t max_candidates = kDefaultExactLimit);

// Cardinality: max-marginal-gain greedy. Budget: better of cost-benefit
// greedy and the best affordable single candidate. Ties go to the smallest
// index.
Solution solve_greedy(const DeploymentProblem& problem);

// Exact when the instance fits under `exact_limit`, greedy otherwise.
Solution solve_auto(const DeploymentProblem& problem,
                    std::size_t exact_limit = kDefaultExactLimit);

struct VerificationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Recomputes everything from the raw grid. Never throws on bad solutions.
VerificationReport verify_solution(const DeploymentProblem& problem,
                                   const Solution& solution);

// objective / sum(weights). Throws UndefinedFractionError on zero weight.
double coverage_fraction(const Solution& solution,
                         std::span<const double> weights);

}  // namespace lidarplace
