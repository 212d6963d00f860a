#include "lidarplace/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>

#include "lidarplace/errors.hpp"
#include "lidarplace/format.hpp"

namespace lidarplace {

namespace {

using Bits = std::vector<std::uint64_t>;

double gain_of(std::span<const std::uint64_t> row, const Bits& covered,
               std::span<const double> weights) {
  double total = 0.0;
  for (std::size_t w = 0; w < row.size(); ++w) {
    std::uint64_t fresh = row[w] & ~covered[w];
    while (fresh) {
      const int b = std::countr_zero(fresh);
      total += weights[w * 64 + static_cast<std::size_t>(b)];
      fresh &= fresh - 1;
    }
  }
  return total;
}

void cover(Bits& covered, std::span<const std::uint64_t> row) {
  for (std::size_t w = 0; w < row.size(); ++w) covered[w] |= row[w];
}

double weight_of(const Bits& bits, std::span<const double> weights) {
  double total = 0.0;
  for (std::size_t w = 0; w < bits.size(); ++w) {
    std::uint64_t word = bits[w];
    while (word) {
      total += weights[w * 64 + static_cast<std::size_t>(std::countr_zero(word))];
      word &= word - 1;
    }
  }
  return total;
}

double sum_top(std::vector<double> values, std::size_t r) {
  r = std::min(r, values.size());
  std::partial_sort(values.begin(), values.begin() + static_cast<long>(r),
                    values.end(), std::greater<>());
  return std::accumulate(values.begin(), values.begin() + static_cast<long>(r),
                         0.0);
}

// Fractional knapsack over (gain, cost) items: an upper bound on the gain of
// any affordable subset, by submodularity.
double knapsack_bound(std::vector<std::pair<double, double>> items,
                      double capacity) {
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    // a.gain / a.cost > b.gain / b.cost, zero costs first
    return a.first * b.second > b.first * a.second;
  });
  double total = 0.0;
  for (const auto& [gain, cost] : items) {
    if (gain <= 0.0) continue;
    if (cost <= capacity) {
      total += gain;
      capacity -= cost;
    } else {
      total += gain * (capacity / cost);
      break;
    }
  }
  return total;
}

bool lexicographically_less(const std::vector<std::size_t>& a,
                            const std::vector<std::size_t>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Strict preference between two evaluated selections.
bool preferred(const Solution& a, const Solution& b) {
  if (a.objective != b.objective) return a.objective > b.objective;
  if (a.total_cost != b.total_cost) return a.total_cost < b.total_cost;
  if (a.selected.size() != b.selected.size()) {
    return a.selected.size() < b.selected.size();
  }
  return lexicographically_less(a.selected, b.selected);
}

class BranchAndBound {
 public:
  explicit BranchAndBound(const DeploymentProblem& problem)
      : problem_(problem),
        words_(problem.grid.words_per_row()),
        tolerance_(1e-9 * std::max(1.0, problem.total_weight())) {
    const bool budget_mode = std::holds_alternative<Budget>(problem.constraint);
    const Bits empty(words_, 0);
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < problem.grid.rows(); ++i) {
      if (budget_mode && !fits_budget(problem.costs[i], budget())) continue;
      const double g = gain_of(problem.grid.row(i), empty, problem.weights);
      if (g <= 0.0) continue;  // never part of a preferred selection
      double key = g;
      if (budget_mode) {
        key = problem.costs[i] > 0.0 ? g / problem.costs[i]
                                     : std::numeric_limits<double>::infinity();
      }
      ranked.emplace_back(key, i);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (const auto& [key, i] : ranked) order_.push_back(i);
    best_ = evaluate_selection(problem, {}, Method::kExact);
  }

  Solution run() {
    Bits covered(words_, 0);
    std::vector<std::size_t> chosen;
    search(0, covered, 0.0, 0.0, chosen);
    best_.optimality_bound = best_.objective;
    return best_;
  }

 private:
  double budget() const { return std::get<Budget>(problem_.constraint).amount; }

  bool budget_mode() const {
    return std::holds_alternative<Budget>(problem_.constraint);
  }

  // Remaining budget, or remaining sensor slots in cardinality mode.
  double capacity_left(double cost, std::size_t count) const {
    if (budget_mode()) return budget() - cost;
    const std::size_t n = std::get<Cardinality>(problem_.constraint).count;
    return count >= n ? 0.0 : static_cast<double>(n - count);
  }

  bool affordable(double cost_so_far, std::size_t count, std::size_t i) const {
    if (budget_mode()) return fits_budget(cost_so_far + problem_.costs[i], budget());
    return count < std::get<Cardinality>(problem_.constraint).count;
  }

  void consider(const std::vector<std::size_t>& chosen, double objective) {
    if (objective < best_.objective - tolerance_) return;
    std::vector<std::size_t> sorted = chosen;
    std::sort(sorted.begin(), sorted.end());
    Solution candidate =
        evaluate_selection(problem_, std::move(sorted), Method::kExact);
    if (preferred(candidate, best_)) best_ = std::move(candidate);
  }

  void search(std::size_t k, Bits& covered, double objective, double cost,
              std::vector<std::size_t>& chosen) {
    consider(chosen, objective);
    if (k == order_.size()) return;

    // Gains of the remaining candidates that still fit.
    std::vector<double> gains;
    std::vector<std::pair<double, double>> items;
    Bits reachable = covered;
    for (std::size_t p = k; p < order_.size(); ++p) {
      const std::size_t i = order_[p];
      if (!affordable(cost, chosen.size(), i)) continue;
      const double g = gain_of(problem_.grid.row(i), covered, problem_.weights);
      if (g <= 0.0) continue;
      gains.push_back(g);
      items.emplace_back(g, problem_.costs[i]);
      cover(reachable, problem_.grid.row(i));
    }
    if (gains.empty()) return;
    double bound = weight_of(reachable, problem_.weights);
    if (budget_mode()) {
      bound = std::min(bound, objective + knapsack_bound(std::move(items),
                                                         budget() - cost));
    } else {
      const auto slots = static_cast<std::size_t>(
          capacity_left(cost, chosen.size()));
      bound = std::min(bound, objective + sum_top(std::move(gains), slots));
    }
    if (bound < best_.objective - tolerance_) return;

    const std::size_t i = order_[k];
    if (affordable(cost, chosen.size(), i)) {
      const double g = gain_of(problem_.grid.row(i), covered, problem_.weights);
      if (g > 0.0) {
        Bits next = covered;
        cover(next, problem_.grid.row(i));
        chosen.push_back(i);
        search(k + 1, next, objective + g, cost + problem_.costs[i], chosen);
        chosen.pop_back();
      }
    }
    search(k + 1, covered, objective, cost, chosen);
  }

  const DeploymentProblem& problem_;
  std::size_t words_;
  double tolerance_;
  std::vector<std::size_t> order_;
  Solution best_;
};

}  // namespace

std::string describe(const Constraint& constraint) {
  if (const auto* b = std::get_if<Budget>(&constraint)) {
    return "budget " + format_double(b->amount);
  }
  return "count " + std::to_string(std::get<Cardinality>(constraint).count);
}

std::string_view to_string(Method method) {
  return method == Method::kExact ? "exact" : "greedy";
}

void DeploymentProblem::validate() const {
  if (weights.size() != grid.cols()) {
    throw DimensionMismatchError("expected " + std::to_string(grid.cols()) +
                                 " target weights, got " +
                                 std::to_string(weights.size()));
  }
  if (costs.size() != grid.rows()) {
    throw DimensionMismatchError("expected " + std::to_string(grid.rows()) +
                                 " candidate costs, got " +
                                 std::to_string(costs.size()));
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw PreconditionError("target weights must be finite and >= 0");
    }
  }
  for (double c : costs) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw PreconditionError("candidate costs must be finite and >= 0");
    }
  }
  if (const auto* b = std::get_if<Budget>(&constraint)) {
    if (!(b->amount >= 0.0)) throw PreconditionError("budget must be >= 0");
  }
}

double DeploymentProblem::total_weight() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

bool fits_budget(double total_cost, double budget) {
  return total_cost <= budget + 1e-12 * std::max(1.0, std::abs(budget));
}

Solution evaluate_selection(const DeploymentProblem& problem,
                            std::vector<std::size_t> selected, Method method) {
  Solution s;
  s.method = method;
  Bits covered(problem.grid.words_per_row(), 0);
  for (std::size_t i : selected) {
    cover(covered, problem.grid.row(i));
    s.total_cost += problem.costs[i];
  }
  s.selected = std::move(selected);
  for (std::size_t j = 0; j < problem.grid.cols(); ++j) {
    if ((covered[j / 64] >> (j % 64)) & 1u) {
      s.covered.push_back(j);
      s.objective += problem.weights[j];
    }
  }
  s.optimality_bound = s.objective;
  return s;
}

Solution solve_exact(const DeploymentProblem& problem,
                     std::size_t max_candidates) {
  problem.validate();
  if (problem.grid.rows() > max_candidates) {
    throw InstanceTooLargeError(
        "exact solver is limited to " + std::to_string(max_candidates) +
        " candidates but the instance has " +
        std::to_string(problem.grid.rows()) +
        "; use the greedy method or reduce the candidate set");
  }
  return BranchAndBound(problem).run();
}

Solution solve_greedy(const DeploymentProblem& problem) {
  problem.validate();
  const std::size_t n = problem.grid.rows();
  const bool budget_mode = std::holds_alternative<Budget>(problem.constraint);
  const double budget =
      budget_mode ? std::get<Budget>(problem.constraint).amount : 0.0;
  const std::size_t slots =
      budget_mode ? n : std::get<Cardinality>(problem.constraint).count;

  // Candidates that fit the constraint on their own.
  std::vector<bool> eligible(n, false);
  Bits reachable(problem.grid.words_per_row(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    eligible[i] = budget_mode ? fits_budget(problem.costs[i], budget) : slots > 0;
    if (eligible[i]) cover(reachable, problem.grid.row(i));
  }
  double bound = weight_of(reachable, problem.weights);

  Bits covered(problem.grid.words_per_row(), 0);
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> picks;
  double objective = 0.0;
  double cost = 0.0;
  std::vector<double> gains(n, 0.0);

  for (;;) {
    for (std::size_t i = 0; i < n; ++i) {
      gains[i] = eligible[i] && !taken[i]
                     ? gain_of(problem.grid.row(i), covered, problem.weights)
                     : 0.0;
    }
    // Online bound: OPT <= f(S) + best achievable sum of marginals.
    if (budget_mode) {
      std::vector<std::pair<double, double>> items;
      for (std::size_t i = 0; i < n; ++i) {
        if (gains[i] > 0.0) items.emplace_back(gains[i], problem.costs[i]);
      }
      bound = std::min(bound, objective + knapsack_bound(std::move(items), budget));
    } else {
      bound = std::min(bound, objective + sum_top(gains, slots));
    }
    if (!budget_mode && picks.size() >= slots) break;

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < n; ++i) {
      if (gains[i] <= 0.0) continue;
      if (budget_mode && !fits_budget(cost + problem.costs[i], budget)) continue;
      if (!best) {
        best = i;
        continue;
      }
      const std::size_t b = *best;
      const bool better =
          budget_mode ? gains[i] * problem.costs[b] > gains[b] * problem.costs[i]
                      : gains[i] > gains[b];
      if (better) best = i;
    }
    if (!best) break;
    taken[*best] = true;
    picks.push_back(*best);
    objective += gains[*best];
    cost += problem.costs[*best];
    cover(covered, problem.grid.row(*best));
  }

  std::sort(picks.begin(), picks.end());
  Solution result = evaluate_selection(problem, std::move(picks), Method::kGreedy);

  if (budget_mode) {
    const Bits none(problem.grid.words_per_row(), 0);
    std::optional<std::size_t> single;
    double single_gain = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!eligible[i]) continue;
      const double g = gain_of(problem.grid.row(i), none, problem.weights);
      if (g > single_gain) {
        single = i;
        single_gain = g;
      }
    }
    if (single) {
      Solution alt = evaluate_selection(problem, {*single}, Method::kGreedy);
      if (alt.objective > result.objective) result = std::move(alt);
    }
  } else if (slots > 0) {
    // Greedy is within 1 - 1/e of the optimum for cardinality constraints.
    bound = std::min(bound, result.objective / (1.0 - std::exp(-1.0)));
  }
  result.optimality_bound = std::max(bound, result.objective);
  return result;
}

Solution solve_auto(const DeploymentProblem& problem, std::size_t exact_limit) {
  if (problem.grid.rows() <= exact_limit) return solve_exact(problem, exact_limit);
  return solve_greedy(problem);
}

VerificationReport verify_solution(const DeploymentProblem& problem,
                                   const Solution& solution) {
  VerificationReport report;
  auto& v = report.violations;
  const std::size_t rows = problem.grid.rows();
  const std::size_t cols = problem.grid.cols();
  if (problem.weights.size() != cols || problem.costs.size() != rows) {
    v.push_back("problem dimensions are inconsistent with the grid");
    return report;
  }

  std::vector<bool> seen(rows, false);
  Bits covered(problem.grid.words_per_row(), 0);
  double cost = 0.0;
  for (std::size_t i : solution.selected) {
    if (i >= rows) {
      v.push_back("selected candidate " + std::to_string(i) +
                  " is out of range (" + std::to_string(rows) + " candidates)");
      continue;
    }
    if (seen[i]) {
      v.push_back("candidate " + std::to_string(i) + " selected twice");
      continue;
    }
    seen[i] = true;
    cover(covered, problem.grid.row(i));
    cost += problem.costs[i];
  }

  std::vector<bool> claimed(cols, false);
  for (std::size_t j : solution.covered) {
    if (j >= cols) {
      v.push_back("covered target " + std::to_string(j) + " is out of range");
      continue;
    }
    claimed[j] = true;
  }
  double objective = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    const bool visible = (covered[j / 64] >> (j % 64)) & 1u;
    if (visible) objective += problem.weights[j];
    if (claimed[j] && !visible) {
      v.push_back("target " + std::to_string(j) +
                  " claimed covered but no selected candidate sees it");
    } else if (!claimed[j] && visible) {
      v.push_back("target " + std::to_string(j) +
                  " is seen by a selected candidate but not listed as covered");
    }
  }

  if (const auto* b = std::get_if<Budget>(&problem.constraint)) {
    if (!fits_budget(cost, b->amount)) {
      v.push_back("budget exceeded: total cost " + format_double(cost) +
                  " > budget " + format_double(b->amount));
    }
  } else {
    const std::size_t n = std::get<Cardinality>(problem.constraint).count;
    if (solution.selected.size() > n) {
      v.push_back("cardinality exceeded: " +
                  std::to_string(solution.selected.size()) +
                  " sensors selected > limit " + std::to_string(n));
    }
  }
  const double tol = 1e-9 * std::max(1.0, std::abs(objective));
  if (std::abs(cost - solution.total_cost) > 1e-9 * std::max(1.0, cost)) {
    v.push_back("reported total cost " + format_double(solution.total_cost) +
                " differs from recomputed " + format_double(cost));
  }
  if (std::abs(objective - solution.objective) > tol) {
    v.push_back("reported objective " + format_double(solution.objective) +
                " differs from recomputed " + format_double(objective));
  }
  if (solution.objective > solution.optimality_bound + tol) {
    v.push_back("objective " + format_double(solution.objective) +
                " exceeds optimality bound " +
                format_double(solution.optimality_bound));
  }
  return report;
}

double coverage_fraction(const Solution& solution,
                         std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) {
    throw UndefinedFractionError(
        "coverage fraction is undefined when all target weights are zero");
  }
  return std::clamp(solution.objective / total, 0.0, 1.0);
}

}  // namespace lidarplace
