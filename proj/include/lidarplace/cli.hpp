#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lidarplace/discretization.hpp"
#include "lidarplace/errors.hpp"
#include "lidarplace/evaluation.hpp"
#include "lidarplace/raycast.hpp"
#include "lidarplace/scene.hpp"
#include "lidarplace/solver.hpp"

namespace lidarplace {

inline constexpr const char* kToolName = "lidarplace";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitSolverFailure = 1;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitInvariantBreach = 3;

// A solver output failed independent verification.
class InvariantBreach : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::filesystem::path scene;
  double spacing = 1.0;
  std::optional<double> candidate_spacing;  // defaults to spacing
  std::optional<double> delta;              // defaults to spacing / 2
  std::vector<std::string> types;           // empty: whole catalog
  std::optional<double> budget;
  std::optional<std::size_t> count;
  std::map<std::string, double> weights;    // segment id -> priority
  std::uint64_t seed = 0;
  unsigned jobs = 0;                        // 0: available parallelism
  std::filesystem::path out = "out";
  std::vector<std::string> methods;         // exact | greedy | auto
  std::optional<double> intensity_min;
  std::size_t exact_limit = kDefaultExactLimit;
  std::size_t trials = 20;
  double vehicles = 4.0;
  std::string vehicle_count_model = "fixed";  // fixed | poisson
  std::vector<double> curve;                // empty: derived from constraint
  bool timing = false;

  double effective_candidate_spacing() const {
    return candidate_spacing.value_or(spacing);
  }
  double effective_delta() const { return delta.value_or(0.5 * spacing); }
  unsigned effective_jobs() const;
  std::optional<Constraint> constraint() const;

  // Throws PreconditionError. `need_constraint` for solve-type stages.
  void validate(bool need_constraint) const;

  // Sorted key=value lines of every setting that affects results (excludes
  // jobs, out and timing).
  std::string canonical_text() const;
};

// Applies one `key = value` setting; keys use underscores. Throws
// PreconditionError for unknown keys or bad values.
void apply_setting(RunConfig& config, const std::string& key,
                   const std::string& value,
                   const std::filesystem::path& base_dir = {});

// key=value lines, '#' comments. Relative paths resolve against the file's
// directory.
RunConfig load_config_file(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text,
                            const std::filesystem::path& base_dir);

std::string sha256_hex(std::string_view bytes);

// In-memory products of each stage, keyed by artifact file name.
using ArtifactFiles = std::map<std::string, std::string>;

struct GridStage {
  Scene scene;
  std::string scene_sha256;
  TargetGrid targets;
  CandidateSet candidates;
  VisibilityGrid grid;
};

struct NamedSolution {
  std::string algorithm;  // vanilla | weighted
  Solution solution;
  double wall_time_s = 0.0;
};

struct SolveStage {
  Constraint constraint;
  std::vector<double> weights;  // after overrides
  std::vector<NamedSolution> solutions;
};

GridStage run_grid_stage(const RunConfig& config);
ArtifactFiles grid_files(const RunConfig& config, const GridStage& stage);
// Reads grid artifacts back from `dir`, checking format versions and the
// scene checksum.
GridStage load_grid_stage(const RunConfig& config, const std::filesystem::path& dir);

SolveStage run_solve_stage(const RunConfig& config, const GridStage& grid);
ArtifactFiles solve_files(const RunConfig& config, const GridStage& grid,
                          const SolveStage& stage);
SolveStage load_solve_stage(const RunConfig& config, const GridStage& grid,
                            const std::filesystem::path& dir);

ArtifactFiles eval_files(const RunConfig& config, const GridStage& grid,
                         const SolveStage& stage);
ArtifactFiles render_files(const GridStage& grid, const SolveStage& stage);

std::string manifest_json(const RunConfig& config, const GridStage& grid,
                          const ArtifactFiles& outputs);

// Writes each file atomically (via a .partial sibling).
void write_files(const std::filesystem::path& dir, const ArtifactFiles& files);

// Stage commands. Each returns an exit code and reports errors on `err`.
int cmd_grid(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_solve(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_render(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_pipeline(const RunConfig& config, std::ostream& out, std::ostream& err);

// Entry point shared by the executable and the tests. args excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace lidarplace
