#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lidarplace/cli.hpp"
#include "lidarplace/errors.hpp"
#include "lidarplace/format.hpp"

namespace lidarplace {

using nlohmann::ordered_json;

namespace {

constexpr const char* kGridJson = "grid.json";
constexpr const char* kTargetsCsv = "targets.csv";
constexpr const char* kCandidatesCsv = "candidates.csv";
constexpr const char* kGridFile = "visibility.vgrd";
constexpr const char* kSolutionJson = "solution.json";
constexpr const char* kManifestJson = "manifest.json";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

ordered_json parse_artifact(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version")) {
    throw FormatError("'" + path.string() + "' has no format_version");
  }
  const auto& v = doc["format_version"];
  if (!v.is_number_integer() || v.get<int>() != kFormatVersion) {
    throw FormatError("'" + path.string() + "' has format version " + v.dump() +
                      ", this tool reads version " +
                      std::to_string(kFormatVersion));
  }
  return doc;
}

template <typename T>
T field(const ordered_json& doc, const char* key, const std::filesystem::path& path) {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError("'" + path.string() + "': missing or invalid '" + key + "'");
  }
}

std::vector<std::string> resolved_types(const RunConfig& config,
                                        const Scene& scene) {
  if (!config.types.empty()) return config.types;
  std::vector<std::string> all;
  for (const auto& spec : scene.catalog) all.push_back(spec.type_id);
  return all;
}

ordered_json constraint_json(const Constraint& c) {
  if (const auto* b = std::get_if<Budget>(&c)) {
    return {{"kind", "budget"}, {"value", b->amount}};
  }
  return {{"kind", "count"}, {"value", std::get<Cardinality>(c).count}};
}

Method parse_method(const std::string& name) {
  return name == "greedy" ? Method::kGreedy : Method::kExact;
}

std::vector<double> target_weights(const RunConfig& config,
                                   const GridStage& grid) {
  for (const auto& [id, w] : config.weights) {
    if (!grid.scene.find_segment(id)) {
      throw PreconditionError("weights: unknown road segment '" + id + "'");
    }
  }
  std::vector<double> weights = grid.targets.weights;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    auto it = config.weights.find(grid.targets.segment_of[j]);
    if (it != config.weights.end()) weights[j] = it->second;
  }
  return weights;
}

bool has_priorities(std::span<const double> weights) {
  return std::any_of(weights.begin(), weights.end(),
                     [](double w) { return w != 1.0; });
}

DeploymentProblem make_problem(const GridStage& grid, std::vector<double> weights,
                               const Constraint& constraint) {
  DeploymentProblem p;
  p.grid = grid.grid;
  p.weights = std::move(weights);
  p.costs = grid.candidates.costs();
  p.constraint = constraint;
  return p;
}

std::vector<double> problem_weights(const std::string& algorithm,
                                    const SolveStage& stage) {
  if (algorithm == "weighted") return stage.weights;
  return std::vector<double>(stage.weights.size(), 1.0);
}

std::string svg_name(const NamedSolution& s) {
  return "coverage_" + s.algorithm + "_" +
         std::string(to_string(s.solution.method)) + ".svg";
}

// Methods are stored per solution; "auto" is resolved when solving.
std::vector<std::string> requested_methods(const RunConfig& config) {
  return config.methods.empty() ? std::vector<std::string>{"auto"}
                                : config.methods;
}

std::vector<double> curve_budgets(const RunConfig& config,
                                  const Constraint& constraint) {
  if (!config.curve.empty()) {
    std::vector<double> b = config.curve;
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }
  std::vector<double> budgets;
  if (const auto* c = std::get_if<Cardinality>(&constraint)) {
    for (std::size_t n = 1; n <= c->count; ++n) budgets.push_back(double(n));
  } else {
    const double amount = std::get<Budget>(constraint).amount;
    if (amount > 0.0) {
      for (int k = 1; k <= 4; ++k) budgets.push_back(amount * k / 4.0);
    }
  }
  return budgets;
}

double priority_coverage(const Solution& s, std::span<const double> weights) {
  std::size_t total = 0;
  for (double w : weights) total += w > 1.0;
  if (total == 0) return 0.0;
  std::size_t hit = 0;
  for (std::size_t j : s.covered) hit += weights[j] > 1.0;
  return static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace

// ---------------------------------------------------------------------------
// grid

GridStage run_grid_stage(const RunConfig& config) {
  if (config.scene.empty()) {
    throw PreconditionError("no scene file given (--scene)");
  }
  GridStage stage;
  const std::string text = [&] {
    try {
      return read_file(config.scene);
    } catch (const IoError&) {
      throw IoError("cannot read scene file '" + config.scene.string() + "'");
    }
  }();
  stage.scene = parse_scene(text, config.scene.string());
  stage.scene_sha256 = sha256_hex(text);
  const unsigned jobs = config.effective_jobs();
  stage.targets = discretize_roi(stage.scene, config.spacing, jobs);
  const auto types = resolved_types(config, stage.scene);
  stage.candidates = enumerate_candidates(
      stage.scene, config.effective_candidate_spacing(), types);
  stage.grid = build_visibility_grid(stage.candidates, stage.targets,
                                     stage.scene, config.effective_delta(),
                                     config.intensity_min, jobs);
  return stage;
}

ArtifactFiles grid_files(const RunConfig& config, const GridStage& stage) {
  ArtifactFiles files;
  std::ostringstream targets, candidates, grid;
  write_targets_csv(stage.targets, targets);
  write_candidates_csv(stage.candidates, candidates);
  write_grid(stage.grid, grid);
  files[kTargetsCsv] = targets.str();
  files[kCandidatesCsv] = candidates.str();
  files[kGridFile] = grid.str();

  ordered_json meta;
  meta["format_version"] = kFormatVersion;
  meta["tool"] = kToolName;
  meta["tool_version"] = kToolVersion;
  meta["scene"] = config.scene.generic_string();
  meta["scene_sha256"] = stage.scene_sha256;
  meta["spacing"] = config.spacing;
  meta["candidate_spacing"] = config.effective_candidate_spacing();
  meta["delta"] = config.effective_delta();
  meta["types"] = resolved_types(config, stage.scene);
  meta["intensity_min"] = config.intensity_min
                              ? ordered_json(*config.intensity_min)
                              : ordered_json(nullptr);
  meta["targets"] = stage.targets.size();
  meta["candidates"] = stage.candidates.size();
  meta["visible_pairs"] = stage.grid.count();
  files[kGridJson] = meta.dump(2) + "\n";
  return files;
}

GridStage load_grid_stage(const RunConfig& config,
                          const std::filesystem::path& dir) {
  const auto meta_path = dir / kGridJson;
  const ordered_json meta = parse_artifact(meta_path);
  GridStage stage;
  const std::filesystem::path scene_path =
      config.scene.empty()
          ? std::filesystem::path(field<std::string>(meta, "scene", meta_path))
          : config.scene;
  std::string text;
  try {
    text = read_file(scene_path);
  } catch (const IoError&) {
    throw IoError("cannot read scene file '" + scene_path.string() + "'");
  }
  stage.scene = parse_scene(text, scene_path.string());
  stage.scene_sha256 = sha256_hex(text);
  if (stage.scene_sha256 != field<std::string>(meta, "scene_sha256", meta_path)) {
    throw FormatError("scene file '" + scene_path.string() +
                      "' does not match the one the grid was built from");
  }
  const double spacing = field<double>(meta, "spacing", meta_path);
  {
    std::istringstream in(read_file(dir / kTargetsCsv));
    stage.targets = read_targets_csv(in, spacing);
  }
  {
    std::istringstream in(read_file(dir / kCandidatesCsv));
    stage.candidates = read_candidates_csv(in, stage.scene);
  }
  {
    std::istringstream in(read_file(dir / kGridFile));
    stage.grid = read_grid(in);
  }
  if (stage.grid.rows() != stage.candidates.size() ||
      stage.grid.cols() != stage.targets.size()) {
    throw FormatError("visibility grid is " + std::to_string(stage.grid.rows()) +
                      " x " + std::to_string(stage.grid.cols()) + " but there are " +
                      std::to_string(stage.candidates.size()) + " candidates and " +
                      std::to_string(stage.targets.size()) + " targets");
  }
  return stage;
}

// ---------------------------------------------------------------------------
// solve

SolveStage run_solve_stage(const RunConfig& config, const GridStage& grid) {
  const auto constraint = config.constraint();
  if (!constraint) {
    throw PreconditionError("a constraint is required: --budget or --count");
  }
  SolveStage stage{*constraint, target_weights(config, grid), {}};
  std::vector<std::string> algorithms{"vanilla"};
  if (has_priorities(stage.weights)) algorithms.push_back("weighted");

  for (const auto& algorithm : algorithms) {
    const auto problem =
        make_problem(grid, problem_weights(algorithm, stage), stage.constraint);
    for (const auto& method : requested_methods(config)) {
      const auto start = std::chrono::steady_clock::now();
      Solution s = method == "auto"     ? solve_auto(problem, config.exact_limit)
                   : method == "greedy" ? solve_greedy(problem)
                                        : solve_exact(problem, config.exact_limit);
      const std::chrono::duration<double> elapsed =
          std::chrono::steady_clock::now() - start;
      const auto report = verify_solution(problem, s);
      if (!report.ok()) {
        std::string msg = algorithm + "/" + method + " solution failed verification:";
        for (const auto& v : report.violations) msg += "\n  - " + v;
        throw InvariantBreach(msg);
      }
      stage.solutions.push_back({algorithm, std::move(s), elapsed.count()});
    }
  }
  return stage;
}

ArtifactFiles solve_files(const RunConfig& config, const GridStage& grid,
                          const SolveStage& stage) {
  ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["tool"] = kToolName;
  doc["tool_version"] = kToolVersion;
  doc["constraint"] = constraint_json(stage.constraint);
  ordered_json overrides = ordered_json::object();
  for (const auto& [id, w] : config.weights) overrides[id] = w;
  doc["weight_overrides"] = overrides;
  doc["total_weight"] = [&] {
    double t = 0.0;
    for (double w : stage.weights) t += w;
    return t;
  }();
  ordered_json list = ordered_json::array();
  for (const auto& named : stage.solutions) {
    const Solution& s = named.solution;
    ordered_json entry;
    entry["algorithm"] = named.algorithm;
    entry["method"] = std::string(to_string(s.method));
    entry["objective"] = s.objective;
    entry["coverage_fraction"] =
        coverage_fraction(s, problem_weights(named.algorithm, stage));
    entry["optimality_bound"] = s.optimality_bound;
    entry["total_cost"] = s.total_cost;
    entry["covered_targets"] = s.covered.size();
    ordered_json selected = ordered_json::array();
    for (std::size_t i : s.selected) {
      const Candidate& c = grid.candidates.candidates[i];
      selected.push_back({{"index", i},
                          {"x", c.position.x},
                          {"y", c.position.y},
                          {"height", c.height},
                          {"type", c.sensor.type_id},
                          {"cost", c.cost},
                          {"zone", c.zone_id}});
    }
    entry["selected"] = selected;
    if (config.timing) entry["wall_time_s"] = named.wall_time_s;
    list.push_back(entry);
  }
  doc["solutions"] = list;
  return {{kSolutionJson, doc.dump(2) + "\n"}};
}

SolveStage load_solve_stage(const RunConfig& config, const GridStage& grid,
                            const std::filesystem::path& dir) {
  (void)config;
  const auto path = dir / kSolutionJson;
  const ordered_json doc = parse_artifact(path);
  SolveStage stage;
  const auto c = field<ordered_json>(doc, "constraint", path);
  const auto kind = field<std::string>(c, "kind", path);
  if (kind == "budget") {
    stage.constraint = Budget{field<double>(c, "value", path)};
  } else if (kind == "count") {
    stage.constraint = Cardinality{field<std::size_t>(c, "value", path)};
  } else {
    throw FormatError("'" + path.string() + "': unknown constraint kind '" + kind + "'");
  }
  RunConfig weights_config;
  weights_config.weights =
      field<std::map<std::string, double>>(doc, "weight_overrides", path);
  stage.weights = target_weights(weights_config, grid);

  for (const auto& entry : field<ordered_json>(doc, "solutions", path)) {
    NamedSolution named;
    named.algorithm = field<std::string>(entry, "algorithm", path);
    if (named.algorithm != "vanilla" && named.algorithm != "weighted") {
      throw FormatError("'" + path.string() + "': unknown algorithm '" +
                        named.algorithm + "'");
    }
    std::vector<std::size_t> selected;
    for (const auto& sel : field<ordered_json>(entry, "selected", path)) {
      const auto i = field<std::size_t>(sel, "index", path);
      if (i >= grid.candidates.size()) {
        throw FormatError("'" + path.string() + "': candidate index " +
                          std::to_string(i) + " out of range");
      }
      selected.push_back(i);
    }
    const auto problem = make_problem(
        grid, problem_weights(named.algorithm, stage), stage.constraint);
    named.solution = evaluate_selection(
        problem, std::move(selected),
        parse_method(field<std::string>(entry, "method", path)));
    // Stored figures are checked against the recomputed ones below.
    named.solution.objective = field<double>(entry, "objective", path);
    named.solution.total_cost = field<double>(entry, "total_cost", path);
    named.solution.optimality_bound =
        field<double>(entry, "optimality_bound", path);
    if (entry.contains("wall_time_s")) {
      named.wall_time_s = field<double>(entry, "wall_time_s", path);
    }
    const auto report = verify_solution(problem, named.solution);
    if (!report.ok()) {
      throw InvariantBreach("stored solution fails verification: " +
                            report.violations.front());
    }
    stage.solutions.push_back(std::move(named));
  }
  return stage;
}

// ---------------------------------------------------------------------------
// eval and render

ArtifactFiles eval_files(const RunConfig& config, const GridStage& grid,
                         const SolveStage& stage) {
  const SampleFilter filter{grid.grid.delta(), config.intensity_min};
  VehicleModel vehicles;
  vehicles.count_kind = config.vehicle_count_model == "poisson"
                            ? VehicleModel::CountKind::kPoisson
                            : VehicleModel::CountKind::kFixed;
  vehicles.mean_count = config.vehicles;
  vehicles.validate();
  const bool priorities = has_priorities(stage.weights);

  ordered_json report;
  report["format_version"] = kFormatVersion;
  report["tool"] = kToolName;
  report["tool_version"] = kToolVersion;
  report["constraint"] = constraint_json(stage.constraint);
  report["targets"] = grid.targets.size();
  report["candidates"] = grid.candidates.size();
  report["delta"] = grid.grid.delta();

  std::ostringstream text;
  text << kToolName << ' ' << kToolVersion << " report\n"
       << "constraint: " << describe(stage.constraint) << '\n'
       << "targets: " << grid.targets.size()
       << ", candidates: " << grid.candidates.size()
       << ", delta: " << format_double(grid.grid.delta()) << " m\n";

  ordered_json solutions = ordered_json::array();
  for (const auto& named : stage.solutions) {
    const Solution& s = named.solution;
    const auto weights = problem_weights(named.algorithm, stage);
    TargetGrid weighted_targets = grid.targets;
    weighted_targets.weights = weights;
    const double coverage = coverage_fraction(s, weights);
    const DensityReport density =
        point_density(s, grid.candidates, grid.scene, grid.targets, filter);
    const OcclusionReport occlusion = occlusion_monte_carlo(
        s, grid.candidates, grid.scene, weighted_targets, filter, vehicles,
        config.trials, config.seed, config.effective_jobs());

    ordered_json entry;
    entry["algorithm"] = named.algorithm;
    entry["method"] = std::string(to_string(s.method));
    entry["sensors"] = s.selected.size();
    entry["objective"] = s.objective;
    entry["coverage_fraction"] = coverage;
    entry["optimality_bound"] = s.optimality_bound;
    entry["total_cost"] = s.total_cost;
    if (priorities) entry["priority_coverage"] = priority_coverage(s, stage.weights);
    entry["point_density_proxy"] = {{"covered_targets", density.covered_targets},
                              {"mean_points", density.mean_points},
                              {"min_points", density.min_points},
                              {"median_points", density.median_points}};
    entry["occlusion_proxy"] = {{"trials", occlusion.trials},
                          {"seed", occlusion.seed},
                          {"vehicle_count_model", config.vehicle_count_model},
                          {"mean_vehicles", occlusion.mean_vehicles},
                          {"static_coverage", occlusion.static_coverage},
                          {"mean_coverage", occlusion.mean_coverage},
                          {"min_coverage", occlusion.min_coverage}};
    solutions.push_back(entry);

    text << '\n'
         << named.algorithm << " / " << to_string(s.method) << ": "
         << s.selected.size() << " sensors, cost "
         << format_fixed(s.total_cost, 2) << '\n'
         << "  coverage " << format_fixed(100.0 * coverage, 2) << "% (objective "
         << format_double(s.objective) << ", bound "
         << format_double(s.optimality_bound) << ")\n";
    if (priorities) {
      text << "  priority coverage "
           << format_fixed(100.0 * priority_coverage(s, stage.weights), 2) << "%\n";
    }
    for (std::size_t i : s.selected) {
      const Candidate& c = grid.candidates.candidates[i];
      text << "  - " << c.sensor.type_id << " at (" << format_fixed(c.position.x, 2)
           << ", " << format_fixed(c.position.y, 2) << ") h="
           << format_fixed(c.height, 1) << " m, zone " << c.zone_id << '\n';
    }
    text << "  point density proxy, samples per covered target: mean "
         << format_fixed(density.mean_points, 1) << ", min " << density.min_points
         << ", median " << density.median_points << '\n'
         << "  occlusion proxy, " << format_double(config.vehicles) << ' '
         << config.vehicle_count_model << " vehicles over " << occlusion.trials
         << " trials: mean " << format_fixed(100.0 * occlusion.mean_coverage, 2)
         << "%, min " << format_fixed(100.0 * occlusion.min_coverage, 2) << "%\n";
  }
  report["solutions"] = solutions;

  const auto problem = make_problem(grid, stage.weights, stage.constraint);
  const auto budgets = curve_budgets(config, stage.constraint);
  const GainCurve curve = gain_curve(problem, budgets, config.exact_limit);
  ordered_json points = ordered_json::array();
  text << "\ngain curve (" << (priorities ? "weighted" : "unweighted") << ")\n";
  for (const auto& p : curve.points) {
    ordered_json point;
    point["budget"] = p.budget;
    if (p.solution) {
      point["objective"] = p.solution->objective;
      point["coverage"] = p.coverage;
      point["marginal"] = p.marginal;
      point["method"] = std::string(to_string(p.solution->method));
      text << "  " << format_double(p.budget) << ": "
           << format_fixed(100.0 * p.coverage, 2) << "%\n";
    } else {
      point["error"] = p.error;
      text << "  " << format_double(p.budget) << ": failed (" << p.error << ")\n";
    }
    points.push_back(point);
  }
  report["gain_curve"] = points;

  std::ostringstream csv;
  write_gain_curve_csv(curve, csv);
  return {{"report.json", report.dump(2) + "\n"},
          {"report.txt", text.str()},
          {"gain_curve.csv", csv.str()}};
}

ArtifactFiles render_files(const GridStage& grid, const SolveStage& stage) {
  ArtifactFiles files;
  for (const auto& named : stage.solutions) {
    files[svg_name(named)] =
        render_coverage_svg(grid.scene, grid.targets, grid.grid,
                            grid.candidates, named.solution);
  }
  return files;
}

// ---------------------------------------------------------------------------
// manifest and file output

std::string manifest_json(const RunConfig& config, const GridStage& grid,
                          const ArtifactFiles& outputs) {
  ordered_json doc;
  doc["tool"] = kToolName;
  doc["version"] = kToolVersion;
  doc["format_version"] = kFormatVersion;
  const std::string canonical = config.canonical_text();
  ordered_json settings = ordered_json::object();
  for (const auto& line : split(canonical, '\n')) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) settings[line.substr(0, eq)] = line.substr(eq + 1);
  }
  doc["config"] = settings;
  doc["config_hash"] = sha256_hex(canonical);
  doc["scene_sha256"] = grid.scene_sha256;
  ordered_json files = ordered_json::array();
  for (const auto& [name, bytes] : outputs) {
    files.push_back(
        {{"name", name}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
  }
  doc["outputs"] = files;
  return doc.dump(2) + "\n";
}

namespace {

std::filesystem::path partial_path(const std::filesystem::path& dir,
                                   const std::string& name) {
  return dir / (name + ".partial");
}

void write_partials(const std::filesystem::path& dir, const ArtifactFiles& files) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory '" + dir.string() +
                  "': " + ec.message());
  }
  for (const auto& [name, bytes] : files) {
    const auto path = partial_path(dir, name);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << bytes;
    out.close();
    if (!out) throw IoError("cannot write '" + path.string() + "'");
  }
}

void commit_partials(const std::filesystem::path& dir, const ArtifactFiles& files) {
  for (const auto& entry : files) {
    std::error_code ec;
    std::filesystem::rename(partial_path(dir, entry.first), dir / entry.first, ec);
    if (ec) {
      throw IoError("cannot move '" + entry.first + ".partial' into place: " +
                    ec.message());
    }
  }
}

}  // namespace

void write_files(const std::filesystem::path& dir, const ArtifactFiles& files) {
  write_partials(dir, files);
  commit_partials(dir, files);
}

// ---------------------------------------------------------------------------
// commands

namespace {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InvariantBreach*>(&e)) return kExitInvariantBreach;
  if (dynamic_cast<const InstanceTooLargeError*>(&e) ||
      dynamic_cast<const EmptyGridError*>(&e) ||
      dynamic_cast<const UndefinedFractionError*>(&e)) {
    return kExitSolverFailure;
  }
  if (dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const PreconditionError*>(&e) ||
      dynamic_cast<const DimensionMismatchError*>(&e)) {
    return kExitInputError;
  }
  return kExitInvariantBreach;
}

// Runs `body`, which updates `stage` as it goes, and maps failures to exit
// codes with a stage-tagged message.
template <typename Body>
int guarded(std::string& stage, std::ostream& err, Body&& body) {
  try {
    body();
    return kExitOk;
  } catch (const std::exception& e) {
    err << kToolName << ' ' << stage << ": error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

void report_written(std::ostream& out, const std::filesystem::path& dir,
                    const ArtifactFiles& files) {
  for (const auto& entry : files) out << "wrote " << (dir / entry.first).string() << '\n';
}

}  // namespace

int cmd_grid(const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::string stage = "grid";
  return guarded(stage, err, [&] {
    config.validate(false);
    const GridStage grid = run_grid_stage(config);
    const auto files = grid_files(config, grid);
    write_files(config.out, files);
    out << grid.targets.size() << " targets, " << grid.candidates.size()
        << " candidates, " << grid.grid.count() << " visible pairs\n";
    report_written(out, config.out, files);
  });
}

int cmd_solve(const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::string stage = "solve";
  return guarded(stage, err, [&] {
    config.validate(true);
    const GridStage grid = load_grid_stage(config, config.out);
    const SolveStage solved = run_solve_stage(config, grid);
    const auto files = solve_files(config, grid, solved);
    write_files(config.out, files);
    for (const auto& named : solved.solutions) {
      out << named.algorithm << '/' << to_string(named.solution.method)
          << ": objective " << format_double(named.solution.objective) << " with "
          << named.solution.selected.size() << " sensors\n";
    }
    report_written(out, config.out, files);
  });
}

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::string stage = "eval";
  return guarded(stage, err, [&] {
    config.validate(false);
    const GridStage grid = load_grid_stage(config, config.out);
    const SolveStage solved = load_solve_stage(config, grid, config.out);
    const auto files = eval_files(config, grid, solved);
    write_files(config.out, files);
    report_written(out, config.out, files);
  });
}

int cmd_render(const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::string stage = "render";
  return guarded(stage, err, [&] {
    config.validate(false);
    const GridStage grid = load_grid_stage(config, config.out);
    const SolveStage solved = load_solve_stage(config, grid, config.out);
    const auto files = render_files(grid, solved);
    write_files(config.out, files);
    report_written(out, config.out, files);
  });
}

int cmd_pipeline(const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::string stage = "pipeline";
  return guarded(stage, err, [&] {
    config.validate(true);
    ArtifactFiles all;
    const auto stash = [&](const ArtifactFiles& files) {
      write_partials(config.out, files);
      all.insert(files.begin(), files.end());
    };

    stage = "grid";
    const GridStage grid = run_grid_stage(config);
    stash(grid_files(config, grid));

    stage = "solve";
    const SolveStage solved = run_solve_stage(config, grid);
    stash(solve_files(config, grid, solved));

    stage = "eval";
    stash(eval_files(config, grid, solved));

    stage = "render";
    stash(render_files(grid, solved));

    stage = "manifest";
    const ArtifactFiles manifest{{kManifestJson, manifest_json(config, grid, all)}};
    write_partials(config.out, manifest);
    commit_partials(config.out, all);
    commit_partials(config.out, manifest);

    for (const auto& named : solved.solutions) {
      out << named.algorithm << '/' << to_string(named.solution.method)
          << ": coverage "
          << format_fixed(100.0 * coverage_fraction(
                                      named.solution,
                                      problem_weights(named.algorithm, solved)),
                          2)
          << "% with " << named.solution.selected.size() << " sensors\n";
    }
    out << "wrote " << all.size() + 1 << " files to " << config.out.string() << '\n';
  });
}

}  // namespace lidarplace
