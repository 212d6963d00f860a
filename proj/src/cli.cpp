#include <algorithm>
#include <ostream>

#include <CLI11.hpp>

#include "lidarplace/cli.hpp"
#include "lidarplace/errors.hpp"

namespace lidarplace {

namespace {

struct FlagSpec {
  const char* name;  // long flag without dashes
  const char* help;
};

constexpr FlagSpec kValueFlags[] = {
    {"scene", "scene JSON file"},
    {"spacing", "target lattice spacing in meters"},
    {"candidate-spacing", "candidate lattice spacing (default: --spacing)"},
    {"delta", "sample-to-target distance threshold (default: spacing / 2)"},
    {"types", "comma-separated sensor type ids (default: whole catalog)"},
    {"budget", "total cost limit"},
    {"count", "maximum number of sensors"},
    {"weights", "priority overrides, segment=weight,..."},
    {"seed", "random seed for the occlusion study"},
    {"jobs", "worker threads (default: available parallelism)"},
    {"out", "run directory shared by all stages"},
    {"intensity-min", "drop samples with synthetic intensity below this"},
    {"exact-limit", "largest candidate count solved exactly"},
    {"trials", "Monte Carlo trials for the occlusion study"},
    {"vehicles", "vehicles per trial (mean for the poisson model)"},
    {"vehicle-count-model", "fixed or poisson"},
    {"curve", "comma-separated gain-curve budgets"},
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Roadside LiDAR placement: coverage grids, solvers and reports",
               kToolName};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "key = value settings file");
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  for (const auto& flag : kValueFlags) {
    options[flag.name] =
        app.add_option(std::string("--") + flag.name, values[flag.name], flag.help);
  }
  options["budget"]->excludes(options["count"]);
  std::vector<std::string> methods;
  auto* method_opt = app.add_option("--method", methods,
                                    "exact, greedy or auto; repeat to run several");
  bool timing = false;
  auto* timing_opt =
      app.add_flag("--timing", timing, "record solver wall time (not reproducible)");

  const std::pair<const char*, const char*> kCommands[] = {
      {"grid", "discretize the scene and build the visibility grid"},
      {"solve", "choose sensors from an existing grid"},
      {"eval", "reports, gain curve and occlusion study for a solved run"},
      {"render", "SVG coverage maps for a solved run"},
      {"pipeline", "all stages in sequence, with a manifest"},
  };
  for (const auto& [name, help] : kCommands) app.add_subcommand(name, help);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig config;
  try {
    if (!config_path.empty()) config = load_config_file(config_path);
    for (const auto& flag : kValueFlags) {
      if (options[flag.name]->count() > 0) {
        apply_setting(config, flag.name, values[flag.name]);
      }
    }
    if (method_opt->count() > 0) {
      config.methods.clear();
      for (const auto& m : methods) config.methods.push_back(m);
    }
    if (timing_opt->count() > 0) config.timing = timing;
  } catch (const Error& e) {
    err << kToolName << ' ' << command << ": error: " << e.what() << '\n';
    return kExitInputError;
  }

  if (command == "grid") return cmd_grid(config, out, err);
  if (command == "solve") return cmd_solve(config, out, err);
  if (command == "eval") return cmd_eval(config, out, err);
  if (command == "render") return cmd_render(config, out, err);
  return cmd_pipeline(config, out, err);
}

}  // namespace lidarplace
