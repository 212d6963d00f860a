#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "lidarplace/cli.hpp"
#include "lidarplace/errors.hpp"
#include "lidarplace/format.hpp"
#include "lidarplace/parallel.hpp"

namespace lidarplace {

namespace {

double positive_number(const std::string& key, const std::string& value) {
  double v = 0.0;
  try {
    v = parse_double(trim(value));
  } catch (const FormatError&) {
    throw PreconditionError(key + ": '" + value + "' is not a number");
  }
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw PreconditionError(key + " must be a positive number, got " + value);
  }
  return v;
}

double non_negative_number(const std::string& key, const std::string& value) {
  double v = 0.0;
  try {
    v = parse_double(trim(value));
  } catch (const FormatError&) {
    throw PreconditionError(key + ": '" + value + "' is not a number");
  }
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw PreconditionError(key + " must be >= 0, got " + value);
  }
  return v;
}

std::uint64_t unsigned_integer(const std::string& key, const std::string& value) {
  const std::string text = trim(value);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw PreconditionError(key + " must be a non-negative integer, got '" +
                            value + "'");
  }
  return v;
}

std::vector<std::string> list(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& item : split(value, ',')) {
    std::string t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

unsigned RunConfig::effective_jobs() const {
  return jobs == 0 ? default_jobs() : jobs;
}

std::optional<Constraint> RunConfig::constraint() const {
  if (budget) return Budget{*budget};
  if (count) return Cardinality{*count};
  return std::nullopt;
}

void RunConfig::validate(bool need_constraint) const {
  if (!(spacing > 0.0)) throw PreconditionError("spacing must be > 0");
  if (candidate_spacing && !(*candidate_spacing > 0.0)) {
    throw PreconditionError("candidate spacing must be > 0");
  }
  if (delta && !(*delta > 0.0)) throw PreconditionError("delta must be > 0");
  if (budget && count) {
    throw PreconditionError("set exactly one of budget or count, not both");
  }
  if (need_constraint && !budget && !count) {
    throw PreconditionError("a constraint is required: --budget or --count");
  }
  for (const auto& m : methods) {
    if (m != "exact" && m != "greedy" && m != "auto") {
      throw PreconditionError("unknown method '" + m +
                              "' (expected exact, greedy or auto)");
    }
  }
  if (vehicle_count_model != "fixed" && vehicle_count_model != "poisson") {
    throw PreconditionError("vehicle_count_model must be fixed or poisson");
  }
  if (trials < 1) throw PreconditionError("trials must be >= 1");
}

std::string RunConfig::canonical_text() const {
  std::map<std::string, std::string> kv;
  if (budget) kv["budget"] = format_double(*budget);
  if (count) kv["count"] = std::to_string(*count);
  kv["candidate_spacing"] = format_double(effective_candidate_spacing());
  std::string curve_text;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    curve_text += (i ? "," : "") + format_double(curve[i]);
  }
  kv["curve"] = curve_text;
  kv["delta"] = format_double(effective_delta());
  kv["exact_limit"] = std::to_string(exact_limit);
  kv["intensity_min"] = intensity_min ? format_double(*intensity_min) : "";
  std::string method_text;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    method_text += (i ? "," : "") + methods[i];
  }
  kv["method"] = method_text.empty() ? "auto" : method_text;
  kv["scene"] = scene.generic_string();
  kv["seed"] = std::to_string(seed);
  kv["spacing"] = format_double(spacing);
  kv["trials"] = std::to_string(trials);
  std::string type_text;
  for (std::size_t i = 0; i < types.size(); ++i) {
    type_text += (i ? "," : "") + types[i];
  }
  kv["types"] = type_text;
  kv["vehicle_count_model"] = vehicle_count_model;
  kv["vehicles"] = format_double(vehicles);
  std::string weight_text;
  for (const auto& [id, w] : weights) {
    weight_text += (weight_text.empty() ? "" : ",") + id + "=" + format_double(w);
  }
  kv["weights"] = weight_text;

  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

void apply_setting(RunConfig& config, const std::string& raw_key,
                   const std::string& value,
                   const std::filesystem::path& base_dir) {
  std::string key = raw_key;
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string v = trim(value);
  if (key == "scene" || key == "out") {
    std::filesystem::path p(v);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    (key == "scene" ? config.scene : config.out) = p;
  } else if (key == "spacing") {
    config.spacing = positive_number(key, v);
  } else if (key == "candidate_spacing") {
    config.candidate_spacing = positive_number(key, v);
  } else if (key == "delta") {
    config.delta = positive_number(key, v);
  } else if (key == "types") {
    config.types = list(v);
  } else if (key == "budget") {
    config.budget = non_negative_number(key, v);
    config.count.reset();
  } else if (key == "count") {
    config.count = unsigned_integer(key, v);
    config.budget.reset();
  } else if (key == "weights") {
    config.weights.clear();
    for (const auto& item : list(v)) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw PreconditionError("weights: expected segment=weight, got '" +
                                item + "'");
      }
      config.weights[trim(item.substr(0, eq))] =
          non_negative_number("weights", item.substr(eq + 1));
    }
  } else if (key == "seed") {
    config.seed = unsigned_integer(key, v);
  } else if (key == "jobs") {
    config.jobs = static_cast<unsigned>(unsigned_integer(key, v));
  } else if (key == "method") {
    config.methods = list(v);
  } else if (key == "intensity_min") {
    const double x = non_negative_number(key, v);
    if (x > 1.0) throw PreconditionError("intensity_min must be in [0, 1]");
    config.intensity_min = x;
  } else if (key == "exact_limit") {
    config.exact_limit = unsigned_integer(key, v);
  } else if (key == "trials") {
    config.trials = unsigned_integer(key, v);
  } else if (key == "vehicles") {
    config.vehicles = non_negative_number(key, v);
  } else if (key == "vehicle_count_model") {
    config.vehicle_count_model = v;
  } else if (key == "curve") {
    config.curve.clear();
    for (const auto& item : list(v)) {
      config.curve.push_back(non_negative_number("curve", item));
    }
  } else if (key == "timing") {
    if (v != "true" && v != "false") {
      throw PreconditionError("timing must be true or false");
    }
    config.timing = v == "true";
  } else {
    throw PreconditionError("unknown setting '" + raw_key + "'");
  }
}

RunConfig parse_config_text(const std::string& text,
                            const std::filesystem::path& base_dir) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  bool saw_budget = false;
  bool saw_count = false;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw PreconditionError("config line " + std::to_string(n) +
                              ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    saw_budget |= key == "budget";
    saw_count |= key == "count";
    try {
      apply_setting(config, key, line.substr(eq + 1), base_dir);
    } catch (const PreconditionError& e) {
      throw PreconditionError("config line " + std::to_string(n) + ": " +
                              e.what());
    }
  }
  if (saw_budget && saw_count) {
    throw PreconditionError("config sets both budget and count");
  }
  return config;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.parent_path());
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

}  // namespace lidarplace
