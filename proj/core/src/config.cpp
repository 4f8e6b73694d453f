#include "tatc/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace tatc {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + value + "'");
  }
}

long long to_integer(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  return static_cast<int>(to_integer(key, value));
}

}  // namespace

std::string normalize_env_name(std::string_view env) {
  std::string n = lower(trim(env));
  std::replace(n.begin(), n.end(), '_', '-');
  if (n == "umaze") return "u-maze";
  if (n == "tmaze") return "t-maze";
  if (n == "4rooms" || n == "four-rooms") return "4-rooms";
  return n;
}

RunConfig default_config(std::string_view env) {
  RunConfig cfg;
  cfg.env = normalize_env_name(env);
  if (cfg.env == "u-maze") {
    cfg.p_r = 0.3;
    cfg.p_rw = 0.4;
    cfg.K = 90;
    cfg.c = 30;
    cfg.L = 3;
  } else if (cfg.env == "t-maze") {
    cfg.p_r = 0.2;
    cfg.p_rw = 0.4;
    cfg.K = 40;
    cfg.c = 20;
    cfg.L = 2;
  } else if (cfg.env == "4-rooms") {
    cfg.p_r = 0.25;
    cfg.p_rw = 0.5;
    cfg.K = 60;
    cfg.c = 20;
    cfg.L = 3;
  } else if (cfg.env.starts_with("room-")) {
    // Small open rooms: short skills and blocks.
    cfg.p_r = 0.3;
    cfg.p_rw = 0.4;
    cfg.K = 20;
    cfg.c = 10;
    cfg.L = 2;
  } else {
    throw ConfigError("env", "unknown environment '" + std::string(env) + "'");
  }
  return cfg;
}

void validate(const RunConfig& cfg) {
  if (cfg.d < 1) throw ConfigError("d", "must be >= 1");
  if (cfg.objective == Objective::kTatc && cfg.d != 2) {
    throw ConfigError("d", "directional skills are defined for d = 2");
  }
  if (cfg.hidden < 1) throw ConfigError("hidden", "must be >= 1");
  if (cfg.n_directions < 1) throw ConfigError("n_directions", "must be >= 1");
  if (!(cfg.p_r >= 0.0 && cfg.p_r <= 1.0)) throw ConfigError("p_r", "must lie in [0, 1]");
  if (!(cfg.p_rw >= 0.0 && cfg.p_rw <= 1.0)) throw ConfigError("p_rw", "must lie in [0, 1]");
  if (cfg.c < 1) throw ConfigError("c", "must be >= 1");
  if (cfg.L < 1) throw ConfigError("L", "must be >= 1");
  if (cfg.N < 1) throw ConfigError("N", "must be >= 1");
  if (cfg.K != cfg.L * cfg.c) {
    throw ConfigError("K", "must equal L * c (" + std::to_string(cfg.L) + " * " +
                               std::to_string(cfg.c) + " = " + std::to_string(cfg.L * cfg.c) +
                               "), got " + std::to_string(cfg.K));
  }
  if (cfg.beta < 0.0) throw ConfigError("beta", "must be >= 0");
  if (cfg.beta_boredom < 0.0) throw ConfigError("beta_boredom", "must be >= 0");
  if (cfg.epochs < 0) throw ConfigError("epochs", "must be >= 0");
  if (cfg.updates_per_epoch < 1) throw ConfigError("updates_per_epoch", "must be >= 1");
  if (!(cfg.lr > 0.0)) throw ConfigError("lr", "must be > 0");
  if (!(cfg.rms_decay > 0.0 && cfg.rms_decay < 1.0)) throw ConfigError("rms_decay", "must lie in (0, 1)");
  if (!(cfg.rms_eps > 0.0)) throw ConfigError("rms_eps", "must be > 0");
  if (cfg.entropy_high < 0.0) throw ConfigError("entropy_high", "must be >= 0");
  if (cfg.entropy_low < 0.0) throw ConfigError("entropy_low", "must be >= 0");
  if (cfg.snapshot_every < 0) throw ConfigError("snapshot_every", "must be >= 0");
  if (cfg.checkpoint_every < 0) throw ConfigError("checkpoint_every", "must be >= 0");
}

void apply_entry(RunConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = lower(trim(raw_key));
  const std::string value = trim(raw_value);
  if (key == "env") {
    cfg.env = normalize_env_name(value);
  } else if (key == "maze_file") {
    cfg.maze_file = value;
  } else if (key == "d") {
    cfg.d = to_int(key, value);
  } else if (key == "hidden") {
    cfg.hidden = to_int(key, value);
  } else if (key == "n_directions") {
    cfg.n_directions = to_int(key, value);
  } else if (key == "objective") {
    const auto v = lower(value);
    if (v == "tatc") {
      cfg.objective = Objective::kTatc;
    } else if (v == "lap" || v == "lap-rep") {
      cfg.objective = Objective::kLap;
    } else {
      throw ConfigError(key, "expected 'tatc' or 'lap', got '" + value + "'");
    }
  } else if (key == "prior") {
    const auto v = lower(value);
    if (v == "non-uniform" || v == "nonuniform") {
      cfg.prior = Prior::kNonUniform;
    } else if (v == "uniform") {
      cfg.prior = Prior::kUniform;
    } else {
      throw ConfigError(key, "expected 'uniform' or 'non-uniform', got '" + value + "'");
    }
  } else if (key == "baseline") {
    const auto v = lower(value);
    if (v == "mean") {
      cfg.baseline = BaselineChoice::kMean;
    } else if (v == "value") {
      cfg.baseline = BaselineChoice::kValue;
    } else {
      throw ConfigError(key, "expected 'mean' or 'value', got '" + value + "'");
    }
  } else if (key == "beta") {
    cfg.beta = to_double(key, value);
  } else if (key == "beta_boredom" || key == "beta_prime") {
    cfg.beta_boredom = to_double(key, value);
  } else if (key == "p_r") {
    cfg.p_r = to_double(key, value);
  } else if (key == "p_rw") {
    cfg.p_rw = to_double(key, value);
  } else if (key == "k") {
    cfg.K = to_int(key, value);
  } else if (key == "c") {
    cfg.c = to_int(key, value);
  } else if (key == "l") {
    cfg.L = to_int(key, value);
  } else if (key == "n") {
    cfg.N = to_int(key, value);
  } else if (key == "epochs") {
    cfg.epochs = to_int(key, value);
  } else if (key == "updates_per_epoch") {
    cfg.updates_per_epoch = to_int(key, value);
  } else if (key == "lr") {
    cfg.lr = to_double(key, value);
  } else if (key == "rms_decay") {
    cfg.rms_decay = to_double(key, value);
  } else if (key == "rms_eps") {
    cfg.rms_eps = to_double(key, value);
  } else if (key == "entropy_high") {
    cfg.entropy_high = to_double(key, value);
  } else if (key == "entropy_low") {
    cfg.entropy_low = to_double(key, value);
  } else if (key == "seed") {
    const auto v = to_integer(key, value);
    if (v < 0) throw ConfigError(key, "must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(v);
  } else if (key == "snapshot_every") {
    cfg.snapshot_every = to_int(key, value);
  } else if (key == "checkpoint_every") {
    cfg.checkpoint_every = to_int(key, value);
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else {
    throw ConfigError(key, "unknown key");
  }
}

RunConfig resolve_config(std::string_view env,
                         const std::vector<std::pair<std::string, std::string>>& entries) {
  // The environment decides the defaults, so find the effective one first.
  std::string effective(env);
  for (const auto& [k, v] : entries) {
    if (lower(trim(k)) == "env") effective = v;
  }
  RunConfig cfg = default_config(effective);
  for (const auto& [k, v] : entries) {
    if (lower(trim(k)) == "env") continue;
    apply_entry(cfg, k, v);
  }
  validate(cfg);
  return cfg;
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  const std::string body = trim(text);
  if (body.starts_with("{")) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("<json>", e.what());
    }
    for (const auto& [k, v] : j.items()) {
      if (v.is_string()) {
        out.emplace_back(k, v.get<std::string>());
      } else if (v.is_number_integer()) {
        out.emplace_back(k, std::to_string(v.get<long long>()));
      } else if (v.is_number()) {
        std::ostringstream ss;
        ss.precision(17);
        ss << v.get<double>();
        out.emplace_back(k, ss.str());
      } else if (v.is_boolean()) {
        out.emplace_back(k, v.get<bool>() ? "1" : "0");
      } else {
        throw ConfigError(k, "JSON values must be scalars");
      }
    }
    return out;
  }
  std::istringstream in{std::string(text)};
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("<line " + std::to_string(line_no) + ">", "expected 'key = value'");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config_entries(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

RunConfig parse_config(const std::filesystem::path& path, std::optional<std::string> env,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
  auto entries = read_config_entries(path);
  std::string base = "u-maze";
  for (const auto& [k, v] : entries) {
    if (lower(trim(k)) == "env") base = v;
  }
  if (env) {
    base = *env;
    std::erase_if(entries, [](const auto& e) { return lower(trim(e.first)) == "env"; });
  }
  entries.insert(entries.end(), overrides.begin(), overrides.end());
  return resolve_config(base, entries);
}

std::string_view to_string(Objective o) { return o == Objective::kTatc ? "tatc" : "lap"; }
std::string_view to_string(Prior p) { return p == Prior::kUniform ? "uniform" : "non-uniform"; }
std::string_view to_string(BaselineChoice b) { return b == BaselineChoice::kMean ? "mean" : "value"; }

namespace {

std::vector<std::pair<std::string, std::string>> fields(const RunConfig& cfg) {
  const auto num = [](double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
  };
  return {
      {"env", cfg.env},
      {"maze_file", cfg.maze_file},
      {"d", std::to_string(cfg.d)},
      {"hidden", std::to_string(cfg.hidden)},
      {"n_directions", std::to_string(cfg.n_directions)},
      {"objective", std::string(to_string(cfg.objective))},
      {"prior", std::string(to_string(cfg.prior))},
      {"baseline", std::string(to_string(cfg.baseline))},
      {"beta", num(cfg.beta)},
      {"beta_boredom", num(cfg.beta_boredom)},
      {"p_r", num(cfg.p_r)},
      {"p_rw", num(cfg.p_rw)},
      {"K", std::to_string(cfg.K)},
      {"c", std::to_string(cfg.c)},
      {"L", std::to_string(cfg.L)},
      {"N", std::to_string(cfg.N)},
      {"epochs", std::to_string(cfg.epochs)},
      {"updates_per_epoch", std::to_string(cfg.updates_per_epoch)},
      {"lr", num(cfg.lr)},
      {"rms_decay", num(cfg.rms_decay)},
      {"rms_eps", num(cfg.rms_eps)},
      {"entropy_high", num(cfg.entropy_high)},
      {"entropy_low", num(cfg.entropy_low)},
      {"seed", std::to_string(cfg.seed)},
      {"snapshot_every", std::to_string(cfg.snapshot_every)},
      {"checkpoint_every", std::to_string(cfg.checkpoint_every)},
      {"out_dir", cfg.out_dir},
  };
}

}  // namespace

std::string to_kv_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : fields(cfg)) out += k + " = " + v + "\n";
  return out;
}

std::string to_json_text(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : fields(cfg)) j[k] = v;
  return j.dump();
}

GridSpec load_env(const RunConfig& cfg) {
  if (!cfg.maze_file.empty()) {
    std::ifstream in(cfg.maze_file);
    if (!in) throw ConfigError("maze_file", "cannot open " + cfg.maze_file);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_maze(ss.str());
  }
  return builtin_maze(cfg.env);
}

}  // namespace tatc
