#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tatc/gridworld.hpp"

namespace tatc {

/// Raised for configuration problems; the message names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::invalid_argument("config key '" + key + "': " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class Objective { kTatc, kLap };
enum class Prior { kNonUniform, kUniform };
enum class BaselineChoice { kMean, kValue };

struct RunConfig {
  std::string env = "u-maze";
  std::string maze_file;  // overrides the built-in maze when set

  int d = 2;
  int hidden = 128;
  int n_directions = 8;
  Objective objective = Objective::kTatc;
  Prior prior = Prior::kNonUniform;
  BaselineChoice baseline = BaselineChoice::kMean;

  double beta = 0.2;
  double beta_boredom = 2.0;
  double p_r = 0.3;
  double p_rw = 0.4;
  int K = 90;
  int c = 30;
  int L = 3;
  int N = 32;

  int epochs = 700;
  int updates_per_epoch = 10;

  double lr = 1e-3;
  double rms_decay = 0.99;
  double rms_eps = 1e-8;
  double entropy_high = 0.3;
  double entropy_low = 0.1;

  std::uint64_t seed = 0;
  int snapshot_every = 50;     // epochs; 0 disables embedding snapshots
  int checkpoint_every = 100;  // epochs; 0 disables checkpoints
  std::string out_dir;         // empty: no artifacts written
};

/// Hyperparameters of the named environment ("u-maze", "t-maze", "4-rooms",
/// "room-<n>"). Names are case-insensitive.
RunConfig default_config(std::string_view env);

/// Throws ConfigError naming the first violated invariant.
void validate(const RunConfig& cfg);

/// Environment defaults, then `entries` in order. An "env" entry selects the
/// defaults and must come before the keys it should not clobber; unknown keys
/// are rejected.
RunConfig resolve_config(std::string_view env,
                         const std::vector<std::pair<std::string, std::string>>& entries);

/// Reads "key = value" lines ('#' starts a comment) or a flat JSON object.
std::vector<std::pair<std::string, std::string>> read_config_entries(
    const std::filesystem::path& path);
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);

/// File entries, then `overrides`. `env` (when given) wins over the file.
RunConfig parse_config(const std::filesystem::path& path, std::optional<std::string> env = {},
                       const std::vector<std::pair<std::string, std::string>>& overrides = {});

void apply_entry(RunConfig& cfg, const std::string& key, const std::string& value);

/// Flat "key = value" rendering of every field, in a stable order.
std::string to_kv_text(const RunConfig& cfg);
/// Same content as a single-line JSON object.
std::string to_json_text(const RunConfig& cfg);

std::string normalize_env_name(std::string_view env);
GridSpec load_env(const RunConfig& cfg);

std::string_view to_string(Objective o);
std::string_view to_string(Prior p);
std::string_view to_string(BaselineChoice b);

}  // namespace tatc
