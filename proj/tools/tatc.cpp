// Command-line front end: train, ablate, eval-predict, eval-control, oracle,
// snapshot, compare.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tatc/checkpoint.hpp"
#include "tatc/config.hpp"
#include "tatc/eval.hpp"
#include "tatc/spectral.hpp"
#include "tatc/stats.hpp"
#include "tatc/trainer.hpp"

namespace fs = std::filesystem;
using tatc::RunConfig;

namespace {

using Entries = std::vector<std::pair<std::string, std::string>>;

struct Common {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::string env;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value or JSON config file");
  cmd->add_option("--seed", c.seeds, "seed (repeatable)");
  cmd->add_option("--out", c.out, "output root");
  cmd->add_option("--env", c.env, "u-maze, t-maze, 4-rooms or room-<n>");
  cmd->add_option("--override", c.overrides, "key=value (repeatable)");
}

Entries override_entries(const std::vector<std::string>& raw) {
  Entries out;
  for (const auto& kv : raw) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--override", "expected key=value, got " + kv);
    out.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return out;
}

RunConfig resolve(const Common& c, const Entries& extra = {}) {
  Entries entries = c.config.empty() ? Entries{} : tatc::read_config_entries(c.config);
  std::string env = "u-maze";
  for (const auto& [k, v] : entries) {
    if (k == "env") env = v;
  }
  if (!c.env.empty()) {
    env = c.env;
    std::erase_if(entries, [](const auto& e) { return e.first == "env"; });
  }
  entries.insert(entries.end(), extra.begin(), extra.end());
  const auto ov = override_entries(c.overrides);
  entries.insert(entries.end(), ov.begin(), ov.end());
  if (!c.out.empty()) entries.emplace_back("out_dir", c.out);
  return tatc::resolve_config(env, entries);
}

std::vector<std::uint64_t> seeds_or_default(const Common& c, const RunConfig& cfg) {
  return c.seeds.empty() ? std::vector<std::uint64_t>{cfg.seed} : c.seeds;
}

void print_final(const RunConfig& cfg, const tatc::TrainResult& r) {
  const auto& last = r.history.empty() ? tatc::EpochMetrics{} : r.history.back();
  std::printf("seed %llu  epochs %d  coverage %.4f  awareness %.4f  repr_loss %.5f\n",
              static_cast<unsigned long long>(cfg.seed), last.epoch, r.coverage,
              last.dynamics_awareness, last.repr_loss);
}

int cmd_train(const Common& c) {
  const RunConfig base = resolve(c);
  for (const auto seed : seeds_or_default(c, base)) {
    RunConfig cfg = base;
    cfg.seed = seed;
    print_final(cfg, tatc::train(cfg));
  }
  return 0;
}

int cmd_ablate(const Common& c, bool uniform_prior) {
  const RunConfig base = resolve(c);
  const auto seeds = seeds_or_default(c, base);
  std::map<std::string, std::vector<double>> coverage;
  std::map<std::string, std::vector<double>> awareness;
  const std::vector<std::pair<std::string, double>> conditions{{"boredom", base.beta_boredom},
                                                               {"no-boredom", 0.0}};
  for (const auto& [label, beta_boredom] : conditions) {
    for (const auto seed : seeds) {
      RunConfig cfg = base;
      cfg.seed = seed;
      cfg.beta_boredom = beta_boredom;
      if (uniform_prior) cfg.prior = tatc::Prior::kUniform;
      if (!base.out_dir.empty()) cfg.out_dir = (fs::path(base.out_dir) / label).string();
      const auto r = tatc::train(cfg);
      coverage[label].push_back(r.coverage);
      awareness[label].push_back(r.history.empty() ? 0.0 : r.history.back().dynamics_awareness);
      std::printf("%-10s ", label.c_str());
      print_final(cfg, r);
    }
  }
  for (const auto& [label, _] : conditions) {
    std::printf("%-10s coverage mean %.4f  awareness mean %.4f\n", label.c_str(),
                tatc::stats::mean(coverage[label]), tatc::stats::mean(awareness[label]));
  }
  if (seeds.size() >= 2) {
    const auto t = tatc::stats::welch_greater(coverage["boredom"], coverage["no-boredom"]);
    std::printf("coverage boredom > no-boredom: t %.3f df %.2f p %.4g\n", t.t, t.df, t.p);
  }
  return 0;
}

struct EvalOptions {
  std::string checkpoint;
  std::string reward = "sparse";
  std::string start = "uniform";
  std::string label;
  int updates = 100;
};

std::string representation_label(const RunConfig& cfg) {
  return std::string(tatc::to_string(cfg.objective)) + ":" + std::string(tatc::to_string(cfg.prior));
}

int cmd_eval(const Common& c, const EvalOptions& o, bool control) {
  const auto ckpt = tatc::nn::load_checkpoint(o.checkpoint);
  const RunConfig run_cfg = tatc::resolve_config("u-maze", tatc::parse_config_text(ckpt.meta_value("config")));
  const auto spec = tatc::load_env(run_cfg);
  const auto phi = ckpt.get_mlp("phi");
  auto task = tatc::eval::default_task(spec);
  task.reward = tatc::eval::parse_reward_mode(o.reward);
  task.start = tatc::eval::parse_start_mode(o.start);
  const std::string label = o.label.empty() ? representation_label(run_cfg) : o.label;
  const std::string prefix = std::string(control ? "control" : "predict") + "/" + o.reward + "/" + label + "/";

  std::ofstream csv;
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    const fs::path path = fs::path(c.out) / "metrics.csv";
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    csv.open(path, std::ios::app);
    csv << tatc::provenance_header(run_cfg) << "# eval = " << prefix << " start=" << o.start
        << " updates=" << o.updates << " checkpoint=" << o.checkpoint << "\n";
    if (fresh) csv << "seed,epoch,metric,value\n";
    csv.precision(17);
  }
  const auto seeds = c.seeds.empty() ? std::vector<std::uint64_t>{0} : c.seeds;
  for (const auto seed : seeds) {
    tatc::eval::EvalSettings s;
    s.updates = o.updates;
    s.seed = seed;
    const auto curve = control ? tatc::eval::eval_control(phi, spec, task, s)
                               : tatc::eval::eval_prediction(phi, spec, task, s);
    if (csv.is_open()) {
      for (std::size_t u = 0; u < curve.episode_reward.size(); ++u) {
        csv << seed << ',' << u + 1 << ',' << prefix << "episode_reward," << curve.episode_reward[u] << '\n';
        csv << seed << ',' << u + 1 << ',' << prefix << "success," << curve.success[u] << '\n';
      }
    }
    std::printf("%s seed %llu  final reward %.4f  updates to 80%% success %d\n", prefix.c_str(),
                static_cast<unsigned long long>(seed), curve.final_reward(), curve.updates_to_success(0.8));
  }
  return 0;
}

int cmd_oracle(const Common& c, int k) {
  const RunConfig cfg = resolve(c);
  const auto spec = tatc::load_env(cfg);
  const auto graph = tatc::spectral::build_graph(spec);
  const auto result = tatc::spectral::eig(graph, std::min(k, spec.onehot_dim()));
  const auto dist = tatc::spectral::bfs_distances(spec, spec.start());
  const std::string json = tatc::spectral::oracle_json(spec, result, dist);
  if (c.out.empty()) {
    std::cout << json << "\n";
  } else {
    fs::create_directories(c.out);
    std::ofstream(fs::path(c.out) / ("oracle_" + cfg.env + ".json")) << json << "\n";
    std::printf("%s: %d states, max residual %.3g\n", cfg.env.c_str(), spec.onehot_dim(), result.max_residual);
  }
  return 0;
}

int cmd_snapshot(const std::string& checkpoint, const std::string& out) {
  const auto ckpt = tatc::nn::load_checkpoint(checkpoint);
  const RunConfig cfg = tatc::resolve_config("u-maze", tatc::parse_config_text(ckpt.meta_value("config")));
  const auto json = tatc::embeddings_json(tatc::snapshot_embeddings(ckpt.get_mlp("phi"), tatc::load_env(cfg)));
  if (out.empty()) {
    std::cout << json << "\n";
  } else {
    std::ofstream(out) << json << "\n";
  }
  return 0;
}

// Merges <dir>/metrics.csv of several runs into one table with a condition
// column named after each directory.
int cmd_compare(const std::vector<std::string>& inputs, const std::string& out) {
  std::ofstream file;
  if (!out.empty()) {
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    file.open(out);
  }
  std::ostream& os = out.empty() ? std::cout : file;
  os << "condition,seed,epoch,metric,value\n";
  for (const auto& in : inputs) {
    fs::path path = in;
    if (fs::is_directory(path)) path /= "metrics.csv";
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    const std::string condition = fs::path(in).filename().empty() ? fs::path(in).parent_path().filename().string()
                                                                 : fs::path(in).filename().string();
    for (std::string line; std::getline(is, line);) {
      if (line.empty() || line.front() == '#' || line.starts_with("seed,")) continue;
      os << (condition == "metrics.csv" ? path.parent_path().filename().string() : condition) << ',' << line << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporally-contrastive representations with skill-based exploration in gridworlds"};
  app.require_subcommand(1);

  Common common;
  auto* train = app.add_subcommand("train", "train a representation and covering policy");
  add_common(train, common);

  auto* ablate = app.add_subcommand("ablate", "boredom vs no-boredom runs with a coverage test");
  add_common(ablate, common);
  bool uniform_prior = false;
  ablate->add_flag("--uniform-prior", uniform_prior, "reset to uniformly drawn cells");

  EvalOptions eval_opts;
  auto* predict = app.add_subcommand("eval-predict", "A2C with a linear critic on a frozen representation");
  auto* control = app.add_subcommand("eval-control", "A2C with an MLP on a frozen representation");
  for (auto* cmd : {predict, control}) {
    add_common(cmd, common);
    cmd->add_option("--checkpoint", eval_opts.checkpoint, "training checkpoint holding phi")->required();
    cmd->add_option("--reward", eval_opts.reward, "sparse, dense or mix");
    cmd->add_option("--start", eval_opts.start, "uniform or s0");
    cmd->add_option("--updates", eval_opts.updates, "A2C updates (80 episodes each)");
    cmd->add_option("--label", eval_opts.label, "representation label in metric names");
  }

  auto* oracle = app.add_subcommand("oracle", "exact Laplacian eigenpairs and BFS distances");
  add_common(oracle, common);
  int k = 8;
  oracle->add_option("--k", k, "number of eigenpairs");

  auto* snapshot = app.add_subcommand("snapshot", "embedding table of a checkpoint as JSON");
  std::string snap_ckpt;
  std::string snap_out;
  snapshot->add_option("--checkpoint", snap_ckpt)->required();
  snapshot->add_option("--out", snap_out, "output JSON path");

  auto* compare = app.add_subcommand("compare", "merge metrics of several runs into one CSV");
  std::vector<std::string> inputs;
  std::string compare_out;
  compare->add_option("inputs", inputs, "run directories or metrics.csv files")->required();
  compare->add_option("--out", compare_out, "merged CSV path");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(common);
    if (*ablate) return cmd_ablate(common, uniform_prior);
    if (*predict) return cmd_eval(common, eval_opts, false);
    if (*control) return cmd_eval(common, eval_opts, true);
    if (*oracle) return cmd_oracle(common, k);
    if (*snapshot) return cmd_snapshot(snap_ckpt, snap_out);
    if (*compare) return cmd_compare(inputs, compare_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "tatc: %s\n", e.what());
    return 1;
  }
  return 0;
}
