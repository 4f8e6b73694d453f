#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tatc/checkpoint.hpp"
#include "tatc/config.hpp"
#include "tatc/gridworld.hpp"
#include "tatc/mlp.hpp"
#include "tatc/objectives.hpp"
#include "tatc/optimizer.hpp"
#include "tatc/skills.hpp"

namespace tatc {

enum class Phase { kCollect, kPolicyUpdate, kPhiUpdate };

/// Data of one outer iteration. Both buffers are rebuilt from scratch every
/// iteration; nothing is replayed across iterations.
struct IterationData {
  std::vector<Trajectory> walks;                     // D_pi_mu
  std::vector<skills::HighLevelEpisode> sequences;   // D_s, L skills each
  int walk_blocks = 0;
  int skill_blocks = 0;
  int resets = 0;

  std::size_t skill_count() const;
};

struct IterationStats {
  double repr_loss = 0.0;
  double cont = 0.0;      // contrastive part (0 for lap runs without pairs)
  double boredom = 0.0;   // unweighted boredom value
  double low_reward = 0.0;   // mean per-step skill reward
  double high_reward = 0.0;  // mean sequence reward
  double low_entropy = 0.0;
  double high_entropy = 0.0;
  int walk_blocks = 0;
  int skill_blocks = 0;
  int resets = 0;
};

struct EpochMetrics {
  int epoch = 0;  // 1-based count of completed epochs
  double coverage = 0.0;        // fraction of free cells visited since the start
  double epoch_coverage = 0.0;  // fraction visited during this epoch alone
  double repr_loss = 0.0;
  double cont = 0.0;
  double boredom = 0.0;
  double low_reward = 0.0;
  double high_reward = 0.0;
  double low_entropy = 0.0;
  double high_entropy = 0.0;
  double rw_fraction = 0.0;
  double resets = 0.0;
  double dynamics_awareness = 0.0;
  bool awareness_degenerate = false;

  /// (name, value) pairs in a fixed order, as written to metrics.csv.
  std::vector<std::pair<std::string, double>> named() const;
};

/// One record of an embedding snapshot.
struct EmbeddingRecord {
  Cell cell;
  std::vector<double> phi;
  int bfs = 0;
};

std::vector<EmbeddingRecord> snapshot_embeddings(const nn::Mlp& phi, const GridSpec& spec);
std::string embeddings_json(const std::vector<EmbeddingRecord>& records);

/// All state of a training run: networks, optimizers, rng, environment state
/// and counters. Iterations run collection, then the policy updates, then the
/// representation update.
class Trainer {
 public:
  using PhaseHook = std::function<void(Phase, const Trainer&)>;

  explicit Trainer(RunConfig cfg);
  /// Rebuilds a trainer from a checkpoint written by checkpoint().
  static Trainer from_checkpoint(const nn::Checkpoint& ckpt);

  const RunConfig& config() const { return cfg_; }
  const GridSpec& spec() const { return spec_; }
  const nn::Mlp& phi() const { return phi_; }
  const skills::PolicyLearner& pi_low() const { return low_; }
  const skills::PolicyLearner& pi_high() const { return high_; }
  Cell env_state() const { return state_; }
  std::int64_t env_steps() const { return env_steps_; }
  std::int64_t iteration() const { return iteration_; }
  int epoch() const { return epoch_; }
  const std::vector<std::int64_t>& visit_counts() const { return visits_; }
  const std::vector<int>& bfs_from_start() const { return bfs_; }

  void set_phase_hook(PhaseHook hook) { hook_ = std::move(hook); }

  /// N blocks of K steps: maybe reset, then L random walks or L chained skills.
  IterationData collect_iteration();
  /// Rewards are computed with the current phi.
  void update_policies(const IterationData& data, IterationStats& stats);
  void update_phi(const IterationData& data, IterationStats& stats);
  IterationStats run_iteration();
  /// updates_per_epoch iterations, then metrics.
  EpochMetrics run_epoch();

  /// phi of every free cell, one row per cell.
  Eigen::MatrixXd embedding_table() const;
  double coverage() const;

  nn::Checkpoint checkpoint() const;

 private:
  void visit(Cell c);
  objectives::ReprBatch make_batch(const IterationData& data);
  [[noreturn]] void fail_non_finite(const std::string& what, const objectives::ReprBatch* batch);

  RunConfig cfg_;
  GridSpec spec_;
  std::vector<skills::Direction> directions_;
  std::vector<int> bfs_;

  Rng rng_;
  nn::Mlp phi_;
  nn::Optimizer phi_opt_;
  skills::PolicyLearner high_;
  skills::PolicyLearner low_;
  skills::LowPolicyTable low_table_;

  Cell state_;
  std::int64_t env_steps_ = 0;
  std::int64_t iteration_ = 0;
  int epoch_ = 0;
  std::vector<std::int64_t> visits_;
  std::vector<std::int64_t> epoch_visits_;

  PhaseHook hook_;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  Eigen::MatrixXd embedding;  // final phi table, one row per cell
  double coverage = 0.0;
};

/// Runs cfg.epochs epochs. With cfg.out_dir set, appends to
/// <out>/metrics.csv and writes <out>/seed_<s>/{run.json, embeddings_<e>.json,
/// checkpoint_<e>.bin, skills_n<k>_<hash>.bin}.
TrainResult train(const RunConfig& cfg);
/// Continues a run from a checkpoint until cfg.epochs.
TrainResult resume(const std::filesystem::path& checkpoint_path, const std::string& out_dir = {});

/// "# key = value" lines describing a run, for the head of text artifacts.
std::string provenance_header(const RunConfig& cfg);

}  // namespace tatc
