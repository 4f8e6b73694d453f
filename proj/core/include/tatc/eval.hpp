#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tatc/gridworld.hpp"
#include "tatc/mlp.hpp"
#include "tatc/optimizer.hpp"

namespace tatc::eval {

enum class RewardMode { kSparse, kDense, kMix };
enum class StartMode { kUniform, kStart };

RewardMode parse_reward_mode(std::string_view s);
StartMode parse_start_mode(std::string_view s);
std::string_view to_string(RewardMode m);
std::string_view to_string(StartMode m);

/// Goal-reaching task. Episodes end on arrival at the goal or after
/// `episode_length` steps.
struct TaskSpec {
  Cell goal;
  int episode_length = 100;
  double gamma = 0.98;
  RewardMode reward = RewardMode::kSparse;
  StartMode start = StartMode::kUniform;  // uniform: any free cell except the goal
};

/// Task on the maze's own goal cell. Throws if the maze has none.
TaskSpec default_task(const GridSpec& spec);

struct EvalSettings {
  int updates = 100;
  int batch_episodes = 80;
  double entropy_coef = 0.01;
  int hidden = 64;
  nn::AdamSettings adam{};
  std::uint64_t seed = 0;
};

/// One entry per update (one batch of episodes).
struct Curve {
  std::vector<double> episode_reward;  // mean undiscounted episode return
  std::vector<double> success;         // fraction of episodes reaching the goal
  std::vector<double> episode_length;  // mean steps per episode

  /// Mean episode reward over the last `k` updates.
  double final_reward(int k = 10) const;
  /// First update (1-based) whose success rate reaches `threshold`; -1 if never.
  int updates_to_success(double threshold) const;
};

/// -|phi(s') - phi(g)| (dense), or 0.5 dense + 0.5 [s' = g] (mix). Sparse mode
/// gives [s' = g]. `phi` has one row per cell.
double shaped_reward(const Eigen::MatrixXd& phi, int next_index, int goal_index, RewardMode mode);

/// Cells other than the goal whose dense reward ties with the goal's maximum.
std::vector<int> dense_reward_ties(const Eigen::MatrixXd& phi, int goal_index, double tol = 0.0);

/// Actor: MLP on the one-hot state. Critic: linear in phi(s).
Curve eval_prediction(const Eigen::MatrixXd& phi, const GridSpec& spec, const TaskSpec& task,
                      const EvalSettings& settings);
/// Actor and critic share an MLP on phi(s) with a linear value head and a
/// log-softmax action head.
Curve eval_control(const Eigen::MatrixXd& phi, const GridSpec& spec, const TaskSpec& task,
                   const EvalSettings& settings);

/// Network overloads: phi is evaluated once and must come back unchanged.
Curve eval_prediction(const nn::Mlp& phi, const GridSpec& spec, const TaskSpec& task,
                      const EvalSettings& settings);
Curve eval_control(const nn::Mlp& phi, const GridSpec& spec, const TaskSpec& task,
                   const EvalSettings& settings);

/// Fraction of cells with at least one visit.
double coverage(std::span<const std::int64_t> visit_counts);

}  // namespace tatc::eval
