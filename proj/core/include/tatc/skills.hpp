#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tatc/gridworld.hpp"
#include "tatc/mlp.hpp"
#include "tatc/optimizer.hpp"

namespace tatc::skills {

/// Unit vector (cos(2k pi/n), sin(2k pi/n)) in representation space.
struct Direction {
  int index = 0;
  Eigen::Vector2d vector = Eigen::Vector2d::UnitX();
};

std::vector<Direction> make_directions(int n = 8);

/// Cosine between the displacement phi(s') - phi(s) and the direction.
/// Zero displacement earns 0.
double skill_reward(const Eigen::Ref<const Eigen::VectorXd>& phi_s,
                    const Eigen::Ref<const Eigen::VectorXd>& phi_next, const Direction& delta);

/// Distance travelled in representation space by a sequence of skills;
/// every high-level choice of the sequence receives this same value.
double high_reward(const Eigen::Ref<const Eigen::VectorXd>& phi_first,
                   const Eigen::Ref<const Eigen::VectorXd>& phi_final);

struct SkillRecord {
  Trajectory trajectory;
  Direction direction;

  Cell start_state() const { return trajectory.states.front(); }
  Cell final_state() const { return trajectory.states.back(); }
};

/// L chained skills: each skill starts where the previous one ended.
struct HighLevelEpisode {
  std::vector<SkillRecord> skills;

  Cell first_state() const { return skills.front().start_state(); }
  Cell final_state() const { return skills.back().final_state(); }
};

/// pi_low input: one_hot(s) followed by the direction vector.
std::vector<nn::SparseEntry> low_input(const GridSpec& spec, Cell s, const Direction& delta);
/// pi_hi input: one_hot(s).
std::vector<nn::SparseEntry> high_input(const GridSpec& spec, Cell s);

nn::Architecture low_architecture(const GridSpec& spec, int hidden = 128);
nn::Architecture high_architecture(const GridSpec& spec, int n_directions, int hidden = 128);

/// Samples an index from a vector of log-probabilities by inverting the CDF.
int sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& log_probs, Rng& rng);

/// Memo of pi_low log-probabilities for (state, direction) under fixed
/// parameters. Must be cleared whenever the policy changes.
class LowPolicyTable {
 public:
  LowPolicyTable(int n_states, int n_directions);
  const Eigen::Vector4d& log_probs(const nn::Mlp& pi_low, const GridSpec& spec, Cell s,
                                   const Direction& delta);
  void clear();

 private:
  int n_directions_;
  std::vector<Eigen::Vector4d> values_;
  std::vector<char> valid_;
};

/// Runs pi_low(. | s, delta) for c steps from `start`.
SkillRecord rollout_skill(const nn::Mlp& pi_low, const GridSpec& spec, const Direction& delta,
                          Cell start, int c, Rng& rng, LowPolicyTable* table = nullptr);

// ---------------------------------------------------------------------------
// Advantage actor-critic with Monte-Carlo returns.

struct Decision {
  std::vector<nn::SparseEntry> input;
  int action = 0;
};

struct Episode {
  std::vector<Decision> steps;
  std::vector<double> rewards;  // aligned with steps
};

enum class BaselineKind {
  kBatchMean,     // mean return over the batch at the same step index
  kLearnedValue,  // separate state-value network regressed on returns
};

struct A2cSettings {
  double entropy_coef = 0.0;
  double gamma = 1.0;
  BaselineKind baseline = BaselineKind::kBatchMean;
};

struct A2cStats {
  double mean_return = 0.0;
  double mean_abs_advantage = 0.0;
  double mean_entropy = 0.0;
  double surrogate = 0.0;
  std::size_t samples = 0;
};

/// A categorical policy together with its optimizer and optional value
/// baseline network.
struct PolicyLearner {
  nn::Mlp policy;
  nn::Optimizer optimizer;
  std::optional<nn::Mlp> value;
  std::optional<nn::Optimizer> value_optimizer;

  static PolicyLearner make(nn::Architecture arch, Rng& rng, nn::RmsPropSettings rms,
                            bool learned_baseline);
};

std::vector<double> mc_returns(std::span<const double> rewards, double gamma);

/// Per-sample advantages G_t - b_t in episode-major order.
std::vector<double> advantages(std::span<const Episode> episodes, const A2cSettings& settings,
                               const nn::Mlp* value_net, std::vector<double>* returns_out);

/// Surrogate J = mean_i [ log pi(a_i|s_i) * A_i + entropy_coef * H(pi(.|s_i)) ]
/// and its gradient with respect to the policy parameters. Identical inputs
/// are forwarded once and their output gradients summed.
std::pair<double, nn::Tensors> policy_surrogate(const nn::Mlp& policy,
                                                std::span<const Decision> samples,
                                                std::span<const double> advantages,
                                                double entropy_coef, double* mean_entropy = nullptr);

/// dJ/d(log-probs) for a batch: columns are samples, `weights` multiplies the
/// log-likelihood term of each column.
Eigen::MatrixXd policy_output_grad(const Eigen::MatrixXd& log_probs, std::span<const int> actions,
                                   std::span<const double> weights, double entropy_weight);

/// One ascent step on the surrogate (and one regression step of the value
/// baseline when present).
A2cStats a2c_update(PolicyLearner& learner, std::span<const Episode> episodes,
                    const A2cSettings& settings);

}  // namespace tatc::skills
