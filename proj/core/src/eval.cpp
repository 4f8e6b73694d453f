#include "tatc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tatc/objectives.hpp"
#include "tatc/skills.hpp"

namespace tatc::eval {

RewardMode parse_reward_mode(std::string_view s) {
  if (s == "sparse") return RewardMode::kSparse;
  if (s == "dense") return RewardMode::kDense;
  if (s == "mix") return RewardMode::kMix;
  throw std::invalid_argument("unknown reward mode '" + std::string(s) + "'");
}

StartMode parse_start_mode(std::string_view s) {
  if (s == "uniform") return StartMode::kUniform;
  if (s == "s0" || s == "start") return StartMode::kStart;
  throw std::invalid_argument("unknown start mode '" + std::string(s) + "'");
}

std::string_view to_string(RewardMode m) {
  switch (m) {
    case RewardMode::kSparse: return "sparse";
    case RewardMode::kDense: return "dense";
    case RewardMode::kMix: return "mix";
  }
  return "?";
}

std::string_view to_string(StartMode m) { return m == StartMode::kUniform ? "uniform" : "s0"; }

TaskSpec default_task(const GridSpec& spec) {
  if (!spec.goal()) throw std::invalid_argument("default_task: maze has no goal cell");
  TaskSpec t;
  t.goal = *spec.goal();
  return t;
}

double Curve::final_reward(int k) const {
  if (episode_reward.empty()) return 0.0;
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 1)), episode_reward.size());
  return std::accumulate(episode_reward.end() - static_cast<std::ptrdiff_t>(n), episode_reward.end(), 0.0) /
         static_cast<double>(n);
}

int Curve::updates_to_success(double threshold) const {
  for (std::size_t i = 0; i < success.size(); ++i) {
    if (success[i] >= threshold) return static_cast<int>(i) + 1;
  }
  return -1;
}

double shaped_reward(const Eigen::MatrixXd& phi, int next_index, int goal_index, RewardMode mode) {
  const double hit = next_index == goal_index ? 1.0 : 0.0;
  if (mode == RewardMode::kSparse) return hit;
  const double dense = -(phi.row(next_index) - phi.row(goal_index)).norm();
  return mode == RewardMode::kDense ? dense : 0.5 * dense + 0.5 * hit;
}

std::vector<int> dense_reward_ties(const Eigen::MatrixXd& phi, int goal_index, double tol) {
  std::vector<int> ties;
  for (int i = 0; i < phi.rows(); ++i) {
    if (i == goal_index) continue;
    if ((phi.row(i) - phi.row(goal_index)).norm() <= tol) ties.push_back(i);
  }
  return ties;
}

double coverage(std::span<const std::int64_t> visit_counts) {
  if (visit_counts.empty()) return 0.0;
  const auto seen = std::count_if(visit_counts.begin(), visit_counts.end(), [](auto c) { return c >= 1; });
  return static_cast<double>(seen) / static_cast<double>(visit_counts.size());
}

namespace {

// Agents expose state-indexed outputs: policy and value depend on the state
// only, so one forward pass over every cell serves a whole batch.
class PredictionAgent {
 public:
  PredictionAgent(const Eigen::MatrixXd& phi, int n, const EvalSettings& s, Rng& rng)
      : phi_(phi),
        inputs_(objectives::one_hot_batch(n, all_states(n))),
        actor_({n, s.hidden, {{nn::HeadKind::kLogSoftmax, kNumMoves}}}, rng),
        actor_opt_(nn::Optimizer::adam(actor_.params(), s.adam)) {
    critic_ = {Eigen::MatrixXd::Zero(1, phi.cols()), Eigen::MatrixXd::Zero(1, 1)};
    critic_opt_ = nn::Optimizer::adam(critic_, s.adam);
  }

  void forward(Eigen::MatrixXd& logp, Eigen::VectorXd& value) {
    logp = actor_.forward(inputs_, &cache_);
    value = (phi_ * critic_[0].transpose()).col(0).array() + critic_[1](0, 0);
  }

  void apply(const Eigen::MatrixXd& dlogp, const Eigen::VectorXd& dvalue) {
    actor_opt_.step(actor_.params(), actor_.backward(cache_, dlogp));
    const nn::Tensors g{dvalue.transpose() * phi_, Eigen::MatrixXd::Constant(1, 1, dvalue.sum())};
    critic_opt_.step(critic_, g);
  }

 private:
  static std::vector<int> all_states(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 0);
    return v;
  }

  const Eigen::MatrixXd& phi_;
  nn::SparseBatch inputs_;
  nn::Mlp actor_;
  nn::Optimizer actor_opt_;
  nn::Tensors critic_;
  nn::Optimizer critic_opt_;
  nn::Cache cache_;
};

class ControlAgent {
 public:
  ControlAgent(const Eigen::MatrixXd& phi, const EvalSettings& s, Rng& rng)
      : inputs_(phi.transpose()),
        net_({static_cast<int>(phi.cols()), s.hidden,
              {{nn::HeadKind::kLinear, 1}, {nn::HeadKind::kLogSoftmax, kNumMoves}}},
             rng),
        opt_(nn::Optimizer::adam(net_.params(), s.adam)) {}

  void forward(Eigen::MatrixXd& logp, Eigen::VectorXd& value) {
    const Eigen::MatrixXd out = net_.forward(inputs_, &cache_);
    value = out.row(0).transpose();
    logp = out.bottomRows(kNumMoves);
  }

  void apply(const Eigen::MatrixXd& dlogp, const Eigen::VectorXd& dvalue) {
    Eigen::MatrixXd grad(1 + kNumMoves, dlogp.cols());
    grad.row(0) = dvalue.transpose();
    grad.bottomRows(kNumMoves) = dlogp;
    opt_.step(net_.params(), net_.backward(cache_, grad));
  }

 private:
  Eigen::MatrixXd inputs_;
  nn::Mlp net_;
  nn::Optimizer opt_;
  nn::Cache cache_;
};

template <typename Agent>
Curve run(Agent& agent, const Eigen::MatrixXd& phi, const GridSpec& spec, const TaskSpec& task,
          const EvalSettings& settings, Rng& rng) {
  const int n = spec.onehot_dim();
  const int goal = spec.index_of(task.goal);
  const int start = spec.index_of(spec.start());
  if (task.episode_length < 1) throw std::invalid_argument("eval: episode_length must be >= 1");
  if (settings.batch_episodes < 1) throw std::invalid_argument("eval: batch_episodes must be >= 1");

  Curve curve;
  Eigen::MatrixXd logp;
  Eigen::VectorXd value;
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<double> rewards;
  for (int u = 0; u < settings.updates; ++u) {
    agent.forward(logp, value);
    Eigen::MatrixXd dlogp = Eigen::MatrixXd::Zero(kNumMoves, n);  // d(-J)/d(log-probs)
    Eigen::VectorXd dvalue = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd visits = Eigen::VectorXd::Zero(n);

    struct Sample {
      int state;
      int action;
      double ret;
    };
    std::vector<Sample> samples;
    double reward_sum = 0.0;
    double length_sum = 0.0;
    int successes = 0;
    for (int e = 0; e < settings.batch_episodes; ++e) {
      int s = start;
      if (task.start == StartMode::kUniform && n > 1) {
        do {
          s = uniform_index(n, rng);
        } while (s == goal);
      }
      states.clear();
      actions.clear();
      rewards.clear();
      bool reached = false;
      for (int t = 0; t < task.episode_length && !reached; ++t) {
        const int a = skills::sample_categorical(logp.col(s), rng);
        const int next = spec.index_of(step(spec, spec.cell_at(s), static_cast<Move>(a)));
        states.push_back(s);
        actions.push_back(a);
        rewards.push_back(shaped_reward(phi, next, goal, task.reward));
        reached = next == goal;
        s = next;
      }
      successes += reached ? 1 : 0;
      length_sum += static_cast<double>(states.size());
      reward_sum += std::accumulate(rewards.begin(), rewards.end(), 0.0);
      const auto ret = skills::mc_returns(rewards, task.gamma);
      for (std::size_t t = 0; t < states.size(); ++t) samples.push_back({states[t], actions[t], ret[t]});
    }

    const double inv = 1.0 / static_cast<double>(samples.size());
    for (const auto& smp : samples) {
      const double adv = smp.ret - value[smp.state];
      dlogp(smp.action, smp.state) -= inv * adv;
      dvalue[smp.state] += inv * (value[smp.state] - smp.ret);
      visits[smp.state] += 1.0;
    }
    // Entropy bonus: dH/dy = -p (y + 1), weighted by visit frequency.
    const Eigen::ArrayXXd p = logp.array().exp();
    dlogp -= ((-p * (logp.array() + 1.0)).rowwise() *
              (settings.entropy_coef * inv * visits.transpose().array()))
                 .matrix();
    agent.apply(dlogp, dvalue);

    const double b = settings.batch_episodes;
    curve.episode_reward.push_back(reward_sum / b);
    curve.success.push_back(successes / b);
    curve.episode_length.push_back(length_sum / b);
  }
  return curve;
}

void check_table(const Eigen::MatrixXd& phi, const GridSpec& spec, const TaskSpec& task) {
  if (phi.rows() != spec.onehot_dim()) throw std::invalid_argument("eval: phi table needs one row per cell");
  if (!phi.allFinite()) throw std::invalid_argument("eval: phi table is not finite");
  if (!spec.is_free(task.goal)) throw std::invalid_argument("eval: goal is not a free cell");
}

template <typename Fn>
Curve with_frozen(const nn::Mlp& phi, const GridSpec& spec, Fn&& fn) {
  if (phi.arch().in_dim != spec.onehot_dim()) throw std::invalid_argument("eval: phi does not match maze");
  const nn::Tensors before = phi.params();
  const Eigen::MatrixXd table = objectives::embed_all(phi).transpose();
  Curve c = fn(table);
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (!(before[i].array() == phi.params()[i].array()).all()) {
      throw std::logic_error("eval: representation parameters changed during evaluation");
    }
  }
  return c;
}

}  // namespace

Curve eval_prediction(const Eigen::MatrixXd& phi, const GridSpec& spec, const TaskSpec& task,
                      const EvalSettings& settings) {
  check_table(phi, spec, task);
  Rng rng(settings.seed);
  PredictionAgent agent(phi, spec.onehot_dim(), settings, rng);
  return run(agent, phi, spec, task, settings, rng);
}

Curve eval_control(const Eigen::MatrixXd& phi, const GridSpec& spec, const TaskSpec& task,
                   const EvalSettings& settings) {
  check_table(phi, spec, task);
  Rng rng(settings.seed);
  ControlAgent agent(phi, settings, rng);
  return run(agent, phi, spec, task, settings, rng);
}

Curve eval_prediction(const nn::Mlp& phi, const GridSpec& spec, const TaskSpec& task,
                      const EvalSettings& settings) {
  return with_frozen(phi, spec, [&](const Eigen::MatrixXd& t) { return eval_prediction(t, spec, task, settings); });
}

Curve eval_control(const nn::Mlp& phi, const GridSpec& spec, const TaskSpec& task,
                   const EvalSettings& settings) {
  return with_frozen(phi, spec, [&](const Eigen::MatrixXd& t) { return eval_control(t, spec, task, settings); });
}

}  // namespace tatc::eval
