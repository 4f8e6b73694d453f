#include "tatc/skills.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace tatc::skills {

namespace {

std::string input_key(const std::vector<nn::SparseEntry>& input) {
  std::string key(input.size() * (sizeof(int) + sizeof(double)), '\0');
  char* p = key.data();
  for (const auto& [i, v] : input) {
    std::memcpy(p, &i, sizeof(int));
    p += sizeof(int);
    std::memcpy(p, &v, sizeof(double));
    p += sizeof(double);
  }
  return key;
}

// Unique inputs of a sample list and the column each sample maps to.
struct Grouped {
  std::vector<std::vector<nn::SparseEntry>> columns;
  std::vector<int> column_of;
};

Grouped group_inputs(std::span<const Decision> samples) {
  Grouped g;
  g.column_of.reserve(samples.size());
  std::unordered_map<std::string, int> seen;
  for (const auto& s : samples) {
    const auto [it, inserted] = seen.try_emplace(input_key(s.input), static_cast<int>(g.columns.size()));
    if (inserted) g.columns.push_back(s.input);
    g.column_of.push_back(it->second);
  }
  return g;
}

std::vector<Decision> flatten(std::span<const Episode> episodes) {
  std::vector<Decision> out;
  for (const auto& ep : episodes) out.insert(out.end(), ep.steps.begin(), ep.steps.end());
  return out;
}

}  // namespace

std::vector<Direction> make_directions(int n) {
  if (n < 1) throw std::invalid_argument("make_directions: n must be >= 1");
  std::vector<Direction> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / n;
    out.push_back({k, Eigen::Vector2d(std::cos(angle), std::sin(angle))});
  }
  return out;
}

double skill_reward(const Eigen::Ref<const Eigen::VectorXd>& phi_s,
                    const Eigen::Ref<const Eigen::VectorXd>& phi_next, const Direction& delta) {
  if (phi_s.size() != 2 || phi_next.size() != 2) {
    throw std::invalid_argument("skill_reward: directional skills need a 2-d representation");
  }
  const Eigen::Vector2d disp = phi_next - phi_s;
  const double norm = disp.norm();
  if (norm == 0.0) return 0.0;
  return std::clamp(disp.dot(delta.vector) / norm, -1.0, 1.0);
}

double high_reward(const Eigen::Ref<const Eigen::VectorXd>& phi_first,
                   const Eigen::Ref<const Eigen::VectorXd>& phi_final) {
  return (phi_first - phi_final).norm();
}

std::vector<nn::SparseEntry> low_input(const GridSpec& spec, Cell s, const Direction& delta) {
  const int n = spec.onehot_dim();
  return {{spec.index_of(s), 1.0}, {n, delta.vector.x()}, {n + 1, delta.vector.y()}};
}

std::vector<nn::SparseEntry> high_input(const GridSpec& spec, Cell s) {
  return {{spec.index_of(s), 1.0}};
}

nn::Architecture low_architecture(const GridSpec& spec, int hidden) {
  return {spec.onehot_dim() + 2, hidden, {{nn::HeadKind::kLogSoftmax, kNumMoves}}};
}

nn::Architecture high_architecture(const GridSpec& spec, int n_directions, int hidden) {
  return {spec.onehot_dim(), hidden, {{nn::HeadKind::kLogSoftmax, n_directions}}};
}

int sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& log_probs, Rng& rng) {
  const double u = uniform_unit(rng);
  double cdf = 0.0;
  for (Eigen::Index i = 0; i < log_probs.size(); ++i) {
    cdf += std::exp(log_probs[i]);
    if (u < cdf) return static_cast<int>(i);
  }
  return static_cast<int>(log_probs.size() - 1);
}

LowPolicyTable::LowPolicyTable(int n_states, int n_directions)
    : n_directions_(n_directions),
      values_(static_cast<std::size_t>(n_states * n_directions)),
      valid_(static_cast<std::size_t>(n_states * n_directions), 0) {}

const Eigen::Vector4d& LowPolicyTable::log_probs(const nn::Mlp& pi_low, const GridSpec& spec,
                                                 Cell s, const Direction& delta) {
  const auto slot = static_cast<std::size_t>(spec.index_of(s) * n_directions_ + delta.index);
  if (slot >= valid_.size()) throw std::out_of_range("LowPolicyTable: slot out of range");
  if (!valid_[slot]) {
    const auto input = low_input(spec, s, delta);
    values_[slot] = pi_low.forward_one(input);
    valid_[slot] = 1;
  }
  return values_[slot];
}

void LowPolicyTable::clear() { std::fill(valid_.begin(), valid_.end(), 0); }

SkillRecord rollout_skill(const nn::Mlp& pi_low, const GridSpec& spec, const Direction& delta,
                          Cell start, int c, Rng& rng, LowPolicyTable* table) {
  if (c < 1) throw std::invalid_argument("rollout_skill: c must be >= 1");
  SkillRecord rec;
  rec.direction = delta;
  rec.trajectory.states.reserve(static_cast<std::size_t>(c) + 1);
  rec.trajectory.actions.reserve(static_cast<std::size_t>(c));
  rec.trajectory.states.push_back(start);
  Cell s = start;
  for (int t = 0; t < c; ++t) {
    int a = 0;
    if (table != nullptr) {
      a = sample_categorical(table->log_probs(pi_low, spec, s, delta), rng);
    } else {
      const auto input = low_input(spec, s, delta);
      a = sample_categorical(pi_low.forward_one(input), rng);
    }
    const auto move = static_cast<Move>(a);
    s = step(spec, s, move);
    rec.trajectory.actions.push_back(move);
    rec.trajectory.states.push_back(s);
  }
  return rec;
}

PolicyLearner PolicyLearner::make(nn::Architecture arch, Rng& rng, nn::RmsPropSettings rms,
                                  bool learned_baseline) {
  PolicyLearner learner;
  const int in_dim = arch.in_dim;
  const int hidden = arch.hidden;
  learner.policy = nn::Mlp(std::move(arch), rng);
  learner.optimizer = nn::Optimizer::rmsprop(learner.policy.params(), rms);
  if (learned_baseline) {
    learner.value = nn::Mlp({in_dim, hidden, {{nn::HeadKind::kLinear, 1}}}, rng);
    learner.value_optimizer = nn::Optimizer::rmsprop(learner.value->params(), rms);
  }
  return learner;
}

std::vector<double> mc_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    out[i] = acc;
  }
  return out;
}

std::vector<double> advantages(std::span<const Episode> episodes, const A2cSettings& settings,
                               const nn::Mlp* value_net, std::vector<double>* returns_out) {
  std::vector<std::vector<double>> returns;
  std::size_t longest = 0;
  for (const auto& ep : episodes) {
    if (ep.rewards.size() != ep.steps.size()) {
      throw std::invalid_argument("a2c: rewards must align with decisions");
    }
    returns.push_back(mc_returns(ep.rewards, settings.gamma));
    for (double g : returns.back()) {
      if (!std::isfinite(g)) throw nn::NumericError("a2c: non-finite return");
    }
    longest = std::max(longest, ep.steps.size());
  }

  std::vector<double> out;
  if (settings.baseline == BaselineKind::kBatchMean) {
    std::vector<double> sum(longest, 0.0);
    std::vector<int> count(longest, 0);
    for (const auto& g : returns) {
      for (std::size_t t = 0; t < g.size(); ++t) {
        sum[t] += g[t];
        ++count[t];
      }
    }
    for (const auto& g : returns) {
      for (std::size_t t = 0; t < g.size(); ++t) out.push_back(g[t] - sum[t] / count[t]);
    }
  } else {
    if (value_net == nullptr) throw std::invalid_argument("a2c: learned baseline needs a value net");
    const auto samples = flatten(episodes);
    const auto grouped = group_inputs(samples);
    const Eigen::MatrixXd v =
        value_net->forward(nn::make_sparse_batch(value_net->arch().in_dim, grouped.columns));
    std::size_t i = 0;
    for (const auto& g : returns) {
      for (double gt : g) out.push_back(gt - v(0, grouped.column_of[i++]));
    }
  }
  if (returns_out != nullptr) {
    returns_out->clear();
    for (const auto& g : returns) returns_out->insert(returns_out->end(), g.begin(), g.end());
  }
  return out;
}

Eigen::MatrixXd policy_output_grad(const Eigen::MatrixXd& log_probs, std::span<const int> actions,
                                   std::span<const double> weights, double entropy_weight) {
  if (actions.size() != static_cast<std::size_t>(log_probs.cols()) || weights.size() != actions.size()) {
    throw std::invalid_argument("policy_output_grad: batch size mismatch");
  }
  // dH/dy_j = -p_j (y_j + 1) for log-probabilities y.
  Eigen::MatrixXd grad =
      entropy_weight * (-(log_probs.array().exp() * (log_probs.array() + 1.0))).matrix();
  for (std::size_t j = 0; j < actions.size(); ++j) {
    grad(actions[j], static_cast<Eigen::Index>(j)) += weights[j];
  }
  return grad;
}

std::pair<double, nn::Tensors> policy_surrogate(const nn::Mlp& policy,
                                                std::span<const Decision> samples,
                                                std::span<const double> advantages,
                                                double entropy_coef, double* mean_entropy) {
  if (samples.size() != advantages.size()) {
    throw std::invalid_argument("policy_surrogate: one advantage per sample required");
  }
  if (samples.empty()) return {0.0, policy.zeros_like()};
  const auto grouped = group_inputs(samples);
  nn::Cache cache;
  const Eigen::MatrixXd logp =
      policy.forward(nn::make_sparse_batch(policy.arch().in_dim, grouped.columns), &cache);

  const double inv_n = 1.0 / static_cast<double>(samples.size());
  const auto n_cols = logp.cols();
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(logp.rows(), n_cols);
  Eigen::VectorXd multiplicity = Eigen::VectorXd::Zero(n_cols);
  double value = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int col = grouped.column_of[i];
    const int a = samples[i].action;
    if (a < 0 || a >= logp.rows()) throw std::out_of_range("policy_surrogate: action out of range");
    value += inv_n * logp(a, col) * advantages[i];
    grad(a, col) += inv_n * advantages[i];
    multiplicity[col] += 1.0;
  }
  const Eigen::ArrayXXd p = logp.array().exp();
  const Eigen::RowVectorXd entropy = -(p * logp.array()).colwise().sum().matrix();
  const double ent_total = entropy.dot(multiplicity) * inv_n;
  value += entropy_coef * ent_total;
  grad += ((-p * (logp.array() + 1.0)).rowwise() *
           (entropy_coef * inv_n * multiplicity.transpose().array()))
              .matrix();
  if (mean_entropy != nullptr) *mean_entropy = ent_total;
  return {value, policy.backward(cache, grad)};
}

A2cStats a2c_update(PolicyLearner& learner, std::span<const Episode> episodes,
                    const A2cSettings& settings) {
  A2cStats stats;
  std::vector<double> returns;
  const nn::Mlp* value_net = learner.value ? &*learner.value : nullptr;
  const auto adv = advantages(episodes, settings, value_net, &returns);
  const auto samples = flatten(episodes);
  stats.samples = samples.size();
  if (samples.empty()) return stats;

  for (std::size_t i = 0; i < samples.size(); ++i) {
    stats.mean_return += returns[i];
    stats.mean_abs_advantage += std::abs(adv[i]);
  }
  stats.mean_return /= static_cast<double>(samples.size());
  stats.mean_abs_advantage /= static_cast<double>(samples.size());

  auto [surrogate, grads] =
      policy_surrogate(learner.policy, samples, adv, settings.entropy_coef, &stats.mean_entropy);
  stats.surrogate = surrogate;
  for (auto& g : grads) g = -g;  // ascent on the surrogate
  learner.optimizer.step(learner.policy.params(), grads);

  if (settings.baseline == BaselineKind::kLearnedValue) {
    if (!learner.value || !learner.value_optimizer) {
      throw std::invalid_argument("a2c: learned baseline requested but no value network");
    }
    const auto grouped = group_inputs(samples);
    nn::Cache cache;
    const Eigen::MatrixXd v = learner.value->forward(
        nn::make_sparse_batch(learner.value->arch().in_dim, grouped.columns), &cache);
    Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(1, v.cols());
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const int col = grouped.column_of[i];
      dv(0, col) += inv_n * (v(0, col) - returns[i]);
    }
    learner.value_optimizer->step(learner.value->params(), learner.value->backward(cache, dv));
  }
  return stats;
}

}  // namespace tatc::skills
