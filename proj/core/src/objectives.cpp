#include "tatc/objectives.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace tatc::objectives {

namespace {

double smooth_norm(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return std::sqrt(x.squaredNorm() + kNormEps * kNormEps);
}

void check_indices(const Eigen::MatrixXd& emb, const ReprBatch& batch) {
  const auto bad = [&](int i) { return i < 0 || i >= emb.cols(); };
  for (const auto& p : batch.positives) {
    if (bad(p.u) || bad(p.v)) throw std::out_of_range("loss: positive pair index out of range");
  }
  for (const auto& p : batch.negatives) {
    if (bad(p.u) || bad(p.v)) throw std::out_of_range("loss: negative pair index out of range");
  }
  for (const auto& path : batch.skill_paths) {
    for (int s : path) {
      if (bad(s)) throw std::out_of_range("loss: skill path index out of range");
    }
  }
}

void require_pairs(const ReprBatch& batch, const char* what) {
  if (batch.positives.empty()) throw std::invalid_argument(std::string(what) + ": no positive pairs");
  if (batch.negatives.empty()) throw std::invalid_argument(std::string(what) + ": no negative pairs");
}

// Mean squared distance over positive pairs, accumulated into `out`.
void attraction(const Eigen::MatrixXd& emb, const ReprBatch& batch, EmbeddingLoss& out) {
  const double w = 1.0 / static_cast<double>(batch.positives.size());
  for (const auto& [u, v] : batch.positives) {
    const Eigen::VectorXd diff = emb.col(u) - emb.col(v);
    out.value += w * diff.squaredNorm();
    out.grad.col(u) += 2.0 * w * diff;
    out.grad.col(v) -= 2.0 * w * diff;
  }
}

EmbeddingLoss zero_loss(const Eigen::MatrixXd& emb) {
  return {0.0, Eigen::MatrixXd::Zero(emb.rows(), emb.cols())};
}

struct Compacted {
  std::vector<int> states;  // local id -> one-hot index
  ReprBatch batch;          // same batch over local ids
};

Compacted compact(const ReprBatch& batch, int in_dim) {
  Compacted c;
  c.batch.beta = batch.beta;
  c.batch.beta_boredom = batch.beta_boredom;
  std::unordered_map<int, int> local;
  const auto id = [&](int s) {
    if (s < 0 || s >= in_dim) throw std::out_of_range("loss: state index outside phi input");
    const auto [it, inserted] = local.try_emplace(s, static_cast<int>(c.states.size()));
    if (inserted) c.states.push_back(s);
    return it->second;
  };
  for (const auto& [u, v] : batch.positives) c.batch.positives.push_back({id(u), id(v)});
  for (const auto& [u, v] : batch.negatives) c.batch.negatives.push_back({id(u), id(v)});
  for (const auto& path : batch.skill_paths) {
    auto& dst = c.batch.skill_paths.emplace_back();
    dst.reserve(path.size());
    for (int s : path) dst.push_back(id(s));
  }
  return c;
}

template <typename EmbeddingFn>
LossResult through_network(const nn::Mlp& phi, const ReprBatch& batch, EmbeddingFn&& fn) {
  const Compacted c = compact(batch, phi.arch().in_dim);
  if (c.states.empty()) return {0.0, phi.zeros_like()};
  nn::Cache cache;
  const Eigen::MatrixXd emb = phi.forward(one_hot_batch(phi.arch().in_dim, c.states), &cache);
  const EmbeddingLoss loss = fn(emb, c.batch);
  return {loss.value, phi.backward(cache, loss.grad)};
}

}  // namespace

EmbeddingLoss lap_loss(const Eigen::MatrixXd& emb, const ReprBatch& batch) {
  require_pairs(batch, "lap_loss");
  check_indices(emb, batch);
  EmbeddingLoss out = zero_loss(emb);
  attraction(emb, batch, out);
  const double w = batch.beta / static_cast<double>(batch.negatives.size());
  for (const auto& [u, v] : batch.negatives) {
    const auto eu = emb.col(u);
    const auto ev = emb.col(v);
    const double dot = eu.dot(ev);
    out.value += w * (dot * dot - eu.squaredNorm() - ev.squaredNorm());
    out.grad.col(u) += w * (2.0 * dot * ev - 2.0 * eu);
    out.grad.col(v) += w * (2.0 * dot * eu - 2.0 * ev);
  }
  return out;
}

EmbeddingLoss cont_loss(const Eigen::MatrixXd& emb, const ReprBatch& batch) {
  require_pairs(batch, "cont_loss");
  check_indices(emb, batch);
  EmbeddingLoss out = zero_loss(emb);
  attraction(emb, batch, out);
  const double w = batch.beta / static_cast<double>(batch.negatives.size());
  for (const auto& [u, v] : batch.negatives) {
    const Eigen::VectorXd diff = emb.col(u) - emb.col(v);
    const double dist = smooth_norm(diff);
    const double rep = std::exp(-dist);
    out.value += w * rep;
    const Eigen::VectorXd g = (-w * rep / dist) * diff;
    out.grad.col(u) += g;
    out.grad.col(v) -= g;
  }
  return out;
}

EmbeddingLoss boredom(const Eigen::MatrixXd& emb, const ReprBatch& batch) {
  check_indices(emb, batch);
  EmbeddingLoss out = zero_loss(emb);
  if (batch.skill_paths.empty()) return out;
  const double w = 1.0 / static_cast<double>(batch.skill_paths.size());
  for (const auto& path : batch.skill_paths) {
    if (path.size() < 2) throw std::invalid_argument("boredom: skill path needs at least one step");
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      const Eigen::VectorXd diff = emb.col(path[k]) - emb.col(path[k + 1]);
      const double dist = smooth_norm(diff);
      out.value += w * dist;
      const Eigen::VectorXd g = (w / dist) * diff;
      out.grad.col(path[k]) += g;
      out.grad.col(path[k + 1]) -= g;
    }
  }
  return out;
}

EmbeddingLoss tatc_loss(const Eigen::MatrixXd& emb, const ReprBatch& batch) {
  if (batch.positives.empty() && batch.skill_paths.empty()) {
    throw std::invalid_argument("tatc_loss: batch holds neither transitions nor skill paths");
  }
  EmbeddingLoss out = batch.positives.empty() ? zero_loss(emb) : cont_loss(emb, batch);
  if (batch.beta_boredom != 0.0 && !batch.skill_paths.empty()) {
    const EmbeddingLoss b = boredom(emb, batch);
    out.value += batch.beta_boredom * b.value;
    out.grad += batch.beta_boredom * b.grad;
  }
  return out;
}

LossResult lap_loss(const nn::Mlp& phi, const ReprBatch& batch) {
  return through_network(phi, batch, [](const auto& e, const auto& b) { return lap_loss(e, b); });
}

LossResult cont_loss(const nn::Mlp& phi, const ReprBatch& batch) {
  return through_network(phi, batch, [](const auto& e, const auto& b) { return cont_loss(e, b); });
}

LossResult boredom(const nn::Mlp& phi, const ReprBatch& batch) {
  return through_network(phi, batch, [](const auto& e, const auto& b) { return boredom(e, b); });
}

LossResult tatc_loss(const nn::Mlp& phi, const ReprBatch& batch) {
  return through_network(phi, batch, [](const auto& e, const auto& b) { return tatc_loss(e, b); });
}

nn::SparseBatch one_hot_batch(int dim, std::span<const int> states) {
  nn::SparseBatch x(dim, static_cast<Eigen::Index>(states.size()));
  x.reserve(Eigen::VectorXi::Ones(static_cast<Eigen::Index>(states.size())));
  for (std::size_t j = 0; j < states.size(); ++j) {
    if (states[j] < 0 || states[j] >= dim) throw std::out_of_range("one_hot_batch: bad state");
    x.insert(states[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  x.makeCompressed();
  return x;
}

Eigen::MatrixXd embed_states(const nn::Mlp& phi, std::span<const int> states) {
  return phi.forward(one_hot_batch(phi.arch().in_dim, states));
}

Eigen::MatrixXd embed_all(const nn::Mlp& phi) {
  std::vector<int> all(static_cast<std::size_t>(phi.arch().in_dim));
  std::iota(all.begin(), all.end(), 0);
  return embed_states(phi, all);
}

}  // namespace tatc::objectives
