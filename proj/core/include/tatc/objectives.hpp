#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "tatc/mlp.hpp"

namespace tatc::objectives {

/// Smoothing of the Euclidean norm: sqrt(|x|^2 + eps^2). Used inside the
/// exponential repulsion and the boredom path length.
inline constexpr double kNormEps = 1e-8;

struct StatePair {
  int u = 0;
  int v = 0;
};

/// One representation update worth of data. States are one-hot indices.
struct ReprBatch {
  std::vector<StatePair> positives;  // consecutive random-walk transitions
  std::vector<StatePair> negatives;  // independent draws from the buffer
  std::vector<std::vector<int>> skill_paths;  // s_0 .. s_c of each skill
  double beta = 0.2;
  double beta_boredom = 2.0;
};

/// Loss value and its gradient with respect to the embedding matrix.
struct EmbeddingLoss {
  double value = 0.0;
  Eigen::MatrixXd grad;  // same shape as the embedding (d x states)
};

/// Loss value and its gradient with respect to the network parameters.
struct LossResult {
  double value = 0.0;
  nn::Tensors grads;
};

// Embedding-level losses: column i of `emb` is phi(state i).

/// Attraction over positives plus beta * E[(phi_u . phi_v)^2 - |phi_u|^2 - |phi_v|^2].
EmbeddingLoss lap_loss(const Eigen::MatrixXd& emb, const ReprBatch& batch);
/// Attraction over positives plus beta * E[exp(-|phi_u - phi_v|)].
EmbeddingLoss cont_loss(const Eigen::MatrixXd& emb, const ReprBatch& batch);
/// Mean over skill paths of the summed step lengths in embedding space; zero
/// when no skill path is present.
EmbeddingLoss boredom(const Eigen::MatrixXd& emb, const ReprBatch& batch);
/// cont_loss + beta_boredom * boredom. The contrastive part is skipped when
/// the batch holds no random-walk transitions.
EmbeddingLoss tatc_loss(const Eigen::MatrixXd& emb, const ReprBatch& batch);

// Network-level losses: phi maps one-hot states to R^d. Only the states that
// appear in the batch are forwarded.
LossResult lap_loss(const nn::Mlp& phi, const ReprBatch& batch);
LossResult cont_loss(const nn::Mlp& phi, const ReprBatch& batch);
LossResult boredom(const nn::Mlp& phi, const ReprBatch& batch);
LossResult tatc_loss(const nn::Mlp& phi, const ReprBatch& batch);

/// phi evaluated at the given one-hot indices, one column per state.
Eigen::MatrixXd embed_states(const nn::Mlp& phi, std::span<const int> states);
/// phi of every state: d x in_dim.
Eigen::MatrixXd embed_all(const nn::Mlp& phi);

nn::SparseBatch one_hot_batch(int dim, std::span<const int> states);

}  // namespace tatc::objectives
