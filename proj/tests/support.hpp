#pragma once

// Hand-rolled random instance generators shared by the property tests.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "tatc/gridworld.hpp"
#include "tatc/mlp.hpp"
#include "tatc/objectives.hpp"

namespace tatc::testing {

inline Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline Eigen::MatrixXd random_rotation(int d, Rng& rng) {
  const Eigen::MatrixXd a = random_matrix(d, d, rng);
  Eigen::MatrixXd q = a.householderQr().householderQ();
  return q;
}

/// Pairs, negatives and skill paths over `n_states` embedding columns.
inline objectives::ReprBatch random_batch(int n_states, Rng& rng, int pairs = 6, int paths = 3,
                                          int path_len = 4) {
  objectives::ReprBatch b;
  std::uniform_int_distribution<int> s(0, n_states - 1);
  for (int i = 0; i < pairs; ++i) b.positives.push_back({s(rng), s(rng)});
  for (int i = 0; i < pairs; ++i) b.negatives.push_back({s(rng), s(rng)});
  for (int p = 0; p < paths; ++p) {
    auto& path = b.skill_paths.emplace_back();
    for (int k = 0; k < path_len; ++k) path.push_back(s(rng));
  }
  std::uniform_real_distribution<double> beta(0.05, 1.0);
  b.beta = beta(rng);
  b.beta_boredom = 4.0 * beta(rng);
  return b;
}

/// Connected random maze: open room with random interior walls, rejected
/// until connected.
inline GridSpec random_maze(int rows, int cols, double wall_prob, Rng& rng) {
  std::bernoulli_distribution wall(wall_prob);
  for (;;) {
    std::string text;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (r == rows - 1 && c == 0) {
          text += 'S';
        } else {
          text += wall(rng) ? '#' : '.';
        }
      }
      text += '\n';
    }
    try {
      return GridSpec::from_ascii(text);
    } catch (const MazeParseError&) {
    }
  }
}

/// Central-difference gradient of a scalar function of a matrix.
template <typename F>
Eigen::MatrixXd numeric_gradient(F&& f, Eigen::MatrixXd x, double eps = 1e-6) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + eps;
    const double up = f(x);
    x.data()[i] = keep - eps;
    const double down = f(x);
    x.data()[i] = keep;
    g.data()[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

inline double max_relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a.data()[i]), std::abs(b.data()[i]), 1e-8});
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]) / denom);
  }
  return worst;
}

}  // namespace tatc::testing
