#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tatc/gridworld.hpp"

namespace tatc::spectral {

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Graph of the uniformly random policy over the free cells.
struct MazeGraph {
  Eigen::MatrixXd transition;  // T(s, s') = #actions s -> s' / 4, bumps included
  Eigen::MatrixXd weights;     // (T + T^T) / 2
  Eigen::VectorXd degree;      // row sums of weights
  Eigen::MatrixXd laplacian;   // I - D^-1/2 W D^-1/2
  int size() const { return static_cast<int>(transition.rows()); }
};

MazeGraph build_graph(const GridSpec& spec);

struct EigenResult {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column i pairs with values[i]
  double max_residual = 0.0;           // max_i |A v_i - lambda_i v_i|
  double max_orthonormality_error = 0.0;  // max |V^T V - I|
};

/// k smallest eigenpairs of a symmetric matrix. Throws ConvergenceError when
/// the residual exceeds `tolerance`.
EigenResult eig(const Eigen::MatrixXd& symmetric, int k, double tolerance = 1e-8);
EigenResult eig(const MazeGraph& graph, int k, double tolerance = 1e-8);

/// Unnormalized Laplacian of the path graph on n nodes.
Eigen::MatrixXd path_laplacian(int n);

/// Shortest-path step counts from `source`, indexed by one-hot index.
/// Unreachable cells get -1.
std::vector<int> bfs_distances(const GridSpec& spec, Cell source);

struct Alignment {
  std::vector<double> cosines;  // principal-angle cosines, descending
  int learned_rank = 0;
  bool rank_deficient = false;
};

/// Principal angles between span(learned columns) and the d eigenvectors
/// following the trivial one. `learned` has one row per cell.
Alignment subspace_alignment(const Eigen::MatrixXd& learned, const EigenResult& exact, int d);

/// Principal angles between two column spaces with the same row count.
Alignment principal_angles(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct Awareness {
  double rho = 0.0;
  bool degenerate = false;  // constant embedding distances: rho is reported as 0
};

/// Spearman correlation between |phi(s) - phi(s0)| and BFS distance from s0.
/// `phi` has one row per cell.
Awareness dynamics_awareness(const Eigen::MatrixXd& phi, const std::vector<int>& distances,
                             int source_index);

/// Eigenpairs and BFS distances of a maze as a JSON document.
std::string oracle_json(const GridSpec& spec, const EigenResult& result,
                        const std::vector<int>& distances);

}  // namespace tatc::spectral
