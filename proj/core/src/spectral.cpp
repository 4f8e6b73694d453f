#include "tatc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "json.hpp"
#include "tatc/stats.hpp"

namespace tatc::spectral {

MazeGraph build_graph(const GridSpec& spec) {
  const int n = spec.onehot_dim();
  MazeGraph g;
  g.transition = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const Cell s = spec.cell_at(i);
    for (int a = 0; a < kNumMoves; ++a) {
      g.transition(i, spec.index_of(step(spec, s, static_cast<Move>(a)))) += 1.0 / kNumMoves;
    }
  }
  const auto dist = bfs_distances(spec, spec.cell_at(0));
  if (std::any_of(dist.begin(), dist.end(), [](int v) { return v < 0; })) {
    throw std::invalid_argument("build_graph: free cells are not connected");
  }
  g.weights = 0.5 * (g.transition + g.transition.transpose());
  g.degree = g.weights.rowwise().sum();
  const Eigen::VectorXd inv_sqrt = g.degree.array().rsqrt();
  g.laplacian = Eigen::MatrixXd::Identity(n, n) -
                inv_sqrt.asDiagonal() * g.weights * inv_sqrt.asDiagonal();
  return g;
}

EigenResult eig(const Eigen::MatrixXd& a, int k, double tolerance) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eig: matrix is not square");
  if (k < 1 || k > a.rows()) throw std::invalid_argument("eig: k out of range");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("eig: solver did not converge", std::numeric_limits<double>::infinity());
  }
  EigenResult r;
  r.values = solver.eigenvalues().head(k);
  r.vectors = solver.eigenvectors().leftCols(k);
  // Fix the sign so results are reproducible: largest-magnitude entry positive.
  for (int j = 0; j < k; ++j) {
    Eigen::Index arg = 0;
    r.vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (r.vectors(arg, j) < 0.0) r.vectors.col(j) *= -1.0;
  }
  const Eigen::MatrixXd resid = a * r.vectors - r.vectors * r.values.asDiagonal();
  r.max_residual = resid.colwise().norm().maxCoeff();
  r.max_orthonormality_error =
      (r.vectors.transpose() * r.vectors - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
  if (r.max_residual > tolerance) {
    throw ConvergenceError("eig: residual " + std::to_string(r.max_residual) +
                               " exceeds tolerance",
                           r.max_residual);
  }
  return r;
}

EigenResult eig(const MazeGraph& graph, int k, double tolerance) {
  return eig(graph.laplacian, k, tolerance);
}

Eigen::MatrixXd path_laplacian(int n) {
  if (n < 1) throw std::invalid_argument("path_laplacian: n must be >= 1");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    l(i, i) += 1.0;
    l(i + 1, i + 1) += 1.0;
    l(i, i + 1) -= 1.0;
    l(i + 1, i) -= 1.0;
  }
  return l;
}

std::vector<int> bfs_distances(const GridSpec& spec, Cell source) {
  std::vector<int> dist(static_cast<std::size_t>(spec.onehot_dim()), -1);
  std::deque<Cell> frontier{source};
  dist[static_cast<std::size_t>(spec.index_of(source))] = 0;
  while (!frontier.empty()) {
    const Cell s = frontier.front();
    frontier.pop_front();
    const int ds = dist[static_cast<std::size_t>(spec.index_of(s))];
    for (int a = 0; a < kNumMoves; ++a) {
      const Cell t = step(spec, s, static_cast<Move>(a));
      int& dt = dist[static_cast<std::size_t>(spec.index_of(t))];
      if (dt < 0) {
        dt = ds + 1;
        frontier.push_back(t);
      }
    }
  }
  return dist;
}

namespace {

// Orthonormal basis of the column space, plus its numerical rank.
std::pair<Eigen::MatrixXd, int> column_basis(const Eigen::MatrixXd& m) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), rank);
  return {q, rank};
}

}  // namespace

Alignment principal_angles(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("principal_angles: row count mismatch");
  const auto [qa, rank_a] = column_basis(a);
  const auto [qb, rank_b] = column_basis(b);
  Alignment out;
  out.learned_rank = rank_a;
  out.rank_deficient = rank_a < a.cols();
  if (rank_a == 0 || rank_b == 0) return out;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(qa.transpose() * qb);
  const Eigen::VectorXd s = svd.singularValues();
  out.cosines.assign(s.data(), s.data() + s.size());
  for (double& c : out.cosines) c = std::min(c, 1.0);
  // Missing directions of a rank-deficient table align with nothing.
  while (static_cast<int>(out.cosines.size()) < std::min(a.cols(), b.cols())) {
    out.cosines.push_back(0.0);
  }
  return out;
}

Alignment subspace_alignment(const Eigen::MatrixXd& learned, const EigenResult& exact, int d) {
  if (d < 1 || learned.cols() != d) {
    throw std::invalid_argument("subspace_alignment: learned table must have d columns");
  }
  if (exact.vectors.cols() < d + 1) {
    throw std::invalid_argument("subspace_alignment: need d + 1 eigenvectors");
  }
  return principal_angles(learned, exact.vectors.middleCols(1, d));
}

Awareness dynamics_awareness(const Eigen::MatrixXd& phi, const std::vector<int>& distances,
                             int source_index) {
  if (phi.rows() != static_cast<Eigen::Index>(distances.size())) {
    throw std::invalid_argument("dynamics_awareness: table sizes differ");
  }
  const Eigen::RowVectorXd origin = phi.row(source_index);
  std::vector<double> emb(distances.size());
  std::vector<double> bfs(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i) {
    emb[i] = (phi.row(static_cast<Eigen::Index>(i)) - origin).norm();
    bfs[i] = distances[i];
  }
  const double rho = stats::spearman(emb, bfs);
  if (std::isnan(rho)) return {0.0, true};
  return {rho, false};
}

std::string oracle_json(const GridSpec& spec, const EigenResult& result,
                        const std::vector<int>& distances) {
  nlohmann::ordered_json j;
  j["width"] = spec.width();
  j["height"] = spec.height();
  j["start"] = {spec.start().row, spec.start().col};
  j["laplacian"] = "I - D^-1/2 W D^-1/2, W = (T + T^T)/2, T = uniform random walk";
  j["eigenvalues"] = std::vector<double>(result.values.data(),
                                         result.values.data() + result.values.size());
  j["max_residual"] = result.max_residual;
  auto cells = nlohmann::json::array();
  for (int i = 0; i < spec.onehot_dim(); ++i) {
    const Cell c = spec.cell_at(i);
    std::vector<double> v(static_cast<std::size_t>(result.vectors.cols()));
    for (Eigen::Index k = 0; k < result.vectors.cols(); ++k) v[static_cast<std::size_t>(k)] = result.vectors(i, k);
    cells.push_back({{"row", c.row}, {"col", c.col}, {"bfs", distances[static_cast<std::size_t>(i)]},
                     {"eigvec", v}});
  }
  j["cells"] = std::move(cells);
  return j.dump(1);
}

}  // namespace tatc::spectral
