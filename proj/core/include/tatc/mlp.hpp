#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "tatc/gridworld.hpp"

namespace tatc::nn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter tensors of a network in a fixed order (w1, b1, w2, b2, w3, b3).
/// Biases are stored as n x 1 matrices so every tensor has one type.
using Tensors = std::vector<Eigen::MatrixXd>;

enum class HeadKind { kLinear, kLogSoftmax };

struct Head {
  HeadKind kind = HeadKind::kLinear;
  int size = 1;
};

struct Architecture {
  int in_dim = 1;
  int hidden = 128;
  std::vector<Head> heads{{HeadKind::kLinear, 1}};

  int out_dim() const;
  bool operator==(const Architecture&) const = default;
};

bool operator==(const Head& a, const Head& b);

/// Column-major sparse input batch: one column per sample.
using SparseBatch = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using SparseEntry = std::pair<int, double>;

/// Activations kept by forward() for the matching backward() call.
struct Cache {
  std::variant<Eigen::MatrixXd, SparseBatch> input;
  Eigen::MatrixXd a1;  // tanh(w1 x + b1)
  Eigen::MatrixXd a2;  // tanh(w2 a1 + b2)
  Eigen::MatrixXd out;
};

/// Two-hidden-layer tanh network with one or more output heads. Log-softmax
/// heads are normalised independently over their own slice of the output.
class Mlp {
 public:
  Mlp() = default;
  /// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases.
  Mlp(Architecture arch, Rng& rng);
  static Mlp zeros(Architecture arch);

  const Architecture& arch() const { return arch_; }
  const Tensors& params() const { return params_; }
  Tensors& params() { return params_; }
  Tensors zeros_like() const;

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;
  Eigen::MatrixXd forward(const SparseBatch& x, Cache* cache = nullptr) const;
  /// Single sample given as sparse (index, value) entries; no cache.
  Eigen::VectorXd forward_one(std::span<const SparseEntry> x) const;

  /// Gradients of the scalar whose derivative w.r.t. the outputs is
  /// output_grad (out_dim x batch), summed over the batch.
  Tensors backward(const Cache& cache, const Eigen::MatrixXd& output_grad) const;

  /// Throws NumericError if any parameter is NaN or infinite.
  void check_finite(const std::string& what) const;

 private:
  template <typename Input>
  Eigen::MatrixXd forward_impl(const Input& x, Cache* cache) const;
  void apply_heads(Eigen::MatrixXd& z) const;
  void check_shapes() const;

  Architecture arch_;
  Tensors params_;
};

SparseBatch make_sparse_batch(int in_dim, std::span<const std::vector<SparseEntry>> columns);

void add_into(Tensors& acc, const Tensors& g, double scale = 1.0);
bool all_finite(const Tensors& t);
std::size_t parameter_count(const Tensors& t);

}  // namespace tatc::nn
