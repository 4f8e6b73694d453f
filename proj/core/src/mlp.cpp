#include "tatc/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tatc::nn {

namespace {

enum : std::size_t { kW1 = 0, kB1, kW2, kB2, kW3, kB3, kNumTensors };

void log_softmax_inplace(Eigen::Ref<Eigen::MatrixXd> z) {
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    auto col = z.col(j);
    const double m = col.maxCoeff();
    const double lse = m + std::log((col.array() - m).exp().sum());
    col.array() -= lse;
  }
}

}  // namespace

bool operator==(const Head& a, const Head& b) { return a.kind == b.kind && a.size == b.size; }

int Architecture::out_dim() const {
  return std::accumulate(heads.begin(), heads.end(), 0,
                         [](int acc, const Head& h) { return acc + h.size; });
}

Mlp Mlp::zeros(Architecture arch) {
  Mlp net;
  net.arch_ = std::move(arch);
  net.check_shapes();
  const int h = net.arch_.hidden;
  const int out = net.arch_.out_dim();
  net.params_ = {Eigen::MatrixXd::Zero(h, net.arch_.in_dim), Eigen::MatrixXd::Zero(h, 1),
                 Eigen::MatrixXd::Zero(h, h),                Eigen::MatrixXd::Zero(h, 1),
                 Eigen::MatrixXd::Zero(out, h),              Eigen::MatrixXd::Zero(out, 1)};
  return net;
}

Mlp::Mlp(Architecture arch, Rng& rng) : Mlp(zeros(std::move(arch))) {
  for (std::size_t k : {kW1, kW2, kW3}) {
    auto& w = params_[k];
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    // Column-major fill order is part of the reproducibility contract.
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
  }
}

void Mlp::check_shapes() const {
  if (arch_.in_dim < 1 || arch_.hidden < 1) throw ShapeError("mlp: dimensions must be positive");
  if (arch_.heads.empty()) throw ShapeError("mlp: at least one output head required");
  for (const auto& h : arch_.heads) {
    if (h.size < 1) throw ShapeError("mlp: head size must be positive");
  }
}

Tensors Mlp::zeros_like() const {
  Tensors out;
  out.reserve(params_.size());
  for (const auto& t : params_) out.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
  return out;
}

void Mlp::apply_heads(Eigen::MatrixXd& z) const {
  int offset = 0;
  for (const auto& h : arch_.heads) {
    if (h.kind == HeadKind::kLogSoftmax) log_softmax_inplace(z.middleRows(offset, h.size));
    offset += h.size;
  }
}

template <typename Input>
Eigen::MatrixXd Mlp::forward_impl(const Input& x, Cache* cache) const {
  if (x.rows() != arch_.in_dim) {
    throw ShapeError("mlp: input has " + std::to_string(x.rows()) + " rows, expected " +
                     std::to_string(arch_.in_dim));
  }
  Eigen::MatrixXd a1 = params_[kW1] * x;
  a1.colwise() += params_[kB1].col(0);
  a1 = a1.array().tanh();
  Eigen::MatrixXd a2 = params_[kW2] * a1;
  a2.colwise() += params_[kB2].col(0);
  a2 = a2.array().tanh();
  Eigen::MatrixXd out = params_[kW3] * a2;
  out.colwise() += params_[kB3].col(0);
  apply_heads(out);
  if (cache != nullptr) {
    cache->input = x;
    cache->a1 = std::move(a1);
    cache->a2 = std::move(a2);
    cache->out = out;
  }
  return out;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache* cache) const {
  return forward_impl(x, cache);
}

Eigen::MatrixXd Mlp::forward(const SparseBatch& x, Cache* cache) const {
  return forward_impl(x, cache);
}

Eigen::VectorXd Mlp::forward_one(std::span<const SparseEntry> x) const {
  Eigen::VectorXd a1 = params_[kB1].col(0);
  for (const auto& [i, v] : x) {
    if (i < 0 || i >= arch_.in_dim) throw ShapeError("mlp: sparse input index out of range");
    a1.noalias() += v * params_[kW1].col(i);
  }
  a1 = a1.array().tanh();
  Eigen::VectorXd a2 = params_[kB2].col(0);
  a2.noalias() += params_[kW2] * a1;
  a2 = a2.array().tanh();
  Eigen::MatrixXd out = params_[kB3];
  out.noalias() += params_[kW3] * a2;
  apply_heads(out);
  return out.col(0);
}

Tensors Mlp::backward(const Cache& cache, const Eigen::MatrixXd& output_grad) const {
  if (output_grad.rows() != arch_.out_dim() || output_grad.cols() != cache.out.cols()) {
    throw ShapeError("mlp: output gradient shape does not match the cached forward pass");
  }
  // Through the log-softmax heads: dz = dy - softmax(z) * sum(dy).
  Eigen::MatrixXd dz = output_grad;
  int offset = 0;
  for (const auto& h : arch_.heads) {
    if (h.kind == HeadKind::kLogSoftmax) {
      auto block = dz.middleRows(offset, h.size);
      const Eigen::MatrixXd probs = cache.out.middleRows(offset, h.size).array().exp();
      const Eigen::RowVectorXd total = block.colwise().sum();
      block -= probs * total.asDiagonal();
    }
    offset += h.size;
  }

  Tensors grads(kNumTensors);
  grads[kW3].noalias() = dz * cache.a2.transpose();
  grads[kB3] = dz.rowwise().sum();
  Eigen::MatrixXd d2 = params_[kW3].transpose() * dz;
  d2.array() *= 1.0 - cache.a2.array().square();
  grads[kW2].noalias() = d2 * cache.a1.transpose();
  grads[kB2] = d2.rowwise().sum();
  Eigen::MatrixXd d1 = params_[kW2].transpose() * d2;
  d1.array() *= 1.0 - cache.a1.array().square();
  grads[kB1] = d1.rowwise().sum();
  std::visit(
      [&](const auto& x) {
        if (x.rows() != arch_.in_dim) throw ShapeError("mlp: cached input has wrong shape");
        grads[kW1] = d1 * x.transpose();
      },
      cache.input);
  return grads;
}

void Mlp::check_finite(const std::string& what) const {
  if (!all_finite(params_)) throw NumericError(what + ": non-finite network parameter");
}

SparseBatch make_sparse_batch(int in_dim, std::span<const std::vector<SparseEntry>> columns) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    for (const auto& [i, v] : columns[j]) {
      if (i < 0 || i >= in_dim) throw ShapeError("sparse batch: index out of range");
      triplets.emplace_back(i, static_cast<int>(j), v);
    }
  }
  SparseBatch batch(in_dim, static_cast<Eigen::Index>(columns.size()));
  batch.setFromTriplets(triplets.begin(), triplets.end());
  return batch;
}

void add_into(Tensors& acc, const Tensors& g, double scale) {
  if (acc.size() != g.size()) throw ShapeError("add_into: tensor count mismatch");
  for (std::size_t k = 0; k < acc.size(); ++k) {
    if (acc[k].rows() != g[k].rows() || acc[k].cols() != g[k].cols()) {
      throw ShapeError("add_into: tensor shape mismatch");
    }
    acc[k] += scale * g[k];
  }
}

bool all_finite(const Tensors& t) {
  return std::all_of(t.begin(), t.end(), [](const Eigen::MatrixXd& m) { return m.allFinite(); });
}

std::size_t parameter_count(const Tensors& t) {
  std::size_t n = 0;
  for (const auto& m : t) n += static_cast<std::size_t>(m.size());
  return n;
}

}  // namespace tatc::nn
