#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "support.hpp"
#include "tatc/checkpoint.hpp"
#include "tatc/grad_check.hpp"
#include "tatc/mlp.hpp"
#include "tatc/optimizer.hpp"

namespace tatc::nn {
namespace {

Architecture small_arch(HeadKind kind = HeadKind::kLinear) { return {4, 3, {{kind, 2}}}; }

// Sum of w .* outputs, so that output_grad = w.
std::pair<double, Tensors> weighted_output(const Mlp& proto, const Tensors& p, const Eigen::MatrixXd& x,
                                           const Eigen::MatrixXd& w) {
  Mlp net = proto;
  net.params() = p;
  Cache cache;
  const Eigen::MatrixXd y = net.forward(x, &cache);
  return {(y.array() * w.array()).sum(), net.backward(cache, w)};
}

TEST(Forward, ZeroNetworkGivesZero) {
  const auto net = Mlp::zeros(small_arch());
  Rng rng(1);
  EXPECT_TRUE(net.forward(testing::random_matrix(4, 5, rng)).isZero());
}

TEST(Forward, UnitChainAtZeroReturnsBias) {
  auto net = Mlp::zeros({1, 1, {{HeadKind::kLinear, 1}}});
  auto& p = net.params();
  p[0].setOnes();
  p[2].setOnes();
  p[4].setOnes();
  p[5](0, 0) = 0.75;
  EXPECT_DOUBLE_EQ(net.forward(Eigen::MatrixXd::Zero(1, 1))(0, 0), 0.75);
}

TEST(Forward, LogSoftmaxHeadsNormalise) {
  Rng rng(2);
  const Mlp net({6, 8, {{HeadKind::kLinear, 1}, {HeadKind::kLogSoftmax, 4}, {HeadKind::kLogSoftmax, 3}}}, rng);
  const Eigen::MatrixXd y = net.forward(testing::random_matrix(6, 10, rng, 3.0));
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    EXPECT_NEAR(y.col(j).segment(1, 4).array().exp().sum(), 1.0, 1e-9);
    EXPECT_NEAR(y.col(j).segment(5, 3).array().exp().sum(), 1.0, 1e-9);
  }
}

TEST(Forward, SparseMatchesDense) {
  Rng rng(3);
  const Mlp net({7, 5, {{HeadKind::kLogSoftmax, 4}}}, rng);
  std::vector<std::vector<SparseEntry>> cols{{{0, 1.0}, {5, 0.3}}, {{6, -2.0}}, {{2, 1.0}}};
  const auto sparse = make_sparse_batch(7, cols);
  const Eigen::MatrixXd dense = Eigen::MatrixXd(sparse);
  EXPECT_TRUE(net.forward(sparse).isApprox(net.forward(dense), 1e-14));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    EXPECT_TRUE(net.forward_one(cols[j]).isApprox(net.forward(dense).col(static_cast<Eigen::Index>(j)), 1e-14));
  }
}

TEST(Forward, ShapeMismatchThrows) {
  Rng rng(4);
  const Mlp net(small_arch(), rng);
  EXPECT_THROW(net.forward(Eigen::MatrixXd::Zero(3, 2)), ShapeError);
}

TEST(Init, UniformFanInBoundsAndZeroBiases) {
  Rng rng(5);
  const Mlp net({50, 20, {{HeadKind::kLinear, 3}}}, rng);
  const auto& p = net.params();
  EXPECT_LE(p[0].cwiseAbs().maxCoeff(), 1.0 / std::sqrt(50.0));
  EXPECT_LE(p[2].cwiseAbs().maxCoeff(), 1.0 / std::sqrt(20.0));
  EXPECT_TRUE(p[1].isZero());
  EXPECT_TRUE(p[3].isZero());
  EXPECT_TRUE(p[5].isZero());
}

TEST(Backward, ZeroOutputGradGivesZeroGrads) {
  Rng rng(6);
  const Mlp net(small_arch(), rng);
  Cache cache;
  net.forward(testing::random_matrix(4, 3, rng), &cache);
  for (const auto& g : net.backward(cache, Eigen::MatrixXd::Zero(2, 3))) EXPECT_TRUE(g.isZero());
}

TEST(Backward, MatchesFiniteDifferences) {
  Rng rng(7);
  for (const auto kind : {HeadKind::kLinear, HeadKind::kLogSoftmax}) {
    const Mlp net(small_arch(kind), rng);
    const Eigen::MatrixXd x = testing::random_matrix(4, 5, rng);
    const Eigen::MatrixXd w = testing::random_matrix(2, 5, rng);
    const auto report = grad_check([&](const Tensors& p) { return weighted_output(net, p, x, w); }, net.params());
    EXPECT_LE(report.max_relative_error, 1e-4);
  }
}

TEST(Backward, SparseInputMatchesFiniteDifferences) {
  Rng rng(8);
  const Mlp net({6, 5, {{HeadKind::kLogSoftmax, 4}}}, rng);
  std::vector<std::vector<SparseEntry>> cols{{{1, 1.0}, {4, 0.7}}, {{3, 1.0}, {5, -0.2}}};
  const auto x = make_sparse_batch(6, cols);
  const Eigen::MatrixXd w = testing::random_matrix(4, 2, rng);
  const auto loss = [&](const Tensors& p) {
    Mlp m = net;
    m.params() = p;
    Cache cache;
    const Eigen::MatrixXd y = m.forward(x, &cache);
    return std::pair{(y.array() * w.array()).sum(), m.backward(cache, w)};
  };
  EXPECT_LE(grad_check(loss, net.params()).max_relative_error, 1e-4);
}

TEST(Backward, IsLinearOverSamples) {
  Rng rng(9);
  const Mlp net(small_arch(HeadKind::kLogSoftmax), rng);
  const Eigen::MatrixXd x = testing::random_matrix(4, 2, rng);
  const Eigen::MatrixXd w = testing::random_matrix(2, 2, rng);
  const auto both = weighted_output(net, net.params(), x, w).second;
  auto first = weighted_output(net, net.params(), x.col(0), w.col(0)).second;
  add_into(first, weighted_output(net, net.params(), x.col(1), w.col(1)).second);
  for (std::size_t k = 0; k < both.size(); ++k) EXPECT_TRUE(both[k].isApprox(first[k], 1e-12));
}

// Property: random architectures and inputs all pass the gradient check.
TEST(Backward, RandomArchitecturesPassGradCheck) {
  Rng rng(10);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int trial = 0; trial < 20; ++trial) {
    Architecture arch{dim(rng), dim(rng), {}};
    const int heads = 1 + trial % 2;
    for (int h = 0; h < heads; ++h) {
      arch.heads.push_back({trial % 3 == 0 ? HeadKind::kLinear : HeadKind::kLogSoftmax, 1 + dim(rng) % 4});
    }
    const Mlp net(arch, rng);
    const Eigen::MatrixXd x = testing::random_matrix(arch.in_dim, 3, rng);
    const Eigen::MatrixXd w = testing::random_matrix(arch.out_dim(), 3, rng);
    const auto report = grad_check([&](const Tensors& p) { return weighted_output(net, p, x, w); }, net.params());
    EXPECT_LE(report.max_relative_error, 1e-4) << "trial " << trial;
  }
}

TEST(GradCheck, LinearLossIsExact) {
  Rng rng(11);
  const Eigen::MatrixXd x = testing::random_matrix(5, 1, rng);
  const Tensors w{testing::random_matrix(5, 1, rng)};
  const auto loss = [&](const Tensors& p) { return std::pair{p[0].col(0).dot(x.col(0)), Tensors{x}}; };
  EXPECT_LE(grad_check(loss, w).max_relative_error, 1e-8);
}

TEST(GradCheck, FlagsWrongGradient) {
  const Tensors w{Eigen::MatrixXd::Constant(1, 1, 2.0)};
  const auto loss = [](const Tensors& p) {
    return std::pair{p[0](0, 0) * p[0](0, 0), Tensors{Eigen::MatrixXd::Constant(1, 1, 3.0 * p[0](0, 0))}};
  };
  EXPECT_GT(grad_check(loss, w).max_relative_error, 0.1);
}

TEST(RmsProp, ZeroGradsLeaveParams) {
  Tensors p{Eigen::MatrixXd::Constant(2, 2, 0.5)};
  auto opt = Optimizer::rmsprop(p);
  opt.step(p, {Eigen::MatrixXd::Zero(2, 2)});
  EXPECT_EQ(p[0], Eigen::MatrixXd::Constant(2, 2, 0.5));
}

TEST(RmsProp, SingleStepClosedForm) {
  const double g = 0.37;
  const double lr = 1e-3;
  Tensors p{Eigen::MatrixXd::Constant(1, 1, 1.0)};
  auto opt = Optimizer::rmsprop(p, {lr, 0.99, 1e-8});
  opt.step(p, {Eigen::MatrixXd::Constant(1, 1, g)});
  const double expected = 1.0 - lr * g / (std::sqrt((1.0 - 0.99) * g * g) + 1e-8);
  EXPECT_NEAR(p[0](0, 0), expected, 1e-15);
}

TEST(RmsProp, DescendsQuadratic) {
  Tensors p{Eigen::MatrixXd::Constant(1, 1, 1.0)};
  auto opt = Optimizer::rmsprop(p, {0.01, 0.99, 1e-8});
  for (int i = 0; i < 200; ++i) opt.step(p, {2.0 * p[0]});
  EXPECT_LT(std::abs(p[0](0, 0)), 0.1);
}

TEST(Adam, ZeroGradsLeaveParams) {
  Tensors p{Eigen::MatrixXd::Constant(3, 1, -0.2)};
  auto opt = Optimizer::adam(p);
  for (int i = 0; i < 3; ++i) opt.step(p, {Eigen::MatrixXd::Zero(3, 1)});
  EXPECT_EQ(p[0], Eigen::MatrixXd::Constant(3, 1, -0.2));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr * g / (|g| + eps').
  Tensors p{Eigen::MatrixXd::Constant(1, 1, 0.0)};
  auto opt = Optimizer::adam(p, {0.001, 0.9, 0.999, 1e-8});
  opt.step(p, {Eigen::MatrixXd::Constant(1, 1, 5.0)});
  EXPECT_NEAR(p[0](0, 0), -0.001, 1e-11);
}

TEST(Optimizer, RejectsNonFiniteAndMismatchedGrads) {
  Tensors p{Eigen::MatrixXd::Zero(2, 1)};
  auto opt = Optimizer::rmsprop(p);
  Tensors bad{Eigen::MatrixXd::Zero(2, 1)};
  bad[0](1, 0) = std::nan("");
  EXPECT_THROW(opt.step(p, bad), NumericError);
  EXPECT_TRUE(p[0].isZero());
  EXPECT_THROW(opt.step(p, {Eigen::MatrixXd::Zero(3, 1)}), ShapeError);
  EXPECT_THROW(opt.step(p, {}), ShapeError);
}

TEST(Optimizer, DeterministicTrajectories) {
  Rng r1(12);
  Rng r2(12);
  Mlp a(small_arch(), r1);
  Mlp b(small_arch(), r2);
  auto oa = Optimizer::rmsprop(a.params());
  auto ob = Optimizer::rmsprop(b.params());
  Rng data(13);
  for (int i = 0; i < 20; ++i) {
    const Eigen::MatrixXd x = testing::random_matrix(4, 3, data);
    const Eigen::MatrixXd w = testing::random_matrix(2, 3, data);
    oa.step(a.params(), weighted_output(a, a.params(), x, w).second);
    ob.step(b.params(), weighted_output(b, b.params(), x, w).second);
  }
  for (std::size_t k = 0; k < a.params().size(); ++k) EXPECT_EQ(a.params()[k], b.params()[k]);
}

TEST(Checkpoint, RoundTripsNetworksAndOptimizers) {
  Rng rng(14);
  Mlp net({5, 4, {{HeadKind::kLinear, 1}, {HeadKind::kLogSoftmax, 3}}}, rng);
  auto opt = Optimizer::adam(net.params());
  opt.step(net.params(), net.zeros_like());
  Checkpoint ckpt;
  ckpt.meta["note"] = "hello";
  ckpt.add_mlp("net", net);
  ckpt.add_optimizer("opt", opt);
  const auto back = deserialize(serialize(ckpt));
  EXPECT_EQ(back.meta_value("note"), "hello");
  const Mlp net2 = back.get_mlp("net");
  EXPECT_EQ(net2.arch(), net.arch());
  for (std::size_t k = 0; k < net.params().size(); ++k) EXPECT_EQ(net2.params()[k], net.params()[k]);
  auto opt2 = Optimizer::adam(net.params());
  back.restore_optimizer("opt", opt2);
  EXPECT_EQ(opt2.step_count(), 1);
  for (std::size_t k = 0; k < opt.state().size(); ++k) EXPECT_EQ(opt2.state()[k], opt.state()[k]);

  const auto path = std::filesystem::temp_directory_path() / "tatc_ckpt_test.bin";
  save_checkpoint(ckpt, path);
  EXPECT_EQ(serialize(load_checkpoint(path)), serialize(ckpt));
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsCorruptInput) {
  EXPECT_THROW(deserialize("not a checkpoint"), std::runtime_error);
  Checkpoint ckpt;
  ckpt.add("x", Eigen::MatrixXd::Ones(2, 2));
  auto bytes = serialize(ckpt);
  EXPECT_THROW(deserialize(bytes.substr(0, bytes.size() - 3)), std::runtime_error);
  bytes[8] = 99;  // version
  EXPECT_THROW(deserialize(bytes), std::runtime_error);
}

TEST(Checkpoint, ArchitectureText) {
  const Architecture arch{12, 64, {{HeadKind::kLinear, 1}, {HeadKind::kLogSoftmax, 4}}};
  EXPECT_EQ(decode_architecture(encode_architecture(arch)), arch);
  EXPECT_THROW(decode_architecture("12,64,banana:3"), std::runtime_error);
}

}  // namespace
}  // namespace tatc::nn
