#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "tatc/eval.hpp"
#include "tatc/spectral.hpp"

namespace tatc::eval {
namespace {

EvalSettings quick(int updates, std::uint64_t seed = 0) {
  EvalSettings s;
  s.updates = updates;
  s.batch_episodes = 16;
  s.seed = seed;
  return s;
}

TEST(Shaping, Examples) {
  Eigen::MatrixXd phi(3, 2);
  phi << 0, 0, 3, 4, 1, 1;
  EXPECT_EQ(shaped_reward(phi, 0, 0, RewardMode::kSparse), 1.0);
  EXPECT_EQ(shaped_reward(phi, 1, 0, RewardMode::kSparse), 0.0);
  EXPECT_EQ(shaped_reward(phi, 0, 0, RewardMode::kDense), 0.0);
  EXPECT_NEAR(shaped_reward(phi, 1, 0, RewardMode::kDense), -5.0, 1e-12);
  EXPECT_NEAR(shaped_reward(phi, 0, 0, RewardMode::kMix), 0.5, 1e-12);
  EXPECT_NEAR(shaped_reward(phi, 1, 0, RewardMode::kMix), -2.5, 1e-12);
}

TEST(Shaping, DenseIsTranslationInvariantAndMaximalAtGoal) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd phi = testing::random_matrix(12, 2, rng);
    const Eigen::RowVector2d t = testing::random_matrix(1, 2, rng, 10.0);
    const Eigen::MatrixXd shifted = phi.rowwise() + t;
    const int goal = trial % 12;
    for (int s = 0; s < 12; ++s) {
      EXPECT_NEAR(shaped_reward(shifted, s, goal, RewardMode::kDense),
                  shaped_reward(phi, s, goal, RewardMode::kDense), 1e-9);
      if (s != goal) EXPECT_LT(shaped_reward(phi, s, goal, RewardMode::kDense), 0.0);
    }
    EXPECT_TRUE(dense_reward_ties(phi, goal).empty());
  }
}

TEST(Shaping, TiesFlaggedForNonInjectivePhi) {
  Eigen::MatrixXd phi(4, 2);
  phi << 0, 0, 1, 1, 0, 0, 2, 2;
  EXPECT_EQ(dense_reward_ties(phi, 0), (std::vector<int>{2}));
}

TEST(Coverage, Examples) {
  EXPECT_EQ(coverage(std::vector<std::int64_t>{1, 2, 3}), 1.0);
  EXPECT_EQ(coverage(std::vector<std::int64_t>{0, 0, 0, 0}), 0.0);
  EXPECT_EQ(coverage(std::vector<std::int64_t>{}), 0.0);
  Rng rng(2);
  std::vector<std::int64_t> counts(30, 0);
  double previous = 0.0;
  for (int i = 0; i < 200; ++i) {
    ++counts[static_cast<std::size_t>(uniform_index(30, rng))];
    const double now = coverage(counts);
    EXPECT_GE(now, previous);
    previous = now;
  }
}

TEST(Prediction, GoalAtStartIsImmediate) {
  const GridSpec spec = GridSpec::open_room(5, 5);
  TaskSpec task;
  task.goal = {0, 1};
  task.start = StartMode::kStart;
  const GridSpec at_goal = spec.with_start({0, 0}).with_goal({0, 1});
  Rng rng(3);
  const Curve c = eval_prediction(testing::random_matrix(25, 2, rng), at_goal, task, quick(30));
  EXPECT_GT(c.final_reward(5), 0.95);
  EXPECT_GT(c.success.back(), 0.95);
}

TEST(Control, GoalAdjacentReachesNearOne) {
  const GridSpec spec = GridSpec::open_room(5, 5).with_start({2, 2});
  TaskSpec task;
  task.goal = {2, 3};
  task.start = StartMode::kStart;
  Rng rng(4);
  const Curve c = eval_control(testing::random_matrix(25, 2, rng), spec, task, quick(60));
  EXPECT_GT(c.final_reward(5), 0.9);
  for (double r : c.episode_reward) {
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
  }
}

TEST(Eval, SeededRunsAreReproducible) {
  const GridSpec spec = GridSpec::open_room(4, 6);
  Rng rng(5);
  const Eigen::MatrixXd phi = testing::random_matrix(24, 2, rng);
  TaskSpec task;
  task.goal = {3, 5};
  const auto a = eval_prediction(phi, spec, task, quick(5, 9));
  const auto b = eval_prediction(phi, spec, task, quick(5, 9));
  EXPECT_EQ(a.episode_reward, b.episode_reward);
  const auto c = eval_control(phi, spec, task, quick(5, 9));
  const auto d = eval_control(phi, spec, task, quick(5, 9));
  EXPECT_EQ(c.episode_reward, d.episode_reward);
  EXPECT_EQ(c.episode_length, d.episode_length);
}

TEST(Eval, NetworkIsLeftFrozen) {
  const GridSpec spec = GridSpec::open_room(4, 4);
  Rng rng(6);
  const nn::Mlp phi({16, 8, {{nn::HeadKind::kLinear, 2}}}, rng);
  const nn::Tensors before = phi.params();
  TaskSpec task;
  task.goal = {3, 3};
  const Curve c = eval_control(phi, spec, task, quick(3));
  EXPECT_EQ(c.episode_reward.size(), 3u);
  for (std::size_t k = 0; k < before.size(); ++k) EXPECT_EQ(phi.params()[k], before[k]);
}

TEST(Eval, RejectsBadInputs) {
  const GridSpec spec = load_maze("S..\n.#.\n..G\n");
  TaskSpec task = default_task(spec);
  EXPECT_EQ(task.goal, (Cell{2, 2}));
  task.goal = {1, 1};
  EXPECT_THROW(eval_prediction(Eigen::MatrixXd::Zero(8, 2), spec, task, quick(1)), std::invalid_argument);
  task.goal = {2, 2};
  EXPECT_THROW(eval_prediction(Eigen::MatrixXd::Zero(5, 2), spec, task, quick(1)), std::invalid_argument);
  EXPECT_THROW(parse_reward_mode("smooth"), std::invalid_argument);
}

TEST(Prediction, ExactEigenvectorsBeatRandomPhi) {
  const GridSpec spec = GridSpec::open_room(8, 8).with_start({7, 0});
  const auto exact = spectral::eig(spectral::build_graph(spec), 3);
  const Eigen::MatrixXd lap = exact.vectors.middleCols(1, 2) * 8.0;
  TaskSpec task;
  task.goal = {0, 7};
  const auto area = [](const Curve& c) {
    double s = 0.0;
    for (double r : c.episode_reward) s += r;
    return s;
  };
  double lap_total = 0.0;
  double rnd_total = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    const Eigen::MatrixXd rnd = testing::random_matrix(64, 2, rng);
    lap_total += area(eval_prediction(lap, spec, task, quick(60, seed)));
    rnd_total += area(eval_prediction(rnd, spec, task, quick(60, seed)));
  }
  EXPECT_GT(lap_total, rnd_total);
}

}  // namespace
}  // namespace tatc::eval
