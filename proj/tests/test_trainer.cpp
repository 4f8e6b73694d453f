#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tatc/trainer.hpp"

namespace tatc {
namespace {

namespace fs = std::filesystem;

RunConfig small(std::string env = "room-5", std::vector<std::pair<std::string, std::string>> extra = {}) {
  std::vector<std::pair<std::string, std::string>> entries{
      {"hidden", "12"}, {"N", "6"}, {"updates_per_epoch", "2"}, {"epochs", "3"}};
  entries.insert(entries.end(), extra.begin(), extra.end());
  return resolve_config(env, entries);
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tatc_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Trainer, SingleCellMaze) {
  RunConfig cfg = small("room-1", {{"epochs", "1"}});
  const TrainResult r = train(cfg);
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.coverage, 1.0);
  EXPECT_TRUE(std::isfinite(r.history[0].repr_loss));
  EXPECT_TRUE(r.embedding.allFinite());
}

TEST(Collect, AllWalksWhenPrwIsOne) {
  Trainer t(small("room-5", {{"p_rw", "1"}}));
  const auto data = t.collect_iteration();
  EXPECT_TRUE(data.sequences.empty());
  EXPECT_EQ(data.walks.size(), static_cast<std::size_t>(6 * t.config().L));
  for (const auto& w : data.walks) EXPECT_EQ(w.states.size(), static_cast<std::size_t>(t.config().c + 1));
  EXPECT_EQ(t.env_steps(), 6 * t.config().K);
}

TEST(Collect, AllSkillsWhenPrwIsZero) {
  Trainer t(small("room-5", {{"p_rw", "0"}}));
  const auto data = t.collect_iteration();
  EXPECT_TRUE(data.walks.empty());
  EXPECT_EQ(data.skill_count(), static_cast<std::size_t>(6 * t.config().L));
  for (const auto& seq : data.sequences) {
    ASSERT_EQ(seq.skills.size(), static_cast<std::size_t>(t.config().L));
    for (std::size_t l = 1; l < seq.skills.size(); ++l) {
      EXPECT_EQ(seq.skills[l].start_state(), seq.skills[l - 1].final_state());  // chained
    }
  }
  // No random walks means no contrastive pairs; the update must still run.
  EXPECT_NO_THROW(t.run_iteration());
}

TEST(Collect, WalkFractionMatchesPrw) {
  Trainer t(small("room-5", {{"p_rw", "0.4"}, {"N", "1000"}, {"c", "1"}, {"L", "1"}, {"K", "1"}}));
  const auto data = t.collect_iteration();
  EXPECT_NEAR(data.walk_blocks / 1000.0, 0.4, 0.03);
  EXPECT_EQ(data.walk_blocks + data.skill_blocks, 1000);
}

TEST(Collect, UniformPriorRedrawsEveryBlock) {
  Trainer t(small("room-5", {{"prior", "uniform"}, {"objective", "lap"}}));
  const auto data = t.collect_iteration();
  EXPECT_EQ(data.resets, 6);
}

TEST(Collect, BuffersStartEmptyEachIteration) {
  Trainer t(small("room-5", {{"p_rw", "0.5"}}));
  const auto a = t.collect_iteration();
  const auto b = t.collect_iteration();
  EXPECT_EQ(a.walk_blocks + a.skill_blocks, 6);
  EXPECT_EQ(b.walk_blocks + b.skill_blocks, 6);
  EXPECT_EQ(b.walks.size() + b.skill_count(), static_cast<std::size_t>(6 * t.config().L));
}

TEST(Trainer, PoliciesUpdateBeforePhi) {
  Trainer t(small());
  std::vector<Phase> seen;
  t.set_phase_hook([&](Phase p, const Trainer&) { seen.push_back(p); });
  t.run_iteration();
  t.run_iteration();
  EXPECT_EQ(seen, (std::vector<Phase>{Phase::kCollect, Phase::kPolicyUpdate, Phase::kPhiUpdate, Phase::kCollect,
                                      Phase::kPolicyUpdate, Phase::kPhiUpdate}));
  EXPECT_EQ(t.iteration(), 2);
}

TEST(Trainer, PhiUntouchedDuringPolicyPhase) {
  Trainer t(small("room-5", {{"p_rw", "0"}}));
  nn::Tensors at_collect;
  nn::Tensors at_phi;
  t.set_phase_hook([&](Phase p, const Trainer& tr) {
    if (p == Phase::kCollect) at_collect = tr.phi().params();
    if (p == Phase::kPhiUpdate) at_phi = tr.phi().params();
  });
  t.run_iteration();
  for (std::size_t k = 0; k < at_collect.size(); ++k) EXPECT_EQ(at_collect[k], at_phi[k]);
  EXPECT_NE(t.phi().params()[0], at_phi[0]);
}

TEST(Trainer, CoverageIsMonotone) {
  const TrainResult r = train(small("room-10", {{"epochs", "6"}}));
  for (std::size_t e = 1; e < r.history.size(); ++e) {
    EXPECT_GE(r.history[e].coverage, r.history[e - 1].coverage);
    EXPECT_LE(r.history[e].epoch_coverage, r.history[e].coverage);
  }
}

TEST(Trainer, SameSeedSameMetricsFile) {
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  train(small("room-5", {{"out_dir", a.string()}, {"seed", "3"}}));
  train(small("room-5", {{"out_dir", b.string()}, {"seed", "3"}}));
  const std::string ma = slurp(a / "metrics.csv");
  std::string mb = slurp(b / "metrics.csv");
  // The provenance header names the output directory; compare the data rows.
  EXPECT_EQ(ma.substr(ma.find("seed,epoch")), mb.substr(mb.find("seed,epoch")));
  EXPECT_EQ(slurp(a / "seed_3" / "embeddings_3.json"), slurp(b / "seed_3" / "embeddings_3.json"));
}

TEST(Trainer, ResumeIsBitExact) {
  const RunConfig full_cfg = small("room-5", {{"epochs", "4"}, {"seed", "5"}, {"baseline", "value"}});
  Trainer straight(full_cfg);
  for (int e = 0; e < 4; ++e) straight.run_epoch();

  Trainer first(full_cfg);
  first.run_epoch();
  first.run_epoch();
  const auto bytes = nn::serialize(first.checkpoint());
  Trainer resumed = Trainer::from_checkpoint(nn::deserialize(bytes));
  EXPECT_EQ(resumed.epoch(), 2);
  resumed.run_epoch();
  resumed.run_epoch();

  EXPECT_EQ(resumed.embedding_table(), straight.embedding_table());
  EXPECT_EQ(resumed.visit_counts(), straight.visit_counts());
  EXPECT_EQ(resumed.env_state(), straight.env_state());
  EXPECT_EQ(resumed.pi_low().policy.params(), straight.pi_low().policy.params());
  EXPECT_EQ(resumed.pi_high().value->params(), straight.pi_high().value->params());
}

TEST(Trainer, SnapshotFromCheckpointMatches) {
  const fs::path dir = fresh_dir("snap");
  train(small("room-5", {{"out_dir", dir.string()}, {"epochs", "4"}, {"checkpoint_every", "2"},
                         {"snapshot_every", "2"}}));
  const fs::path seed = dir / "seed_0";
  const fs::path again = fresh_dir("snap_resume");
  resume(seed / "checkpoint_2.bin", again.string());
  EXPECT_EQ(slurp(seed / "embeddings_4.json"), slurp(again / "seed_0" / "embeddings_4.json"));
}

TEST(Artifacts, SnapshotsCheckpointsAndCsv) {
  const fs::path dir = fresh_dir("artifacts");
  train(small("room-5", {{"out_dir", dir.string()}, {"epochs", "6"}, {"snapshot_every", "2"},
                         {"checkpoint_every", "3"}, {"seed", "1"}}));
  train(small("room-5", {{"out_dir", dir.string()}, {"epochs", "6"}, {"snapshot_every", "2"},
                         {"checkpoint_every", "3"}, {"seed", "2"}}));
  const fs::path seed = dir / "seed_1";
  int snapshots = 0;
  int checkpoints = 0;
  int skills = 0;
  for (const auto& entry : fs::directory_iterator(seed)) {
    const std::string name = entry.path().filename().string();
    snapshots += name.starts_with("embeddings_") ? 1 : 0;
    checkpoints += name.starts_with("checkpoint_") ? 1 : 0;
    skills += name.starts_with("skills_n8_") ? 1 : 0;
  }
  EXPECT_EQ(snapshots, 4);  // epochs 0, 2, 4, 6
  EXPECT_EQ(checkpoints, 2);
  EXPECT_EQ(skills, 1);
  EXPECT_TRUE(fs::exists(seed / "run.json"));

  std::ifstream csv(dir / "metrics.csv");
  int headers = 0;
  std::set<std::string> seeds;
  for (std::string line; std::getline(csv, line);) {
    if (line.empty() || line[0] == '#') continue;
    if (line == "seed,epoch,metric,value") {
      ++headers;
      continue;
    }
    seeds.insert(line.substr(0, line.find(',')));
  }
  EXPECT_EQ(headers, 1);
  EXPECT_EQ(seeds, (std::set<std::string>{"1", "2"}));

  const auto records = snapshot_embeddings(Trainer(small()).phi(), builtin_maze("room-5"));
  EXPECT_EQ(records.size(), 25u);
}

TEST(Artifacts, ZeroPhiSnapshotIsConstant) {
  const GridSpec spec = GridSpec::open_room(3, 3);
  const auto records = snapshot_embeddings(nn::Mlp::zeros({9, 4, {{nn::HeadKind::kLinear, 2}}}), spec);
  for (const auto& r : records) EXPECT_EQ(r.phi, records.front().phi);
}

TEST(Trainer, NonFiniteLossDumpsDiagnostics) {
  const fs::path dir = fresh_dir("nan");
  RunConfig cfg = small("room-5", {{"out_dir", dir.string()}, {"lr", "1e200"}, {"epochs", "50"}});
  EXPECT_THROW(train(cfg), nn::NumericError);
  bool dumped = false;
  for (const auto& entry : fs::directory_iterator(dir / "seed_0")) {
    dumped = dumped || entry.path().filename().string().starts_with("diagnostic_iter");
  }
  EXPECT_TRUE(dumped);
}

}  // namespace
}  // namespace tatc
