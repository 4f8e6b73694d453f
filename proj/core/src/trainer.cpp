#include "tatc/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tatc/spectral.hpp"

namespace tatc {

namespace fs = std::filesystem;

std::size_t IterationData::skill_count() const {
  std::size_t n = 0;
  for (const auto& seq : sequences) n += seq.skills.size();
  return n;
}

std::vector<std::pair<std::string, double>> EpochMetrics::named() const {
  return {
      {"coverage", coverage},
      {"epoch_coverage", epoch_coverage},
      {"repr_loss", repr_loss},
      {"cont_loss", cont},
      {"boredom", boredom},
      {"low_reward", low_reward},
      {"high_reward", high_reward},
      {"low_entropy", low_entropy},
      {"high_entropy", high_entropy},
      {"rw_fraction", rw_fraction},
      {"resets", resets},
      {"dynamics_awareness", dynamics_awareness},
      {"awareness_degenerate", awareness_degenerate ? 1.0 : 0.0},
  };
}

std::vector<EmbeddingRecord> snapshot_embeddings(const nn::Mlp& phi, const GridSpec& spec) {
  const Eigen::MatrixXd emb = objectives::embed_all(phi);
  const auto bfs = spectral::bfs_distances(spec, spec.start());
  std::vector<EmbeddingRecord> out;
  out.reserve(static_cast<std::size_t>(spec.onehot_dim()));
  for (int i = 0; i < spec.onehot_dim(); ++i) {
    EmbeddingRecord r;
    r.cell = spec.cell_at(i);
    r.phi.assign(emb.col(i).data(), emb.col(i).data() + emb.rows());
    r.bfs = bfs[static_cast<std::size_t>(i)];
    out.push_back(std::move(r));
  }
  return out;
}

std::string embeddings_json(const std::vector<EmbeddingRecord>& records) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["row"] = r.cell.row;
    j["col"] = r.cell.col;
    j["phi"] = r.phi;
    j["bfs"] = r.bfs;
    arr.push_back(std::move(j));
  }
  return arr.dump();
}

std::string provenance_header(const RunConfig& cfg) {
  std::string out;
  std::istringstream in(to_kv_text(cfg));
  for (std::string line; std::getline(in, line);) out += "# " + line + "\n";
  return out;
}

Trainer::Trainer(RunConfig cfg)
    : cfg_(std::move(cfg)),
      spec_((validate(cfg_), load_env(cfg_))),
      directions_(skills::make_directions(cfg_.n_directions)),
      bfs_(spectral::bfs_distances(spec_, spec_.start())),
      rng_(cfg_.seed),
      low_table_(spec_.onehot_dim(), cfg_.n_directions),
      state_(spec_.start()),
      visits_(static_cast<std::size_t>(spec_.onehot_dim()), 0),
      epoch_visits_(static_cast<std::size_t>(spec_.onehot_dim()), 0) {
  const nn::RmsPropSettings rms{cfg_.lr, cfg_.rms_decay, cfg_.rms_eps};
  phi_ = nn::Mlp({spec_.onehot_dim(), cfg_.hidden, {{nn::HeadKind::kLinear, cfg_.d}}}, rng_);
  phi_opt_ = nn::Optimizer::rmsprop(phi_.params(), rms);
  const bool value = cfg_.baseline == BaselineChoice::kValue;
  high_ = skills::PolicyLearner::make(
      skills::high_architecture(spec_, cfg_.n_directions, cfg_.hidden), rng_, rms, value);
  low_ = skills::PolicyLearner::make(skills::low_architecture(spec_, cfg_.hidden), rng_, rms, value);
  visit(state_);
}

void Trainer::visit(Cell c) {
  const auto i = static_cast<std::size_t>(spec_.index_of(c));
  ++visits_[i];
  ++epoch_visits_[i];
}

double Trainer::coverage() const {
  const auto seen = std::count_if(visits_.begin(), visits_.end(), [](auto v) { return v > 0; });
  return static_cast<double>(seen) / static_cast<double>(visits_.size());
}

IterationData Trainer::collect_iteration() {
  IterationData data;
  low_table_.clear();
  const bool use_skills = cfg_.objective == Objective::kTatc;
  const std::int64_t block = static_cast<std::int64_t>(cfg_.L) * cfg_.c;
  for (int n = 0; n < cfg_.N; ++n) {
    if (cfg_.prior == Prior::kUniform) {
      state_ = spec_.cell_at(uniform_index(spec_.onehot_dim(), rng_));
      ++data.resets;
    } else if (reset_gate(env_steps_, cfg_.K, cfg_.p_r, rng_)) {
      state_ = spec_.start();
      ++data.resets;
    }
    visit(state_);
    const bool walk = !use_skills || uniform_unit(rng_) < cfg_.p_rw;
    if (walk) {
      ++data.walk_blocks;
      for (int l = 0; l < cfg_.L; ++l) {
        Trajectory tr = random_walk(spec_, state_, cfg_.c, rng_);
        for (std::size_t t = 1; t < tr.states.size(); ++t) visit(tr.states[t]);
        state_ = tr.states.back();
        data.walks.push_back(std::move(tr));
      }
    } else {
      ++data.skill_blocks;
      skills::HighLevelEpisode ep;
      for (int l = 0; l < cfg_.L; ++l) {
        const auto input = skills::high_input(spec_, state_);
        const int k = skills::sample_categorical(high_.policy.forward_one(input), rng_);
        auto rec = skills::rollout_skill(low_.policy, spec_, directions_[static_cast<std::size_t>(k)],
                                         state_, cfg_.c, rng_, &low_table_);
        const auto& states = rec.trajectory.states;
        for (std::size_t t = 1; t < states.size(); ++t) visit(states[t]);
        state_ = rec.final_state();
        ep.skills.push_back(std::move(rec));
      }
      data.sequences.push_back(std::move(ep));
    }
    env_steps_ += block;
  }
  return data;
}

void Trainer::update_policies(const IterationData& data, IterationStats& stats) {
  if (data.sequences.empty()) return;
  const Eigen::MatrixXd emb = objectives::embed_all(phi_);
  const auto col = [&](Cell c) { return emb.col(spec_.index_of(c)); };

  std::vector<skills::Episode> low_eps;
  std::vector<skills::Episode> high_eps;
  double low_sum = 0.0;
  std::size_t low_count = 0;
  double high_sum = 0.0;
  for (const auto& seq : data.sequences) {
    skills::Episode hi;
    for (const auto& rec : seq.skills) {
      const auto& states = rec.trajectory.states;
      const auto& actions = rec.trajectory.actions;
      skills::Episode lo;
      lo.steps.reserve(actions.size());
      lo.rewards.reserve(actions.size());
      for (std::size_t t = 0; t < actions.size(); ++t) {
        lo.steps.push_back({skills::low_input(spec_, states[t], rec.direction),
                            static_cast<int>(actions[t])});
        const double r = skills::skill_reward(col(states[t]), col(states[t + 1]), rec.direction);
        lo.rewards.push_back(r);
        low_sum += r;
      }
      low_count += actions.size();
      low_eps.push_back(std::move(lo));
      hi.steps.push_back({skills::high_input(spec_, rec.start_state()), rec.direction.index});
      hi.rewards.push_back(0.0);
    }
    // Every choice of the sequence earns the same distance under gamma = 1.
    const double r = skills::high_reward(col(seq.first_state()), col(seq.final_state()));
    hi.rewards.back() = r;
    high_sum += r;
    high_eps.push_back(std::move(hi));
  }

  const auto baseline = cfg_.baseline == BaselineChoice::kValue ? skills::BaselineKind::kLearnedValue
                                                                : skills::BaselineKind::kBatchMean;
  skills::A2cStats low_stats;
  skills::A2cStats high_stats;
  try {
    low_stats = skills::a2c_update(low_, low_eps, {cfg_.entropy_low, 1.0, baseline});
    high_stats = skills::a2c_update(high_, high_eps, {cfg_.entropy_high, 1.0, baseline});
  } catch (const nn::NumericError& e) {
    fail_non_finite(std::string("policy update: ") + e.what(), nullptr);
  }
  stats.low_reward = low_count > 0 ? low_sum / static_cast<double>(low_count) : 0.0;
  stats.high_reward = high_sum / static_cast<double>(data.sequences.size());
  stats.low_entropy = low_stats.mean_entropy;
  stats.high_entropy = high_stats.mean_entropy;
}

objectives::ReprBatch Trainer::make_batch(const IterationData& data) {
  objectives::ReprBatch batch;
  batch.beta = cfg_.beta;
  batch.beta_boredom = cfg_.beta_boredom;
  std::vector<int> buffer;
  for (const auto& tr : data.walks) {
    for (std::size_t t = 0; t < tr.states.size(); ++t) {
      const int i = spec_.index_of(tr.states[t]);
      buffer.push_back(i);
      if (t + 1 < tr.states.size()) batch.positives.push_back({i, spec_.index_of(tr.states[t + 1])});
    }
  }
  if (!buffer.empty()) {
    const int m = static_cast<int>(buffer.size());
    batch.negatives.reserve(batch.positives.size());
    for (std::size_t k = 0; k < batch.positives.size(); ++k) {
      const int u = buffer[static_cast<std::size_t>(uniform_index(m, rng_))];
      const int v = buffer[static_cast<std::size_t>(uniform_index(m, rng_))];
      batch.negatives.push_back({u, v});
    }
  }
  for (const auto& seq : data.sequences) {
    for (const auto& rec : seq.skills) {
      auto& path = batch.skill_paths.emplace_back();
      for (const Cell c : rec.trajectory.states) path.push_back(spec_.index_of(c));
    }
  }
  return batch;
}

void Trainer::update_phi(const IterationData& data, IterationStats& stats) {
  const auto batch = make_batch(data);
  const bool lap = cfg_.objective == Objective::kLap;
  if (batch.positives.empty() && (lap || batch.skill_paths.empty())) return;

  // Component values for the logs, from the parameters being updated.
  const Eigen::MatrixXd emb = objectives::embed_all(phi_);
  if (!batch.positives.empty()) {
    stats.cont = lap ? objectives::lap_loss(emb, batch).value : objectives::cont_loss(emb, batch).value;
  }
  stats.boredom = objectives::boredom(emb, batch).value;

  const auto result = lap ? objectives::lap_loss(phi_, batch) : objectives::tatc_loss(phi_, batch);
  stats.repr_loss = result.value;
  if (!std::isfinite(result.value) || !nn::all_finite(result.grads)) {
    fail_non_finite("representation loss", &batch);
  }
  try {
    phi_opt_.step(phi_.params(), result.grads);
  } catch (const nn::NumericError& e) {
    fail_non_finite(e.what(), &batch);
  }
}

void Trainer::fail_non_finite(const std::string& what, const objectives::ReprBatch* batch) {
  std::ostringstream msg;
  msg << "non-finite " << what << " at iteration " << iteration_ << " (epoch " << epoch_
      << ", seed " << cfg_.seed << ")";
  if (!cfg_.out_dir.empty()) {
    const fs::path dir = fs::path(cfg_.out_dir) / ("seed_" + std::to_string(cfg_.seed));
    fs::create_directories(dir);
    const fs::path stem = dir / ("diagnostic_iter" + std::to_string(iteration_));
    nn::save_checkpoint(checkpoint(), stem.string() + ".bin");
    std::ofstream txt(stem.string() + ".txt");
    txt << provenance_header(cfg_) << msg.str() << "\n";
    if (batch != nullptr) {
      txt << "positives " << batch->positives.size() << "\nnegatives " << batch->negatives.size()
          << "\nskill_paths " << batch->skill_paths.size() << "\n";
    }
    txt << "phi_finite " << nn::all_finite(phi_.params()) << "\n";
    msg << "; diagnostics in " << stem.string() << ".{bin,txt}";
  }
  throw nn::NumericError(msg.str());
}

IterationStats Trainer::run_iteration() {
  IterationStats stats;
  if (hook_) hook_(Phase::kCollect, *this);
  const IterationData data = collect_iteration();
  stats.walk_blocks = data.walk_blocks;
  stats.skill_blocks = data.skill_blocks;
  stats.resets = data.resets;
  if (hook_) hook_(Phase::kPolicyUpdate, *this);
  update_policies(data, stats);
  if (hook_) hook_(Phase::kPhiUpdate, *this);
  update_phi(data, stats);
  ++iteration_;
  return stats;
}

Eigen::MatrixXd Trainer::embedding_table() const {
  return objectives::embed_all(phi_).transpose();
}

EpochMetrics Trainer::run_epoch() {
  std::fill(epoch_visits_.begin(), epoch_visits_.end(), 0);
  EpochMetrics m;
  int blocks = 0;
  int walk_blocks = 0;
  for (int u = 0; u < cfg_.updates_per_epoch; ++u) {
    const IterationStats s = run_iteration();
    m.repr_loss += s.repr_loss;
    m.cont += s.cont;
    m.boredom += s.boredom;
    m.low_reward += s.low_reward;
    m.high_reward += s.high_reward;
    m.low_entropy += s.low_entropy;
    m.high_entropy += s.high_entropy;
    m.resets += s.resets;
    blocks += s.walk_blocks + s.skill_blocks;
    walk_blocks += s.walk_blocks;
  }
  const double inv = 1.0 / cfg_.updates_per_epoch;
  m.repr_loss *= inv;
  m.cont *= inv;
  m.boredom *= inv;
  m.low_reward *= inv;
  m.high_reward *= inv;
  m.low_entropy *= inv;
  m.high_entropy *= inv;
  m.resets *= inv;
  m.rw_fraction = blocks > 0 ? static_cast<double>(walk_blocks) / blocks : 0.0;
  ++epoch_;
  m.epoch = epoch_;
  m.coverage = coverage();
  const auto seen =
      std::count_if(epoch_visits_.begin(), epoch_visits_.end(), [](auto v) { return v > 0; });
  m.epoch_coverage = static_cast<double>(seen) / static_cast<double>(epoch_visits_.size());
  const auto aware =
      spectral::dynamics_awareness(embedding_table(), bfs_, spec_.index_of(spec_.start()));
  m.dynamics_awareness = aware.rho;
  m.awareness_degenerate = aware.degenerate;
  return m;
}

nn::Checkpoint Trainer::checkpoint() const {
  nn::Checkpoint ckpt;
  ckpt.meta["config"] = to_kv_text(cfg_);
  std::ostringstream rng;
  rng << rng_;
  ckpt.meta["rng"] = rng.str();
  ckpt.meta["state"] = std::to_string(state_.row) + "," + std::to_string(state_.col);
  ckpt.meta["env_steps"] = std::to_string(env_steps_);
  ckpt.meta["iteration"] = std::to_string(iteration_);
  ckpt.meta["epoch"] = std::to_string(epoch_);
  ckpt.add_mlp("phi", phi_);
  ckpt.add_optimizer("phi_opt", phi_opt_);
  for (const auto& [name, learner] : {std::pair{"pi_high", &high_}, std::pair{"pi_low", &low_}}) {
    const std::string n(name);
    ckpt.add_mlp(n, learner->policy);
    ckpt.add_optimizer(n + "_opt", learner->optimizer);
    if (learner->value) {
      ckpt.add_mlp(n + "_value", *learner->value);
      ckpt.add_optimizer(n + "_value_opt", *learner->value_optimizer);
    }
  }
  Eigen::MatrixXd visits(static_cast<Eigen::Index>(visits_.size()), 1);
  for (std::size_t i = 0; i < visits_.size(); ++i) visits(static_cast<Eigen::Index>(i), 0) = static_cast<double>(visits_[i]);
  ckpt.add("visits", std::move(visits));
  return ckpt;
}

Trainer Trainer::from_checkpoint(const nn::Checkpoint& ckpt) {
  const auto entries = parse_config_text(ckpt.meta_value("config"));
  Trainer t(resolve_config("u-maze", entries));
  std::istringstream rng(ckpt.meta_value("rng"));
  rng >> t.rng_;
  if (!rng) throw std::runtime_error("checkpoint: bad rng state");
  const auto& st = ckpt.meta_value("state");
  const auto comma = st.find(',');
  t.state_ = {std::stoi(st.substr(0, comma)), std::stoi(st.substr(comma + 1))};
  t.env_steps_ = std::stoll(ckpt.meta_value("env_steps"));
  t.iteration_ = std::stoll(ckpt.meta_value("iteration"));
  t.epoch_ = std::stoi(ckpt.meta_value("epoch"));
  t.phi_ = ckpt.get_mlp("phi");
  ckpt.restore_optimizer("phi_opt", t.phi_opt_);
  for (auto& [name, learner] : {std::pair{"pi_high", &t.high_}, std::pair{"pi_low", &t.low_}}) {
    const std::string n(name);
    learner->policy = ckpt.get_mlp(n);
    ckpt.restore_optimizer(n + "_opt", learner->optimizer);
    if (learner->value) {
      learner->value = ckpt.get_mlp(n + "_value");
      ckpt.restore_optimizer(n + "_value_opt", *learner->value_optimizer);
    }
  }
  const Eigen::MatrixXd& visits = ckpt.get("visits");
  if (visits.rows() != static_cast<Eigen::Index>(t.visits_.size())) {
    throw std::runtime_error("checkpoint: visit table does not match the maze");
  }
  for (std::size_t i = 0; i < t.visits_.size(); ++i) {
    t.visits_[i] = static_cast<std::int64_t>(visits(static_cast<Eigen::Index>(i), 0));
  }
  return t;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string run_json(const Trainer& t) {
  nlohmann::ordered_json j;
  j["seed"] = t.config().seed;
  j["config"] = nlohmann::json::parse(to_json_text(t.config()));
  j["maze"] = t.spec().to_ascii();
  j["onehot_dim"] = t.spec().onehot_dim();
  j["embedding_schema"] = "[{row, col, phi:[...], bfs}]";
  return j.dump(1);
}

TrainResult drive(Trainer& t) {
  const RunConfig& cfg = t.config();
  TrainResult result;
  fs::path seed_dir;
  std::ofstream csv;
  if (!cfg.out_dir.empty()) {
    seed_dir = fs::path(cfg.out_dir) / ("seed_" + std::to_string(cfg.seed));
    fs::create_directories(seed_dir);
    write_text(seed_dir / "run.json", run_json(t));
    const fs::path csv_path = fs::path(cfg.out_dir) / "metrics.csv";
    const bool fresh = !fs::exists(csv_path) || fs::file_size(csv_path) == 0;
    csv.open(csv_path, std::ios::app);
    csv << provenance_header(cfg);
    if (fresh) csv << "seed,epoch,metric,value\n";
    if (t.epoch() == 0) {
      write_text(seed_dir / "embeddings_0.json", embeddings_json(snapshot_embeddings(t.phi(), t.spec())));
    }
  }
  csv.precision(17);
  while (t.epoch() < cfg.epochs) {
    EpochMetrics m = t.run_epoch();
    if (csv.is_open()) {
      for (const auto& [name, value] : m.named()) {
        csv << cfg.seed << ',' << m.epoch << ',' << name << ',' << value << '\n';
      }
      csv.flush();
      if (cfg.snapshot_every > 0 && m.epoch % cfg.snapshot_every == 0) {
        write_text(seed_dir / ("embeddings_" + std::to_string(m.epoch) + ".json"),
                   embeddings_json(snapshot_embeddings(t.phi(), t.spec())));
      }
      if (cfg.checkpoint_every > 0 && m.epoch % cfg.checkpoint_every == 0) {
        nn::save_checkpoint(t.checkpoint(), seed_dir / ("checkpoint_" + std::to_string(m.epoch) + ".bin"));
      }
    }
    result.history.push_back(m);
  }
  if (!seed_dir.empty()) {
    const std::string final_name = "embeddings_" + std::to_string(t.epoch()) + ".json";
    if (!fs::exists(seed_dir / final_name)) {
      write_text(seed_dir / final_name, embeddings_json(snapshot_embeddings(t.phi(), t.spec())));
    }
    const fs::path final_ckpt = seed_dir / ("checkpoint_" + std::to_string(t.epoch()) + ".bin");
    if (!fs::exists(final_ckpt)) nn::save_checkpoint(t.checkpoint(), final_ckpt);
    if (cfg.objective == Objective::kTatc) {
      // Skills are keyed by direction count and the phi they were trained against.
      nn::Checkpoint phi_only;
      phi_only.add_mlp("phi", t.phi());
      char hash[17];
      std::snprintf(hash, sizeof hash, "%016llx",
                    static_cast<unsigned long long>(nn::fnv1a64(nn::serialize(phi_only))));
      nn::Checkpoint skill_ckpt;
      skill_ckpt.meta["config"] = to_kv_text(cfg);
      skill_ckpt.meta["phi_hash"] = hash;
      skill_ckpt.add_mlp("pi_low", t.pi_low().policy);
      skill_ckpt.add_mlp("pi_high", t.pi_high().policy);
      nn::save_checkpoint(skill_ckpt, seed_dir / ("skills_n" + std::to_string(cfg.n_directions) + "_" +
                                                  hash + ".bin"));
    }
  }
  result.embedding = t.embedding_table();
  result.coverage = t.coverage();
  return result;
}

}  // namespace

TrainResult train(const RunConfig& cfg) {
  Trainer t(cfg);
  return drive(t);
}

TrainResult resume(const fs::path& checkpoint_path, const std::string& out_dir) {
  const auto ckpt = nn::load_checkpoint(checkpoint_path);
  auto entries = parse_config_text(ckpt.meta_value("config"));
  if (!out_dir.empty()) entries.emplace_back("out_dir", out_dir);
  nn::Checkpoint patched = ckpt;
  patched.meta["config"] = to_kv_text(resolve_config("u-maze", entries));
  Trainer t = Trainer::from_checkpoint(patched);
  return drive(t);
}

}  // namespace tatc
