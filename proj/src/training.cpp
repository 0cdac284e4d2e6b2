#include "insert/training.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "insert/checkpoint.hpp"
#include "insert/errors.hpp"
#include "insert/evaluation.hpp"

using nlohmann::json;

namespace insert {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (epsilon <= 0.0) throw ConfigError("adam epsilon must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (gradient_clip_norm < 0.0) throw ConfigError("gradient_clip_norm must be >= 0");
}

std::vector<std::vector<TrainInstance>> make_batches(const SessionDataset& ds,
                                                     std::size_t batch_size, Rng& rng) {
  // per-user instance queues, shuffled
  std::vector<std::vector<TrainInstance>> queues(ds.users.size());
  for (std::size_t u = 0; u < ds.users.size(); ++u) {
    for (int sid : ds.user_sessions(static_cast<int>(u), Split::train)) {
      const Session& s = ds.at(sid);
      for (std::size_t pos = 1; pos < s.items.size(); ++pos) {
        queues[u].push_back(TrainInstance{static_cast<int>(u), sid, static_cast<int>(pos)});
      }
    }
    rng.shuffle(queues[u]);
  }

  std::vector<int> active;
  for (std::size_t u = 0; u < queues.size(); ++u) {
    if (!queues[u].empty()) active.push_back(static_cast<int>(u));
  }

  std::vector<std::vector<TrainInstance>> batches;
  std::vector<TrainInstance> batch;
  while (!active.empty()) {
    // one instance per distinct user per round; rounds repeat within a batch
    // only when fewer users remain than slots
    rng.shuffle(active);
    std::vector<int> still;
    for (int u : active) {
      auto& q = queues[static_cast<std::size_t>(u)];
      batch.push_back(q.back());
      q.pop_back();
      if (!q.empty()) still.push_back(u);
      if (batch.size() == batch_size) {
        batches.push_back(std::move(batch));
        batch.clear();
      }
    }
    active = std::move(still);
  }
  if (!batch.empty()) batches.push_back(std::move(batch));
  return batches;
}

void TrainState::init_moments(const ParameterStore& params) {
  m.clear();
  v.clear();
  for (std::size_t i = 0; i < params.count(); ++i) {
    m.emplace_back(params.entry(static_cast<int>(i)).value.shape());
    v.emplace_back(params.entry(static_cast<int>(i)).value.shape());
  }
}

void adam_step(ParameterStore& params, TrainState& state, const TrainConfig& cfg) {
  for (std::size_t i = 0; i < params.count(); ++i) {
    const auto& e = params.entry(static_cast<int>(i));
    if (!e.grad.all_finite()) {
      throw NumericError("non-finite gradient in parameter '" + e.name + "'");
    }
  }

  double scale = 1.0;
  if (cfg.gradient_clip_norm > 0.0) {
    const double norm = params.grad_norm();
    if (norm > cfg.gradient_clip_norm) scale = cfg.gradient_clip_norm / norm;
  }

  ++state.adam_t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.adam_t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.adam_t));
  for (std::size_t i = 0; i < params.count(); ++i) {
    auto& e = params.entry(static_cast<int>(i));
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < e.value.size(); ++j) {
      const double g = e.grad[j] * scale;
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      e.value[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
    m.quantize();
    v.quantize();
    e.value.quantize();
  }
}

TrainConfig train_config_from_manifest(const std::string& manifest_text) {
  const json t = json::parse(manifest_text).at("train");
  TrainConfig cfg;
  cfg.batch_size = t.at("batch_size").get<std::size_t>();
  cfg.learning_rate = t.at("learning_rate").get<double>();
  cfg.beta1 = t.at("beta1").get<double>();
  cfg.beta2 = t.at("beta2").get<double>();
  cfg.epsilon = t.at("epsilon").get<double>();
  cfg.max_epochs = t.at("max_epochs").get<std::size_t>();
  cfg.patience = t.at("patience").get<std::size_t>();
  cfg.seed = t.at("seed").get<std::uint64_t>();
  cfg.gradient_clip_norm = t.at("gradient_clip_norm").get<double>();
  cfg.candidates.n_similar = t.at("n_similar").get<std::size_t>();
  cfg.candidates.max_candidate_sessions = t.at("max_candidate_sessions").get<std::size_t>();
  return cfg;
}

Trainer::Trainer(const SessionDataset& ds, Model& model, TrainConfig cfg, std::string out_dir,
                 std::string dataset_hash, const SimilarUserTable* table)
    : ds_(ds),
      model_(model),
      cfg_(cfg),
      out_dir_(std::move(out_dir)),
      dataset_hash_(std::move(dataset_hash)),
      table_(table ? *table : SimilarUserTable(ds, cfg.candidates.n_similar)) {
  cfg_.validate();
  std::filesystem::create_directories(out_dir_);
}

double Trainer::run_epoch(const std::vector<std::vector<TrainInstance>>& batches,
                          TrainState& state, Rng& rng) {
  double loss_sum = 0.0;
  std::size_t count = 0;
  for (const auto& batch : batches) {
    model_.params().zero_grads();
    for (const TrainInstance& inst : batch) {
      const Session& s = ds_.at(inst.session_id);
      std::vector<int> context(s.items.begin(),
                               s.items.begin() + static_cast<std::ptrdiff_t>(inst.target_pos));
      CandidateSets cands =
          build_candidate_sets(ds_, table_, inst.user, s.ordinal, cfg_.candidates);
      ForwardTrace trace = model_.forward(materialize(ds_, context, cands), true, &rng);
      Tape::ValueId loss = model_.loss(trace, s.items[static_cast<std::size_t>(inst.target_pos)]);
      loss_sum += trace.tape.value(loss)[0];
      ++count;
      // mean batch loss: scale each instance before backward
      trace.tape.backward(trace.tape.affine(loss, 1.0 / static_cast<double>(batch.size()), 0.0));
    }
    adam_step(model_.params(), state, cfg_);
    ++state.step;
  }
  return count > 0 ? loss_sum / static_cast<double>(count) : 0.0;
}

std::string Trainer::manifest_with_state(const TrainState* state) const {
  json j = json::parse(model_manifest(model_.config(), dataset_hash_));
  j["train"] = json{{"batch_size", cfg_.batch_size},
                    {"learning_rate", cfg_.learning_rate},
                    {"beta1", cfg_.beta1},
                    {"beta2", cfg_.beta2},
                    {"epsilon", cfg_.epsilon},
                    {"max_epochs", cfg_.max_epochs},
                    {"patience", cfg_.patience},
                    {"seed", cfg_.seed},
                    {"gradient_clip_norm", cfg_.gradient_clip_norm},
                    {"n_similar", cfg_.candidates.n_similar},
                    {"max_candidate_sessions", cfg_.candidates.max_candidate_sessions}};
  if (state) {
    j["state"] = json{{"epoch", state->epoch},
                      {"step", state->step},
                      {"adam_t", state->adam_t},
                      {"best_score", state->best_score},
                      {"best_epoch", state->best_epoch},
                      {"epochs_since_best", state->epochs_since_best},
                      {"rng", state->rng_state}};
  }
  return j.dump();
}

void Trainer::save_state(const std::string& path, const TrainState& state) const {
  Checkpoint ckpt;
  ckpt.manifest_text = manifest_with_state(&state);
  const ParameterStore& params = model_.params();
  for (std::size_t i = 0; i < params.count(); ++i) {
    const auto& e = params.entry(static_cast<int>(i));
    ckpt.params.add(e.name, e.value);
  }
  for (std::size_t i = 0; i < params.count(); ++i) {
    ckpt.params.add("adam.m." + params.entry(static_cast<int>(i)).name, state.m[i]);
  }
  for (std::size_t i = 0; i < params.count(); ++i) {
    ckpt.params.add("adam.v." + params.entry(static_cast<int>(i)).name, state.v[i]);
  }
  save_checkpoint(path, ckpt);
}

void Trainer::load_state(const std::string& path, TrainState& state) const {
  Checkpoint ckpt = load_checkpoint(path);
  json j = json::parse(ckpt.manifest_text);
  if (j.value("dataset_hash", "") != dataset_hash_) {
    throw ArtifactMismatchError("resume checkpoint was trained on a different dataset");
  }
  if (!j.contains("state")) {
    throw DataError("checkpoint has no optimizer state; cannot resume from " + path);
  }
  const json& st = j.at("state");
  state.epoch = st.at("epoch").get<std::size_t>();
  state.step = st.at("step").get<std::size_t>();
  state.adam_t = st.at("adam_t").get<std::size_t>();
  state.best_score = st.at("best_score").get<double>();
  state.best_epoch = st.at("best_epoch").get<std::size_t>();
  state.epochs_since_best = st.at("epochs_since_best").get<std::size_t>();
  state.rng_state = st.at("rng").get<std::string>();

  ParameterStore& params = model_.params();
  state.m.clear();
  state.v.clear();
  for (std::size_t i = 0; i < params.count(); ++i) {
    const std::string& name = params.entry(static_cast<int>(i)).name;
    params.entry(static_cast<int>(i)).value = ckpt.params.value(name);
    state.m.push_back(ckpt.params.value("adam.m." + name));
    state.v.push_back(ckpt.params.value("adam.v." + name));
  }
}

TrainResult Trainer::run(const std::string& resume_from) {
  TrainState state;
  Rng rng(cfg_.seed);

  if (resume_from.empty()) {
    state.init_moments(model_.params());
  } else {
    load_state(resume_from, state);
    rng.set_state(state.rng_state);
  }

  const std::string best_path = out_dir_ + "/best.ckpt";
  const std::string last_path = out_dir_ + "/last.ckpt";
  const std::string log_path = out_dir_ + "/train_log.jsonl";
  std::ofstream log(log_path, resume_from.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw DataError("cannot open training log: " + log_path);

  EvalConfig val_cfg;
  val_cfg.split = Split::valid;
  val_cfg.ks = {5, 20};
  val_cfg.candidates = cfg_.candidates;
  bool has_valid = false;
  for (const Session& s : ds_.sessions) {
    if (s.split == Split::valid && s.items.size() >= 2) {
      has_valid = true;
      break;
    }
  }

  TrainResult result;
  result.best_path = best_path;
  result.last_path = last_path;

  while (state.epoch < cfg_.max_epochs) {
    auto t0 = std::chrono::steady_clock::now();
    auto batches = make_batches(ds_, cfg_.batch_size, rng);
    if (batches.empty()) throw DataError("training split has no instances");
    double mean_loss = run_epoch(batches, state, rng);
    ++state.epoch;

    EpochLog entry;
    entry.epoch = state.epoch;
    entry.step = state.step;
    entry.loss = mean_loss;
    double score = 0.0;
    if (has_valid) {
      RankingReport report = evaluate(model_, ds_, table_, val_cfg);
      auto r5 = recall_mrr_at_k(report.ranks_overall(), 5);
      auto r20 = recall_mrr_at_k(report.ranks_overall(), 20);
      entry.val_recall5 = r5.first;
      entry.val_mrr5 = r5.second;
      entry.val_recall20 = r20.first;
      entry.val_mrr20 = r20.second;
      score = r20.second;  // early stopping on validation MRR@20
    }

    bool improved = !has_valid || score > state.best_score;
    if (improved) {
      state.best_score = has_valid ? score : 0.0;
      state.best_epoch = state.epoch;
      state.epochs_since_best = 0;
      Checkpoint best;
      best.manifest_text = manifest_with_state(nullptr);
      const ParameterStore& params = model_.params();
      for (std::size_t i = 0; i < params.count(); ++i) {
        const auto& e = params.entry(static_cast<int>(i));
        best.params.add(e.name, e.value);
      }
      save_checkpoint(best_path, best);
    } else {
      ++state.epochs_since_best;
    }

    state.rng_state = rng.state();
    save_state(last_path, state);

    entry.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << json{{"epoch", entry.epoch},
                {"step", entry.step},
                {"loss", entry.loss},
                {"val_recall@5", entry.val_recall5},
                {"val_recall@20", entry.val_recall20},
                {"val_mrr@5", entry.val_mrr5},
                {"val_mrr@20", entry.val_mrr20},
                {"wall_time_s", entry.wall_time_s}}
               .dump()
        << "\n";
    log.flush();
    result.log.push_back(entry);

    if (has_valid && cfg_.patience > 0 && state.epochs_since_best >= cfg_.patience) break;
  }

  result.epochs_run = state.epoch;
  result.best_epoch = state.best_epoch;
  result.best_score = state.best_score;
  return result;
}

}  // namespace insert
