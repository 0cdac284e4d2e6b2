#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "insert/candidates.hpp"
#include "insert/data.hpp"
#include "insert/model.hpp"
#include "insert/param_store.hpp"
#include "insert/rng.hpp"

namespace insert {

struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t max_epochs = 100;
  std::size_t patience = 3;  // early stop on validation MRR@20
  std::uint64_t seed = 42;
  double gradient_clip_norm = 5.0;  // global norm; 0 disables
  CandidateConfig candidates;

  void validate() const;
};

// One training instance: predict items[target_pos] from items[0..target_pos).
struct TrainInstance {
  int user = -1;
  int session_id = -1;
  int target_pos = 0;  // >= 1
};

// User-aware mini-batches: every (session, position) pair appears exactly
// once per epoch; each batch draws from distinct users while enough users
// remain; order reshuffled per epoch from the RNG.
std::vector<std::vector<TrainInstance>> make_batches(const SessionDataset& ds,
                                                     std::size_t batch_size, Rng& rng);

// Adam moments, step count and early-stop bookkeeping; round-trips through
// the last checkpoint bit-exactly.
struct TrainState {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::size_t adam_t = 0;
  std::vector<Tensor> m, v;  // per parameter, entry order
  double best_score = -1.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_since_best = 0;
  std::string rng_state;

  void init_moments(const ParameterStore& params);
};

// Bias-corrected Adam with optional global-norm clipping. Throws
// NumericError naming the parameter if a gradient is not finite.
void adam_step(ParameterStore& params, TrainState& state, const TrainConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double loss = 0.0;
  double val_recall5 = 0.0, val_recall20 = 0.0;
  double val_mrr5 = 0.0, val_mrr20 = 0.0;
  double wall_time_s = 0.0;
};

struct TrainResult {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_score = 0.0;
  std::vector<EpochLog> log;
  std::string best_path;
  std::string last_path;
};

// Reads the "train" section back out of a checkpoint manifest (a resumed run
// must continue under the recorded config).
TrainConfig train_config_from_manifest(const std::string& manifest_text);

class Trainer {
 public:
  // Builds the similar-user table when `table` is null.
  Trainer(const SessionDataset& ds, Model& model, TrainConfig cfg, std::string out_dir,
          std::string dataset_hash, const SimilarUserTable* table = nullptr);

  // Fresh run, or continuation when `resume_from` points at a last-state
  // checkpoint written by this trainer.
  TrainResult run(const std::string& resume_from = "");

 private:
  double run_epoch(const std::vector<std::vector<TrainInstance>>& batches, TrainState& state,
                   Rng& rng);
  void save_state(const std::string& path, const TrainState& state) const;
  void load_state(const std::string& path, TrainState& state) const;
  std::string manifest_with_state(const TrainState* state) const;

  const SessionDataset& ds_;
  Model& model_;
  TrainConfig cfg_;
  std::string out_dir_;
  std::string dataset_hash_;
  SimilarUserTable table_;
};

}  // namespace insert
