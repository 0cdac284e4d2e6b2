#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "insert/candidates.hpp"
#include "insert/data.hpp"
#include "insert/rng.hpp"
#include "insert/tape.hpp"

namespace insert {

// Ablation variants: full model; local GRU only (c); own-history modulation
// only (h); similar-users modulation only (o); retrieval scored by mean item
// embeddings instead of the recurrent encoder (a).
enum class Variant { Full, LocalOnly, OwnHistory, OtherUsers, MeanEncoder };

const char* variant_name(Variant v);               // "full", "c", "h", "o", "a"
Variant variant_from_name(const std::string& name);

// ovr: -[log p(target) + sum over other items of log(1-p)] over the softmax
// distribution. ce: plain -log p(target).
enum class LossMode { OneVsRest, CrossEntropy };

const char* loss_mode_name(LossMode m);  // "ovr", "ce"
LossMode loss_mode_from_name(const std::string& name);

enum class BetaActivation { Tanh, None };

struct ModelConfig {
  std::size_t embed_dim = 50;
  std::size_t item_vocab = 0;  // includes padding index 0
  std::size_t user_vocab = 0;
  double dropout_rate = 0.20;
  LossMode loss_mode = LossMode::OneVsRest;
  Variant variant = Variant::Full;
  // The retrieval scorer reuses the local GRU weights by default; set false
  // for a separately parameterized scorer.
  bool shared_retrieval_gru = true;
  BetaActivation beta_activation = BetaActivation::Tanh;
  // Softmax-normalize retrieval scores before aggregation (off: raw scores).
  bool normalize_retrieval_weights = false;
  std::uint64_t seed = 42;

  void validate() const;
};

// Candidate session materialized for the forward pass.
struct CandidateSession {
  int user = -1;
  std::vector<int> items;
};

struct ForwardInput {
  std::vector<int> context;
  std::vector<CandidateSession> history;    // H
  std::vector<CandidateSession> neighbors;  // S
};

ForwardInput materialize(const SessionDataset& ds, const std::vector<int>& context,
                         const CandidateSets& cands);

struct ForwardTrace {
  Tape tape;
  Tape::ValueId h_c = -1;
  Tape::ValueId beta_h = -1;
  Tape::ValueId beta_s = -1;
  Tape::ValueId psi = -1;
  Tape::ValueId logits = -1;
  std::vector<double> history_scores;
  std::vector<double> neighbor_scores;

  Tensor probabilities() const { return softmax(tape.value(logits)); }
};

// Low-level graph builders, exposed for tests and reused by Model::forward.
namespace ops {

struct Gru {
  Tape::ValueId w_z, u_z, b_z;
  Tape::ValueId w_r, u_r, b_r;
  Tape::ValueId w_h, u_h, b_h;
};

// z = sig(Wz x + Uz h + bz); r = sig(Wr x + Ur h + br);
// cand = tanh(Wh x + Uh (r*h) + bh); h' = (1-z)*h + z*cand.
Tape::ValueId gru_cell(Tape& t, Tape::ValueId x, Tape::ValueId h_prev, const Gru& g);

// Runs the GRU over the embedded context from a zero initial state and
// returns the last hidden state.
Tape::ValueId encode_local(Tape& t, const std::vector<int>& context, Tape::ValueId item_embed,
                           const Gru& g, std::size_t dim);

struct RetrievalScore {
  Tape::ValueId score;                  // max over per-item similarities
  std::vector<Tape::ValueId> lambdas;   // h_i . h_c per position
};

// Similarity of a candidate session to the current preference: run the GRU
// over the candidate, dot every hidden state with h_c, take the max.
// Gradient flows through the argmax position only (first index on ties).
RetrievalScore retrieval_similarity(Tape& t, const std::vector<int>& items, Tape::ValueId h_c,
                                    Tape::ValueId item_embed, const Gru& g, std::size_t dim);

// Attention pooling of the candidate's item embeddings, weighted by the
// owner's preference embedding: alpha_i = (x_i . theta) / eta with
// eta = sum_j x_j . theta; uniform weights when |eta| < 1e-8.
Tape::ValueId encode_session(Tape& t, const std::vector<int>& items, int owner,
                             Tape::ValueId item_embed, Tape::ValueId user_embed);

Tape::ValueId mean_embedding(Tape& t, const std::vector<int>& items, Tape::ValueId item_embed);

// beta = act(W (sum score_i * w_i) + b); exactly zero (projection bypassed)
// for an empty candidate list.
Tape::ValueId aggregate_prior(Tape& t, const std::vector<std::pair<Tape::ValueId, Tape::ValueId>>& scored,
                              Tape::ValueId w, Tape::ValueId b, BetaActivation act,
                              std::size_t dim, bool normalize_weights);

}  // namespace ops

class Model {
 public:
  explicit Model(ModelConfig cfg);                       // seeded fresh parameters
  Model(ModelConfig cfg, ParameterStore params);         // from checkpoint

  const ModelConfig& config() const { return cfg_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  // Builds the full graph for one instance. `rng` drives the dropout mask
  // and is only consulted when training and dropout_rate > 0. Thread-safe
  // for concurrent calls as long as nothing mutates the parameters.
  ForwardTrace forward(const ForwardInput& in, bool training, Rng* rng);

  // Appends the configured loss to the trace's tape.
  Tape::ValueId loss(ForwardTrace& trace, int target_item) const;

  static std::vector<std::string> parameter_names(const ModelConfig& cfg);

 private:
  void init_params();

  ModelConfig cfg_;
  ParameterStore params_;
};

// Model config <-> checkpoint manifest fields.
std::string model_manifest(const ModelConfig& cfg, const std::string& dataset_hash);
ModelConfig config_from_manifest(const std::string& manifest_text);
std::string dataset_hash_from_manifest(const std::string& manifest_text);

}  // namespace insert
