#include "insert/model.hpp"

#include <cmath>

#include "json.hpp"

#include "insert/errors.hpp"

using nlohmann::json;

namespace insert {

namespace {
constexpr double kEtaEpsilon = 1e-8;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::LocalOnly: return "c";
    case Variant::OwnHistory: return "h";
    case Variant::OtherUsers: return "o";
    case Variant::MeanEncoder: return "a";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "full") return Variant::Full;
  if (name == "c") return Variant::LocalOnly;
  if (name == "h") return Variant::OwnHistory;
  if (name == "o") return Variant::OtherUsers;
  if (name == "a") return Variant::MeanEncoder;
  throw ConfigError("unknown variant '" + name + "' (full|c|h|o|a)");
}

const char* loss_mode_name(LossMode m) {
  return m == LossMode::OneVsRest ? "ovr" : "ce";
}

LossMode loss_mode_from_name(const std::string& name) {
  if (name == "ovr") return LossMode::OneVsRest;
  if (name == "ce") return LossMode::CrossEntropy;
  throw ConfigError("unknown loss mode '" + name + "' (ovr|ce)");
}

void ModelConfig::validate() const {
  if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
  if (item_vocab < 2) throw ConfigError("item vocabulary must contain at least one real item");
  if (user_vocab == 0) throw ConfigError("user vocabulary must be non-empty");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw ConfigError("dropout_rate must lie in [0, 1)");
  }
}

ForwardInput materialize(const SessionDataset& ds, const std::vector<int>& context,
                         const CandidateSets& cands) {
  ForwardInput in;
  in.context = context;
  in.history.reserve(cands.own_history.size());
  for (int sid : cands.own_history) {
    const Session& s = ds.at(sid);
    in.history.push_back(CandidateSession{s.user, s.items});
  }
  in.neighbors.reserve(cands.similar_users_sessions.size());
  for (int sid : cands.similar_users_sessions) {
    const Session& s = ds.at(sid);
    in.neighbors.push_back(CandidateSession{s.user, s.items});
  }
  return in;
}

namespace ops {

Tape::ValueId gru_cell(Tape& t, Tape::ValueId x, Tape::ValueId h_prev, const Gru& g) {
  Tape::ValueId z = t.sigmoid(t.add(t.add(t.matmul(g.w_z, x), t.matmul(g.u_z, h_prev)), g.b_z));
  Tape::ValueId r = t.sigmoid(t.add(t.add(t.matmul(g.w_r, x), t.matmul(g.u_r, h_prev)), g.b_r));
  Tape::ValueId rh = t.mul(r, h_prev);
  Tape::ValueId cand = t.tanh(t.add(t.add(t.matmul(g.w_h, x), t.matmul(g.u_h, rh)), g.b_h));
  return t.add(t.mul(t.affine(z, -1.0, 1.0), h_prev), t.mul(z, cand));
}

Tape::ValueId encode_local(Tape& t, const std::vector<int>& context, Tape::ValueId item_embed,
                           const Gru& g, std::size_t dim) {
  if (context.empty()) throw UsageError("context must contain at least one item");
  Tape::ValueId h = t.constant(Tensor::zeros({dim}));
  for (int item : context) {
    h = gru_cell(t, t.row(item_embed, static_cast<std::size_t>(item)), h, g);
  }
  return h;
}

RetrievalScore retrieval_similarity(Tape& t, const std::vector<int>& items, Tape::ValueId h_c,
                                    Tape::ValueId item_embed, const Gru& g, std::size_t dim) {
  if (items.empty()) throw UsageError("candidate session must be non-empty");
  RetrievalScore out;
  Tape::ValueId h = t.constant(Tensor::zeros({dim}));
  for (int item : items) {
    h = gru_cell(t, t.row(item_embed, static_cast<std::size_t>(item)), h, g);
    out.lambdas.push_back(t.dot(h, h_c));
  }
  out.score = t.max(t.concat(out.lambdas));
  return out;
}

Tape::ValueId encode_session(Tape& t, const std::vector<int>& items, int owner,
                             Tape::ValueId item_embed, Tape::ValueId user_embed) {
  if (items.empty()) throw UsageError("candidate session must be non-empty");
  Tape::ValueId theta = t.row(user_embed, static_cast<std::size_t>(owner));
  std::vector<Tape::ValueId> xs, dots;
  xs.reserve(items.size());
  dots.reserve(items.size());
  for (int item : items) {
    xs.push_back(t.row(item_embed, static_cast<std::size_t>(item)));
    dots.push_back(t.dot(xs.back(), theta));
  }
  Tape::ValueId eta = dots[0];
  for (std::size_t i = 1; i < dots.size(); ++i) eta = t.add(eta, dots[i]);

  if (std::fabs(t.value(eta)[0]) < kEtaEpsilon) {
    // degenerate normalizer: fall back to uniform weights (the mean)
    Tape::ValueId sum = xs[0];
    for (std::size_t i = 1; i < xs.size(); ++i) sum = t.add(sum, xs[i]);
    return t.affine(sum, 1.0 / static_cast<double>(xs.size()), 0.0);
  }
  Tape::ValueId inv = t.reciprocal(eta);
  Tape::ValueId w = t.mul(t.mul(dots[0], inv), xs[0]);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    w = t.add(w, t.mul(t.mul(dots[i], inv), xs[i]));
  }
  return w;
}

Tape::ValueId mean_embedding(Tape& t, const std::vector<int>& items, Tape::ValueId item_embed) {
  if (items.empty()) throw UsageError("candidate session must be non-empty");
  Tape::ValueId sum = t.row(item_embed, static_cast<std::size_t>(items[0]));
  for (std::size_t i = 1; i < items.size(); ++i) {
    sum = t.add(sum, t.row(item_embed, static_cast<std::size_t>(items[i])));
  }
  return t.affine(sum, 1.0 / static_cast<double>(items.size()), 0.0);
}

Tape::ValueId aggregate_prior(Tape& t,
                              const std::vector<std::pair<Tape::ValueId, Tape::ValueId>>& scored,
                              Tape::ValueId w, Tape::ValueId b, BetaActivation act,
                              std::size_t dim, bool normalize_weights) {
  if (scored.empty()) return t.constant(Tensor::zeros({dim}));

  std::vector<Tape::ValueId> weights;
  weights.reserve(scored.size());
  if (normalize_weights) {
    std::vector<Tape::ValueId> raw;
    raw.reserve(scored.size());
    for (const auto& [score, enc] : scored) raw.push_back(score);
    Tape::ValueId sm = t.softmax_vec(t.concat(raw));
    for (std::size_t i = 0; i < scored.size(); ++i) weights.push_back(t.slice(sm, i, 1));
  } else {
    for (const auto& [score, enc] : scored) weights.push_back(score);
  }

  Tape::ValueId pre = t.mul(weights[0], scored[0].second);
  for (std::size_t i = 1; i < scored.size(); ++i) {
    pre = t.add(pre, t.mul(weights[i], scored[i].second));
  }
  Tape::ValueId lin = t.add(t.matmul(w, pre), b);
  return act == BetaActivation::Tanh ? t.tanh(lin) : lin;
}

}  // namespace ops

Model::Model(ModelConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  init_params();
}

Model::Model(ModelConfig cfg, ParameterStore params) : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
  for (const std::string& name : parameter_names(cfg_)) {
    if (!params_.has(name)) throw DataError("checkpoint is missing parameter '" + name + "'");
  }
}

std::vector<std::string> Model::parameter_names(const ModelConfig& cfg) {
  std::vector<std::string> names = {"item_embed", "user_embed"};
  auto push_gru = [&](const std::string& prefix) {
    for (const char* gate : {"z", "r", "h"}) {
      names.push_back(prefix + ".w_" + gate);
      names.push_back(prefix + ".u_" + gate);
      names.push_back(prefix + ".b_" + gate);
    }
  };
  push_gru("gru");
  if (!cfg.shared_retrieval_gru) push_gru("retrieval_gru");
  names.insert(names.end(), {"mlp_h.w", "mlp_h.b", "mlp_s.w", "mlp_s.b", "out.w", "out.b"});
  return names;
}

void Model::init_params() {
  const std::size_t d = cfg_.embed_dim;
  const std::size_t m = cfg_.item_vocab;
  const std::size_t n = cfg_.user_vocab;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  Rng rng(cfg_.seed);

  auto shape_of = [&](const std::string& name) -> std::vector<std::size_t> {
    if (name == "item_embed") return {m, d};
    if (name == "user_embed") return {n, d};
    if (name == "out.w") return {m, d};
    if (name == "out.b") return {m};
    if (name.size() > 2 && name.compare(name.size() - 2, 2, ".b") == 0) return {d};
    if (name.find(".b_") != std::string::npos) return {d};
    return {d, d};
  };

  for (const std::string& name : parameter_names(cfg_)) {
    Tensor t(shape_of(name));
    if (t.ndim() == 2) {
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    }
    t.quantize();
    params_.add(name, std::move(t));
  }
}

ForwardTrace Model::forward(const ForwardInput& in, bool training, Rng* rng) {
  const std::size_t d = cfg_.embed_dim;
  const Variant v = cfg_.variant;
  const bool use_h = v == Variant::Full || v == Variant::OwnHistory || v == Variant::MeanEncoder;
  const bool use_s = v == Variant::Full || v == Variant::OtherUsers || v == Variant::MeanEncoder;
  const bool mean_scorer = v == Variant::MeanEncoder;

  ForwardTrace trace;
  Tape& t = trace.tape;

  Tape::ValueId item_embed = t.param(params_, "item_embed");
  ops::Gru gru{
      t.param(params_, "gru.w_z"), t.param(params_, "gru.u_z"), t.param(params_, "gru.b_z"),
      t.param(params_, "gru.w_r"), t.param(params_, "gru.u_r"), t.param(params_, "gru.b_r"),
      t.param(params_, "gru.w_h"), t.param(params_, "gru.u_h"), t.param(params_, "gru.b_h")};

  trace.h_c = ops::encode_local(t, in.context, item_embed, gru, d);

  auto score_pool = [&](const std::vector<CandidateSession>& pool, const ops::Gru& scorer_gru,
                        std::vector<double>& score_log) {
    std::vector<std::pair<Tape::ValueId, Tape::ValueId>> scored;
    Tape::ValueId user_embed = t.param(params_, "user_embed");
    for (const CandidateSession& cs : pool) {
      if (cs.items.empty()) continue;
      Tape::ValueId score;
      if (mean_scorer) {
        score = t.dot(ops::mean_embedding(t, cs.items, item_embed), trace.h_c);
      } else {
        score = ops::retrieval_similarity(t, cs.items, trace.h_c, item_embed, scorer_gru, d).score;
      }
      score_log.push_back(t.value(score)[0]);
      scored.emplace_back(score, ops::encode_session(t, cs.items, cs.user, item_embed, user_embed));
    }
    return scored;
  };

  if (use_h || use_s) {
    ops::Gru scorer_gru = gru;
    if (!cfg_.shared_retrieval_gru && !mean_scorer) {
      scorer_gru = ops::Gru{t.param(params_, "retrieval_gru.w_z"),
                            t.param(params_, "retrieval_gru.u_z"),
                            t.param(params_, "retrieval_gru.b_z"),
                            t.param(params_, "retrieval_gru.w_r"),
                            t.param(params_, "retrieval_gru.u_r"),
                            t.param(params_, "retrieval_gru.b_r"),
                            t.param(params_, "retrieval_gru.w_h"),
                            t.param(params_, "retrieval_gru.u_h"),
                            t.param(params_, "retrieval_gru.b_h")};
    }
    Tape::ValueId psi = trace.h_c;
    if (use_h) {
      auto scored = score_pool(in.history, scorer_gru, trace.history_scores);
      trace.beta_h = ops::aggregate_prior(t, scored, t.param(params_, "mlp_h.w"),
                                          t.param(params_, "mlp_h.b"), cfg_.beta_activation, d,
                                          cfg_.normalize_retrieval_weights);
      psi = t.add(psi, trace.beta_h);
    }
    if (use_s) {
      auto scored = score_pool(in.neighbors, scorer_gru, trace.neighbor_scores);
      trace.beta_s = ops::aggregate_prior(t, scored, t.param(params_, "mlp_s.w"),
                                          t.param(params_, "mlp_s.b"), cfg_.beta_activation, d,
                                          cfg_.normalize_retrieval_weights);
      psi = t.add(psi, trace.beta_s);
    }
    trace.psi = psi;
  } else {
    trace.psi = trace.h_c;
  }

  if (training && cfg_.dropout_rate > 0.0) {
    if (!rng) throw UsageError("training forward pass needs an RNG for dropout");
    Tensor mask({d});
    const double keep_scale = 1.0 / (1.0 - cfg_.dropout_rate);
    for (std::size_t i = 0; i < d; ++i) {
      mask[i] = rng->bernoulli(cfg_.dropout_rate) ? 0.0 : keep_scale;
    }
    trace.psi = t.mul(trace.psi, t.constant(std::move(mask)));
  }

  trace.logits = t.add(t.matmul(t.param(params_, "out.w"), trace.psi), t.param(params_, "out.b"));
  return trace;
}

Tape::ValueId Model::loss(ForwardTrace& trace, int target_item) const {
  if (target_item < 0 || target_item >= static_cast<int>(cfg_.item_vocab)) {
    throw UsageError("target item " + std::to_string(target_item) + " outside vocabulary");
  }
  const auto target = static_cast<std::size_t>(target_item);
  return cfg_.loss_mode == LossMode::OneVsRest
             ? trace.tape.softmax_one_vs_rest(trace.logits, target)
             : trace.tape.softmax_cross_entropy(trace.logits, target);
}

std::string model_manifest(const ModelConfig& cfg, const std::string& dataset_hash) {
  json j;
  j["kind"] = "checkpoint";
  j["dataset_hash"] = dataset_hash;
  j["model"] = json{{"embed_dim", cfg.embed_dim},
                    {"item_vocab", cfg.item_vocab},
                    {"user_vocab", cfg.user_vocab},
                    {"dropout_rate", cfg.dropout_rate},
                    {"loss_mode", loss_mode_name(cfg.loss_mode)},
                    {"variant", variant_name(cfg.variant)},
                    {"shared_retrieval_gru", cfg.shared_retrieval_gru},
                    {"beta_activation", cfg.beta_activation == BetaActivation::Tanh ? "tanh" : "none"},
                    {"normalize_retrieval_weights", cfg.normalize_retrieval_weights},
                    {"seed", cfg.seed}};
  return j.dump();
}

ModelConfig config_from_manifest(const std::string& manifest_text) {
  json j = json::parse(manifest_text);
  const json& m = j.at("model");
  ModelConfig cfg;
  cfg.embed_dim = m.at("embed_dim").get<std::size_t>();
  cfg.item_vocab = m.at("item_vocab").get<std::size_t>();
  cfg.user_vocab = m.at("user_vocab").get<std::size_t>();
  cfg.dropout_rate = m.at("dropout_rate").get<double>();
  cfg.loss_mode = loss_mode_from_name(m.at("loss_mode").get<std::string>());
  cfg.variant = variant_from_name(m.at("variant").get<std::string>());
  cfg.shared_retrieval_gru = m.at("shared_retrieval_gru").get<bool>();
  cfg.beta_activation = m.at("beta_activation").get<std::string>() == "tanh"
                            ? BetaActivation::Tanh
                            : BetaActivation::None;
  cfg.normalize_retrieval_weights = m.at("normalize_retrieval_weights").get<bool>();
  cfg.seed = m.at("seed").get<std::uint64_t>();
  return cfg;
}

std::string dataset_hash_from_manifest(const std::string& manifest_text) {
  return json::parse(manifest_text).value("dataset_hash", "");
}

}  // namespace insert
