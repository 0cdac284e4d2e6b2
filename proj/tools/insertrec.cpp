// insertrec — session-based recommender pipeline.
// Subcommands: preprocess, stats, train, evaluate, ablate, recommend.
// Exit codes: 0 ok, 2 config/usage error, 3 data error, 4 numeric failure,
// 5 artifact mismatch.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "insert/ablation.hpp"
#include "insert/checkpoint.hpp"
#include "insert/data.hpp"
#include "insert/errors.hpp"
#include "insert/evaluation.hpp"
#include "insert/io_util.hpp"
#include "insert/model.hpp"
#include "insert/training.hpp"

namespace {

using insert::ConfigError;

// Flat key=value config file; '#' starts a comment. Flags override file
// values (file entries only provide defaults).
std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto strip = [](std::string s) {
      std::size_t b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      std::size_t e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    std::string trimmed = strip(line);
    if (trimmed.empty()) continue;
    auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = strip(trimmed.substr(0, eq));
    std::string value = strip(trimmed.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    out[key] = value;
  }
  return out;
}

struct Settings {
  // data
  insert::PreprocessConfig pre;
  // model
  std::size_t embed_dim = 50;
  double dropout = 0.20;
  std::string loss = "ovr";
  std::string variant = "full";
  bool shared_retrieval_gru = true;
  std::string beta_activation = "tanh";
  bool normalize_retrieval_weights = false;
  // train
  std::size_t batch_size = 64;
  double lr = 0.001;
  std::size_t max_epochs = 100;
  std::size_t patience = 3;
  std::uint64_t seed = 42;
  double clip_norm = 5.0;
  std::size_t n_similar = 10;
  std::size_t max_candidate_sessions = 50;
  // eval / misc
  std::string ks = "5,20";
  int threads = 1;
  bool f32 = false;
  std::string cache_dir;
};

char parse_delimiter(const std::string& s) {
  if (s == "tab" || s == "\\t") return '\t';
  if (s == "comma") return ',';
  if (s == "space") return ' ';
  if (s == "semicolon") return ';';
  if (s.size() == 1) return s[0];
  throw ConfigError("bad delimiter '" + s + "' (tab|comma|space|semicolon or one character)");
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("bad boolean for '" + key + "': " + s);
}

template <class T>
T parse_number(const std::string& key, const std::string& s) {
  std::istringstream is(s);
  T v{};
  is >> v;
  if (is.fail() || !is.eof()) throw ConfigError("bad value for '" + key + "': " + s);
  return v;
}

void apply_config(Settings& st, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "idle_threshold") st.pre.idle_threshold_s = parse_number<std::int64_t>(key, value);
    else if (key == "min_freq") st.pre.min_freq = parse_number<std::size_t>(key, value);
    else if (key == "max_session_len") st.pre.max_session_len = parse_number<std::size_t>(key, value);
    else if (key == "test_fraction") st.pre.test_fraction = parse_number<double>(key, value);
    else if (key == "valid_fraction") st.pre.valid_fraction = parse_number<double>(key, value);
    else if (key == "delimiter") st.pre.format.delimiter = parse_delimiter(value);
    else if (key == "user_col") st.pre.format.user_col = parse_number<int>(key, value);
    else if (key == "item_col") st.pre.format.item_col = parse_number<int>(key, value);
    else if (key == "time_col") st.pre.format.time_col = parse_number<int>(key, value);
    else if (key == "skip_rows") st.pre.format.skip_rows = parse_number<int>(key, value);
    else if (key == "d") st.embed_dim = parse_number<std::size_t>(key, value);
    else if (key == "dropout") st.dropout = parse_number<double>(key, value);
    else if (key == "loss") st.loss = value;
    else if (key == "variant") st.variant = value;
    else if (key == "shared_retrieval_gru") st.shared_retrieval_gru = parse_bool(key, value);
    else if (key == "beta_activation") st.beta_activation = value;
    else if (key == "normalize_retrieval_weights") st.normalize_retrieval_weights = parse_bool(key, value);
    else if (key == "batch_size") st.batch_size = parse_number<std::size_t>(key, value);
    else if (key == "lr") st.lr = parse_number<double>(key, value);
    else if (key == "max_epochs") st.max_epochs = parse_number<std::size_t>(key, value);
    else if (key == "patience") st.patience = parse_number<std::size_t>(key, value);
    else if (key == "seed") st.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "clip_norm") st.clip_norm = parse_number<double>(key, value);
    else if (key == "n_similar") st.n_similar = parse_number<std::size_t>(key, value);
    else if (key == "max_candidate_sessions") st.max_candidate_sessions = parse_number<std::size_t>(key, value);
    else if (key == "k") st.ks = value;
    else if (key == "threads") st.threads = parse_number<int>(key, value);
    else if (key == "f32") st.f32 = parse_bool(key, value);
    else if (key == "cache_dir") st.cache_dir = value;
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

std::vector<std::size_t> parse_ks(const std::string& s) {
  std::vector<std::size_t> ks;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (tok.empty()) continue;
    ks.push_back(parse_number<std::size_t>("k", tok));
    if (ks.back() == 0) throw ConfigError("k must be positive");
  }
  if (ks.empty()) throw ConfigError("no cutoffs given for k");
  return ks;
}

insert::ModelConfig model_config(const Settings& st, const insert::SessionDataset& ds) {
  insert::ModelConfig cfg;
  cfg.embed_dim = st.embed_dim;
  cfg.item_vocab = ds.items.size();
  cfg.user_vocab = ds.users.size();
  cfg.dropout_rate = st.dropout;
  cfg.loss_mode = insert::loss_mode_from_name(st.loss);
  cfg.variant = insert::variant_from_name(st.variant);
  cfg.shared_retrieval_gru = st.shared_retrieval_gru;
  if (st.beta_activation == "tanh") cfg.beta_activation = insert::BetaActivation::Tanh;
  else if (st.beta_activation == "none") cfg.beta_activation = insert::BetaActivation::None;
  else throw ConfigError("bad beta_activation '" + st.beta_activation + "' (tanh|none)");
  cfg.normalize_retrieval_weights = st.normalize_retrieval_weights;
  cfg.seed = st.seed;
  return cfg;
}

insert::TrainConfig train_config(const Settings& st) {
  insert::TrainConfig cfg;
  cfg.batch_size = st.batch_size;
  cfg.learning_rate = st.lr;
  cfg.max_epochs = st.max_epochs;
  cfg.patience = st.patience;
  cfg.seed = st.seed;
  cfg.gradient_clip_norm = st.clip_norm;
  cfg.candidates.n_similar = st.n_similar;
  cfg.candidates.max_candidate_sessions = st.max_candidate_sessions;
  return cfg;
}

// Loads the top-N table from the cache directory when possible; computes and
// stores it otherwise. Cache entries are keyed by dataset hash and N.
insert::SimilarUserTable similar_table(const insert::SessionDataset& ds,
                                       const std::string& dataset_hash,
                                       std::size_t n, const std::string& cache_dir) {
  if (cache_dir.empty()) return insert::SimilarUserTable(ds, n);
  std::filesystem::create_directories(cache_dir);
  const std::string path =
      cache_dir + "/topn_" + dataset_hash + "_" + std::to_string(n) + ".json";
  insert::SimilarUserTable table;
  if (insert::SimilarUserTable::load(path, dataset_hash, n, table)) return table;
  table = insert::SimilarUserTable(ds, n);
  table.save(path, dataset_hash);
  return table;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw insert::DataError("cannot write " + path);
  os << text;
}

int run(int argc, char** argv) {
  CLI::App app{"insertrec — session-based next-item recommender"};
  app.require_subcommand(1);

  Settings st;
  // config file first, flags override
  std::string config_path;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  }
  if (const char* env = std::getenv("INSERTREC_CACHE_DIR")) st.cache_dir = env;
  if (!config_path.empty()) apply_config(st, load_config_file(config_path));

  std::string config_flag;  // consumed above; registered so CLI11 accepts it
  app.add_option("--config", config_flag, "flat key=value config file");

  std::string delimiter_str;

  // ---- preprocess ----
  auto* pre = app.add_subcommand("preprocess", "raw interaction log -> dataset file");
  std::string pre_input, pre_output, pre_stats_out;
  pre->add_option("--input", pre_input, "raw log (TSV by default, .gz accepted)")->required();
  pre->add_option("--output", pre_output, "dataset file to write")->required();
  pre->add_option("--stats-out", pre_stats_out, "also write stats JSON here");
  pre->add_option("--idle-threshold", st.pre.idle_threshold_s, "session gap threshold, seconds");
  pre->add_option("--min-freq", st.pre.min_freq, "minimum user/item frequency");
  pre->add_option("--max-session-len", st.pre.max_session_len, "drop longer sessions");
  pre->add_option("--test-fraction", st.pre.test_fraction, "per-user test share");
  pre->add_option("--valid-fraction", st.pre.valid_fraction, "per-user validation share");
  pre->add_option("--delimiter", delimiter_str, "tab|comma|space|semicolon or one char");
  pre->add_option("--user-col", st.pre.format.user_col, "user column index");
  pre->add_option("--item-col", st.pre.format.item_col, "item column index");
  pre->add_option("--time-col", st.pre.format.time_col, "timestamp column index");
  pre->add_option("--skip-rows", st.pre.format.skip_rows, "header rows to skip");

  // ---- stats ----
  auto* stats = app.add_subcommand("stats", "print dataset statistics as JSON");
  std::string stats_dataset;
  stats->add_option("--dataset", stats_dataset, "dataset file")->required();

  // ---- train ----
  auto* train = app.add_subcommand("train", "train a model on a dataset");
  std::string train_dataset, train_out = "run", train_resume;
  train->add_option("--dataset", train_dataset, "dataset file")->required();
  train->add_option("--out", train_out, "output directory");
  train->add_option("--resume", train_resume, "continue from a last.ckpt");
  train->add_option("--variant", st.variant, "full|c|h|o|a");
  train->add_option("--loss", st.loss, "ovr|ce");
  train->add_option("--d", st.embed_dim, "embedding dimension");
  train->add_option("--dropout", st.dropout, "dropout rate on the modulated preference");
  train->add_option("--batch-size", st.batch_size, "instances per batch");
  train->add_option("--lr", st.lr, "Adam learning rate");
  train->add_option("--max-epochs", st.max_epochs, "epoch cap");
  train->add_option("--patience", st.patience, "early-stop patience (validation MRR@20)");
  train->add_option("--seed", st.seed, "RNG seed");
  train->add_option("--clip-norm", st.clip_norm, "global gradient norm clip (0 = off)");
  train->add_option("--n-similar", st.n_similar, "similar users per target");
  train->add_option("--max-candidate-sessions", st.max_candidate_sessions,
                    "cap on similar-user sessions (0 = unbounded)");
  train->add_option("--cache-dir", st.cache_dir, "similar-user table cache directory");
  train->add_option("--threads", st.threads, "worker threads (training itself is serial)");
  train->add_flag("--f32", st.f32, "run in float32 mode");
  bool train_shared_gru_off = false;
  train->add_flag("--separate-retrieval-gru", train_shared_gru_off,
                  "give the retrieval scorer its own GRU weights");
  train->add_flag("--normalize-retrieval-weights", st.normalize_retrieval_weights,
                  "softmax-normalize retrieval scores before aggregation");

  // ---- evaluate ----
  auto* eval = app.add_subcommand("evaluate", "rank targets and report recall/MRR");
  std::string eval_ckpt, eval_dataset, eval_split = "test", eval_targets = "all";
  std::string eval_report, eval_csv;
  bool eval_short_only = false, eval_force = false;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--dataset", eval_dataset, "dataset file")->required();
  eval->add_option("--split", eval_split, "train|valid|test");
  eval->add_option("--targets", eval_targets, "all|last");
  eval->add_flag("--short-only", eval_short_only, "sessions of length <= 5 only");
  eval->add_option("--k", st.ks, "cutoffs, comma separated");
  eval->add_option("--report", eval_report, "write the JSON report here");
  eval->add_option("--emit-csv", eval_csv, "write one CSV row per (bucket, k)");
  eval->add_option("--threads", st.threads, "worker threads");
  eval->add_option("--n-similar", st.n_similar, "similar users per target");
  eval->add_option("--max-candidate-sessions", st.max_candidate_sessions,
                   "cap on similar-user sessions (0 = unbounded)");
  eval->add_option("--cache-dir", st.cache_dir, "similar-user table cache directory");
  eval->add_flag("--force", eval_force, "skip the dataset-hash check");

  // ---- ablate ----
  auto* ablate = app.add_subcommand("ablate", "train and evaluate every variant");
  std::string ab_dataset, ab_out = "ablation";
  bool ab_all_lengths = false;
  ablate->add_option("--dataset", ab_dataset, "dataset file")->required();
  ablate->add_option("--out", ab_out, "output directory");
  ablate->add_flag("--all-lengths", ab_all_lengths, "include long sessions in the report");
  ablate->add_option("--loss", st.loss, "ovr|ce");
  ablate->add_option("--d", st.embed_dim, "embedding dimension");
  ablate->add_option("--dropout", st.dropout, "dropout rate");
  ablate->add_option("--batch-size", st.batch_size, "instances per batch");
  ablate->add_option("--lr", st.lr, "Adam learning rate");
  ablate->add_option("--max-epochs", st.max_epochs, "epoch cap");
  ablate->add_option("--patience", st.patience, "early-stop patience");
  ablate->add_option("--seed", st.seed, "RNG seed shared by every variant");
  ablate->add_option("--clip-norm", st.clip_norm, "gradient clip");
  ablate->add_option("--n-similar", st.n_similar, "similar users per target");
  ablate->add_option("--max-candidate-sessions", st.max_candidate_sessions, "cap on |S|");
  ablate->add_option("--k", st.ks, "cutoffs, comma separated");
  ablate->add_option("--threads", st.threads, "worker threads for evaluation");

  // ---- recommend ----
  auto* rec = app.add_subcommand("recommend", "top-k next items for a context");
  std::string rec_ckpt, rec_dataset, rec_user, rec_items;
  std::size_t rec_k = 10;
  bool rec_cold = false, rec_json = false, rec_force = false;
  rec->add_option("--checkpoint", rec_ckpt, "checkpoint file")->required();
  rec->add_option("--dataset", rec_dataset, "dataset file")->required();
  rec->add_option("--user", rec_user, "user id")->required();
  rec->add_option("--items", rec_items, "context item ids, comma separated")->required();
  rec->add_option("--k", rec_k, "list length");
  rec->add_flag("--cold-start", rec_cold, "score unknown users with the local module only");
  rec->add_flag("--json", rec_json, "emit JSON instead of text");
  rec->add_option("--cache-dir", st.cache_dir, "similar-user table cache directory");
  rec->add_flag("--force", rec_force, "skip the dataset-hash check");

  app.parse(argc, argv);

  if (st.f32) insert::set_precision(insert::Precision::f32);
  if (!delimiter_str.empty()) st.pre.format.delimiter = parse_delimiter(delimiter_str);
  if (train_shared_gru_off) st.shared_retrieval_gru = false;
  if (st.threads < 1) throw ConfigError("threads must be >= 1");

  if (pre->parsed()) {
    if (!std::filesystem::exists(pre_input)) {
      throw insert::DataError("input file does not exist: " + pre_input);
    }
    insert::SessionDataset ds = insert::preprocess(pre_input, st.pre);
    insert::save_dataset(pre_output, ds);
    std::string stats = insert::stats_json(ds);
    if (!pre_stats_out.empty()) write_text_file(pre_stats_out, stats + "\n");
    std::cout << stats << "\n";
    std::cout << "dataset written to " << pre_output << " (hash " << insert::hash_file(pre_output)
              << ")\n";
    return 0;
  }

  if (stats->parsed()) {
    insert::SessionDataset ds = insert::load_dataset(stats_dataset);
    std::cout << insert::stats_json(ds) << "\n";
    return 0;
  }

  if (train->parsed()) {
    insert::SessionDataset ds = insert::load_dataset(train_dataset);
    const std::string dataset_hash = insert::hash_file(train_dataset);

    insert::ModelConfig mcfg;
    insert::TrainConfig tcfg;
    if (!train_resume.empty()) {
      insert::Checkpoint last = insert::load_checkpoint(train_resume);
      mcfg = insert::config_from_manifest(last.manifest_text);
      tcfg = insert::train_config_from_manifest(last.manifest_text);
    } else {
      mcfg = model_config(st, ds);
      tcfg = train_config(st);
    }
    insert::Model model(mcfg);
    insert::SimilarUserTable table =
        similar_table(ds, dataset_hash, tcfg.candidates.n_similar, st.cache_dir);
    insert::Trainer trainer(ds, model, tcfg, train_out, dataset_hash, &table);
    insert::TrainResult result = trainer.run(train_resume);
    std::cout << "trained " << result.epochs_run << " epoch(s); best epoch "
              << result.best_epoch << " (validation MRR@20 " << result.best_score << ")\n"
              << "best checkpoint: " << result.best_path << "\n"
              << "last state:      " << result.last_path << "\n";
    return 0;
  }

  if (eval->parsed()) {
    insert::Checkpoint ckpt = insert::load_checkpoint(eval_ckpt);
    insert::SessionDataset ds = insert::load_dataset(eval_dataset);
    const std::string dataset_hash = insert::hash_file(eval_dataset);
    const std::string recorded = insert::dataset_hash_from_manifest(ckpt.manifest_text);
    if (!eval_force && !recorded.empty() && recorded != dataset_hash) {
      throw insert::ArtifactMismatchError("checkpoint was trained on dataset " + recorded +
                                          " but " + eval_dataset + " hashes to " + dataset_hash);
    }
    insert::ModelConfig mcfg = insert::config_from_manifest(ckpt.manifest_text);
    insert::Model model(mcfg, std::move(ckpt.params));

    insert::EvalConfig ecfg;
    ecfg.split = insert::split_from_name(eval_split);
    ecfg.ks = parse_ks(st.ks);
    ecfg.short_only = eval_short_only;
    if (eval_targets == "all") ecfg.targets_all = true;
    else if (eval_targets == "last") ecfg.targets_all = false;
    else throw ConfigError("bad --targets '" + eval_targets + "' (all|last)");
    ecfg.candidates.n_similar = st.n_similar;
    ecfg.candidates.max_candidate_sessions = st.max_candidate_sessions;
    ecfg.threads = st.threads;

    insert::SimilarUserTable table =
        similar_table(ds, dataset_hash, ecfg.candidates.n_similar, st.cache_dir);
    insert::RankingReport report = insert::evaluate(model, ds, table, ecfg);
    report.dataset_hash = dataset_hash;
    report.checkpoint_hash = insert::hash_file(eval_ckpt);

    std::cout << report.to_text();
    if (!eval_report.empty()) write_text_file(eval_report, report.to_json() + "\n");
    if (!eval_csv.empty()) write_text_file(eval_csv, report.to_csv());
    return 0;
  }

  if (ablate->parsed()) {
    insert::SessionDataset ds = insert::load_dataset(ab_dataset);
    const std::string dataset_hash = insert::hash_file(ab_dataset);
    insert::ModelConfig mcfg = model_config(st, ds);
    insert::TrainConfig tcfg = train_config(st);
    insert::EvalConfig ecfg;
    ecfg.split = insert::Split::test;
    ecfg.ks = parse_ks(st.ks);
    ecfg.short_only = !ab_all_lengths;
    ecfg.candidates = tcfg.candidates;
    ecfg.threads = st.threads;
    auto rows = insert::run_ablation_suite(ds, mcfg, tcfg, ecfg, ab_out, dataset_hash);
    std::filesystem::create_directories(ab_out);
    write_text_file(ab_out + "/ablation.json", insert::ablation_table_json(rows) + "\n");
    std::cout << insert::ablation_table_text(rows);
    return 0;
  }

  if (rec->parsed()) {
    insert::Checkpoint ckpt = insert::load_checkpoint(rec_ckpt);
    insert::SessionDataset ds = insert::load_dataset(rec_dataset);
    const std::string dataset_hash = insert::hash_file(rec_dataset);
    const std::string recorded = insert::dataset_hash_from_manifest(ckpt.manifest_text);
    if (!rec_force && !recorded.empty() && recorded != dataset_hash) {
      throw insert::ArtifactMismatchError("checkpoint/dataset mismatch; pass --force to override");
    }
    insert::ModelConfig mcfg = insert::config_from_manifest(ckpt.manifest_text);

    int user = ds.users.lookup(rec_user);
    if (user < 0 && !rec_cold) {
      throw ConfigError("unknown user '" + rec_user + "' (use --cold-start for new users)");
    }
    std::vector<int> context;
    std::vector<std::string> unknown;
    std::istringstream items(rec_items);
    std::string tok;
    while (std::getline(items, tok, ',')) {
      if (tok.empty()) continue;
      int idx = ds.items.lookup(tok);
      if (idx <= 0) unknown.push_back(tok);
      else context.push_back(idx);
    }
    if (!unknown.empty()) {
      std::string msg = "unknown item(s):";
      for (const std::string& id : unknown) msg += " " + id;
      throw ConfigError(msg);
    }
    if (context.empty()) throw ConfigError("context must contain at least one item");

    if (user < 0) mcfg.variant = insert::Variant::LocalOnly;  // cold start: local module only
    insert::Model model(mcfg, std::move(ckpt.params));

    insert::ForwardInput in;
    in.context = context;
    if (user >= 0) {
      insert::SimilarUserTable table =
          similar_table(ds, dataset_hash, st.n_similar, st.cache_dir);
      insert::CandidateConfig ccfg{st.n_similar, st.max_candidate_sessions};
      // the new session comes after everything stored, so H is the whole
      // training history
      insert::CandidateSets cands = build_candidate_sets(
          ds, table, user, static_cast<int>(ds.sessions.size()) + 1, ccfg);
      in = insert::materialize(ds, context, cands);
    }
    insert::ForwardTrace trace = model.forward(in, false, nullptr);
    insert::Tensor probs = trace.probabilities();

    std::size_t available = probs.size() - 1;  // padding excluded
    if (rec_k > available) {
      std::cerr << "warning: k=" << rec_k << " exceeds the item vocabulary (" << available
                << "); returning the full ranking\n";
      rec_k = available;
    }
    std::vector<int> order;
    for (std::size_t i = 1; i < probs.size(); ++i) order.push_back(static_cast<int>(i));
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return probs[static_cast<std::size_t>(a)] != probs[static_cast<std::size_t>(b)]
                 ? probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)]
                 : a < b;
    });
    order.resize(rec_k);

    if (rec_json) {
      nlohmann::json out = nlohmann::json::array();
      for (int idx : order) {
        out.push_back({{"item", ds.items.id_of[static_cast<std::size_t>(idx)]},
                       {"score", probs[static_cast<std::size_t>(idx)]}});
      }
      std::cout << out.dump(2) << "\n";
    } else {
      for (int idx : order) {
        std::cout << ds.items.id_of[static_cast<std::size_t>(idx)] << "\t"
                  << probs[static_cast<std::size_t>(idx)] << "\n";
      }
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError& e) {
    CLI::App dummy;
    int code = dummy.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const insert::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const insert::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const insert::ArtifactMismatchError& e) {
    std::cerr << "artifact mismatch: " << e.what() << "\n";
    return 5;
  } catch (const insert::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const insert::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
