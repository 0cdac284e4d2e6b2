#include "insert/ablation.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "insert/checkpoint.hpp"
#include "insert/io_util.hpp"

using nlohmann::json;

namespace insert {

std::vector<AblationRow> run_ablation_suite(const SessionDataset& ds, ModelConfig model_cfg,
                                            const TrainConfig& train_cfg,
                                            const EvalConfig& eval_cfg,
                                            const std::string& out_dir,
                                            const std::string& dataset_hash) {
  static const Variant kOrder[] = {Variant::Full, Variant::LocalOnly, Variant::OwnHistory,
                                   Variant::OtherUsers, Variant::MeanEncoder};
  std::vector<AblationRow> rows;
  SimilarUserTable table(ds, train_cfg.candidates.n_similar);
  for (Variant v : kOrder) {
    ModelConfig cfg = model_cfg;
    cfg.variant = v;
    Model model(cfg);
    Trainer trainer(ds, model, train_cfg, out_dir + "/" + variant_name(v), dataset_hash);
    TrainResult tr = trainer.run();
    // evaluate the best checkpoint, exactly as a standalone run would
    Checkpoint best = load_checkpoint(tr.best_path);
    Model best_model(config_from_manifest(best.manifest_text), std::move(best.params));
    AblationRow row;
    row.variant = v;
    row.report = evaluate(best_model, ds, table, eval_cfg);
    row.report.dataset_hash = dataset_hash;
    row.report.checkpoint_hash = hash_file(tr.best_path);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_table_json(const std::vector<AblationRow>& rows) {
  json out = json::array();
  for (const AblationRow& row : rows) {
    json r;
    r["variant"] = variant_name(row.variant);
    auto ranks = row.report.ranks_overall();
    for (std::size_t k : row.report.ks) {
      auto [recall, mrr] = recall_mrr_at_k(ranks, k);
      r["recall@" + std::to_string(k)] = recall;
      r["mrr@" + std::to_string(k)] = mrr;
    }
    r["instances"] = ranks.size();
    out.push_back(std::move(r));
  }
  return out.dump(2);
}

std::string ablation_table_text(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  char buf[160];
  if (rows.empty()) return "";
  std::snprintf(buf, sizeof(buf), "%-8s", "variant");
  os << buf;
  for (std::size_t k : rows[0].report.ks) {
    std::snprintf(buf, sizeof(buf), " %11s %11s", ("recall@" + std::to_string(k)).c_str(),
                  ("mrr@" + std::to_string(k)).c_str());
    os << buf;
  }
  os << "\n";
  for (const AblationRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-8s", variant_name(row.variant));
    os << buf;
    auto ranks = row.report.ranks_overall();
    for (std::size_t k : row.report.ks) {
      auto [recall, mrr] = recall_mrr_at_k(ranks, k);
      std::snprintf(buf, sizeof(buf), " %11.4f %11.4f", recall, mrr);
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace insert
