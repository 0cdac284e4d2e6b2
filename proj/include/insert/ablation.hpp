#pragma once

#include <string>
#include <vector>

#include "insert/evaluation.hpp"
#include "insert/training.hpp"

namespace insert {

struct AblationRow {
  Variant variant;
  RankingReport report;
};

// Trains every variant (full, c, h, o, a) from the same seed and config and
// evaluates each, producing one report row per variant. Rows reproduce what
// a standalone train+evaluate of that variant yields.
std::vector<AblationRow> run_ablation_suite(const SessionDataset& ds, ModelConfig model_cfg,
                                            const TrainConfig& train_cfg,
                                            const EvalConfig& eval_cfg,
                                            const std::string& out_dir,
                                            const std::string& dataset_hash);

std::string ablation_table_json(const std::vector<AblationRow>& rows);
std::string ablation_table_text(const std::vector<AblationRow>& rows);

}  // namespace insert
