#pragma once

#include <set>
#include <string>
#include <vector>

#include "insert/candidates.hpp"
#include "insert/data.hpp"
#include "insert/model.hpp"
#include "insert/tensor.hpp"

namespace insert {

// 1-based rank of the target among non-excluded items, descending logit,
// ties broken by ascending item index. `excluded` defaults to the padding
// index; the target itself must not be excluded.
std::size_t rank_of_target(const Tensor& logits, int target,
                           const std::set<int>& excluded = {kPadItem});

// recall = fraction of ranks <= k; mrr = mean of 1/rank over ranks <= k
// (0 otherwise).
std::pair<double, double> recall_mrr_at_k(const std::vector<std::size_t>& ranks, std::size_t k);

struct EvalConfig {
  Split split = Split::test;
  std::vector<std::size_t> ks = {5, 20};
  bool short_only = false;   // restrict to sessions of length <= 5
  bool targets_all = true;   // false: only the last item of each session
  CandidateConfig candidates;
  int threads = 1;
};

// Recall/MRR aggregates stratified by full session length (buckets 2..5 and
// "long", plus the "short" <=5 aggregate).
struct RankingReport {
  struct Instance {
    std::size_t session_len = 0;
    std::size_t rank = 0;
  };

  std::vector<std::size_t> ks;
  std::vector<Instance> instances;

  // provenance
  std::string split = "test";
  std::string targets = "all";
  bool short_only = false;
  std::string variant;
  std::string dataset_hash;
  std::string checkpoint_hash;

  static const std::vector<std::string>& bucket_names();  // 2,3,4,5,long
  static std::string bucket_of(std::size_t session_len);

  std::vector<std::size_t> ranks_overall() const;
  std::vector<std::size_t> ranks_in_bucket(const std::string& bucket) const;
  std::vector<std::size_t> ranks_short() const;

  std::string to_json() const;
  std::string to_text() const;
  std::string to_csv() const;  // one row per (bucket, k)
};

// Ranks every target position (or only the last) of every session in the
// split; candidate sets contain training sessions only, and only those
// before the session being scored.
RankingReport evaluate(Model& model, const SessionDataset& ds, const SimilarUserTable& table,
                       const EvalConfig& cfg);

}  // namespace insert
