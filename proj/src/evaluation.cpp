#include "insert/evaluation.hpp"

#include <algorithm>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "insert/errors.hpp"

using nlohmann::json;

namespace insert {

namespace {
constexpr std::size_t kShortSessionMax = 5;
}

std::size_t rank_of_target(const Tensor& logits, int target, const std::set<int>& excluded) {
  if (logits.ndim() != 1) throw DimensionError("logits must be 1-D, got " + logits.shape_str());
  if (target < 0 || target >= static_cast<int>(logits.size())) {
    throw UsageError("target " + std::to_string(target) + " outside the score vector");
  }
  if (excluded.count(target)) throw UsageError("target item is excluded from ranking");
  const double t_score = logits[static_cast<std::size_t>(target)];
  std::size_t ahead = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (static_cast<int>(i) == target || excluded.count(static_cast<int>(i))) continue;
    if (logits[i] > t_score || (logits[i] == t_score && static_cast<int>(i) < target)) ++ahead;
  }
  return ahead + 1;
}

std::pair<double, double> recall_mrr_at_k(const std::vector<std::size_t>& ranks, std::size_t k) {
  if (ranks.empty()) throw DataError("cannot compute metrics over an empty rank list");
  double hits = 0.0, rr = 0.0;
  for (std::size_t r : ranks) {
    if (r >= 1 && r <= k) {
      hits += 1.0;
      rr += 1.0 / static_cast<double>(r);
    }
  }
  const double n = static_cast<double>(ranks.size());
  return {hits / n, rr / n};
}

const std::vector<std::string>& RankingReport::bucket_names() {
  static const std::vector<std::string> names = {"2", "3", "4", "5", "long"};
  return names;
}

std::string RankingReport::bucket_of(std::size_t session_len) {
  return session_len <= kShortSessionMax ? std::to_string(session_len) : std::string("long");
}

std::vector<std::size_t> RankingReport::ranks_overall() const {
  std::vector<std::size_t> out;
  out.reserve(instances.size());
  for (const Instance& i : instances) out.push_back(i.rank);
  return out;
}

std::vector<std::size_t> RankingReport::ranks_in_bucket(const std::string& bucket) const {
  std::vector<std::size_t> out;
  for (const Instance& i : instances) {
    if (bucket_of(i.session_len) == bucket) out.push_back(i.rank);
  }
  return out;
}

std::vector<std::size_t> RankingReport::ranks_short() const {
  std::vector<std::size_t> out;
  for (const Instance& i : instances) {
    if (i.session_len <= kShortSessionMax) out.push_back(i.rank);
  }
  return out;
}

namespace {

json metrics_json(const std::vector<std::size_t>& ranks, const std::vector<std::size_t>& ks) {
  json j;
  j["count"] = ranks.size();
  for (std::size_t k : ks) {
    if (ranks.empty()) {
      j["recall@" + std::to_string(k)] = 0.0;
      j["mrr@" + std::to_string(k)] = 0.0;
    } else {
      auto [recall, mrr] = recall_mrr_at_k(ranks, k);
      j["recall@" + std::to_string(k)] = recall;
      j["mrr@" + std::to_string(k)] = mrr;
    }
  }
  return j;
}

}  // namespace

std::string RankingReport::to_json() const {
  json j;
  j["split"] = split;
  j["targets"] = targets;
  j["short_only"] = short_only;
  j["variant"] = variant;
  j["dataset_hash"] = dataset_hash;
  j["checkpoint_hash"] = checkpoint_hash;
  j["ks"] = ks;
  j["total_instances"] = instances.size();
  j["overall"] = metrics_json(ranks_overall(), ks);
  j["short"] = metrics_json(ranks_short(), ks);
  json buckets;
  for (const std::string& b : bucket_names()) {
    buckets[b] = metrics_json(ranks_in_bucket(b), ks);
  }
  j["by_session_length"] = std::move(buckets);
  return j.dump(2);
}

std::string RankingReport::to_text() const {
  std::ostringstream os;
  os << "split=" << split << " targets=" << targets << (short_only ? " short-only" : "")
     << " variant=" << variant << " instances=" << instances.size() << "\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-8s %8s", "bucket", "count");
  os << buf;
  for (std::size_t k : ks) {
    std::snprintf(buf, sizeof(buf), " %11s %11s", ("recall@" + std::to_string(k)).c_str(),
                  ("mrr@" + std::to_string(k)).c_str());
    os << buf;
  }
  os << "\n";
  auto row = [&](const std::string& name, const std::vector<std::size_t>& ranks) {
    std::snprintf(buf, sizeof(buf), "%-8s %8zu", name.c_str(), ranks.size());
    os << buf;
    for (std::size_t k : ks) {
      double recall = 0.0, mrr = 0.0;
      if (!ranks.empty()) std::tie(recall, mrr) = recall_mrr_at_k(ranks, k);
      std::snprintf(buf, sizeof(buf), " %11.4f %11.4f", recall, mrr);
      os << buf;
    }
    os << "\n";
  };
  row("all", ranks_overall());
  row("short", ranks_short());
  for (const std::string& b : bucket_names()) row(b, ranks_in_bucket(b));
  return os.str();
}

std::string RankingReport::to_csv() const {
  std::ostringstream os;
  os << "bucket,k,count,recall,mrr\n";
  auto rows = [&](const std::string& name, const std::vector<std::size_t>& ranks) {
    for (std::size_t k : ks) {
      double recall = 0.0, mrr = 0.0;
      if (!ranks.empty()) std::tie(recall, mrr) = recall_mrr_at_k(ranks, k);
      os << name << "," << k << "," << ranks.size() << "," << recall << "," << mrr << "\n";
    }
  };
  rows("all", ranks_overall());
  rows("short", ranks_short());
  for (const std::string& b : bucket_names()) rows(b, ranks_in_bucket(b));
  return os.str();
}

RankingReport evaluate(Model& model, const SessionDataset& ds, const SimilarUserTable& table,
                       const EvalConfig& cfg) {
  struct Task {
    int session_id;
    std::size_t target_pos;
  };
  std::vector<Task> tasks;
  bool split_has_sessions = false;
  for (std::size_t i = 0; i < ds.sessions.size(); ++i) {
    const Session& s = ds.sessions[i];
    if (s.split != cfg.split) continue;
    split_has_sessions = true;
    if (cfg.short_only && s.items.size() > kShortSessionMax) continue;
    if (cfg.targets_all) {
      for (std::size_t pos = 1; pos < s.items.size(); ++pos) {
        tasks.push_back(Task{static_cast<int>(i), pos});
      }
    } else {
      tasks.push_back(Task{static_cast<int>(i), s.items.size() - 1});
    }
  }
  if (!split_has_sessions) {
    throw DataError(std::string("split '") + split_name(cfg.split) + "' is empty");
  }
  if (tasks.empty()) throw DataError("no evaluation instances after filtering");

  RankingReport report;
  report.ks = cfg.ks;
  report.split = split_name(cfg.split);
  report.targets = cfg.targets_all ? "all" : "last";
  report.short_only = cfg.short_only;
  report.variant = variant_name(model.config().variant);
  report.instances.resize(tasks.size());

  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const Session& s = ds.at(tasks[idx].session_id);
      std::vector<int> context(s.items.begin(),
                               s.items.begin() + static_cast<std::ptrdiff_t>(tasks[idx].target_pos));
      CandidateSets cands = build_candidate_sets(ds, table, s.user, s.ordinal, cfg.candidates);
      ForwardTrace trace = model.forward(materialize(ds, context, cands), false, nullptr);
      std::size_t rank =
          rank_of_target(trace.tape.value(trace.logits), s.items[tasks[idx].target_pos]);
      report.instances[idx] = RankingReport::Instance{s.items.size(), rank};
    }
  };

  const int threads = std::max(1, cfg.threads);
  if (threads == 1 || tasks.size() < 2) {
    worker(0, tasks.size());
  } else {
    // instances are independent; slots are preassigned so the merge order is
    // deterministic regardless of scheduling
    std::vector<std::thread> pool;
    const std::size_t chunk = (tasks.size() + static_cast<std::size_t>(threads) - 1) /
                              static_cast<std::size_t>(threads);
    for (int w = 0; w < threads; ++w) {
      const std::size_t begin = static_cast<std::size_t>(w) * chunk;
      if (begin >= tasks.size()) break;
      pool.emplace_back(worker, begin, std::min(tasks.size(), begin + chunk));
    }
    for (std::thread& th : pool) th.join();
  }
  return report;
}

}  // namespace insert
