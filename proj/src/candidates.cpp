#include "insert/candidates.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

#include "insert/errors.hpp"

using nlohmann::json;

namespace insert {

std::vector<UserProfile> build_profiles(const SessionDataset& ds) {
  std::vector<UserProfile> profiles(ds.users.size());
  for (std::size_t u = 0; u < ds.users.size(); ++u) {
    UserProfile& p = profiles[u];
    p.user = static_cast<int>(u);
    p.train_session_ids = ds.user_sessions(static_cast<int>(u), Split::train);
    for (int sid : p.train_session_ids) {
      for (int item : ds.at(sid).items) p.item_set.insert(item);
    }
  }
  return profiles;
}

double user_similarity(const UserProfile& a, const UserProfile& b) {
  if (a.item_set.empty() || b.item_set.empty()) return 0.0;
  std::size_t inter = 0;
  const std::set<int>& small = a.item_set.size() <= b.item_set.size() ? a.item_set : b.item_set;
  const std::set<int>& large = a.item_set.size() <= b.item_set.size() ? b.item_set : a.item_set;
  for (int item : small) inter += large.count(item);
  return static_cast<double>(inter) /
         (static_cast<double>(a.item_set.size()) * static_cast<double>(b.item_set.size()));
}

std::vector<std::pair<int, double>> top_n_similar_users(int user,
                                                        const std::vector<UserProfile>& profiles,
                                                        std::size_t n) {
  std::vector<std::pair<int, double>> scored;
  for (const UserProfile& p : profiles) {
    if (p.user == user) continue;
    double s = user_similarity(p, profiles[static_cast<std::size_t>(user)]);
    if (s > 0.0) scored.emplace_back(p.user, s);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (scored.size() > n) scored.resize(n);
  return scored;
}

SimilarUserTable::SimilarUserTable(const SessionDataset& ds, std::size_t n) : n_(n) {
  std::vector<UserProfile> profiles = build_profiles(ds);
  table_.resize(profiles.size());
  for (std::size_t u = 0; u < profiles.size(); ++u) {
    table_[u] = top_n_similar_users(static_cast<int>(u), profiles, n);
  }
}

const std::vector<std::pair<int, double>>& SimilarUserTable::neighbors(int user) const {
  if (user < 0 || user >= static_cast<int>(table_.size())) {
    throw UsageError("unknown user index " + std::to_string(user));
  }
  return table_[static_cast<std::size_t>(user)];
}

void SimilarUserTable::save(const std::string& path, const std::string& dataset_hash) const {
  json j;
  j["dataset_hash"] = dataset_hash;
  j["n"] = n_;
  json rows = json::array();
  for (const auto& neighbors : table_) {
    json row = json::array();
    for (const auto& [user, score] : neighbors) row.push_back(json::array({user, score}));
    rows.push_back(std::move(row));
  }
  j["table"] = std::move(rows);
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write similar-user cache: " + path);
  os << j.dump();
}

bool SimilarUserTable::load(const std::string& path, const std::string& dataset_hash,
                            std::size_t n, SimilarUserTable& out) {
  std::ifstream is(path);
  if (!is) return false;
  json j;
  try {
    is >> j;
    if (j.at("dataset_hash").get<std::string>() != dataset_hash) return false;
    if (j.at("n").get<std::size_t>() != n) return false;
    out.n_ = n;
    out.table_.clear();
    for (const auto& row : j.at("table")) {
      std::vector<std::pair<int, double>> neighbors;
      for (const auto& entry : row) {
        neighbors.emplace_back(entry.at(0).get<int>(), entry.at(1).get<double>());
      }
      out.table_.push_back(std::move(neighbors));
    }
  } catch (const json::exception&) {
    return false;
  }
  return true;
}

CandidateSets build_candidate_sets(const SessionDataset& ds, const SimilarUserTable& table,
                                   int user, int session_ordinal, const CandidateConfig& cfg) {
  if (user < 0 || user >= static_cast<int>(ds.users.size())) {
    throw UsageError("unknown user index " + std::to_string(user));
  }
  CandidateSets out;
  for (int sid : ds.user_sessions(user, Split::train)) {
    if (ds.at(sid).ordinal < session_ordinal) out.own_history.push_back(sid);
  }
  out.similar_users = table.neighbors(user);
  if (static_cast<std::size_t>(out.similar_users.size()) > cfg.n_similar) {
    out.similar_users.resize(cfg.n_similar);
  }
  for (const auto& [other, score] : out.similar_users) {
    (void)score;
    for (int sid : ds.user_sessions(other, Split::train)) {
      out.similar_users_sessions.push_back(sid);
    }
  }
  if (cfg.max_candidate_sessions > 0 &&
      out.similar_users_sessions.size() > cfg.max_candidate_sessions) {
    // keep the most recent, then restore (user rank, ordinal) order
    std::vector<std::size_t> pos(out.similar_users_sessions.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
    std::stable_sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
      return ds.at(out.similar_users_sessions[a]).start_time >
             ds.at(out.similar_users_sessions[b]).start_time;
    });
    pos.resize(cfg.max_candidate_sessions);
    std::sort(pos.begin(), pos.end());
    std::vector<int> kept;
    kept.reserve(pos.size());
    for (std::size_t i : pos) kept.push_back(out.similar_users_sessions[i]);
    out.similar_users_sessions = std::move(kept);
  }
  return out;
}

}  // namespace insert
