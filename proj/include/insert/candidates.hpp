#pragma once

#include <set>
#include <string>
#include <vector>

#include "insert/data.hpp"

namespace insert {

// A user's training-split footprint: the set of items they interacted with
// and their training sessions in time order.
struct UserProfile {
  int user = -1;
  std::set<int> item_set;
  std::vector<int> train_session_ids;
};

std::vector<UserProfile> build_profiles(const SessionDataset& ds);

// |A ∩ B| / (|A| * |B|); 0 when either set is empty. The denominator is the
// size product, not the union.
double user_similarity(const UserProfile& a, const UserProfile& b);

// N highest-scoring users excluding `user`; zero scores never selected;
// ties broken by ascending user index.
std::vector<std::pair<int, double>> top_n_similar_users(int user,
                                                        const std::vector<UserProfile>& profiles,
                                                        std::size_t n);

// Precomputed top-N table for every user (the similarity depends only on
// static training item sets, so it is computed once per run).
class SimilarUserTable {
 public:
  SimilarUserTable() = default;
  SimilarUserTable(const SessionDataset& ds, std::size_t n);

  const std::vector<std::pair<int, double>>& neighbors(int user) const;
  std::size_t n() const { return n_; }

  // Cache round-trip; the file records the dataset hash and is ignored on
  // mismatch.
  void save(const std::string& path, const std::string& dataset_hash) const;
  static bool load(const std::string& path, const std::string& dataset_hash, std::size_t n,
                   SimilarUserTable& out);

 private:
  std::size_t n_ = 0;
  std::vector<std::vector<std::pair<int, double>>> table_;
};

// The two candidate pools for one prediction target.
struct CandidateSets {
  std::vector<int> own_history;             // H: session ids, time order
  std::vector<int> similar_users_sessions;  // S: session ids
  std::vector<std::pair<int, double>> similar_users;
};

struct CandidateConfig {
  std::size_t n_similar = 10;
  // Cap on |S|; most recent sessions kept. 0 disables the cap.
  std::size_t max_candidate_sessions = 50;
};

// H = the user's training sessions with ordinal < session_ordinal;
// S = all training sessions of the top-N similar users (capped).
CandidateSets build_candidate_sets(const SessionDataset& ds, const SimilarUserTable& table,
                                   int user, int session_ordinal, const CandidateConfig& cfg);

}  // namespace insert
