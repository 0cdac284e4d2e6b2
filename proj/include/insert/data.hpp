#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace insert {

// One raw log row. seq is the 0-based input position, kept so that ties on
// (user, timestamp) stay in file order.
struct Interaction {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;
  std::size_t seq = 0;
};

struct FormatSpec {
  char delimiter = '\t';
  int user_col = 0;
  int item_col = 1;
  int time_col = 2;
  int skip_rows = 0;  // header lines to ignore
};

// Reads a delimited log (plain or gzip), returns interactions sorted by
// (user, timestamp, input order).
std::vector<Interaction> load_interactions(const std::string& path, const FormatSpec& fmt = {});

struct RawEvent {
  std::string item_id;
  std::int64_t timestamp = 0;
  std::size_t seq = 0;
};

// Session on raw string ids, before vocabulary assignment.
struct RawSession {
  std::string user_id;
  std::vector<RawEvent> events;
  std::int64_t start_time = 0;
};

// Splits a user's interaction stream whenever the idle gap exceeds the
// threshold. A gap exactly equal to the threshold stays in the same session.
std::vector<RawSession> sessionize(const std::vector<Interaction>& interactions,
                                   std::int64_t idle_threshold_s);

struct FilterConfig {
  std::size_t min_freq = 10;
  std::size_t max_session_len = 20;
};

// Iterates (frequency filter, length filter) to a fixed point: removals can
// push other users/items below threshold, so one pass is not enough.
std::vector<RawSession> filter_corpus(std::vector<RawSession> sessions, const FilterConfig& cfg);

enum class Split : std::uint8_t { train = 0, valid = 1, test = 2 };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct Session {
  int user = -1;
  std::vector<int> items;  // internal indices, >= 1 (0 is padding)
  std::int64_t start_time = 0;
  int ordinal = 0;  // position within the user's session sequence
  Split split = Split::train;
};

// String <-> index map; indices assigned by first appearance.
struct Vocab {
  std::vector<std::string> id_of;
  std::unordered_map<std::string, int> index_of;

  int add(const std::string& id);
  int add_or_get(const std::string& id);
  int lookup(const std::string& id) const;  // -1 if absent
  std::size_t size() const { return id_of.size(); }
};

struct CorpusStats {
  std::size_t users = 0;
  std::size_t items = 0;  // padding excluded
  std::size_t sessions = 0;
  std::size_t interactions = 0;
  double interactions_per_session = 0.0;
  double interactions_per_user = 0.0;
  std::size_t train_sessions = 0;
  std::size_t valid_sessions = 0;
  std::size_t test_sessions = 0;
};

struct PreprocessConfig {
  std::int64_t idle_threshold_s = 3600;
  std::size_t min_freq = 10;
  std::size_t max_session_len = 20;
  double test_fraction = 0.1;
  double valid_fraction = 0.1;
  FormatSpec format;
};

constexpr int kPadItem = 0;

// Filtered, indexed, per-user-split corpus. Sessions are ordered by
// (user, ordinal); every ordinal in train precedes every ordinal in valid,
// which precedes every ordinal in test, per user.
struct SessionDataset {
  Vocab users;
  Vocab items;  // index 0 is "<pad>"
  std::vector<Session> sessions;
  std::vector<std::vector<int>> sessions_by_user;  // ordinal order, all splits
  PreprocessConfig config;
  CorpusStats stats;
  std::string source_hash;

  const Session& at(int idx) const { return sessions[static_cast<std::size_t>(idx)]; }

  // Session indices of one user restricted to a split, ordinal order.
  std::vector<int> user_sessions(int user, Split split) const;
};

// Assigns vocabularies (first appearance in time order), splits each user's
// sessions (last ceil(test_fraction*n) to test, preceding ceil(valid*n) to
// valid; users with fewer than 3 sessions keep everything in train) and
// computes stats.
SessionDataset build_dataset(const std::vector<RawSession>& filtered,
                             const PreprocessConfig& cfg);

// Full pipeline: load -> sessionize -> filter -> build.
SessionDataset preprocess(const std::string& path, const PreprocessConfig& cfg);

CorpusStats corpus_stats(const SessionDataset& ds);

// Dataset container: magic "INSRTDAT" | u32 version | manifest JSON |
// u64 session count | per session u32 user, u32 ordinal, u8 split,
// i64 start_time, u32 length, u32 items[]. See docs/FORMATS.md.
void save_dataset(const std::string& path, const SessionDataset& ds);
SessionDataset load_dataset(const std::string& path);

// Table-style stats JSON (the `stats` subcommand payload).
std::string stats_json(const SessionDataset& ds);

}  // namespace insert
